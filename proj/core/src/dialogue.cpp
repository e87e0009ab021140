#include "guided/dialogue.hpp"

#include "guided/protocol.hpp"

namespace guided::dialogue {

namespace {

constexpr const char* kContinueTurn = "Continue.";
constexpr const char* kApprovedCritique = "step approved.";
constexpr const char* kFlaggedCritique = "step flagged as invalid; please re-derive it.";

DialogueMessage make_message(Role role, std::string content, const modelclient::TokenCounter& counter) {
    DialogueMessage m;
    m.role = role;
    m.token_count = counter(content);
    m.content = std::move(content);
    return m;
}

std::string trimmed(std::string_view s) {
    constexpr std::string_view ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return std::string(s.substr(b, e - b + 1));
}

std::string substitute(std::string templ, std::string_view key, std::string_view value) {
    const std::string marker = "{" + std::string(key) + "}";
    std::size_t pos = 0;
    while ((pos = templ.find(marker, pos)) != std::string::npos) {
        templ.replace(pos, marker.size(), value);
        pos += value.size();
    }
    return templ;
}

void require_template(const std::string& section, const char* name) {
    if (section.empty())
        throw DialogueError(DialogueError::Code::TemplateMissing,
                            std::string("prompt section missing: ") + name);
}

}  // namespace

std::vector<DialogueMessage> build_policy_input(const TaskInput& task,
                                                std::span<const std::string> history,
                                                const std::optional<GuidanceSignal>& latest_guidance,
                                                const PromptSet& prompts,
                                                const modelclient::TokenCounter& counter) {
    require_template(prompts.system_policy, "SYSTEM_POLICY");
    if (history.empty() != !latest_guidance.has_value())
        throw std::invalid_argument("guidance must be present exactly when history is non-empty");

    std::vector<DialogueMessage> messages;
    messages.reserve(2 + 2 * history.size());
    messages.push_back(make_message(Role::System, prompts.system_policy, counter));
    messages.push_back(make_message(Role::User, protocol::render_task_block(task), counter));

    for (std::size_t i = 0; i < history.size(); ++i) {
        messages.push_back(make_message(Role::Assistant, history[i], counter));
        if (i + 1 < history.size()) {
            messages.push_back(make_message(Role::User, kContinueTurn, counter));
        } else {
            messages.push_back(make_message(Role::User, render_guidance(*latest_guidance, prompts), counter));
        }
    }
    return messages;
}

std::string render_verifier_user_content(const TaskInput& task,
                                         std::span<const std::string> history_through_t) {
    std::string content = protocol::render_task_block(task);
    for (std::size_t i = 0; i < history_through_t.size(); ++i) {
        content += "\n\nStep " + std::to_string(i + 1) + ":\n";
        content += history_through_t[i];
    }
    return content;
}

std::vector<DialogueMessage> build_verifier_input(const TaskInput& task,
                                                  std::span<const std::string> history_through_t,
                                                  const PromptSet& prompts,
                                                  const modelclient::TokenCounter& counter) {
    require_template(prompts.system_verifier, "SYSTEM_VERIFIER");
    if (history_through_t.empty())
        throw DialogueError(DialogueError::Code::EmptyHistory, "verifier needs at least one step");

    std::vector<DialogueMessage> messages;
    messages.push_back(make_message(Role::System, prompts.system_verifier, counter));
    messages.push_back(
        make_message(Role::User, render_verifier_user_content(task, history_through_t), counter));
    return messages;
}

std::string render_guidance(const GuidanceSignal& signal, const PromptSet& prompts) {
    require_template(prompts.guidance_frame, "GUIDANCE_FRAME");
    if (signal.is_stop)
        throw DialogueError(DialogueError::Code::StopNotRenderable,
                            "stop signals terminate the loop; they are never framed");

    std::string critique = trimmed(signal.critique);
    if (critique.empty()) {
        critique = signal.hallucination_detect == HallucinationScore::Valid ? kApprovedCritique
                                                                            : kFlaggedCritique;
    }
    return substitute(prompts.guidance_frame, "critique", critique);
}

}  // namespace guided::dialogue
