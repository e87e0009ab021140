#include "guided/rollout.hpp"

#include <ostream>
#include <istream>

#include <nlohmann/json.hpp>

#include "guided/protocol.hpp"

namespace guided::rollout {

namespace {

using json = nlohmann::json;

std::vector<std::string> outputs_of(const GuidedTrajectory& t) {
    std::vector<std::string> outputs;
    outputs.reserve(t.steps.size());
    for (const auto& s : t.steps) outputs.push_back(s.output);
    return outputs;
}

GuidanceSignal neutral_signal() {
    return GuidanceSignal{"", HallucinationScore::Valid, false};
}

}  // namespace

GuidedTrajectory run_guided(modelclient::Backend& policy, modelclient::Backend& verifier,
                            const TaskInput& task, const RolloutConfig& cfg,
                            const dialogue::PromptSet& prompts,
                            const modelclient::TokenCounter& counter) {
    GuidedTrajectory t;
    t.task = task;
    t.stop_reason = StopReason::MaxTurns;

    const auto stop_policy =
        cfg.strict_stop ? protocol::StopPolicy::Strict : protocol::StopPolicy::Lenient;
    std::optional<GuidanceSignal> latest;

    for (int turn = 0; turn < cfg.max_turns; ++turn) {
        if (turn > 0 && t.policy_tokens >= cfg.policy_max_tokens) {
            t.stop_reason = StopReason::TokenBudget;
            return t;
        }

        modelclient::GenerationRequest request;
        request.messages = dialogue::build_policy_input(task, outputs_of(t), latest, prompts, counter);
        request.temperature = cfg.policy_temperature;
        request.max_new_tokens = cfg.policy_turn_max_tokens;
        request.images = task.images;

        modelclient::GenerationResponse response;
        try {
            response = modelclient::generate(policy, request);
        } catch (const modelclient::BackendError&) {
            t.stop_reason = StopReason::BackendError;
            return t;
        }
        t.steps.push_back(TrajectoryStep{response.content, std::nullopt});
        t.policy_tokens += response.completion_tokens;

        modelclient::GenerationRequest vrequest;
        vrequest.messages = dialogue::build_verifier_input(task, outputs_of(t), prompts, counter);
        vrequest.temperature = cfg.verifier_temperature;
        vrequest.max_new_tokens = cfg.verifier_turn_max_tokens;
        vrequest.images = task.images;

        GuidanceSignal signal;
        bool have_signal = false;
        for (int attempt = 0; attempt < 2 && !have_signal; ++attempt) {
            modelclient::GenerationResponse vresponse;
            try {
                vresponse = modelclient::generate(verifier, vrequest);
            } catch (const modelclient::BackendError&) {
                t.stop_reason = StopReason::BackendError;
                return t;  // last step keeps no signal
            }
            t.verifier_tokens += vresponse.completion_tokens;
            const auto parsed = protocol::parse_score_line(vresponse.content, stop_policy);
            if (parsed.ok()) {
                signal = parsed.signal;
                have_signal = true;
            } else if (attempt == 1) {
                // Unparseable verdict after one retry: recorded as a detected
                // hallucination rather than inventing guidance.
                signal = GuidanceSignal{vresponse.content, HallucinationScore::Hallucinated, false};
                have_signal = true;
            }
        }
        t.steps.back().signal = signal;
        latest = signal;

        if (signal.is_stop) {
            t.stop_reason = StopReason::VerifierStop;
            return t;
        }
    }
    t.stop_reason = StopReason::MaxTurns;
    return t;
}

GuidedTrajectory run_standalone(modelclient::Backend& policy, const TaskInput& task,
                                const RolloutConfig& cfg, const dialogue::PromptSet& prompts,
                                const modelclient::TokenCounter& counter) {
    GuidedTrajectory t;
    t.task = task;

    if (prompts.system_standalone.empty())
        throw dialogue::DialogueError(dialogue::DialogueError::Code::TemplateMissing,
                                      "prompt section missing: SYSTEM_STANDALONE");

    modelclient::GenerationRequest request;
    DialogueMessage system;
    system.role = Role::System;
    system.content = prompts.system_standalone;
    system.token_count = counter(system.content);
    DialogueMessage user;
    user.role = Role::User;
    user.content = protocol::render_task_block(task);
    user.token_count = counter(user.content);
    request.messages = {std::move(system), std::move(user)};
    request.temperature = cfg.policy_temperature;
    request.max_new_tokens = cfg.policy_turn_max_tokens;
    request.images = task.images;

    try {
        const auto response = modelclient::generate(policy, request);
        t.steps.push_back(TrajectoryStep{response.content, neutral_signal()});
        t.policy_tokens = response.completion_tokens;
        t.stop_reason = StopReason::VerifierStop;
    } catch (const modelclient::BackendError&) {
        t.stop_reason = StopReason::BackendError;
    }
    t.verifier_tokens = 0;
    return t;
}

MetricsRecord rollout_metrics(const GuidedTrajectory& t) {
    MetricsRecord m;
    m.turns = t.turns();
    m.policy_tokens = t.policy_tokens;
    m.verifier_tokens = t.verifier_tokens;
    m.n_fail = t.n_fail();
    m.stop_reason = t.stop_reason;
    return m;
}

// ---------------------------------------------------------------------------
// JSONL

std::string trajectory_to_json(const GuidedTrajectory& t,
                               const std::optional<reward::CompositeReward>& reward) {
    json record;
    record["task"] = {{"id", t.task.id}, {"query", t.task.query}, {"gold_answer", t.task.gold_answer}};
    if (t.task.hint) record["task"]["hint"] = *t.task.hint;
    if (!t.task.images.empty()) record["task"]["images"] = t.task.images;

    json steps = json::array();
    for (const auto& step : t.steps) {
        json s;
        s["output"] = step.output;
        if (step.signal) {
            s["critique"] = step.signal->critique;
            s["hallucination_detect"] = static_cast<int>(step.signal->hallucination_detect);
            s["is_stop"] = step.signal->is_stop;
        }
        steps.push_back(std::move(s));
    }
    record["steps"] = std::move(steps);
    record["stop_reason"] = stop_reason_name(t.stop_reason);
    record["policy_tokens"] = t.policy_tokens;
    record["verifier_tokens"] = t.verifier_tokens;

    const auto metrics = rollout_metrics(t);
    record["metrics"] = {{"turns", metrics.turns},
                         {"policy_tokens", metrics.policy_tokens},
                         {"verifier_tokens", metrics.verifier_tokens},
                         {"n_fail", metrics.n_fail},
                         {"stop_reason", stop_reason_name(metrics.stop_reason)}};

    if (reward) {
        record["reward"] = {{"r_acc", reward->r_acc},
                            {"r_ver", reward->r_ver},
                            {"r_fmt", reward->r_fmt},
                            {"total", reward->total},
                            {"weights",
                             {{"lambda_acc", reward->weights.lambda_acc},
                              {"lambda_ver", reward->weights.lambda_ver},
                              {"lambda_fmt", reward->weights.lambda_fmt}}}};
    }
    return record.dump();
}

GuidedTrajectory trajectory_from_json(std::string_view json_line) {
    const json record = json::parse(json_line);
    GuidedTrajectory t;
    const auto& task = record.at("task");
    t.task.id = task.value("id", std::string{});
    t.task.query = task.value("query", std::string{});
    t.task.gold_answer = task.value("gold_answer", std::string{});
    if (task.contains("hint")) t.task.hint = task["hint"].get<std::string>();
    if (task.contains("images")) t.task.images = task["images"].get<std::vector<std::string>>();

    for (const auto& s : record.at("steps")) {
        TrajectoryStep step;
        step.output = s.value("output", std::string{});
        if (s.contains("hallucination_detect")) {
            GuidanceSignal g;
            g.critique = s.value("critique", std::string{});
            g.hallucination_detect = s.at("hallucination_detect").get<int>() == 1
                                         ? HallucinationScore::Valid
                                         : HallucinationScore::Hallucinated;
            g.is_stop = s.value("is_stop", false);
            step.signal = std::move(g);
        }
        t.steps.push_back(std::move(step));
    }
    if (const auto reason = stop_reason_from_name(record.value("stop_reason", std::string{})))
        t.stop_reason = *reason;
    t.policy_tokens = record.value("policy_tokens", 0);
    t.verifier_tokens = record.value("verifier_tokens", 0);
    return t;
}

void write_trajectories(std::ostream& out, const std::vector<GuidedTrajectory>& trajectories,
                        const std::vector<reward::CompositeReward>* rewards) {
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
        std::optional<reward::CompositeReward> r;
        if (rewards && i < rewards->size()) r = (*rewards)[i];
        out << trajectory_to_json(trajectories[i], r) << '\n';
    }
}

std::vector<GuidedTrajectory> read_trajectories(std::istream& in) {
    std::vector<GuidedTrajectory> trajectories;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        trajectories.push_back(trajectory_from_json(line));
    }
    return trajectories;
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRecord>& metrics) {
    out << "turns,policy_tokens,verifier_tokens,n_fail,stop_reason\n";
    for (const auto& m : metrics) {
        out << m.turns << ',' << m.policy_tokens << ',' << m.verifier_tokens << ',' << m.n_fail
            << ',' << stop_reason_name(m.stop_reason) << '\n';
    }
}

}  // namespace guided::rollout
