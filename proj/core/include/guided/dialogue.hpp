#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "guided/modelclient.hpp"
#include "guided/prompts.hpp"
#include "guided/types.hpp"

namespace guided::dialogue {

class DialogueError : public std::runtime_error {
  public:
    enum class Code { TemplateMissing, EmptyHistory, StopNotRenderable };
    DialogueError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
    Code code() const { return code_; }

  private:
    Code code_;
};

/// Policy context view: full reasoning history, but only the most recent
/// guidance signal. Earlier critiques are dropped; their slots are filled with
/// a neutral continuation turn so chat roles keep alternating.
///
/// latest_guidance must be absent exactly when history is empty (g_0 = none).
std::vector<DialogueMessage> build_policy_input(
    const TaskInput& task, std::span<const std::string> history,
    const std::optional<GuidanceSignal>& latest_guidance, const PromptSet& prompts,
    const modelclient::TokenCounter& counter = modelclient::whitespace_counter());

/// Verifier context view: the original task plus the cumulative solver chain
/// in one user turn with "Step k:" anchors. Contains no critique text, so the
/// verifier never conditions on its own previous judgments. The rendered user
/// content is prefix-stable: appending a step only extends it.
std::vector<DialogueMessage> build_verifier_input(
    const TaskInput& task, std::span<const std::string> history_through_t, const PromptSet& prompts,
    const modelclient::TokenCounter& counter = modelclient::whitespace_counter());

/// The user-turn content of build_verifier_input, exposed for the synthesis
/// pipeline, which reuses it as the SFT input rendering.
std::string render_verifier_user_content(const TaskInput& task,
                                         std::span<const std::string> history_through_t);

/// Wraps a critique in the correction frame. Stop signals are not renderable:
/// they terminate the loop instead of re-entering the policy context.
std::string render_guidance(const GuidanceSignal& signal, const PromptSet& prompts);

}  // namespace guided::dialogue
