#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "guided/dialogue.hpp"
#include "guided/modelclient.hpp"
#include "guided/reward.hpp"
#include "guided/types.hpp"

namespace guided::rollout {

struct RolloutConfig {
    int max_turns = 10;
    std::int64_t policy_max_tokens = 27000;  // cumulative across the trajectory
    int policy_turn_max_tokens = 2048;       // per-generation cap
    int verifier_turn_max_tokens = 1024;
    double policy_temperature = 1.0;
    double verifier_temperature = 0.0;
    bool strict_stop = true;
};

struct MetricsRecord {
    std::size_t turns = 0;
    std::int64_t policy_tokens = 0;
    std::int64_t verifier_tokens = 0;
    int n_fail = 0;
    StopReason stop_reason = StopReason::MaxTurns;
};

/// Closed-loop alternation: policy step o_t, then verifier judgment g_t,
/// until the verifier stops, max_turns is hit, or the cumulative policy
/// token budget is exhausted (one overshoot allowed). A verifier turn that
/// fails score parsing is retried once, then recorded as Hallucinated with
/// the raw text as critique. Backend failures return the partial trajectory
/// with stop_reason = BackendError.
GuidedTrajectory run_guided(modelclient::Backend& policy, modelclient::Backend& verifier,
                            const TaskInput& task, const RolloutConfig& cfg,
                            const dialogue::PromptSet& prompts = dialogue::builtin_prompts(),
                            const modelclient::TokenCounter& counter = modelclient::whitespace_counter());

/// Solitary generation: one policy call under the standalone system prompt,
/// recorded as a single step with a neutral valid signal; verifier_tokens = 0.
GuidedTrajectory run_standalone(modelclient::Backend& policy, const TaskInput& task,
                                const RolloutConfig& cfg,
                                const dialogue::PromptSet& prompts = dialogue::builtin_prompts(),
                                const modelclient::TokenCounter& counter = modelclient::whitespace_counter());

MetricsRecord rollout_metrics(const GuidedTrajectory& t);

// ---------------------------------------------------------------------------
// Trajectory JSONL (internal dump, consumed by the reward and synthesis paths;
// unlike ShareGPT records it retains the gold answer).

std::string trajectory_to_json(const GuidedTrajectory& t,
                               const std::optional<reward::CompositeReward>& reward = std::nullopt);

GuidedTrajectory trajectory_from_json(std::string_view json_line);

void write_trajectories(std::ostream& out, const std::vector<GuidedTrajectory>& trajectories,
                        const std::vector<reward::CompositeReward>* rewards = nullptr);

std::vector<GuidedTrajectory> read_trajectories(std::istream& in);

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRecord>& metrics);

}  // namespace guided::rollout
