#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace guided {

enum class Role { System, User, Assistant };

const char* role_name(Role r);

/// One chat turn. token_count is always derived from content by whichever
/// counter produced the message; it is never set independently.
struct DialogueMessage {
    Role role = Role::User;
    std::string content;
    std::int64_t token_count = 0;

    bool operator==(const DialogueMessage&) const = default;
};

enum class HallucinationScore : int { Hallucinated = 0, Valid = 1 };

/// Verifier output for one solver step: free-text critique (score line already
/// removed) plus the binary hallucination verdict. is_stop marks the dialogue
/// terminator turn.
struct GuidanceSignal {
    std::string critique;
    HallucinationScore hallucination_detect = HallucinationScore::Valid;
    bool is_stop = false;

    bool operator==(const GuidanceSignal&) const = default;
};

struct FinalAnswer {
    std::string raw;                         // content of the selected <answer> block
    std::optional<std::string> boxed_value;  // innermost \boxed{...} payload
    bool well_formed = false;

    bool operator==(const FinalAnswer&) const = default;
};

struct TaskInput {
    std::string id;
    std::string query;
    std::vector<std::string> images;  // opaque URIs or base64 payloads
    std::string gold_answer;
    std::optional<std::string> hint;

    bool operator==(const TaskInput&) const = default;
};

enum class StopReason { VerifierStop, MaxTurns, TokenBudget, BackendError };

const char* stop_reason_name(StopReason r);
std::optional<StopReason> stop_reason_from_name(const std::string& name);

/// One (o_t, g_t) pair. The signal is absent only on the last step of a
/// trajectory cut short by a backend error.
struct TrajectoryStep {
    std::string output;
    std::optional<GuidanceSignal> signal;

    bool operator==(const TrajectoryStep&) const = default;
};

struct GuidedTrajectory {
    TaskInput task;
    std::vector<TrajectoryStep> steps;
    StopReason stop_reason = StopReason::MaxTurns;
    std::int64_t policy_tokens = 0;
    std::int64_t verifier_tokens = 0;

    std::size_t turns() const { return steps.size(); }

    /// Steps the verifier scored 0.
    int n_fail() const {
        int n = 0;
        for (const auto& s : steps)
            if (s.signal && s.signal->hallucination_detect == HallucinationScore::Hallucinated) ++n;
        return n;
    }

    bool operator==(const GuidedTrajectory&) const = default;
};

}  // namespace guided
