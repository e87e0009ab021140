#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "guided/types.hpp"

namespace guided::protocol {

inline constexpr std::string_view kStopToken = "###STOP###";
inline constexpr std::string_view kScoreTag = "[SCORE]";

/// Strict is the rollout default: a stop turn must be exactly the stop token
/// (a trailing score line is tolerated). Lenient accepts the token anywhere in
/// the turn and exists for corpus ingestion.
enum class StopPolicy { Strict, Lenient };

enum class ScoreParseError {
    None,
    MissingScoreLine,
    MalformedScore,
    MultipleScoreLines,
};

const char* score_parse_error_name(ScoreParseError e);

struct ScoreParse {
    GuidanceSignal signal;
    ScoreParseError error = ScoreParseError::None;
    /// Set when the turn contains the stop token surrounded by other text.
    bool protocol_warning = false;

    bool ok() const { return error == ScoreParseError::None; }
};

/// Splits a verifier turn into critique + hallucination verdict. Any line
/// containing [SCORE] is treated as the score line; exactly one must be
/// present and it must carry hallucination_detect=0|1.
ScoreParse parse_score_line(std::string_view message, StopPolicy policy = StopPolicy::Strict);

/// Renders the canonical trailing score line for a signal.
std::string format_score_line(HallucinationScore score);

/// Reassembles a verifier turn from a parsed signal (critique + score line).
std::string format_verifier_turn(const GuidanceSignal& signal);

/// Total over arbitrary text: malformation is reported through well_formed,
/// never an exception, because the reward path has to score it.
FinalAnswer extract_boxed_answer(std::string_view message);

/// True when the trimmed message is nothing but a single well-formed
/// <answer>\boxed{...}</answer> block.
bool is_pure_final_answer(std::string_view message);

/// Removes every <think>...</think> span.
std::string strip_think_blocks(std::string_view message);

/// Equality of a predicted answer against gold: trim, case-fold single
/// letters, and numeric comparison at relative tolerance 1e-9.
bool answers_equivalent(const FinalAnswer& predicted, std::string_view gold);

/// Raised on structurally invalid ShareGPT input or trajectories that cannot
/// be serialized (empty, role order broken).
class ProtocolError : public std::runtime_error {
  public:
    enum class Code { RoleOrderViolation, EmptyTrajectory, BadRecord };
    ProtocolError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
    Code code() const { return code_; }

  private:
    Code code_;
};

/// ShareGPT emission of a guided dialogue: one system turn, then alternating
/// human (solver step) / gpt (verifier turn) messages. The first human turn
/// carries the task block followed by o_1. gold_answer is deliberately never
/// serialized; parse_sharegpt round-trips the dialogue content (task sans
/// gold, step outputs, signals). Token tallies are recomputable and not stored.
std::string serialize_sharegpt(const GuidedTrajectory& trajectory, const std::string& system_prompt);

GuidedTrajectory parse_sharegpt(std::string_view json_line);

/// Task header embedded in the first human turn of a ShareGPT record.
std::string render_task_block(const TaskInput& task);

}  // namespace guided::protocol
