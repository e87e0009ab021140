#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "guided/modelclient.hpp"
#include "guided/rollout.hpp"
#include "guided/types.hpp"

namespace guided::corepipe {

class ConfigRejected : public std::invalid_argument {
  public:
    explicit ConfigRejected(const std::string& what) : std::invalid_argument(what) {}
};

// ---------------------------------------------------------------------------
// Step scoring

enum class StepLabel { Positive, Negative, Discarded };

const char* step_label_name(StepLabel label);

/// N sampled oracle verdicts for one solver step, reduced by the dual
/// threshold: mean >= 0.7 -> Positive, mean <= 0.3 -> Negative, else
/// Discarded (both bounds inclusive). Abstentions shrink N for the mean.
struct StepScore {
    std::vector<int> trials;  // 0/1 verdicts, abstentions excluded
    int abstentions = 0;
    double mean = 0.0;
    StepLabel label = StepLabel::Discarded;
};

StepScore label_from_trials(std::vector<int> trials, int abstentions = 0);

struct ScoringConfig {
    int n_trials = 10;
    double oracle_temperature = 1.0;  // sampling trials need stochasticity
    int oracle_max_tokens = 64;
};

/// One step judged by n_trials independent oracle samples. Each trial is
/// retried up to twice on an unparseable verdict, then recorded as an
/// abstention.
StepScore score_step(modelclient::Backend& oracle, const TaskInput& task,
                     std::span<const std::string> history_through_t, const ScoringConfig& cfg);

// ---------------------------------------------------------------------------
// Dialogue generation

/// Guide/Solver dialogue for dataset synthesis. Both backends must decode at
/// temperature 0; any other setting is rejected.
GuidedTrajectory generate_dialogue(modelclient::Backend& solver, modelclient::Backend& guide,
                                   const TaskInput& problem, const rollout::RolloutConfig& cfg);

// ---------------------------------------------------------------------------
// Filters

enum class FilterVerdict { Keep, DropLength, DropHallucinationRatio, DropStopFormat };

const char* filter_verdict_name(FilterVerdict verdict);

struct FilterConfig {
    std::int64_t max_tokens = 28000;
    double max_negative_ratio = 0.15;
};

/// Conjunctive filters; the reported reason follows a fixed priority
/// (length, ratio, stop format) but the keep/drop outcome is order-free.
FilterVerdict apply_filters(const GuidedTrajectory& t, const std::vector<StepScore>& scores,
                            const FilterConfig& cfg);

// ---------------------------------------------------------------------------
// Statistics

struct RoleCounts {
    std::int64_t system = 0;
    std::int64_t human = 0;
    std::int64_t gpt = 0;
};

struct DatasetStats {
    std::int64_t n_trajectories = 0;
    std::int64_t n_messages = 0;
    RoleCounts role_counts;
    std::int64_t n_signals = 0;
    std::int64_t n_positive = 0;
    std::int64_t n_negative = 0;

    double signals_per_dialog() const;
    double messages_per_dialog() const;

    std::string to_json() const;
};

class EmptyDataset : public std::invalid_argument {
  public:
    EmptyDataset() : std::invalid_argument("stats need a non-empty dataset") {}
};

DatasetStats compute_stats(const std::vector<GuidedTrajectory>& dataset,
                           const std::vector<std::vector<StepScore>>& scores);

/// Recomputes stats purely from emitted ShareGPT lines (labels are carried in
/// each record); must agree with compute_stats on the same corpus.
DatasetStats compute_stats_from_jsonl(std::istream& in);

// ---------------------------------------------------------------------------
// Emission

/// Dialogue record with per-step oracle labels attached (1/0, null for
/// discarded steps) so the corpus stays self-describing.
std::string serialize_core_record(const GuidedTrajectory& t, const std::vector<StepScore>& scores,
                                  const std::string& system_prompt);

struct SftRecord {
    std::string input;   // ShareGPT record: context through o_t
    std::string target;  // guidance + trailing score line
};

/// One record per labeled step of a kept trajectory; Discarded steps emit
/// nothing. The target's score line carries the oracle label; the guidance
/// text is the guide's critique for that step.
std::vector<SftRecord> emit_sft_records(const GuidedTrajectory& t,
                                        const std::vector<StepScore>& scores);

// ---------------------------------------------------------------------------
// Audit log

struct AuditRow {
    std::string id;
    FilterVerdict verdict;
    std::string reason;
};

void write_audit_csv(std::ostream& out, const std::vector<AuditRow>& rows);

}  // namespace guided::corepipe
