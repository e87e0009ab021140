#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "guided/config.hpp"

namespace guided::commands {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitBackend = 2;

struct CommonOptions {
    std::uint64_t seed = 0;
    int jobs = 0;           // 0 => logical cores
    std::string out_dir;    // overrides config.paths.out_dir when non-empty
};

/// Task manifest: JSONL of {id, query, image_path?, gold_answer, hint?}.
std::vector<TaskInput> read_task_manifest(const std::string& path);

/// Guided or standalone rollouts over a task manifest. Writes
/// trajectories.jsonl (with reward records) and metrics.csv. Returns
/// kExitBackend when any trajectory ended in a backend error.
int cmd_rollout(const config::RunConfig& config, const std::string& tasks_path,
                const std::string& mode, const CommonOptions& options, std::ostream& log);

/// Toy-trainer run; mode is "open", "guided" or "both". Writes
/// trace_<mode>.csv per trained mode and prints the final-10-epoch mean
/// reward, with a comparison line when both modes run.
int cmd_train(const config::RunConfig& config, const std::string& mode, int epochs,
              const CommonOptions& options, std::ostream& log);

/// Alpha sweep of the error-propagation chain; writes sweep.csv with closed
/// forms and Monte Carlo estimates side by side.
int cmd_simulate(const config::RunConfig& config, const CommonOptions& options, std::ostream& log);

/// Data-synthesis pipeline over a problem manifest. Writes dataset.jsonl
/// (kept dialogues with labels), sft.jsonl (per-step records), stats.json and
/// audit.csv.
int cmd_synth(const config::RunConfig& config, const std::string& problems_path,
              const CommonOptions& options, std::ostream& log);

}  // namespace guided::commands
