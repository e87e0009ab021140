#pragma once

#include <stdexcept>

#include "guided/types.hpp"

namespace guided::reward {

struct RewardWeights {
    double lambda_acc = 0.8;
    double lambda_ver = 0.1;
    double lambda_fmt = 0.1;
};

struct CompositeReward {
    int r_acc = 0;        // {0,1}
    double r_ver = 1.0;   // [0,1]
    int r_fmt = 0;        // {0,1}
    double total = 0.0;
    RewardWeights weights;
};

class ZeroTurns : public std::runtime_error {
  public:
    ZeroTurns() : std::runtime_error("trajectory has no verifier-scored turns") {}
};

/// Final boxed answer of the trajectory's last solver turn.
FinalAnswer final_answer(const GuidedTrajectory& t);

/// 1 iff the extracted final answer matches gold. Requires a gold answer.
int score_accuracy(const GuidedTrajectory& t);

/// 1 - N_fail / T where T counts verifier-scored turns. Standalone
/// trajectories carry a neutral valid signal, so they score 1 by construction.
double score_verifier_penalty(const GuidedTrajectory& t);

/// 1 iff the last solver turn carries a well-formed <answer>\boxed{...}
/// </answer> block. <think> spans are stripped before evaluation.
int score_format(const GuidedTrajectory& t);

CompositeReward composite(const GuidedTrajectory& t, const RewardWeights& weights = {});

}  // namespace guided::reward
