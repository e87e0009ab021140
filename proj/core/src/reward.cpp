#include "guided/reward.hpp"

#include <algorithm>

#include "guided/protocol.hpp"

namespace guided::reward {

FinalAnswer final_answer(const GuidedTrajectory& t) {
    if (t.steps.empty()) return {};
    return protocol::extract_boxed_answer(t.steps.back().output);
}

int score_accuracy(const GuidedTrajectory& t) {
    if (t.task.gold_answer.empty())
        throw std::invalid_argument("score_accuracy requires a gold answer");
    return protocol::answers_equivalent(final_answer(t), t.task.gold_answer) ? 1 : 0;
}

double score_verifier_penalty(const GuidedTrajectory& t) {
    int scored = 0;
    int failed = 0;
    for (const auto& step : t.steps) {
        if (!step.signal) continue;
        ++scored;
        if (step.signal->hallucination_detect == HallucinationScore::Hallucinated) ++failed;
    }
    if (scored == 0) throw ZeroTurns();
    return std::clamp(1.0 - static_cast<double>(failed) / scored, 0.0, 1.0);
}

int score_format(const GuidedTrajectory& t) {
    if (t.steps.empty()) return 0;
    const std::string visible = protocol::strip_think_blocks(t.steps.back().output);
    return protocol::extract_boxed_answer(visible).well_formed ? 1 : 0;
}

CompositeReward composite(const GuidedTrajectory& t, const RewardWeights& weights) {
    if (weights.lambda_acc < 0 || weights.lambda_ver < 0 || weights.lambda_fmt < 0)
        throw std::invalid_argument("reward weights must be nonnegative");

    CompositeReward r;
    r.weights = weights;
    r.r_acc = score_accuracy(t);
    r.r_ver = score_verifier_penalty(t);
    r.r_fmt = score_format(t);
    r.total = weights.lambda_acc * r.r_acc + weights.lambda_ver * r.r_ver + weights.lambda_fmt * r.r_fmt;
    return r;
}

}  // namespace guided::reward
