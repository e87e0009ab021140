#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "guided/reward.hpp"
#include "guided/simlab.hpp"

namespace guided::grpo {

struct GrpoConfig {
    int group_size = 8;
    double clip_epsilon = 0.2;
    double kl_beta = 0.01;
    double learning_rate = 0.1;   // toy-policy scale; full-scale nominal is 2e-6
    double epsilon_num = 1e-12;   // numerical guard in the advantage denominator
};

class GroupTooSmall : public std::invalid_argument {
  public:
    GroupTooSmall() : std::invalid_argument("advantage normalization needs a group of >= 2") {}
};

class NonpositiveRatio : public std::invalid_argument {
  public:
    NonpositiveRatio() : std::invalid_argument("importance ratio must be positive") {}
};

class ShapeMismatch : public std::invalid_argument {
  public:
    explicit ShapeMismatch(const std::string& what) : std::invalid_argument(what) {}
};

// ---------------------------------------------------------------------------
// Core math

/// Group-relative advantages: (r_i - mean) / (std_population + epsilon_num).
std::vector<double> normalize_advantages(const std::vector<double>& rewards, double epsilon_num);

/// PPO-style pessimistic clipped term: min(ratio*A, clip(ratio, 1-e, 1+e)*A).
double clipped_surrogate(double ratio, double advantage, double clip_epsilon);

/// Low-variance KL estimator at one sampled action:
/// r - (logp_ref - logp_theta) - 1 with r = exp(logp_ref - logp_theta).
/// Nonnegative everywhere; its expectation under pi_theta is KL(theta || ref).
double kl_low_variance(double logp_theta, double logp_ref);

// ---------------------------------------------------------------------------
// Toy policy: a T-step chain with per-step error probability sigmoid(theta_t).
// Decision steps coincide with reasoning steps, so the token-level sums of the
// objective collapse to step level and every term stays analytically
// differentiable.

class ToySoftmaxPolicy {
  public:
    explicit ToySoftmaxPolicy(std::vector<double> logits);
    static ToySoftmaxPolicy with_error_probability(double epsilon, int steps);

    int steps() const { return static_cast<int>(logits_.size()); }
    double error_probability(int t) const;
    double log_prob(bool errored, int t) const;
    /// d log pi(action at t) / d theta_t.
    double dlogp_dtheta(bool errored, int t) const;

    std::vector<double>& logits() { return logits_; }
    const std::vector<double>& logits() const { return logits_; }

  private:
    std::vector<double> logits_;
};

// ---------------------------------------------------------------------------
// Batches

struct StepSample {
    bool errored = false;
    double logp_old = 0.0;
    double logp_ref = 0.0;
};

struct TrajectorySample {
    std::vector<StepSample> steps;
    bool success = false;
    int n_fail = 0;
};

struct StepLogProbs {
    double logp_theta;
    double logp_old;
    double logp_ref;
};

struct GroupBatch {
    std::vector<TrajectorySample> trajectories;
    std::vector<double> rewards;
    std::vector<double> advantages;

    /// The (log pi_theta, log pi_old, log pi_ref) view per decision step.
    std::vector<std::vector<StepLogProbs>> step_logprobs(const ToySoftmaxPolicy& policy) const;
};

/// Composite toy reward under the shared weights. Open-loop trajectories take
/// the standalone convention r_ver = 1; format compliance is 1 by construction.
double toy_reward(const TrajectorySample& sample, int chain_length, simlab::Mode mode,
                  const reward::RewardWeights& weights);

/// G rollouts from the current policy (the retained pi_old snapshot), with
/// rewards and normalized advantages filled in.
GroupBatch sample_batch(const ToySoftmaxPolicy& policy_old, const ToySoftmaxPolicy& policy_ref,
                        const simlab::SyntheticEnv& env, simlab::Mode mode, const GrpoConfig& cfg,
                        std::mt19937_64& rng, const reward::RewardWeights& weights = {});

// ---------------------------------------------------------------------------
// Objective

struct ObjectiveResult {
    double value = 0.0;      // surrogate - beta * kl
    double surrogate = 0.0;
    double kl = 0.0;
    std::vector<double> gradient;  // d value / d theta, one entry per step
};

/// Step-averaged clipped surrogate minus beta times the KL estimator, with the
/// analytic gradient for the sigmoid parameterization.
ObjectiveResult objective_and_gradient(const ToySoftmaxPolicy& policy, const GroupBatch& batch,
                                       const GrpoConfig& cfg);

// ---------------------------------------------------------------------------
// Trainer

struct TraceRow {
    int epoch = 0;
    double mean_reward = 0.0;
    double p_success = 0.0;
    double mean_n_fail = 0.0;
    double kl = 0.0;
    double objective = 0.0;
};

struct TrainingTrace {
    std::vector<TraceRow> rows;
};

/// On-policy loop: pi_old refreshes every optimizer step, pi_ref stays frozen
/// at initialization. Deterministic under a fixed seed.
TrainingTrace train(const simlab::SyntheticEnv& env, simlab::Mode mode, const GrpoConfig& cfg,
                    int epochs, std::uint64_t seed, const reward::RewardWeights& weights = {});

void write_trace_csv(std::ostream& out, const TrainingTrace& trace);

// ---------------------------------------------------------------------------
// Trace analysis

std::vector<double> moving_average(const std::vector<double>& series, int window);

/// Ordinary-least-squares slope of a series against its index.
double ols_slope(const std::vector<double>& series);

}  // namespace guided::grpo
