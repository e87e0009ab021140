#include "guided/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace guided::grpo {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace

std::vector<double> normalize_advantages(const std::vector<double>& rewards, double epsilon_num) {
    if (rewards.size() < 2) throw GroupTooSmall();
    const double n = static_cast<double>(rewards.size());
    const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
    double variance = 0.0;
    for (const double r : rewards) variance += (r - mean) * (r - mean);
    variance /= n;  // population statistics over the group
    const double denom = std::sqrt(variance) + epsilon_num;

    std::vector<double> advantages(rewards.size());
    for (std::size_t i = 0; i < rewards.size(); ++i) advantages[i] = (rewards[i] - mean) / denom;
    return advantages;
}

double clipped_surrogate(double ratio, double advantage, double clip_epsilon) {
    if (!(ratio > 0.0)) throw NonpositiveRatio();
    const double clipped = std::clamp(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon);
    return std::min(ratio * advantage, clipped * advantage);
}

double kl_low_variance(double logp_theta, double logp_ref) {
    const double log_ratio = logp_ref - logp_theta;
    return std::exp(log_ratio) - log_ratio - 1.0;
}

// ---------------------------------------------------------------------------
// ToySoftmaxPolicy

ToySoftmaxPolicy::ToySoftmaxPolicy(std::vector<double> logits) : logits_(std::move(logits)) {
    if (logits_.empty()) throw std::invalid_argument("policy needs at least one step");
}

ToySoftmaxPolicy ToySoftmaxPolicy::with_error_probability(double epsilon, int steps) {
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw std::invalid_argument("initial error probability must lie in (0,1)");
    if (steps < 1) throw std::invalid_argument("steps must be positive");
    return ToySoftmaxPolicy(std::vector<double>(static_cast<std::size_t>(steps), logit(epsilon)));
}

double ToySoftmaxPolicy::error_probability(int t) const {
    return sigmoid(logits_.at(static_cast<std::size_t>(t)));
}

double ToySoftmaxPolicy::log_prob(bool errored, int t) const {
    const double p = error_probability(t);
    return errored ? std::log(p) : std::log1p(-p);
}

double ToySoftmaxPolicy::dlogp_dtheta(bool errored, int t) const {
    const double p = error_probability(t);
    return errored ? 1.0 - p : -p;
}

// ---------------------------------------------------------------------------
// Batches

std::vector<std::vector<StepLogProbs>> GroupBatch::step_logprobs(const ToySoftmaxPolicy& policy) const {
    std::vector<std::vector<StepLogProbs>> result;
    result.reserve(trajectories.size());
    for (const auto& traj : trajectories) {
        std::vector<StepLogProbs> steps;
        steps.reserve(traj.steps.size());
        for (std::size_t t = 0; t < traj.steps.size(); ++t) {
            const auto& s = traj.steps[t];
            steps.push_back({policy.log_prob(s.errored, static_cast<int>(t)), s.logp_old, s.logp_ref});
        }
        result.push_back(std::move(steps));
    }
    return result;
}

double toy_reward(const TrajectorySample& sample, int chain_length, simlab::Mode mode,
                  const reward::RewardWeights& weights) {
    const double r_acc = sample.success ? 1.0 : 0.0;
    const double r_ver =
        mode == simlab::Mode::Guided
            ? 1.0 - static_cast<double>(sample.n_fail) / static_cast<double>(chain_length)
            : 1.0;
    const double r_fmt = 1.0;
    return weights.lambda_acc * r_acc + weights.lambda_ver * r_ver + weights.lambda_fmt * r_fmt;
}

GroupBatch sample_batch(const ToySoftmaxPolicy& policy_old, const ToySoftmaxPolicy& policy_ref,
                        const simlab::SyntheticEnv& env, simlab::Mode mode, const GrpoConfig& cfg,
                        std::mt19937_64& rng, const reward::RewardWeights& weights) {
    if (policy_old.steps() != policy_ref.steps())
        throw ShapeMismatch("old and reference policies disagree on step count");
    if (cfg.group_size < 2) throw GroupTooSmall();

    const int steps = policy_old.steps();
    std::vector<double> error_probs(static_cast<std::size_t>(steps));
    for (int t = 0; t < steps; ++t) error_probs[static_cast<std::size_t>(t)] = policy_old.error_probability(t);

    GroupBatch batch;
    batch.trajectories.reserve(static_cast<std::size_t>(cfg.group_size));
    for (int i = 0; i < cfg.group_size; ++i) {
        const auto chain = env.simulate_chain(error_probs, mode, rng);
        TrajectorySample sample;
        sample.success = chain.success;
        sample.n_fail = chain.n_fail;
        sample.steps.reserve(static_cast<std::size_t>(steps));
        for (int t = 0; t < steps; ++t) {
            const bool errored = chain.errored[static_cast<std::size_t>(t)] != 0;
            sample.steps.push_back(
                {errored, policy_old.log_prob(errored, t), policy_ref.log_prob(errored, t)});
        }
        batch.rewards.push_back(toy_reward(sample, steps, mode, weights));
        batch.trajectories.push_back(std::move(sample));
    }
    batch.advantages = normalize_advantages(batch.rewards, cfg.epsilon_num);
    return batch;
}

// ---------------------------------------------------------------------------
// Objective

ObjectiveResult objective_and_gradient(const ToySoftmaxPolicy& policy, const GroupBatch& batch,
                                       const GrpoConfig& cfg) {
    const std::size_t group = batch.trajectories.size();
    if (group == 0 || batch.advantages.size() != group)
        throw ShapeMismatch("batch is empty or advantages are not aligned");

    ObjectiveResult result;
    result.gradient.assign(static_cast<std::size_t>(policy.steps()), 0.0);
    const double inv_group = 1.0 / static_cast<double>(group);

    for (std::size_t i = 0; i < group; ++i) {
        const auto& traj = batch.trajectories[i];
        if (static_cast<int>(traj.steps.size()) != policy.steps())
            throw ShapeMismatch("trajectory step count disagrees with the policy");
        const double advantage = batch.advantages[i];
        const double inv_steps = 1.0 / static_cast<double>(traj.steps.size());

        for (std::size_t t = 0; t < traj.steps.size(); ++t) {
            const auto& step = traj.steps[t];
            const int ti = static_cast<int>(t);
            const double logp_theta = policy.log_prob(step.errored, ti);
            const double ratio = std::exp(logp_theta - step.logp_old);
            const double dlogp = policy.dlogp_dtheta(step.errored, ti);

            result.surrogate += inv_group * inv_steps *
                                clipped_surrogate(ratio, advantage, cfg.clip_epsilon);

            // Gradient of min(r*A, clip(r)*A): the unclipped branch is active
            // inside the clip window and on the pessimistic side outside it.
            const bool inside = ratio >= 1.0 - cfg.clip_epsilon && ratio <= 1.0 + cfg.clip_epsilon;
            const bool pessimistic = (advantage > 0.0 && ratio < 1.0 - cfg.clip_epsilon) ||
                                     (advantage < 0.0 && ratio > 1.0 + cfg.clip_epsilon);
            if (inside || pessimistic)
                result.gradient[t] += inv_group * inv_steps * advantage * ratio * dlogp;

            const double kl_term = kl_low_variance(logp_theta, step.logp_ref);
            result.kl += inv_group * inv_steps * kl_term;
            const double ref_ratio = std::exp(step.logp_ref - logp_theta);
            result.gradient[t] += -cfg.kl_beta * inv_group * inv_steps * (1.0 - ref_ratio) * dlogp;
        }
    }
    result.value = result.surrogate - cfg.kl_beta * result.kl;
    return result;
}

// ---------------------------------------------------------------------------
// Trainer

TrainingTrace train(const simlab::SyntheticEnv& env, simlab::Mode mode, const GrpoConfig& cfg,
                    int epochs, std::uint64_t seed, const reward::RewardWeights& weights) {
    if (epochs < 0) throw std::invalid_argument("epochs must be nonnegative");

    ToySoftmaxPolicy policy =
        ToySoftmaxPolicy::with_error_probability(env.params().epsilon, env.params().chain_length);
    const ToySoftmaxPolicy reference = policy;  // frozen at initialization

    std::mt19937_64 rng(simlab::derive_stream(seed, 0x747261696eULL));
    TrainingTrace trace;
    trace.rows.reserve(static_cast<std::size_t>(epochs));

    for (int epoch = 0; epoch < epochs; ++epoch) {
        const auto batch = sample_batch(policy, reference, env, mode, cfg, rng, weights);
        const auto result = objective_and_gradient(policy, batch, cfg);

        TraceRow row;
        row.epoch = epoch;
        row.mean_reward = std::accumulate(batch.rewards.begin(), batch.rewards.end(), 0.0) /
                          static_cast<double>(batch.rewards.size());
        int successes = 0;
        double n_fail = 0.0;
        for (const auto& traj : batch.trajectories) {
            successes += traj.success ? 1 : 0;
            n_fail += traj.n_fail;
        }
        row.p_success = static_cast<double>(successes) / static_cast<double>(batch.trajectories.size());
        row.mean_n_fail = n_fail / static_cast<double>(batch.trajectories.size());
        row.kl = result.kl;
        row.objective = result.value;
        trace.rows.push_back(row);

        for (std::size_t t = 0; t < result.gradient.size(); ++t)
            policy.logits()[t] += cfg.learning_rate * result.gradient[t];
    }
    return trace;
}

void write_trace_csv(std::ostream& out, const TrainingTrace& trace) {
    out << "epoch,mean_reward,p_success,mean_n_fail,kl,objective\n";
    out.precision(10);
    for (const auto& row : trace.rows) {
        out << row.epoch << ',' << row.mean_reward << ',' << row.p_success << ','
            << row.mean_n_fail << ',' << row.kl << ',' << row.objective << '\n';
    }
}

// ---------------------------------------------------------------------------
// Trace analysis

std::vector<double> moving_average(const std::vector<double>& series, int window) {
    if (window < 1) throw std::invalid_argument("window must be positive");
    if (series.size() < static_cast<std::size_t>(window)) return {};
    std::vector<double> out;
    out.reserve(series.size() - static_cast<std::size_t>(window) + 1);
    double sum = 0.0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        sum += series[i];
        if (i + 1 >= static_cast<std::size_t>(window)) {
            out.push_back(sum / window);
            sum -= series[i + 1 - static_cast<std::size_t>(window)];
        }
    }
    return out;
}

double ols_slope(const std::vector<double>& series) {
    const std::size_t n = series.size();
    if (n < 2) return 0.0;
    const double mean_x = (static_cast<double>(n) - 1.0) / 2.0;
    double mean_y = 0.0;
    for (const double y : series) mean_y += y;
    mean_y /= static_cast<double>(n);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = static_cast<double>(i) - mean_x;
        num += dx * (series[i] - mean_y);
        den += dx * dx;
    }
    return num / den;
}

}  // namespace guided::grpo
