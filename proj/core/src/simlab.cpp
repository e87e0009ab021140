#include "guided/simlab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace guided::simlab {

namespace {

constexpr std::int64_t kBlockTrials = 1 << 16;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double binomial_se(double p_hat, std::int64_t n) {
    return std::sqrt(std::max(p_hat * (1.0 - p_hat), 0.0) / static_cast<double>(n));
}

}  // namespace

const char* mode_name(Mode m) { return m == Mode::OpenLoop ? "open" : "guided"; }

void EnvParams::validate() const {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0,1)");
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0,1)");
    if (!(alpha >= 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in [0,1)");
    if (chain_length < 1) throw std::invalid_argument("chain length must be positive");
}

double p_open(double epsilon, int chain_length) {
    return std::pow(1.0 - epsilon, chain_length);
}

double p_guided(double epsilon, double delta, int chain_length) {
    return std::pow(1.0 - epsilon * delta, chain_length);
}

double step_success_with_alpha(double epsilon, double delta, double alpha) {
    return (1.0 - epsilon) * (1.0 - alpha) + epsilon * (1.0 - delta);
}

bool tradeoff_holds(double epsilon, double delta, double alpha) {
    return epsilon * (1.0 - delta) > (1.0 - epsilon) * alpha;
}

double asymptotic_gain(double epsilon, double delta, int chain_length) {
    return std::exp(chain_length * epsilon * (1.0 - delta));
}

double marginal_utility(double delta_p_acc, double lambda_acc, double lambda_pen) {
    if (lambda_acc < 0 || lambda_pen < 0) throw std::invalid_argument("weights must be nonnegative");
    return lambda_acc * delta_p_acc - lambda_pen;
}

std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(seed ^ splitmix64(stream));
}

SyntheticEnv::SyntheticEnv(EnvParams params) : params_(params) { params_.validate(); }

ChainOutcome SyntheticEnv::simulate_chain(std::span<const double> error_probs, Mode mode,
                                          std::mt19937_64& rng) const {
    ChainOutcome outcome;
    const std::size_t steps = error_probs.size();
    outcome.errored.assign(steps, 0);
    outcome.intervened.assign(steps, 0);

    for (std::size_t t = 0; t < steps; ++t) {
        double eps_t = error_probs[t];
        double delta_t = params_.delta;
        if (params_.correlated) {
            const double scale = 0.5 + uniform01(rng);  // difficulty raises both rates
            eps_t = std::min(eps_t * scale, 0.999);
            delta_t = std::min(delta_t * scale, 0.999);
        }

        const bool errored = uniform01(rng) < eps_t;
        outcome.errored[t] = errored ? 1 : 0;

        if (mode == Mode::OpenLoop) {
            if (errored) outcome.success = false;
            continue;
        }

        if (errored) {
            const bool missed = uniform01(rng) < delta_t;
            if (missed) {
                outcome.success = false;
            } else {
                outcome.intervened[t] = 1;  // detected and perfectly corrected
                ++outcome.n_fail;
            }
        } else if (params_.alpha > 0.0 && uniform01(rng) < params_.alpha) {
            // False rejection: the misguided correction derails a valid step.
            outcome.intervened[t] = 1;
            ++outcome.n_fail;
            outcome.success = false;
        }
    }
    return outcome;
}

MonteCarloEstimate monte_carlo_success(const EnvParams& params, Mode mode, std::int64_t n_trials,
                                       int jobs) {
    if (n_trials < 1) throw std::invalid_argument("n_trials must be >= 1");
    const SyntheticEnv env(params);
    const std::vector<double> error_probs(static_cast<std::size_t>(params.chain_length),
                                          params.epsilon);
    const std::uint64_t mode_salt = mode == Mode::Guided ? 0x67756964ULL : 0x6f70656eULL;

    const std::int64_t n_blocks = (n_trials + kBlockTrials - 1) / kBlockTrials;
    std::vector<std::int64_t> block_successes(static_cast<std::size_t>(n_blocks), 0);

    auto run_block = [&](std::int64_t block) {
        std::mt19937_64 rng(derive_stream(params.seed ^ mode_salt, static_cast<std::uint64_t>(block)));
        const std::int64_t begin = block * kBlockTrials;
        const std::int64_t count = std::min(kBlockTrials, n_trials - begin);
        std::int64_t successes = 0;
        for (std::int64_t i = 0; i < count; ++i) {
            if (env.simulate_chain(error_probs, mode, rng).success) ++successes;
        }
        block_successes[static_cast<std::size_t>(block)] = successes;
    };

    jobs = std::max(1, jobs);
    if (jobs == 1 || n_blocks == 1) {
        for (std::int64_t b = 0; b < n_blocks; ++b) run_block(b);
    } else {
        std::atomic<std::int64_t> next{0};
        std::vector<std::thread> workers;
        const int n_workers = static_cast<int>(std::min<std::int64_t>(jobs, n_blocks));
        workers.reserve(static_cast<std::size_t>(n_workers));
        for (int w = 0; w < n_workers; ++w) {
            workers.emplace_back([&] {
                for (std::int64_t b = next.fetch_add(1); b < n_blocks; b = next.fetch_add(1))
                    run_block(b);
            });
        }
        for (auto& worker : workers) worker.join();
    }

    std::int64_t successes = 0;
    for (const auto s : block_successes) successes += s;

    MonteCarloEstimate estimate;
    estimate.trials = n_trials;
    estimate.estimate = static_cast<double>(successes) / static_cast<double>(n_trials);
    estimate.standard_error = binomial_se(estimate.estimate, n_trials);
    return estimate;
}

TwoArmResult measure_autonomy_delta_j(double p_base, double delta_p_acc, double lambda_acc,
                                      double lambda_pen, std::int64_t n_trials, std::uint64_t seed) {
    if (n_trials < 1) throw std::invalid_argument("n_trials must be >= 1");
    std::mt19937_64 rng(derive_stream(seed, 0x74776f61ULL));
    std::int64_t band_hits = 0;  // draws where only the dependent arm succeeds
    for (std::int64_t i = 0; i < n_trials; ++i) {
        const double u = uniform01(rng);
        const bool dep = u < p_base + delta_p_acc;
        const bool autonomous = u < p_base;
        if (dep && !autonomous) ++band_hits;
    }
    const double band = static_cast<double>(band_hits) / static_cast<double>(n_trials);
    TwoArmResult result;
    result.delta_j = lambda_acc * band - lambda_pen;
    result.standard_error = lambda_acc * binomial_se(band, n_trials);
    return result;
}

std::vector<SweepRow> sweep_alpha(const EnvParams& base, double alpha_from, double alpha_to,
                                  double alpha_step, std::int64_t n_trials, int jobs) {
    if (alpha_step <= 0) throw std::invalid_argument("alpha_step must be positive");
    std::vector<SweepRow> rows;
    int index = 0;
    for (double alpha = alpha_from; alpha <= alpha_to + 1e-12; alpha += alpha_step, ++index) {
        EnvParams point = base;
        point.alpha = std::min(alpha, alpha_to);
        point.seed = derive_stream(base.seed, 0x73776565ULL + static_cast<std::uint64_t>(index));

        const auto open = monte_carlo_success(point, Mode::OpenLoop, n_trials, jobs);
        const auto guided = monte_carlo_success(point, Mode::Guided, n_trials, jobs);

        SweepRow row;
        row.epsilon = point.epsilon;
        row.delta = point.delta;
        row.alpha = point.alpha;
        row.chain_length = point.chain_length;
        row.p_open_cf = p_open(point.epsilon, point.chain_length);
        row.p_guided_cf =
            std::pow(step_success_with_alpha(point.epsilon, point.delta, point.alpha),
                     point.chain_length);
        row.p_open_mc = open.estimate;
        row.p_guided_mc = guided.estimate;
        row.se_open = open.standard_error;
        row.se_guided = guided.standard_error;
        rows.push_back(row);
    }
    return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << "epsilon,delta,alpha,T,p_open_cf,p_guided_cf,p_open_mc,p_guided_mc,se_open,se_guided\n";
    out.precision(10);
    for (const auto& r : rows) {
        out << r.epsilon << ',' << r.delta << ',' << r.alpha << ',' << r.chain_length << ','
            << r.p_open_cf << ',' << r.p_guided_cf << ',' << r.p_open_mc << ',' << r.p_guided_mc
            << ',' << r.se_open << ',' << r.se_guided << '\n';
    }
}

}  // namespace guided::simlab
