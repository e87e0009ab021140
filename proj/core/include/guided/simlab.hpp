#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace guided::simlab {

enum class Mode { OpenLoop, Guided };

const char* mode_name(Mode m);

/// Error-propagation chain parameters: intrinsic per-step error rate epsilon,
/// conditional verifier miss rate delta = P(miss | error), false-rejection
/// rate alpha, chain length T. correlated turns on the stress mode where a
/// per-step difficulty draw scales epsilon and delta together.
struct EnvParams {
    double epsilon = 0.1;
    double delta = 0.2;
    double alpha = 0.0;
    int chain_length = 10;
    std::uint64_t seed = 0;
    bool correlated = false;

    void validate() const;
};

// ---------------------------------------------------------------------------
// Closed forms

/// Open-loop validity probability (1 - epsilon)^T.
double p_open(double epsilon, int chain_length);

/// Guided validity probability (1 - epsilon*delta)^T under negligible false
/// rejections.
double p_guided(double epsilon, double delta, int chain_length);

/// Per-step success with false rejections: (1-eps)(1-alpha) + eps(1-delta).
/// A falsely rejected valid step is lost (the correction it forces derails
/// the step), which is what makes the trade-off boundary exact.
double step_success_with_alpha(double epsilon, double delta, double alpha);

/// True iff the correction gain outweighs the false-rejection loss:
/// eps(1-delta) > (1-eps)*alpha.
bool tradeoff_holds(double epsilon, double delta, double alpha);

/// Large-T approximation of p_guided / p_open: exp(T*eps*(1-delta)).
double asymptotic_gain(double epsilon, double delta, int chain_length);

/// Expected reward delta of triggering one verifier intervention for a
/// marginal accuracy gain: lambda_acc * delta_p_acc - lambda_pen.
double marginal_utility(double delta_p_acc, double lambda_acc, double lambda_pen);

// ---------------------------------------------------------------------------
// RNG

/// splitmix64-mixed substream derivation; workers never share a stream.
std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t stream);

inline double uniform01(std::mt19937_64& rng) { return (rng() >> 11) * 0x1.0p-53; }

// ---------------------------------------------------------------------------
// Chain simulation

struct ChainOutcome {
    std::vector<std::uint8_t> errored;     // policy's sampled action per step
    std::vector<std::uint8_t> intervened;  // verifier detection or rejection
    bool success = true;                   // no undetected error, no lost rejection
    int n_fail = 0;                        // number of interventions
};

class SyntheticEnv {
  public:
    explicit SyntheticEnv(EnvParams params);

    const EnvParams& params() const { return params_; }

    /// One chain under per-step error probabilities (constant epsilon for the
    /// theory lab, sigmoid(theta) for the toy trainer). Guided mode corrects
    /// detected errors perfectly, misses with probability delta, and falsely
    /// rejects valid steps with probability alpha.
    ChainOutcome simulate_chain(std::span<const double> error_probs, Mode mode,
                                std::mt19937_64& rng) const;

  private:
    EnvParams params_;
};

// ---------------------------------------------------------------------------
// Monte Carlo

struct MonteCarloEstimate {
    double estimate = 0.0;
    double standard_error = 0.0;
    std::int64_t trials = 0;
};

/// Fraction of strictly valid chains. Trials are split into fixed-size blocks
/// with independent substreams, so the result is identical for any worker
/// count.
MonteCarloEstimate monte_carlo_success(const EnvParams& params, Mode mode, std::int64_t n_trials,
                                       int jobs = 1);

// ---------------------------------------------------------------------------
// Two-arm autonomy toy

struct TwoArmResult {
    double delta_j = 0.0;
    double standard_error = 0.0;
};

/// Paired Monte Carlo of the dependency-vs-autonomy objective difference:
/// the dependent arm gains delta_p_acc accuracy but pays one intervention
/// penalty. Common random numbers keep the variance on the accuracy band.
TwoArmResult measure_autonomy_delta_j(double p_base, double delta_p_acc, double lambda_acc,
                                      double lambda_pen, std::int64_t n_trials, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Sweeps

struct SweepRow {
    double epsilon;
    double delta;
    double alpha;
    int chain_length;
    double p_open_cf;
    double p_guided_cf;
    double p_open_mc;
    double p_guided_mc;
    double se_open;
    double se_guided;
};

std::vector<SweepRow> sweep_alpha(const EnvParams& base, double alpha_from, double alpha_to,
                                  double alpha_step, std::int64_t n_trials, int jobs = 1);

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

}  // namespace guided::simlab
