// Acceptance suite: every release criterion in one binary, one verdict line
// per criterion, nonzero exit on any failure. Tolerances are pinned here and
// nowhere else.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "guided/commands.hpp"
#include "guided/config.hpp"
#include "guided/corepipe.hpp"
#include "guided/grpo.hpp"
#include "guided/modelclient.hpp"
#include "guided/protocol.hpp"
#include "guided/reward.hpp"
#include "guided/rollout.hpp"
#include "guided/simlab.hpp"
#include "support/case_dialogues.hpp"

namespace fs = std::filesystem;
using namespace guided;

namespace {

struct Check {
    bool ok = true;
    std::ostringstream detail;

    void require(bool condition, const std::string& what) {
        if (!condition) {
            ok = false;
            if (detail.tellp() > 0) detail << "; ";
            detail << what;
        }
    }
    void note(const std::string& what) {
        if (detail.tellp() > 0) detail << "; ";
        detail << what;
    }
};

double elapsed_seconds(const std::chrono::steady_clock::time_point& start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(double v) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.6g", v);
    return buffer;
}

// ---------------------------------------------------------------------------
// 1. Theorem closed forms and Monte Carlo agreement.

Check criterion_theorem_closed_forms() {
    Check check;
    const auto start = std::chrono::steady_clock::now();

    const double open_cf = simlab::p_open(0.1, 10);
    const double guided_cf = simlab::p_guided(0.1, 0.2, 10);
    check.require(std::abs(open_cf - 0.34867844) < 1e-6,
                  "p_open(0.1,10)=" + fmt(open_cf) + " != 0.34867844");
    check.require(std::abs(guided_cf - 0.81707281) < 1e-6,
                  "p_guided(0.1,0.2,10)=" + fmt(guided_cf) + " != 0.81707281");

    simlab::EnvParams params;
    params.epsilon = 0.1;
    params.delta = 0.2;
    params.alpha = 0.0;
    params.chain_length = 10;
    params.seed = 2024;

    const auto open_mc = simlab::monte_carlo_success(params, simlab::Mode::OpenLoop, 200000, 4);
    check.require(std::abs(open_mc.estimate - open_cf) <= 4 * open_mc.standard_error,
                  "open MC " + fmt(open_mc.estimate) + " beyond 4 SE of " + fmt(open_cf));
    const auto guided_mc = simlab::monte_carlo_success(params, simlab::Mode::Guided, 200000, 4);
    check.require(std::abs(guided_mc.estimate - guided_cf) <= 4 * guided_mc.standard_error,
                  "guided MC " + fmt(guided_mc.estimate) + " beyond 4 SE of " + fmt(guided_cf));

    const double seconds = elapsed_seconds(start);
    check.require(seconds < 5.0, "runtime " + fmt(seconds) + "s exceeds 5s");
    check.note("mc_open=" + fmt(open_mc.estimate) + " mc_guided=" + fmt(guided_mc.estimate) +
               " in " + fmt(seconds) + "s");
    return check;
}

// ---------------------------------------------------------------------------
// 2. False-rejection trade-off boundary.

Check criterion_tradeoff_boundary() {
    Check check;
    const double alpha_star = 0.08 / 0.9;  // eps(1-delta) = (1-eps) alpha
    const double step = 0.005;

    simlab::EnvParams base;
    base.epsilon = 0.1;
    base.delta = 0.2;
    base.chain_length = 10;
    base.seed = 77;
    const auto rows = simlab::sweep_alpha(base, 0.0, 0.15, step, 1000000, 4);
    check.require(rows.size() == 31, "expected 31 sweep rows, got " + std::to_string(rows.size()));

    // First grid point where the Monte Carlo ordering flips to open >= guided.
    double flip_alpha = -1.0;
    for (const auto& row : rows) {
        if (row.p_guided_mc <= row.p_open_mc) {
            flip_alpha = row.alpha;
            break;
        }
    }
    check.require(flip_alpha >= 0.0, "ordering never flipped across the sweep");
    if (flip_alpha >= 0.0) {
        check.require(std::abs(flip_alpha - alpha_star) <= step + 1e-12,
                      "flip at alpha=" + fmt(flip_alpha) + " not within one cell of " +
                          fmt(alpha_star));
        check.note("flip at alpha=" + fmt(flip_alpha) + ", alpha*=" + fmt(alpha_star));
    }

    // Ordering agrees with the analytic inequality away from the boundary cell.
    for (const auto& row : rows) {
        if (std::abs(row.alpha - alpha_star) <= step) continue;
        const bool predicted = simlab::tradeoff_holds(base.epsilon, base.delta, row.alpha);
        check.require((row.p_guided_mc > row.p_open_mc) == predicted,
                      "ordering disagrees with the inequality at alpha=" + fmt(row.alpha));
    }
    return check;
}

// ---------------------------------------------------------------------------
// 3. GRPO math: gradient vs finite differences; advantage normalization.

double objective_value(const std::vector<double>& logits, const grpo::GroupBatch& batch,
                       const grpo::GrpoConfig& cfg) {
    return grpo::objective_and_gradient(grpo::ToySoftmaxPolicy(logits), batch, cfg).value;
}

Check criterion_grpo_math() {
    Check check;
    std::mt19937_64 rng(4242);
    std::uniform_real_distribution<double> logit_dist(-2.5, 0.5);
    std::uniform_real_distribution<double> jitter(-0.15, 0.15);
    const double h = 1e-5;

    simlab::EnvParams params;
    params.epsilon = 0.3;
    params.delta = 0.25;
    params.chain_length = 4;
    const simlab::SyntheticEnv env(params);

    double worst_gradient = 0.0;
    double worst_mean = 0.0;
    double worst_std = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> logits(4);
        for (auto& l : logits) l = logit_dist(rng);
        const grpo::ToySoftmaxPolicy policy_old(logits);
        std::vector<double> ref_logits(4);
        for (auto& l : ref_logits) l = logit_dist(rng);
        const grpo::ToySoftmaxPolicy policy_ref(ref_logits);

        grpo::GrpoConfig cfg;
        cfg.group_size = 6;
        const auto mode = trial % 2 == 0 ? simlab::Mode::Guided : simlab::Mode::OpenLoop;
        const auto batch = grpo::sample_batch(policy_old, policy_ref, env, mode, cfg, rng);

        // Advantage statistics whenever the group carries reward variance.
        double mean_r = 0.0;
        for (const double r : batch.rewards) mean_r += r;
        mean_r /= batch.rewards.size();
        double var_r = 0.0;
        for (const double r : batch.rewards) var_r += (r - mean_r) * (r - mean_r);
        var_r /= batch.rewards.size();
        if (var_r > 1e-8) {
            double mean_a = 0.0;
            for (const double a : batch.advantages) mean_a += a;
            mean_a /= batch.advantages.size();
            double var_a = 0.0;
            for (const double a : batch.advantages) var_a += (a - mean_a) * (a - mean_a);
            var_a /= batch.advantages.size();
            worst_mean = std::max(worst_mean, std::abs(mean_a));
            worst_std = std::max(worst_std, std::abs(std::sqrt(var_a) - 1.0));
        }

        auto eval_logits = logits;
        for (auto& l : eval_logits) l += jitter(rng);
        const auto analytic =
            grpo::objective_and_gradient(grpo::ToySoftmaxPolicy(eval_logits), batch, cfg).gradient;
        for (std::size_t i = 0; i < eval_logits.size(); ++i) {
            auto plus = eval_logits;
            auto minus = eval_logits;
            plus[i] += h;
            minus[i] -= h;
            const double numeric =
                (objective_value(plus, batch, cfg) - objective_value(minus, batch, cfg)) / (2 * h);
            const double scale = std::max({1.0, std::abs(analytic[i]), std::abs(numeric)});
            worst_gradient = std::max(worst_gradient, std::abs(analytic[i] - numeric) / scale);
        }
    }

    check.require(worst_gradient < 1e-5,
                  "gradient relative error " + fmt(worst_gradient) + " >= 1e-5");
    check.require(worst_mean < 1e-9, "advantage mean " + fmt(worst_mean) + " >= 1e-9");
    check.require(worst_std < 1e-6, "advantage std deviates by " + fmt(worst_std) + " >= 1e-6");
    check.note("worst_grad_err=" + fmt(worst_gradient) + " worst_mean=" + fmt(worst_mean) +
               " worst_std_dev=" + fmt(worst_std));
    return check;
}

// ---------------------------------------------------------------------------
// 4. Guided vs open-loop training dynamics.

Check criterion_training_dynamics() {
    Check check;
    const auto start = std::chrono::steady_clock::now();

    simlab::EnvParams params;
    params.epsilon = 0.15;  // initial per-step error
    params.delta = 0.2;
    params.chain_length = 8;
    const simlab::SyntheticEnv env(params);
    grpo::GrpoConfig cfg;  // group size 8, toy learning rate
    const int epochs = 400;
    const int seeds = 10;

    auto final10 = [](const grpo::TrainingTrace& trace) {
        double sum = 0.0;
        for (std::size_t i = trace.rows.size() - 10; i < trace.rows.size(); ++i)
            sum += trace.rows[i].mean_reward;
        return sum / 10.0;
    };

    std::vector<double> guided_finals, open_finals;
    std::vector<double> nfail_avg;
    for (int seed = 0; seed < seeds; ++seed) {
        const auto guided = grpo::train(env, simlab::Mode::Guided, cfg, epochs, seed);
        const auto open = grpo::train(env, simlab::Mode::OpenLoop, cfg, epochs, seed);
        guided_finals.push_back(final10(guided));
        open_finals.push_back(final10(open));
        if (nfail_avg.empty()) nfail_avg.assign(guided.rows.size(), 0.0);
        for (std::size_t i = 0; i < guided.rows.size(); ++i)
            nfail_avg[i] += guided.rows[i].mean_n_fail / seeds;
    }

    auto mean_se = [](const std::vector<double>& v) {
        double mean = 0.0;
        for (const double x : v) mean += x;
        mean /= v.size();
        double var = 0.0;
        for (const double x : v) var += (x - mean) * (x - mean);
        var /= (v.size() - 1);
        return std::make_pair(mean, std::sqrt(var / v.size()));
    };
    const auto [guided_mean, guided_se] = mean_se(guided_finals);
    const auto [open_mean, open_se] = mean_se(open_finals);
    const double margin = guided_mean - open_mean;
    const double pooled_se = std::sqrt(guided_se * guided_se + open_se * open_se);
    check.require(margin > 2.0 * pooled_se,
                  "margin " + fmt(margin) + " <= 2x pooled SE " + fmt(pooled_se));

    // Trend of the intervention count: window-5 smoothing of the seed-averaged
    // series, non-increasing as slope <= 0 and endpoint drop.
    const auto smoothed = grpo::moving_average(nfail_avg, 5);
    const double slope = grpo::ols_slope(smoothed);
    check.require(slope <= 0.0, "smoothed n_fail slope " + fmt(slope) + " > 0");
    check.require(smoothed.back() <= smoothed.front(),
                  "smoothed n_fail rose from " + fmt(smoothed.front()) + " to " +
                      fmt(smoothed.back()));

    const double seconds = elapsed_seconds(start);
    check.require(seconds < 120.0, "runtime " + fmt(seconds) + "s exceeds 2 min");
    check.note("guided=" + fmt(guided_mean) + " open=" + fmt(open_mean) + " margin=" +
               fmt(margin) + " pooled_se=" + fmt(pooled_se) + " nfail " + fmt(smoothed.front()) +
               "->" + fmt(smoothed.back()));
    return check;
}

// ---------------------------------------------------------------------------
// 5. Autonomy shift: measured objective difference flips at the threshold.

Check criterion_autonomy_shift() {
    Check check;
    const int chain_length = 8;
    const double lambda_acc = 0.8;
    const double lambda_pen = 0.1 / chain_length;
    const double threshold = lambda_pen / lambda_acc;  // 0.015625
    const double step = threshold / 8.0;

    // Half-step offset keeps every grid point away from the exact zero.
    double flip = -1.0;
    double previous = -1.0;
    for (int k = 0; k < 16; ++k) {
        const double delta_p = (k + 0.5) * step;
        const auto measured =
            simlab::measure_autonomy_delta_j(0.5, delta_p, lambda_acc, lambda_pen, 2000000, 99 + k);
        if (measured.delta_j > 0.0 && flip < 0.0) flip = delta_p;
        if (flip < 0.0) previous = delta_p;
        // The sign must match the closed-form marginal utility at every point.
        const double closed_form = simlab::marginal_utility(delta_p, lambda_acc, lambda_pen);
        check.require((measured.delta_j > 0.0) == (closed_form > 0.0),
                      "sign mismatch at delta_p=" + fmt(delta_p));
    }
    check.require(flip > 0.0, "measured delta J never became positive");
    if (flip > 0.0) {
        check.require(std::abs(flip - threshold) <= step + 1e-12,
                      "flip at " + fmt(flip) + " not within one grid step of " + fmt(threshold));
        check.note("flip between " + fmt(previous) + " and " + fmt(flip) + ", threshold " +
                   fmt(threshold));
    }
    return check;
}

// ---------------------------------------------------------------------------
// 6. Support expansion on the deterministic fixture group.

Check criterion_support_expansion() {
    Check check;
    const int chain = 8;
    reward::RewardWeights weights;

    grpo::TrajectorySample perfect;
    perfect.success = true;
    grpo::TrajectorySample recovered_guided;
    recovered_guided.success = true;  // err at step 1, corrected by the verifier
    recovered_guided.n_fail = 1;
    grpo::TrajectorySample recovered_open;
    recovered_open.success = false;  // same trajectory, uncorrected
    grpo::TrajectorySample failed;
    failed.success = false;

    const std::vector<double> guided_rewards = {
        grpo::toy_reward(perfect, chain, simlab::Mode::Guided, weights),
        grpo::toy_reward(recovered_guided, chain, simlab::Mode::Guided, weights),
        grpo::toy_reward(failed, chain, simlab::Mode::Guided, weights),
        grpo::toy_reward(failed, chain, simlab::Mode::Guided, weights)};
    const std::vector<double> open_rewards = {
        grpo::toy_reward(perfect, chain, simlab::Mode::OpenLoop, weights),
        grpo::toy_reward(recovered_open, chain, simlab::Mode::OpenLoop, weights),
        grpo::toy_reward(failed, chain, simlab::Mode::OpenLoop, weights),
        grpo::toy_reward(failed, chain, simlab::Mode::OpenLoop, weights)};

    const auto guided_adv = grpo::normalize_advantages(guided_rewards, 1e-12);
    const auto open_adv = grpo::normalize_advantages(open_rewards, 1e-12);
    check.require(guided_adv[1] > 0.0,
                  "guided advantage " + fmt(guided_adv[1]) + " not positive");
    check.require(open_adv[1] < 0.0, "open advantage " + fmt(open_adv[1]) + " not negative");
    check.note("guided_adv=" + fmt(guided_adv[1]) + " open_adv=" + fmt(open_adv[1]));
    return check;
}

// ---------------------------------------------------------------------------
// 7. Protocol fidelity over the case transcripts.

Check criterion_protocol_fidelity() {
    Check check;
    const auto dialogues = testsupport::case_dialogues();
    check.require(dialogues.size() == 10, "expected 10 transcripts");

    for (const auto& dialogue : dialogues) {
        int n_fail = 0;
        for (std::size_t i = 0; i < dialogue.turns.size(); ++i) {
            const auto parsed = protocol::parse_score_line(dialogue.turns[i].verifier,
                                                           protocol::StopPolicy::Lenient);
            check.require(parsed.ok(), dialogue.name + " turn " + std::to_string(i) +
                                           " failed to parse");
            if (!parsed.ok()) continue;
            const int score =
                parsed.signal.hallucination_detect == HallucinationScore::Valid ? 1 : 0;
            check.require(score == dialogue.expected_scores[i],
                          dialogue.name + " turn " + std::to_string(i) + " score mismatch");
            if (score == 0) ++n_fail;
            check.require(parsed.signal.is_stop == (i + 1 == dialogue.turns.size()),
                          dialogue.name + " stop placement wrong at turn " + std::to_string(i));
        }
        check.require(n_fail == dialogue.expected_n_fail, dialogue.name + " n_fail mismatch");
    }

    auto replay = [&](const testsupport::CaseDialogue& dialogue) {
        modelclient::Script solver, verifier;
        for (const auto& turn : dialogue.turns) {
            solver.queue.push_back(turn.solver);
            verifier.queue.push_back(turn.verifier);
        }
        modelclient::ScriptedBackend policy(solver);
        modelclient::ScriptedBackend guide(verifier);
        rollout::RolloutConfig cfg;
        cfg.strict_stop = dialogue.clean_stop;
        return rollout::run_guided(policy, guide, dialogue.task, cfg);
    };

    // Bar-chart replay: full composite reward.
    const auto bar_chart = replay(dialogues[0]);
    const auto bar_reward = reward::composite(bar_chart);
    check.require(bar_chart.stop_reason == StopReason::VerifierStop, "bar chart did not stop");
    check.require(bar_reward.r_acc == 1 && std::abs(bar_reward.r_ver - 1.0) < 1e-12 &&
                      bar_reward.r_fmt == 1 && std::abs(bar_reward.total - 1.0) < 1e-12,
                  "bar chart reward != 1.0 (got " + fmt(bar_reward.total) + ")");

    // Rotation replay: one flagged turn out of two.
    const auto rotation = replay(dialogues[1]);
    const auto rotation_reward = reward::composite(rotation);
    check.require(std::abs(rotation_reward.r_ver - 0.5) < 1e-12,
                  "rotation r_ver != 0.5 (got " + fmt(rotation_reward.r_ver) + ")");
    check.require(rotation_reward.r_acc == 1, "rotation r_acc != 1");

    // Every transcript replays to a verifier stop with the expected tallies.
    for (const auto& dialogue : dialogues) {
        const auto t = replay(dialogue);
        check.require(t.stop_reason == StopReason::VerifierStop,
                      dialogue.name + " replay did not stop");
        check.require(t.turns() == dialogue.turns.size(), dialogue.name + " replay turn count");
        check.require(t.n_fail() == dialogue.expected_n_fail, dialogue.name + " replay n_fail");
    }
    check.note("10 transcripts parsed and replayed");
    return check;
}

// ---------------------------------------------------------------------------
// 8. Synthesis pipeline: labels, filters, statistics.

Check criterion_synthesis_pipeline() {
    Check check;

    auto trials = [](int ones, int zeros) {
        std::vector<int> t;
        for (int i = 0; i < ones; ++i) t.push_back(1);
        for (int i = 0; i < zeros; ++i) t.push_back(0);
        return t;
    };
    check.require(corepipe::label_from_trials(trials(7, 3)).label == corepipe::StepLabel::Positive,
                  "mean 0.7 not Positive");
    check.require(corepipe::label_from_trials(trials(3, 7)).label == corepipe::StepLabel::Negative,
                  "mean 0.3 not Negative");
    check.require(corepipe::label_from_trials(trials(5, 5)).label == corepipe::StepLabel::Discarded,
                  "mean 0.5 not Discarded");

    auto make_dialogue = [](int steps, bool pure_final, bool clean_stop, std::int64_t tokens) {
        GuidedTrajectory t;
        t.task.id = "fixture";
        t.task.query = "q";
        for (int i = 0; i < steps; ++i) {
            TrajectoryStep step;
            const bool last = i + 1 == steps;
            step.output = last && pure_final ? "<answer>\\boxed{1}</answer>" : "step";
            step.signal = GuidanceSignal{last && clean_stop ? "###STOP###" : "go on",
                                         HallucinationScore::Valid, last && clean_stop};
            t.steps.push_back(std::move(step));
        }
        t.stop_reason = clean_stop ? StopReason::VerifierStop : StopReason::MaxTurns;
        t.policy_tokens = tokens / 2;
        t.verifier_tokens = tokens - tokens / 2;
        return t;
    };
    const corepipe::FilterConfig filter_cfg;
    const std::vector<corepipe::StepScore> positive(10, corepipe::label_from_trials(trials(10, 0)));

    check.require(corepipe::apply_filters(make_dialogue(10, true, true, 29000), positive,
                                          filter_cfg) == corepipe::FilterVerdict::DropLength,
                  "29k-token dialogue not dropped for length");

    std::vector<corepipe::StepScore> two_negative = positive;
    two_negative[0] = corepipe::label_from_trials(trials(0, 10));
    two_negative[1] = corepipe::label_from_trials(trials(0, 10));
    check.require(corepipe::apply_filters(make_dialogue(10, true, true, 100), two_negative,
                                          filter_cfg) ==
                      corepipe::FilterVerdict::DropHallucinationRatio,
                  "20% negative dialogue not dropped for ratio");

    std::vector<corepipe::StepScore> one_negative = positive;
    one_negative[0] = corepipe::label_from_trials(trials(0, 10));
    check.require(corepipe::apply_filters(make_dialogue(10, true, true, 100), one_negative,
                                          filter_cfg) == corepipe::FilterVerdict::Keep,
                  "10% negative dialogue not kept");

    check.require(corepipe::apply_filters(make_dialogue(10, false, true, 100), positive,
                                          filter_cfg) == corepipe::FilterVerdict::DropStopFormat,
                  "unboxed final answer not dropped for stop format");

    corepipe::DatasetStats stats;
    stats.n_trajectories = 2792;
    stats.n_messages = 61084;
    stats.n_signals = 26360;
    stats.n_positive = 24946;
    stats.n_negative = 1406;
    auto round2 = [](double v) { return std::round(v * 100.0) / 100.0; };
    check.require(round2(stats.signals_per_dialog()) == 9.44,
                  "signals/dialog " + fmt(stats.signals_per_dialog()) + " != 9.44 at 2dp");
    check.require(round2(stats.messages_per_dialog()) == 21.88,
                  "messages/dialog " + fmt(stats.messages_per_dialog()) + " != 21.88 at 2dp");
    check.note("labels, filters and corpus ratios verified");
    return check;
}

// ---------------------------------------------------------------------------
// 9. Seeded determinism of every stochastic command.

Check criterion_determinism() {
    Check check;
    const fs::path root =
        fs::temp_directory_path() / ("guided_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(root);

    const char* config_text = R"({
      "backends": {
        "policy": {"type": "scripted",
                   "script": {"queue": ["step one", "<answer>\\boxed{12}</answer>"],
                              "fallback": "<answer>\\boxed{12}</answer>"}},
        "verifier": {"type": "scripted",
                     "script": {"queue": ["Correct.\n[SCORE] hallucination_detect=1",
                                          "###STOP###\n[SCORE] hallucination_detect=1"],
                                "fallback": "###STOP###\n[SCORE] hallucination_detect=1"}},
        "oracle": {"type": "scripted", "script": {"fallback": "[SCORE] hallucination_detect=1"}}
      },
      "grpo": {"epochs": 40, "env": {"chain_length": 4}},
      "env": {"trials": 50000, "sweep": {"from": 0.0, "to": 0.02, "step": 0.01}}
    })";
    const auto config = config::parse_config(config_text);

    const fs::path tasks_path = root / "tasks.jsonl";
    {
        std::ofstream tasks(tasks_path);
        tasks << R"({"id": "t1", "query": "sum?", "gold_answer": "12"})" << '\n';
    }

    auto read_file = [](const fs::path& path) {
        std::ifstream in(path, std::ios::binary);
        std::ostringstream buffer;
        buffer << in.rdbuf();
        return buffer.str();
    };

    auto run_all = [&](const fs::path& out_dir) {
        commands::CommonOptions options;
        options.seed = 31337;
        options.jobs = 2;
        options.out_dir = out_dir.string();
        std::ostringstream log;
        commands::cmd_rollout(config, tasks_path.string(), "guided", options, log);
        commands::cmd_train(config, "both", -1, options, log);
        commands::cmd_simulate(config, options, log);
        commands::cmd_synth(config, tasks_path.string(), options, log);
    };

    run_all(root / "a");
    run_all(root / "b");

    for (const char* artifact :
         {"trajectories.jsonl", "metrics.csv", "trace_open.csv", "trace_guided.csv", "sweep.csv",
          "dataset.jsonl", "sft.jsonl", "stats.json", "audit.csv"}) {
        const std::string a = read_file(root / "a" / artifact);
        const std::string b = read_file(root / "b" / artifact);
        check.require(!a.empty(), std::string(artifact) + " is empty");
        check.require(a == b, std::string(artifact) + " differs across identical seeded runs");
    }

    std::error_code ec;
    fs::remove_all(root, ec);
    check.note("9 artifacts byte-identical across runs");
    return check;
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<Check()> run;
    };
    const std::vector<Criterion> criteria = {
        {"theorem closed forms + monte carlo", criterion_theorem_closed_forms},
        {"false-rejection trade-off boundary", criterion_tradeoff_boundary},
        {"grpo gradient and advantage normalization", criterion_grpo_math},
        {"guided vs open training dynamics", criterion_training_dynamics},
        {"autonomy shift threshold", criterion_autonomy_shift},
        {"support expansion fixture", criterion_support_expansion},
        {"protocol fidelity on case transcripts", criterion_protocol_fidelity},
        {"synthesis pipeline labels, filters, stats", criterion_synthesis_pipeline},
        {"seeded determinism of stochastic commands", criterion_determinism},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Check check;
        try {
            check = criteria[i].run();
        } catch (const std::exception& e) {
            check.ok = false;
            check.note(std::string("exception: ") + e.what());
        }
        std::printf("criterion %zu [%s]: %s%s%s\n", i + 1, criteria[i].name,
                    check.ok ? "PASS" : "FAIL", check.detail.tellp() > 0 ? " - " : "",
                    check.detail.str().c_str());
        if (!check.ok) ++failures;
    }
    if (failures > 0) std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
