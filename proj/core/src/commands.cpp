#include "guided/commands.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <thread>

#include <nlohmann/json.hpp>

#include "guided/corepipe.hpp"
#include "guided/dialogue.hpp"
#include "guided/grpo.hpp"
#include "guided/protocol.hpp"
#include "guided/reward.hpp"
#include "guided/rollout.hpp"
#include "guided/simlab.hpp"

namespace guided::commands {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

int resolve_jobs(int jobs) {
    if (jobs > 0) return jobs;
    const auto hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

fs::path ensure_out_dir(const config::RunConfig& config, const CommonOptions& options) {
    const fs::path dir = options.out_dir.empty() ? config.paths.out_dir : options.out_dir;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw config::ConfigError("cannot create output directory " + dir.string());
    return dir;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw config::ConfigError("cannot write " + path.string());
    return out;
}

dialogue::PromptSet resolve_prompts(const config::RunConfig& config) {
    if (config.paths.templates) return dialogue::load_prompt_file(*config.paths.templates);
    return dialogue::builtin_prompts();
}

/// Index-ordered parallel map; output order never depends on scheduling.
template <typename Fn>
void parallel_for(std::size_t count, int jobs, Fn&& fn) {
    jobs = std::min<int>(resolve_jobs(jobs), static_cast<int>(count));
    if (count == 0) return;
    if (jobs <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(jobs));
    for (int w = 0; w < jobs; ++w) {
        workers.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
        });
    }
    for (auto& worker : workers) worker.join();
}

}  // namespace

std::vector<TaskInput> read_task_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config::ConfigError("cannot open task manifest: " + path);
    std::vector<TaskInput> tasks;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::exception& e) {
            throw config::ConfigError("task manifest line " + std::to_string(line_no) +
                                      " is not valid JSON: " + e.what());
        }
        TaskInput task;
        task.id = record.value("id", std::string{});
        task.query = record.value("query", std::string{});
        task.gold_answer = record.value("gold_answer", std::string{});
        if (record.contains("hint")) task.hint = record["hint"].get<std::string>();
        if (record.contains("image_path") && !record["image_path"].get<std::string>().empty())
            task.images.push_back(record["image_path"].get<std::string>());
        if (task.query.empty())
            throw config::ConfigError("task manifest line " + std::to_string(line_no) +
                                      " has an empty query");
        tasks.push_back(std::move(task));
    }
    return tasks;
}

int cmd_rollout(const config::RunConfig& config, const std::string& tasks_path,
                const std::string& mode, const CommonOptions& options, std::ostream& log) {
    if (mode != "guided" && mode != "standalone")
        throw config::ConfigError("rollout mode must be 'guided' or 'standalone'");

    const auto tasks = read_task_manifest(tasks_path);
    for (const auto& task : tasks) {
        if (task.gold_answer.empty())
            throw config::ConfigError("task '" + task.id + "' lacks a gold answer");
    }

    const auto prompts = resolve_prompts(config);
    const auto counter = modelclient::whitespace_counter();
    const auto policy = config::make_backend(config::require_backend(config, "policy"), counter);
    std::unique_ptr<modelclient::Backend> verifier;
    if (mode == "guided")
        verifier = config::make_backend(config::require_backend(config, "verifier"), counter);

    std::vector<GuidedTrajectory> trajectories(tasks.size());
    parallel_for(tasks.size(), options.jobs, [&](std::size_t i) {
        auto policy_session = policy->session();
        if (mode == "guided") {
            auto verifier_session = verifier->session();
            trajectories[i] = rollout::run_guided(*policy_session, *verifier_session, tasks[i],
                                                  config.rollout, prompts, counter);
        } else {
            trajectories[i] =
                rollout::run_standalone(*policy_session, tasks[i], config.rollout, prompts, counter);
        }
    });

    const fs::path out_dir = ensure_out_dir(config, options);
    auto jsonl = open_out(out_dir / "trajectories.jsonl");
    auto csv = open_out(out_dir / "metrics.csv");

    std::vector<rollout::MetricsRecord> metrics;
    bool backend_failure = false;
    for (const auto& t : trajectories) {
        std::optional<reward::CompositeReward> r;
        try {
            r = reward::composite(t, config.reward);
        } catch (const reward::ZeroTurns&) {
            // Partial trajectory: reward is not computable; the record still lands.
        }
        jsonl << rollout::trajectory_to_json(t, r) << '\n';
        metrics.push_back(rollout::rollout_metrics(t));
        if (t.stop_reason == StopReason::BackendError) backend_failure = true;
    }
    rollout::write_metrics_csv(csv, metrics);

    log << "wrote " << (out_dir / "trajectories.jsonl").string() << " (" << trajectories.size()
        << " trajectories)\n";
    return backend_failure ? kExitBackend : kExitOk;
}

int cmd_train(const config::RunConfig& config, const std::string& mode, int epochs,
              const CommonOptions& options, std::ostream& log) {
    const bool run_open = mode == "open" || mode == "both";
    const bool run_guided = mode == "guided" || mode == "both";
    if (!run_open && !run_guided)
        throw config::ConfigError("train mode must be 'open', 'guided' or 'both'");
    if (epochs < 0) epochs = config.grpo.epochs;

    simlab::EnvParams params;
    params.epsilon = config.grpo.env.epsilon0;
    params.delta = config.grpo.env.delta;
    params.alpha = config.grpo.env.alpha;
    params.chain_length = config.grpo.env.chain_length;
    params.seed = options.seed;
    const simlab::SyntheticEnv env(params);

    const fs::path out_dir = ensure_out_dir(config, options);

    auto final_mean = [](const grpo::TrainingTrace& trace) {
        const std::size_t n = trace.rows.size();
        const std::size_t window = std::min<std::size_t>(10, n);
        if (window == 0) return 0.0;
        double sum = 0.0;
        for (std::size_t i = n - window; i < n; ++i) sum += trace.rows[i].mean_reward;
        return sum / static_cast<double>(window);
    };

    double open_final = 0.0;
    double guided_final = 0.0;
    if (run_open) {
        const auto trace =
            grpo::train(env, simlab::Mode::OpenLoop, config.grpo.grpo, epochs, options.seed, config.reward);
        auto out = open_out(out_dir / "trace_open.csv");
        grpo::write_trace_csv(out, trace);
        open_final = final_mean(trace);
        log << "open: final-10 mean reward " << open_final << '\n';
    }
    if (run_guided) {
        const auto trace =
            grpo::train(env, simlab::Mode::Guided, config.grpo.grpo, epochs, options.seed, config.reward);
        auto out = open_out(out_dir / "trace_guided.csv");
        grpo::write_trace_csv(out, trace);
        guided_final = final_mean(trace);
        log << "guided: final-10 mean reward " << guided_final << '\n';
    }
    if (run_open && run_guided)
        log << "guided - open final reward margin: " << guided_final - open_final << '\n';
    return kExitOk;
}

int cmd_simulate(const config::RunConfig& config, const CommonOptions& options, std::ostream& log) {
    simlab::EnvParams params = config.env.params;
    params.seed = options.seed;
    params.validate();

    const auto rows = simlab::sweep_alpha(params, config.env.sweep.from, config.env.sweep.to,
                                          config.env.sweep.step, config.env.trials,
                                          resolve_jobs(options.jobs));

    const fs::path out_dir = ensure_out_dir(config, options);
    auto out = open_out(out_dir / "sweep.csv");
    simlab::write_sweep_csv(out, rows);
    log << "wrote " << (out_dir / "sweep.csv").string() << " (" << rows.size() << " rows)\n";
    return kExitOk;
}

int cmd_synth(const config::RunConfig& config, const std::string& problems_path,
              const CommonOptions& options, std::ostream& log) {
    const auto problems = read_task_manifest(problems_path);
    const auto counter = modelclient::whitespace_counter();

    auto backend_or = [&](const char* name, const char* fallback) -> const config::BackendSpec& {
        if (config.backends.count(name)) return config.backends.at(name);
        return config::require_backend(config, fallback);
    };
    const auto solver = config::make_backend(backend_or("solver", "policy"), counter);
    const auto guide = config::make_backend(backend_or("guide", "verifier"), counter);
    const auto oracle = config::make_backend(config::require_backend(config, "oracle"), counter);

    rollout::RolloutConfig synth_cfg = config.rollout;
    synth_cfg.policy_temperature = 0.0;
    synth_cfg.verifier_temperature = 0.0;

    struct PipelineResult {
        GuidedTrajectory trajectory;
        std::vector<corepipe::StepScore> scores;
        corepipe::FilterVerdict verdict = corepipe::FilterVerdict::Keep;
    };
    std::vector<PipelineResult> results(problems.size());

    parallel_for(problems.size(), options.jobs, [&](std::size_t i) {
        auto solver_session = solver->session();
        auto guide_session = guide->session();
        auto oracle_session = oracle->session();

        PipelineResult& result = results[i];
        result.trajectory =
            corepipe::generate_dialogue(*solver_session, *guide_session, problems[i], synth_cfg);

        std::vector<std::string> history;
        for (const auto& step : result.trajectory.steps) {
            history.push_back(step.output);
            result.scores.push_back(
                corepipe::score_step(*oracle_session, problems[i], history, config.pipeline_scoring));
        }
        result.verdict =
            corepipe::apply_filters(result.trajectory, result.scores, config.pipeline_filters);
    });

    const fs::path out_dir = ensure_out_dir(config, options);
    auto dataset_out = open_out(out_dir / "dataset.jsonl");
    auto sft_out = open_out(out_dir / "sft.jsonl");
    auto stats_out = open_out(out_dir / "stats.json");
    auto audit_out = open_out(out_dir / "audit.csv");

    const std::string& guide_system = dialogue::synthesis_prompts().system_verifier;
    std::vector<GuidedTrajectory> kept;
    std::vector<std::vector<corepipe::StepScore>> kept_scores;
    std::vector<corepipe::AuditRow> audit;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& result = results[i];
        audit.push_back({problems[i].id, result.verdict, corepipe::filter_verdict_name(result.verdict)});
        if (result.verdict != corepipe::FilterVerdict::Keep) continue;

        dataset_out << corepipe::serialize_core_record(result.trajectory, result.scores, guide_system)
                    << '\n';
        for (const auto& record : corepipe::emit_sft_records(result.trajectory, result.scores)) {
            json pair;
            pair["input"] = json::parse(record.input);
            pair["target"] = record.target;
            sft_out << pair.dump() << '\n';
        }
        kept.push_back(result.trajectory);
        kept_scores.push_back(result.scores);
    }
    corepipe::write_audit_csv(audit_out, audit);

    if (!kept.empty()) {
        stats_out << corepipe::compute_stats(kept, kept_scores).to_json() << '\n';
    } else {
        stats_out << corepipe::DatasetStats{}.to_json() << '\n';
    }

    log << "kept " << kept.size() << " of " << problems.size() << " dialogues\n";
    return kExitOk;
}

}  // namespace guided::commands
