#include "guided/corepipe.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "guided/dialogue.hpp"
#include "guided/protocol.hpp"

namespace guided::corepipe {

namespace {

using json = nlohmann::json;

constexpr const char* kOracleSystemPrompt =
    "You are a strict grader of one reasoning step. Judge ONLY the latest step: "
    "is it logically consistent with the task and the preceding steps, with no "
    "invented facts? Reply with exactly one line:\n"
    "[SCORE] hallucination_detect=1  (consistent)\n"
    "[SCORE] hallucination_detect=0  (hallucinated)";

std::optional<int> parse_oracle_verdict(const std::string& content) {
    const auto parsed = protocol::parse_score_line(content, protocol::StopPolicy::Lenient);
    if (parsed.ok())
        return parsed.signal.hallucination_detect == HallucinationScore::Valid ? 1 : 0;
    // Bare-digit fallback for terse oracles.
    std::string trimmed = content;
    trimmed.erase(0, trimmed.find_first_not_of(" \t\r\n"));
    const auto end = trimmed.find_last_not_of(" \t\r\n");
    if (end != std::string::npos) trimmed.erase(end + 1);
    if (trimmed == "1") return 1;
    if (trimmed == "0") return 0;
    return std::nullopt;
}

}  // namespace

const char* step_label_name(StepLabel label) {
    switch (label) {
        case StepLabel::Positive: return "positive";
        case StepLabel::Negative: return "negative";
        case StepLabel::Discarded: return "discarded";
    }
    return "unknown";
}

const char* filter_verdict_name(FilterVerdict verdict) {
    switch (verdict) {
        case FilterVerdict::Keep: return "keep";
        case FilterVerdict::DropLength: return "drop_length";
        case FilterVerdict::DropHallucinationRatio: return "drop_hallucination_ratio";
        case FilterVerdict::DropStopFormat: return "drop_stop_format";
    }
    return "unknown";
}

StepScore label_from_trials(std::vector<int> trials, int abstentions) {
    StepScore score;
    score.trials = std::move(trials);
    score.abstentions = abstentions;
    if (score.trials.empty()) {
        score.mean = 0.0;
        score.label = StepLabel::Discarded;
        return score;
    }
    double sum = 0.0;
    for (const int v : score.trials) sum += v;
    score.mean = sum / static_cast<double>(score.trials.size());
    if (score.mean >= 0.7)
        score.label = StepLabel::Positive;
    else if (score.mean <= 0.3)
        score.label = StepLabel::Negative;
    else
        score.label = StepLabel::Discarded;
    return score;
}

StepScore score_step(modelclient::Backend& oracle, const TaskInput& task,
                     std::span<const std::string> history_through_t, const ScoringConfig& cfg) {
    if (cfg.n_trials < 1) throw std::invalid_argument("n_trials must be >= 1");
    if (history_through_t.empty()) throw std::invalid_argument("nothing to score");

    modelclient::GenerationRequest request;
    DialogueMessage system;
    system.role = Role::System;
    system.content = kOracleSystemPrompt;
    DialogueMessage user;
    user.role = Role::User;
    user.content = dialogue::render_verifier_user_content(task, history_through_t);
    request.messages = {std::move(system), std::move(user)};
    request.temperature = cfg.oracle_temperature;
    request.max_new_tokens = cfg.oracle_max_tokens;
    request.images = task.images;

    std::vector<int> trials;
    int abstentions = 0;
    for (int trial = 0; trial < cfg.n_trials; ++trial) {
        std::optional<int> verdict;
        for (int attempt = 0; attempt < 3 && !verdict; ++attempt) {
            const auto response = modelclient::generate(oracle, request);
            verdict = parse_oracle_verdict(response.content);
        }
        if (verdict)
            trials.push_back(*verdict);
        else
            ++abstentions;
    }
    return label_from_trials(std::move(trials), abstentions);
}

GuidedTrajectory generate_dialogue(modelclient::Backend& solver, modelclient::Backend& guide,
                                   const TaskInput& problem, const rollout::RolloutConfig& cfg) {
    if (cfg.policy_temperature != 0.0 || cfg.verifier_temperature != 0.0)
        throw ConfigRejected("synthesis decodes at temperature 0 for both agents");
    return rollout::run_guided(solver, guide, problem, cfg, dialogue::synthesis_prompts());
}

FilterVerdict apply_filters(const GuidedTrajectory& t, const std::vector<StepScore>& scores,
                            const FilterConfig& cfg) {
    const std::int64_t total_tokens = t.policy_tokens + t.verifier_tokens;
    const bool too_long = total_tokens > cfg.max_tokens;

    std::int64_t scored = 0;
    std::int64_t negatives = 0;
    for (const auto& s : scores) {
        if (s.label == StepLabel::Discarded) continue;
        ++scored;
        if (s.label == StepLabel::Negative) ++negatives;
    }
    const bool too_many_negatives =
        scored > 0 &&
        static_cast<double>(negatives) / static_cast<double>(scored) > cfg.max_negative_ratio;

    bool stop_format_ok = t.stop_reason == StopReason::VerifierStop && !t.steps.empty();
    if (stop_format_ok) {
        const auto& last = t.steps.back();
        stop_format_ok = protocol::is_pure_final_answer(last.output) && last.signal &&
                         last.signal->is_stop;
    }

    if (too_long) return FilterVerdict::DropLength;
    if (too_many_negatives) return FilterVerdict::DropHallucinationRatio;
    if (!stop_format_ok) return FilterVerdict::DropStopFormat;
    return FilterVerdict::Keep;
}

double DatasetStats::signals_per_dialog() const {
    return n_trajectories == 0 ? 0.0
                               : static_cast<double>(n_signals) / static_cast<double>(n_trajectories);
}

double DatasetStats::messages_per_dialog() const {
    return n_trajectories == 0 ? 0.0
                               : static_cast<double>(n_messages) / static_cast<double>(n_trajectories);
}

std::string DatasetStats::to_json() const {
    json out;
    out["n_trajectories"] = n_trajectories;
    out["n_messages"] = n_messages;
    out["role_counts"] = {{"system", role_counts.system}, {"human", role_counts.human}, {"gpt", role_counts.gpt}};
    out["n_signals"] = n_signals;
    out["n_positive"] = n_positive;
    out["n_negative"] = n_negative;
    out["signals_per_dialog"] = signals_per_dialog();
    out["messages_per_dialog"] = messages_per_dialog();
    return out.dump(2);
}

DatasetStats compute_stats(const std::vector<GuidedTrajectory>& dataset,
                           const std::vector<std::vector<StepScore>>& scores) {
    if (dataset.empty()) throw EmptyDataset();
    if (scores.size() != dataset.size())
        throw std::invalid_argument("scores must align with the dataset");

    DatasetStats stats;
    stats.n_trajectories = static_cast<std::int64_t>(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const auto& t = dataset[i];
        stats.role_counts.system += 1;
        for (const auto& step : t.steps) {
            stats.role_counts.human += 1;
            if (step.signal) stats.role_counts.gpt += 1;
        }
        for (const auto& s : scores[i]) {
            if (s.label == StepLabel::Discarded) continue;
            ++stats.n_signals;
            if (s.label == StepLabel::Positive) ++stats.n_positive;
            else ++stats.n_negative;
        }
    }
    stats.n_messages = stats.role_counts.system + stats.role_counts.human + stats.role_counts.gpt;
    return stats;
}

DatasetStats compute_stats_from_jsonl(std::istream& in) {
    DatasetStats stats;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json record = json::parse(line);
        ++stats.n_trajectories;
        for (const auto& message : record.at("conversations")) {
            const std::string from = message.value("from", "");
            if (from == "system") ++stats.role_counts.system;
            else if (from == "human") ++stats.role_counts.human;
            else if (from == "gpt") ++stats.role_counts.gpt;
        }
        if (record.contains("labels")) {
            for (const auto& label : record["labels"]) {
                if (label.is_null()) continue;
                ++stats.n_signals;
                if (label.get<int>() == 1) ++stats.n_positive;
                else ++stats.n_negative;
            }
        }
    }
    if (stats.n_trajectories == 0) throw EmptyDataset();
    stats.n_messages = stats.role_counts.system + stats.role_counts.human + stats.role_counts.gpt;
    return stats;
}

std::string serialize_core_record(const GuidedTrajectory& t, const std::vector<StepScore>& scores,
                                  const std::string& system_prompt) {
    json record = json::parse(protocol::serialize_sharegpt(t, system_prompt));
    json labels = json::array();
    for (std::size_t i = 0; i < t.steps.size(); ++i) {
        if (i < scores.size() && scores[i].label != StepLabel::Discarded)
            labels.push_back(scores[i].label == StepLabel::Positive ? 1 : 0);
        else
            labels.push_back(nullptr);
    }
    record["labels"] = std::move(labels);
    return record.dump();
}

std::vector<SftRecord> emit_sft_records(const GuidedTrajectory& t,
                                        const std::vector<StepScore>& scores) {
    std::vector<SftRecord> records;
    std::vector<std::string> history;
    history.reserve(t.steps.size());

    const std::string& system_prompt = dialogue::synthesis_prompts().system_verifier;
    for (std::size_t i = 0; i < t.steps.size(); ++i) {
        history.push_back(t.steps[i].output);
        if (i >= scores.size() || scores[i].label == StepLabel::Discarded) continue;
        if (!t.steps[i].signal) continue;

        json conversations = json::array();
        conversations.push_back({{"from", "system"}, {"value", system_prompt}});
        conversations.push_back(
            {{"from", "human"}, {"value", dialogue::render_verifier_user_content(t.task, history)}});
        json input;
        input["id"] = t.task.id;
        if (!t.task.images.empty()) input["image"] = t.task.images.front();
        input["conversations"] = std::move(conversations);

        GuidanceSignal target_signal = *t.steps[i].signal;
        target_signal.hallucination_detect = scores[i].label == StepLabel::Positive
                                                 ? HallucinationScore::Valid
                                                 : HallucinationScore::Hallucinated;
        records.push_back({input.dump(), protocol::format_verifier_turn(target_signal)});
    }
    return records;
}

void write_audit_csv(std::ostream& out, const std::vector<AuditRow>& rows) {
    out << "id,verdict,reason\n";
    for (const auto& row : rows)
        out << row.id << ',' << filter_verdict_name(row.verdict) << ',' << row.reason << '\n';
}

}  // namespace guided::corepipe
