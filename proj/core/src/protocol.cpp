#include "guided/protocol.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <nlohmann/json.hpp>

namespace guided {

const char* role_name(Role r) {
    switch (r) {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
    }
    return "unknown";
}

const char* stop_reason_name(StopReason r) {
    switch (r) {
        case StopReason::VerifierStop: return "verifier_stop";
        case StopReason::MaxTurns: return "max_turns";
        case StopReason::TokenBudget: return "token_budget";
        case StopReason::BackendError: return "backend_error";
    }
    return "unknown";
}

std::optional<StopReason> stop_reason_from_name(const std::string& name) {
    if (name == "verifier_stop") return StopReason::VerifierStop;
    if (name == "max_turns") return StopReason::MaxTurns;
    if (name == "token_budget") return StopReason::TokenBudget;
    if (name == "backend_error") return StopReason::BackendError;
    return std::nullopt;
}

}  // namespace guided

namespace guided::protocol {

namespace {

using json = nlohmann::json;

std::string_view trim_view(std::string_view s) {
    constexpr std::string_view ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

std::string trim(std::string_view s) { return std::string(trim_view(s)); }

struct Line {
    std::size_t begin;  // offset of first char
    std::size_t end;    // offset one past last char, excluding the newline
};

std::vector<Line> split_lines(std::string_view text) {
    std::vector<Line> lines;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) {
            lines.push_back({pos, text.size()});
            break;
        }
        lines.push_back({pos, nl});
        pos = nl + 1;
    }
    return lines;
}

/// Parses a trimmed score line of the form "[SCORE] hallucination_detect=V".
std::optional<HallucinationScore> parse_score_value(std::string_view line) {
    auto rest = trim_view(line);
    if (!rest.starts_with(kScoreTag)) return std::nullopt;
    rest = trim_view(rest.substr(kScoreTag.size()));
    constexpr std::string_view key = "hallucination_detect";
    if (!rest.starts_with(key)) return std::nullopt;
    rest = trim_view(rest.substr(key.size()));
    if (!rest.starts_with('=')) return std::nullopt;
    rest = trim_view(rest.substr(1));
    if (rest == "0") return HallucinationScore::Hallucinated;
    if (rest == "1") return HallucinationScore::Valid;
    return std::nullopt;
}

bool parse_full_double(std::string_view s, double& out) {
    const std::string buf(trim_view(s));
    if (buf.empty()) return false;
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(buf.c_str(), &end);
    if (errno != 0 || end != buf.c_str() + buf.size()) return false;
    out = v;
    return true;
}

constexpr std::string_view kAnswerOpen = "<answer>";
constexpr std::string_view kAnswerClose = "</answer>";
constexpr std::string_view kBoxedMarker = "\\boxed{";

/// Balanced-brace payload of a \boxed group starting at `open_brace`
/// (the '{'). Returns nullopt when the braces never balance.
std::optional<std::string> balanced_payload(std::string_view text, std::size_t open_brace,
                                            std::size_t* close_pos) {
    int depth = 0;
    for (std::size_t i = open_brace; i < text.size(); ++i) {
        if (text[i] == '{') {
            ++depth;
        } else if (text[i] == '}') {
            --depth;
            if (depth == 0) {
                if (close_pos) *close_pos = i;
                return std::string(text.substr(open_brace + 1, i - open_brace - 1));
            }
        }
    }
    return std::nullopt;
}

constexpr std::string_view kFirstStepSeparator = "\n\n";

}  // namespace

const char* score_parse_error_name(ScoreParseError e) {
    switch (e) {
        case ScoreParseError::None: return "none";
        case ScoreParseError::MissingScoreLine: return "missing_score_line";
        case ScoreParseError::MalformedScore: return "malformed_score";
        case ScoreParseError::MultipleScoreLines: return "multiple_score_lines";
    }
    return "unknown";
}

ScoreParse parse_score_line(std::string_view message, StopPolicy policy) {
    ScoreParse result;

    const auto lines = split_lines(message);
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto line = message.substr(lines[i].begin, lines[i].end - lines[i].begin);
        if (line.find(kScoreTag) != std::string_view::npos) candidates.push_back(i);
    }

    if (candidates.empty()) {
        result.error = ScoreParseError::MissingScoreLine;
        return result;
    }
    if (candidates.size() > 1) {
        result.error = ScoreParseError::MultipleScoreLines;
        return result;
    }

    const Line score_line = lines[candidates.front()];
    const auto line_text = message.substr(score_line.begin, score_line.end - score_line.begin);
    const auto score = parse_score_value(line_text);
    if (!score) {
        result.error = ScoreParseError::MalformedScore;
        return result;
    }
    result.signal.hallucination_detect = *score;

    // Critique = message minus the score line and one adjoining newline.
    std::string critique;
    critique.reserve(message.size());
    critique.append(message.substr(0, score_line.begin));
    if (score_line.end < message.size()) {
        critique.append(message.substr(score_line.end + 1));  // skip the '\n'
    } else if (!critique.empty() && critique.back() == '\n') {
        critique.pop_back();
    }
    result.signal.critique = std::move(critique);

    const auto stripped = trim_view(result.signal.critique);
    if (stripped == kStopToken) {
        result.signal.is_stop = true;
    } else if (result.signal.critique.find(kStopToken) != std::string::npos) {
        result.protocol_warning = true;
        result.signal.is_stop = (policy == StopPolicy::Lenient);
    }
    return result;
}

std::string format_score_line(HallucinationScore score) {
    return std::string(kScoreTag) + " hallucination_detect=" +
           (score == HallucinationScore::Valid ? "1" : "0");
}

std::string format_verifier_turn(const GuidanceSignal& signal) {
    std::string turn = signal.critique;
    if (!turn.empty() && turn.back() != '\n') turn += '\n';
    turn += format_score_line(signal.hallucination_detect);
    return turn;
}

FinalAnswer extract_boxed_answer(std::string_view message) {
    FinalAnswer answer;

    // Collect complete <answer>...</answer> blocks.
    std::vector<std::string_view> blocks;
    std::size_t pos = 0;
    while (true) {
        const auto open = message.find(kAnswerOpen, pos);
        if (open == std::string_view::npos) break;
        const auto body = open + kAnswerOpen.size();
        const auto close = message.find(kAnswerClose, body);
        if (close == std::string_view::npos) break;
        blocks.push_back(message.substr(body, close - body));
        pos = close + kAnswerClose.size();
    }
    if (blocks.empty()) return answer;

    // Last block wins; duplicates forfeit well-formedness but still yield a
    // value for diagnostics.
    const std::string_view block = blocks.back();
    answer.raw = std::string(block);

    std::vector<std::string> boxed;
    pos = 0;
    while (true) {
        const auto marker = block.find(kBoxedMarker, pos);
        if (marker == std::string_view::npos) break;
        std::size_t close = 0;
        const auto payload = balanced_payload(block, marker + kBoxedMarker.size() - 1, &close);
        if (payload) {
            boxed.push_back(*payload);
            pos = close + 1;
        } else {
            pos = marker + kBoxedMarker.size();
        }
    }
    if (!boxed.empty()) answer.boxed_value = boxed.back();
    answer.well_formed = blocks.size() == 1 && boxed.size() == 1;
    return answer;
}

bool is_pure_final_answer(std::string_view message) {
    const auto t = trim_view(message);
    if (!t.starts_with(kAnswerOpen) || !t.ends_with(kAnswerClose)) return false;
    return extract_boxed_answer(t).well_formed;
}

std::string strip_think_blocks(std::string_view message) {
    constexpr std::string_view open = "<think>";
    constexpr std::string_view close = "</think>";
    std::string out;
    out.reserve(message.size());
    std::size_t pos = 0;
    while (pos < message.size()) {
        const auto o = message.find(open, pos);
        if (o == std::string_view::npos) {
            out.append(message.substr(pos));
            break;
        }
        const auto c = message.find(close, o + open.size());
        if (c == std::string_view::npos) {
            out.append(message.substr(pos));
            break;
        }
        out.append(message.substr(pos, o - pos));
        pos = c + close.size();
    }
    return out;
}

bool answers_equivalent(const FinalAnswer& predicted, std::string_view gold) {
    if (!predicted.boxed_value) return false;
    const std::string lhs = trim(*predicted.boxed_value);
    const std::string rhs = trim(gold);
    if (lhs.empty() || rhs.empty()) return false;

    if (lhs.size() == 1 && rhs.size() == 1 && std::isalpha(static_cast<unsigned char>(lhs[0])) &&
        std::isalpha(static_cast<unsigned char>(rhs[0]))) {
        return std::tolower(static_cast<unsigned char>(lhs[0])) ==
               std::tolower(static_cast<unsigned char>(rhs[0]));
    }

    double a = 0, b = 0;
    if (parse_full_double(lhs, a) && parse_full_double(rhs, b)) {
        const double scale = std::max({1.0, std::abs(a), std::abs(b)});
        return std::abs(a - b) <= 1e-9 * scale;
    }
    return lhs == rhs;
}

std::string render_task_block(const TaskInput& task) {
    std::string block;
    if (task.hint && !task.hint->empty()) {
        block += "Hint: " + *task.hint + "\n";
    }
    block += "Problem:\n" + task.query;
    return block;
}

std::string serialize_sharegpt(const GuidedTrajectory& trajectory, const std::string& system_prompt) {
    if (trajectory.steps.empty())
        throw ProtocolError(ProtocolError::Code::EmptyTrajectory, "cannot serialize an empty trajectory");

    json conversations = json::array();
    conversations.push_back({{"from", "system"}, {"value", system_prompt}});
    for (std::size_t i = 0; i < trajectory.steps.size(); ++i) {
        const auto& step = trajectory.steps[i];
        std::string human = step.output;
        if (i == 0) {
            human = render_task_block(trajectory.task);
            human += kFirstStepSeparator;
            human += step.output;
        }
        conversations.push_back({{"from", "human"}, {"value", human}});
        if (step.signal) {
            conversations.push_back({{"from", "gpt"}, {"value", format_verifier_turn(*step.signal)}});
        } else if (i + 1 != trajectory.steps.size()) {
            throw ProtocolError(ProtocolError::Code::RoleOrderViolation,
                                "only the final step may lack a guidance signal");
        }
    }

    json record;
    record["id"] = trajectory.task.id;
    record["query"] = trajectory.task.query;
    if (trajectory.task.hint) record["hint"] = *trajectory.task.hint;
    if (!trajectory.task.images.empty()) record["image"] = trajectory.task.images.front();
    record["conversations"] = std::move(conversations);
    return record.dump();
}

GuidedTrajectory parse_sharegpt(std::string_view json_line) {
    json record;
    try {
        record = json::parse(json_line);
    } catch (const json::exception& e) {
        throw ProtocolError(ProtocolError::Code::BadRecord, std::string("invalid JSON: ") + e.what());
    }
    if (!record.is_object() || !record.contains("conversations") || !record["conversations"].is_array())
        throw ProtocolError(ProtocolError::Code::BadRecord, "record lacks a conversations array");

    GuidedTrajectory t;
    t.task.id = record.value("id", std::string{});
    t.task.query = record.value("query", std::string{});
    if (record.contains("hint")) t.task.hint = record["hint"].get<std::string>();
    if (record.contains("image")) t.task.images.push_back(record["image"].get<std::string>());

    const auto& conv = record["conversations"];
    if (conv.empty()) throw ProtocolError(ProtocolError::Code::EmptyTrajectory, "conversations is empty");
    if (conv[0].value("from", "") != "system")
        throw ProtocolError(ProtocolError::Code::RoleOrderViolation, "first message must be system");

    const std::string prefix = render_task_block(t.task) + std::string(kFirstStepSeparator);
    bool expect_human = true;
    for (std::size_t i = 1; i < conv.size(); ++i) {
        const std::string from = conv[i].value("from", "");
        const std::string value = conv[i].value("value", "");
        if (expect_human) {
            if (from != "human")
                throw ProtocolError(ProtocolError::Code::RoleOrderViolation,
                                    "expected human at message " + std::to_string(i));
            TrajectoryStep step;
            if (t.steps.empty()) {
                if (value.rfind(prefix, 0) != 0)
                    throw ProtocolError(ProtocolError::Code::BadRecord,
                                        "first human turn does not start with the task block");
                step.output = value.substr(prefix.size());
            } else {
                step.output = value;
            }
            t.steps.push_back(std::move(step));
        } else {
            if (from != "gpt")
                throw ProtocolError(ProtocolError::Code::RoleOrderViolation,
                                    "expected gpt at message " + std::to_string(i));
            auto parsed = parse_score_line(value, StopPolicy::Lenient);
            if (!parsed.ok())
                throw ProtocolError(ProtocolError::Code::BadRecord,
                                    std::string("verifier turn unparseable: ") +
                                        score_parse_error_name(parsed.error));
            t.steps.back().signal = std::move(parsed.signal);
        }
        expect_human = !expect_human;
    }
    if (t.steps.empty()) throw ProtocolError(ProtocolError::Code::EmptyTrajectory, "no solver steps");

    const auto& last = t.steps.back();
    if (last.signal && last.signal->is_stop)
        t.stop_reason = StopReason::VerifierStop;
    else if (!last.signal)
        t.stop_reason = StopReason::BackendError;
    else
        t.stop_reason = StopReason::MaxTurns;
    return t;
}

}  // namespace guided::protocol
