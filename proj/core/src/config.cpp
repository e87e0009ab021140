#include "guided/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace guided::config {

namespace {

using json = nlohmann::json;

void reject_unknown_keys(const json& object, std::initializer_list<const char*> allowed,
                         const std::string& where) {
    for (const auto& [key, value] : object.items()) {
        bool known = false;
        for (const char* name : allowed) {
            if (key == name) {
                known = true;
                break;
            }
        }
        if (!known) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

double get_number(const json& object, const char* key, double fallback) {
    if (!object.contains(key)) return fallback;
    if (!object[key].is_number()) throw ConfigError(std::string("key '") + key + "' must be a number");
    return object[key].get<double>();
}

std::int64_t get_integer(const json& object, const char* key, std::int64_t fallback) {
    if (!object.contains(key)) return fallback;
    if (!object[key].is_number_integer())
        throw ConfigError(std::string("key '") + key + "' must be an integer");
    return object[key].get<std::int64_t>();
}

bool get_bool(const json& object, const char* key, bool fallback) {
    if (!object.contains(key)) return fallback;
    if (!object[key].is_boolean()) throw ConfigError(std::string("key '") + key + "' must be a boolean");
    return object[key].get<bool>();
}

std::string get_string(const json& object, const char* key, const std::string& fallback) {
    if (!object.contains(key)) return fallback;
    if (!object[key].is_string()) throw ConfigError(std::string("key '") + key + "' must be a string");
    return interpolate_env(object[key].get<std::string>());
}

BackendSpec parse_backend(const json& object, const std::string& where) {
    reject_unknown_keys(object, {"type", "base_url", "model", "temperature", "max_tokens", "script"},
                        where);
    BackendSpec spec;
    const std::string type = get_string(object, "type", "scripted");
    if (type == "scripted")
        spec.kind = BackendKind::Scripted;
    else if (type == "http")
        spec.kind = BackendKind::Http;
    else
        throw ConfigError("backend type must be 'scripted' or 'http' in " + where);

    spec.base_url = get_string(object, "base_url", "");
    spec.model = get_string(object, "model", "");
    spec.temperature = get_number(object, "temperature", spec.temperature);
    spec.max_tokens = static_cast<int>(get_integer(object, "max_tokens", spec.max_tokens));

    if (object.contains("script")) {
        const auto& script = object["script"];
        reject_unknown_keys(script, {"queue", "rules", "fallback"}, where + ".script");
        if (script.contains("queue"))
            spec.script.queue = script["queue"].get<std::vector<std::string>>();
        if (script.contains("rules")) {
            for (const auto& rule : script["rules"]) {
                reject_unknown_keys(rule, {"match", "response"}, where + ".script.rules[]");
                spec.script.rules.push_back(
                    {rule.value("match", std::string{}), rule.value("response", std::string{})});
            }
        }
        spec.script.fallback = script.value("fallback", std::string{});
    }
    return spec;
}

}  // namespace

std::string interpolate_env(const std::string& value) {
    std::string out;
    out.reserve(value.size());
    std::size_t pos = 0;
    while (pos < value.size()) {
        const auto open = value.find("${", pos);
        if (open == std::string::npos) {
            out.append(value.substr(pos));
            break;
        }
        const auto close = value.find('}', open + 2);
        if (close == std::string::npos) {
            out.append(value.substr(pos));
            break;
        }
        out.append(value.substr(pos, open - pos));
        const std::string name = value.substr(open + 2, close - open - 2);
        if (const char* env = std::getenv(name.c_str())) out.append(env);
        pos = close + 1;
    }
    return out;
}

RunConfig parse_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("config root must be an object");
    reject_unknown_keys(root, {"backends", "rollout", "reward", "grpo", "env", "pipeline", "paths"},
                        "config");

    RunConfig config;

    if (root.contains("backends")) {
        for (const auto& [name, spec] : root["backends"].items())
            config.backends.emplace(name, parse_backend(spec, "backends." + name));
    }

    if (root.contains("rollout")) {
        const auto& r = root["rollout"];
        reject_unknown_keys(r,
                            {"max_turns", "policy_max_tokens", "policy_turn_max_tokens",
                             "verifier_turn_max_tokens", "policy_temperature",
                             "verifier_temperature", "strict_stop"},
                            "rollout");
        auto& cfg = config.rollout;
        cfg.max_turns = static_cast<int>(get_integer(r, "max_turns", cfg.max_turns));
        cfg.policy_max_tokens = get_integer(r, "policy_max_tokens", cfg.policy_max_tokens);
        cfg.policy_turn_max_tokens =
            static_cast<int>(get_integer(r, "policy_turn_max_tokens", cfg.policy_turn_max_tokens));
        cfg.verifier_turn_max_tokens = static_cast<int>(
            get_integer(r, "verifier_turn_max_tokens", cfg.verifier_turn_max_tokens));
        cfg.policy_temperature = get_number(r, "policy_temperature", cfg.policy_temperature);
        cfg.verifier_temperature = get_number(r, "verifier_temperature", cfg.verifier_temperature);
        cfg.strict_stop = get_bool(r, "strict_stop", cfg.strict_stop);
        if (cfg.max_turns < 1) throw ConfigError("rollout.max_turns must be positive");
    }

    if (root.contains("reward")) {
        const auto& r = root["reward"];
        reject_unknown_keys(r, {"lambda_acc", "lambda_ver", "lambda_fmt"}, "reward");
        config.reward.lambda_acc = get_number(r, "lambda_acc", config.reward.lambda_acc);
        config.reward.lambda_ver = get_number(r, "lambda_ver", config.reward.lambda_ver);
        config.reward.lambda_fmt = get_number(r, "lambda_fmt", config.reward.lambda_fmt);
        if (config.reward.lambda_acc < 0 || config.reward.lambda_ver < 0 || config.reward.lambda_fmt < 0)
            throw ConfigError("reward weights must be nonnegative");
    }

    if (root.contains("grpo")) {
        const auto& g = root["grpo"];
        reject_unknown_keys(
            g, {"group_size", "clip_epsilon", "kl_beta", "learning_rate", "epsilon_num", "epochs", "env"},
            "grpo");
        auto& cfg = config.grpo.grpo;
        cfg.group_size = static_cast<int>(get_integer(g, "group_size", cfg.group_size));
        cfg.clip_epsilon = get_number(g, "clip_epsilon", cfg.clip_epsilon);
        cfg.kl_beta = get_number(g, "kl_beta", cfg.kl_beta);
        cfg.learning_rate = get_number(g, "learning_rate", cfg.learning_rate);
        cfg.epsilon_num = get_number(g, "epsilon_num", cfg.epsilon_num);
        config.grpo.epochs = static_cast<int>(get_integer(g, "epochs", config.grpo.epochs));
        if (g.contains("env")) {
            const auto& e = g["env"];
            reject_unknown_keys(e, {"epsilon0", "delta", "alpha", "chain_length"}, "grpo.env");
            auto& env = config.grpo.env;
            env.epsilon0 = get_number(e, "epsilon0", env.epsilon0);
            env.delta = get_number(e, "delta", env.delta);
            env.alpha = get_number(e, "alpha", env.alpha);
            env.chain_length = static_cast<int>(get_integer(e, "chain_length", env.chain_length));
        }
        if (cfg.group_size < 2) throw ConfigError("grpo.group_size must be >= 2");
    }

    if (root.contains("env")) {
        const auto& e = root["env"];
        reject_unknown_keys(e, {"epsilon", "delta", "alpha", "chain_length", "trials", "correlated", "sweep"},
                            "env");
        auto& params = config.env.params;
        params.epsilon = get_number(e, "epsilon", params.epsilon);
        params.delta = get_number(e, "delta", params.delta);
        params.alpha = get_number(e, "alpha", params.alpha);
        params.chain_length = static_cast<int>(get_integer(e, "chain_length", params.chain_length));
        params.correlated = get_bool(e, "correlated", params.correlated);
        config.env.trials = get_integer(e, "trials", config.env.trials);
        if (e.contains("sweep")) {
            const auto& s = e["sweep"];
            reject_unknown_keys(s, {"from", "to", "step"}, "env.sweep");
            config.env.sweep.from = get_number(s, "from", config.env.sweep.from);
            config.env.sweep.to = get_number(s, "to", config.env.sweep.to);
            config.env.sweep.step = get_number(s, "step", config.env.sweep.step);
        }
        try {
            params.validate();
        } catch (const std::invalid_argument& err) {
            throw ConfigError(std::string("env: ") + err.what());
        }
    }

    if (root.contains("pipeline")) {
        const auto& p = root["pipeline"];
        reject_unknown_keys(
            p, {"n_trials", "max_tokens", "max_negative_ratio", "oracle_temperature", "oracle_max_tokens"},
            "pipeline");
        config.pipeline_scoring.n_trials =
            static_cast<int>(get_integer(p, "n_trials", config.pipeline_scoring.n_trials));
        config.pipeline_filters.max_tokens =
            get_integer(p, "max_tokens", config.pipeline_filters.max_tokens);
        config.pipeline_filters.max_negative_ratio =
            get_number(p, "max_negative_ratio", config.pipeline_filters.max_negative_ratio);
        config.pipeline_scoring.oracle_temperature =
            get_number(p, "oracle_temperature", config.pipeline_scoring.oracle_temperature);
        config.pipeline_scoring.oracle_max_tokens = static_cast<int>(
            get_integer(p, "oracle_max_tokens", config.pipeline_scoring.oracle_max_tokens));
    }

    if (root.contains("paths")) {
        const auto& p = root["paths"];
        reject_unknown_keys(p, {"out_dir", "templates"}, "paths");
        config.paths.out_dir = get_string(p, "out_dir", config.paths.out_dir);
        if (p.contains("templates")) config.paths.templates = get_string(p, "templates", "");
    }

    return config;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

std::unique_ptr<modelclient::Backend> make_backend(const BackendSpec& spec,
                                                   const modelclient::TokenCounter& counter) {
    if (spec.kind == BackendKind::Scripted)
        return std::make_unique<modelclient::ScriptedBackend>(spec.script, counter);

    modelclient::HttpBackendConfig http;
    http.base_url = spec.base_url;
    http.model = spec.model;
    return std::make_unique<modelclient::HttpBackend>(http, counter);
}

const BackendSpec& require_backend(const RunConfig& config, const std::string& name) {
    const auto it = config.backends.find(name);
    if (it == config.backends.end()) throw ConfigError("config defines no '" + name + "' backend");
    return it->second;
}

}  // namespace guided::config
