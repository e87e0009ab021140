#pragma once

#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include "guided/corepipe.hpp"
#include "guided/grpo.hpp"
#include "guided/modelclient.hpp"
#include "guided/reward.hpp"
#include "guided/rollout.hpp"
#include "guided/simlab.hpp"

namespace guided::config {

class ConfigError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class BackendKind { Scripted, Http };

struct BackendSpec {
    BackendKind kind = BackendKind::Scripted;
    std::string base_url;  // http backends; ${VAR} interpolated
    std::string model;
    double temperature = 1.0;
    int max_tokens = 2048;
    modelclient::Script script;  // scripted backends
};

struct SweepSpec {
    double from = 0.0;
    double to = 0.15;
    double step = 0.005;
};

struct EnvSection {
    simlab::EnvParams params;
    std::int64_t trials = 200000;
    SweepSpec sweep;
};

struct TrainEnvSection {
    double epsilon0 = 0.15;
    double delta = 0.2;
    double alpha = 0.0;
    int chain_length = 8;
};

struct GrpoSection {
    grpo::GrpoConfig grpo;
    int epochs = 400;
    TrainEnvSection env;
};

struct PathsSection {
    std::string out_dir = "out";
    std::optional<std::string> templates;
};

struct RunConfig {
    std::map<std::string, BackendSpec> backends;  // policy, verifier, oracle, ...
    rollout::RolloutConfig rollout;
    reward::RewardWeights reward;
    GrpoSection grpo;
    EnvSection env;
    corepipe::FilterConfig pipeline_filters;
    corepipe::ScoringConfig pipeline_scoring;
    PathsSection paths;
};

/// Replaces ${NAME} with the environment variable's value (empty if unset).
std::string interpolate_env(const std::string& value);

/// Parses a config document. Unknown keys anywhere are rejected.
RunConfig parse_config(const std::string& json_text);

RunConfig load_config(const std::string& path);

/// Instantiates a configured backend; http backends pick up credentials from
/// GUIDED_API_BASE / GUIDED_API_KEY when the config omits them.
std::unique_ptr<modelclient::Backend> make_backend(const BackendSpec& spec,
                                                   const modelclient::TokenCounter& counter =
                                                       modelclient::whitespace_counter());

/// Named backend lookup with a ConfigError on absence.
const BackendSpec& require_backend(const RunConfig& config, const std::string& name);

}  // namespace guided::config
