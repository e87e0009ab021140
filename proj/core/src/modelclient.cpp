#include "guided/modelclient.hpp"

#include <cctype>
#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace guided::modelclient {

namespace {

using json = nlohmann::json;

std::int64_t now_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

}  // namespace

TokenCounter whitespace_counter() {
    return [](std::string_view text) -> std::int64_t {
        std::int64_t count = 0;
        bool in_word = false;
        for (const char c : text) {
            const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
            if (!space && !in_word) ++count;
            in_word = !space;
        }
        return count;
    };
}

std::int64_t count_tokens(const TokenCounter& counter, std::string_view text) {
    return counter(text);
}

void validate(const GenerationRequest& request) {
    if (request.temperature < 0.0 || request.temperature > 2.0)
        throw std::invalid_argument("temperature must lie in [0, 2]");
    if (request.max_new_tokens < 1) throw std::invalid_argument("max_new_tokens must be >= 1");
}

GenerationResponse generate(Backend& backend, const GenerationRequest& request) {
    validate(request);
    return backend.generate(request);
}

// ---------------------------------------------------------------------------
// ScriptedBackend

ScriptedBackend::ScriptedBackend(Script script, TokenCounter counter,
                                 std::shared_ptr<TokenBudget> budget)
    : script_(std::move(script)), counter_(std::move(counter)), budget_(std::move(budget)) {}

GenerationResponse ScriptedBackend::generate(const GenerationRequest& request) {
    validate(request);
    if (budget_) budget_->reserve_or_throw(request.max_new_tokens);

    std::string content;
    if (next_ < script_.queue.size()) {
        content = script_.queue[next_++];
    } else {
        const DialogueMessage* last_user = nullptr;
        for (auto it = request.messages.rbegin(); it != request.messages.rend(); ++it) {
            if (it->role == Role::User) {
                last_user = &*it;
                break;
            }
        }
        bool matched = false;
        if (last_user) {
            for (const auto& rule : script_.rules) {
                if (last_user->content.find(rule.match) != std::string::npos) {
                    content = rule.response;
                    matched = true;
                    break;
                }
            }
        }
        if (!matched) content = script_.fallback;
    }

    GenerationResponse response;
    response.content = std::move(content);
    for (const auto& m : request.messages) response.prompt_tokens += m.token_count;
    response.completion_tokens = counter_(response.content);
    response.latency_ms = 0;
    if (budget_) budget_->consume(response.completion_tokens);
    return response;
}

std::unique_ptr<Backend> ScriptedBackend::session() const {
    return std::make_unique<ScriptedBackend>(script_, counter_, budget_);
}

// ---------------------------------------------------------------------------
// HttpBackend

bool is_retryable_status(int status) { return status == 429 || (status >= 500 && status <= 599); }

std::int64_t retry_delay_ms(const RetryPolicy& policy, int attempt) {
    return policy.base_delay_ms << attempt;  // 1s, 2s, 4s for attempts 0..2
}

HttpBackendConfig http_config_from_env(HttpBackendConfig config) {
    if (config.base_url.empty()) {
        if (const char* base = std::getenv("GUIDED_API_BASE")) config.base_url = base;
    }
    if (config.api_key.empty()) {
        if (const char* key = std::getenv("GUIDED_API_KEY")) config.api_key = key;
    }
    return config;
}

std::string chat_completion_body(const std::string& model, const GenerationRequest& request) {
    json messages = json::array();
    for (std::size_t i = 0; i < request.messages.size(); ++i) {
        const auto& m = request.messages[i];
        json entry;
        entry["role"] = role_name(m.role);
        const bool attach_images = !request.images.empty() && m.role == Role::User &&
                                   i == 1;  // images ride the first user turn
        if (attach_images) {
            json parts = json::array();
            parts.push_back({{"type", "text"}, {"text", m.content}});
            for (const auto& image : request.images)
                parts.push_back({{"type", "image_url"}, {"image_url", {{"url", image}}}});
            entry["content"] = std::move(parts);
        } else {
            entry["content"] = m.content;
        }
        messages.push_back(std::move(entry));
    }
    json body;
    body["model"] = model;
    body["messages"] = std::move(messages);
    body["temperature"] = request.temperature;
    body["max_tokens"] = request.max_new_tokens;
    return body.dump();
}

HttpBackend::HttpBackend(HttpBackendConfig config, TokenCounter counter,
                         std::shared_ptr<TokenBudget> budget)
    : config_(http_config_from_env(std::move(config))), counter_(std::move(counter)),
      budget_(std::move(budget)) {
    if (config_.base_url.empty())
        throw std::invalid_argument("http backend needs a base URL (config or GUIDED_API_BASE)");
}

GenerationResponse HttpBackend::generate(const GenerationRequest& request) {
    validate(request);
    if (budget_) budget_->reserve_or_throw(request.max_new_tokens);

    const std::string body = chat_completion_body(config_.model, request);
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

    const auto started = now_ms();
    for (int attempt = 0;; ++attempt) {
        httplib::Client client(config_.base_url);
        client.set_connection_timeout(std::chrono::milliseconds(config_.retry.timeout_ms));
        client.set_read_timeout(std::chrono::milliseconds(config_.retry.timeout_ms));
        client.set_write_timeout(std::chrono::milliseconds(config_.retry.timeout_ms));

        auto result = client.Post("/v1/chat/completions", headers, body, "application/json");
        if (!result) {
            if (result.error() == httplib::Error::ConnectionTimeout ||
                result.error() == httplib::Error::Read || result.error() == httplib::Error::Write) {
                throw TimeoutError("request to " + config_.base_url + " timed out");
            }
            throw BackendError("transport failure: " + httplib::to_string(result.error()));
        }
        if (result->status == 200) {
            json parsed;
            try {
                parsed = json::parse(result->body);
            } catch (const json::exception& e) {
                throw BackendError(std::string("unparseable completion body: ") + e.what());
            }
            GenerationResponse response;
            try {
                response.content = parsed.at("choices").at(0).at("message").at("content").get<std::string>();
            } catch (const json::exception&) {
                throw BackendError("completion body lacks choices[0].message.content");
            }
            if (parsed.contains("usage")) {
                response.prompt_tokens = parsed["usage"].value("prompt_tokens", 0);
                response.completion_tokens = parsed["usage"].value("completion_tokens", 0);
            }
            if (response.completion_tokens == 0) response.completion_tokens = counter_(response.content);
            response.latency_ms = now_ms() - started;
            if (budget_) budget_->consume(response.completion_tokens);
            return response;
        }
        if (is_retryable_status(result->status) && attempt + 1 < config_.retry.max_attempts) {
            std::this_thread::sleep_for(std::chrono::milliseconds(retry_delay_ms(config_.retry, attempt)));
            continue;
        }
        throw HttpError(result->status, result->body);
    }
}

std::unique_ptr<Backend> HttpBackend::session() const {
    return std::make_unique<HttpBackend>(config_, counter_, budget_);
}

}  // namespace guided::modelclient
