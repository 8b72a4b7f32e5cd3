#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <cstdlib>
#include <memory>

#include "httplib.h"
#include "json.hpp"
#include "milestone/errors.hpp"
#include "milestone/gateway.hpp"

namespace milestone {

namespace {

class HttpBackend : public Backend {
public:
    explicit HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
        if (config_.api_key.empty()) {
            if (const char* key = std::getenv("LLM_API_KEY")) config_.api_key = key;
        }
        if (config_.api_key.empty())
            throw ConfigError("no API key: set LLM_API_KEY or HttpBackendConfig.api_key");
    }

    CompletionResponse complete(const CompletionRequest& req, const RequestContext&) override {
        nlohmann::json messages = nlohmann::json::array();
        for (const auto& m : req.messages)
            messages.push_back({{"role", m.role}, {"content", m.content}});
        nlohmann::json body{{"model", req.model_name},
                            {"messages", messages},
                            {"temperature", req.temperature}};
        if (req.max_response_tokens > 0) body["max_tokens"] = req.max_response_tokens;

        httplib::Client client(config_.base_url);
        client.set_connection_timeout(std::chrono::duration<double>(config_.timeout_seconds));
        client.set_read_timeout(std::chrono::duration<double>(config_.timeout_seconds));
        client.set_bearer_token_auth(config_.api_key);

        auto result = client.Post(config_.path, body.dump(), "application/json");
        if (!result)
            throw BackendError("transport failure: " + httplib::to_string(result.error()), 0, true);
        if (result->status == 429 || result->status >= 500)
            throw BackendError("backend returned status " + std::to_string(result->status),
                               result->status, true);
        if (result->status != 200)
            throw BackendError("backend returned status " + std::to_string(result->status),
                               result->status, false);

        try {
            auto doc = nlohmann::json::parse(result->body);
            CompletionResponse resp;
            resp.content = doc.at("choices").at(0).at("message").at("content").get<std::string>();
            if (doc.contains("usage")) {
                resp.prompt_tokens = doc["usage"].value("prompt_tokens", 0);
                resp.completion_tokens = doc["usage"].value("completion_tokens", 0);
            }
            return resp;
        } catch (const nlohmann::json::exception& e) {
            throw BackendError(std::string("unparseable completion response: ") + e.what(),
                               result->status, false);
        }
    }

private:
    HttpBackendConfig config_;
};

}  // namespace

std::unique_ptr<Backend> make_http_backend(const HttpBackendConfig& config) {
    return std::make_unique<HttpBackend>(config);
}

}  // namespace milestone
