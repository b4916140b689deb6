#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>
#include <regex>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "totsim/error.hpp"
#include "totsim/providers.hpp"

namespace totsim {

using nlohmann::json;

HttpChatProvider::HttpChatProvider(HttpChatConfig config) : config_(std::move(config)) {
    static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(config_.endpoint, m, url)) {
        throw ConfigError("invalid LLM endpoint URL: " + config_.endpoint);
    }
    scheme_host_port_ = m[1].str();
    path_ = m[2].matched ? m[2].str() : "/";
    if (config_.model.empty()) throw ConfigError("LLM model name is empty");
}

std::unique_ptr<HttpChatProvider> HttpChatProvider::from_environment(std::string model) {
    const char* endpoint = std::getenv(kEndpointEnv);
    if (endpoint == nullptr || *endpoint == '\0') {
        throw ConfigError(fmt::format("{} is not set", kEndpointEnv));
    }
    const char* key = std::getenv(kApiKeyEnv);
    HttpChatConfig config;
    config.endpoint = endpoint;
    config.api_key = key == nullptr ? "" : key;
    config.model = std::move(model);
    return std::make_unique<HttpChatProvider>(std::move(config));
}

std::string HttpChatProvider::complete(const GenerationRequest& request) {
    httplib::Client client(scheme_host_port_);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

    const json body{{"model", config_.model},
                    {"temperature", request.temperature},
                    {"messages", json::array({{{"role", "user"}, {"content", request.prompt}}})}};
    const auto res = client.Post(path_, headers, body.dump(), "application/json");
    if (!res) {
        throw TransportError("request to " + scheme_host_port_ + " failed: " +
                             httplib::to_string(res.error()));
    }
    if (res->status == 429 || res->status >= 500) {
        throw TransportError(fmt::format("HTTP {} from {}", res->status, scheme_host_port_));
    }
    if (res->status != 200) {
        throw GenerationError(fmt::format("HTTP {} from {}: {}", res->status, scheme_host_port_,
                                          res->body.substr(0, 200)));
    }
    try {
        const json j = json::parse(res->body);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw GenerationError(std::string("malformed chat response: ") + e.what());
    }
}

std::string HttpChatProvider::fingerprint() const {
    return "http:" + config_.model;
}

}  // namespace totsim
