#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

namespace totsim {

enum class PromptRole { Summarize, Generate, Translate };

[[nodiscard]] std::string_view to_string(PromptRole r);

struct GenerationRequest {
    PromptRole role = PromptRole::Generate;
    std::string prompt;
    double temperature = 0.3;
    /// Text inserted into the template's content slot. Remote providers ignore it;
    /// offline simulators work from it instead of parsing the prompt.
    std::string payload;
    /// Output language for translation requests.
    std::string target_language;
    /// 0-based attempt number of an anonymity retry. Not sent to remote providers: a
    /// retry repeats the identical request and relies on sampling for a new answer.
    unsigned sample_index = 0;
};

/// Chat-completion style text generator. Implementations must be safe to call from
/// several threads at once.
class GenerationProvider {
public:
    virtual ~GenerationProvider() = default;

    /// Throws TransportError for retryable failures, GenerationError otherwise.
    virtual std::string complete(const GenerationRequest& request) = 0;
    /// Model name and fixed parameters, recorded with every generated query.
    [[nodiscard]] virtual std::string fingerprint() const = 0;
};

/// Machine translation of short texts. Same threading contract as GenerationProvider.
class TranslationProvider {
public:
    virtual ~TranslationProvider() = default;

    virtual std::string translate(std::string_view text, std::string_view target_language) = 0;
    [[nodiscard]] virtual std::string fingerprint() const = 0;
};

/// Transport-level retries with exponential backoff (not anonymity retries).
struct RetryPolicy {
    unsigned max_retries = 3;
    std::chrono::milliseconds initial_backoff{500};
    double multiplier = 2.0;
};

/// Calls `provider` until it answers or `policy.max_retries` retries are used up.
/// The last TransportError is rethrown as a GenerationError.
[[nodiscard]] std::string complete_with_retries(GenerationProvider& provider,
                                                const GenerationRequest& request,
                                                const RetryPolicy& policy);

/// Stable key of a request: SHA-256 over role, temperature and prompt.
[[nodiscard]] std::string request_key(const GenerationRequest& request);

// ---------------------------------------------------------------------------

struct HttpChatConfig {
    std::string endpoint;  ///< full URL, e.g. https://host/v1/chat/completions
    std::string api_key;   ///< sent as a bearer token when non-empty
    std::string model;
    std::chrono::seconds timeout{120};
};

/// OpenAI-compatible chat-completions client.
class HttpChatProvider final : public GenerationProvider {
public:
    static constexpr const char* kEndpointEnv = "TOTSIM_LLM_ENDPOINT";
    static constexpr const char* kApiKeyEnv = "TOTSIM_LLM_API_KEY";

    explicit HttpChatProvider(HttpChatConfig config);
    /// Endpoint and credential come from the environment; throws ConfigError when unset.
    static std::unique_ptr<HttpChatProvider> from_environment(std::string model);

    std::string complete(const GenerationRequest& request) override;
    [[nodiscard]] std::string fingerprint() const override;

private:
    HttpChatConfig config_;
    std::string scheme_host_port_;
    std::string path_;
};

/// Canned responses keyed by request_key(). Each line of the file is
/// {"request": <key>, "responses": [...]} (or "response": "..."); the response used is
/// indexed by sample_index, clamped to the last one.
class FileMockProvider final : public GenerationProvider {
public:
    explicit FileMockProvider(std::map<std::string, std::vector<std::string>> responses,
                              std::string name = "file-mock");
    static std::unique_ptr<FileMockProvider> load(const std::filesystem::path& path);

    std::string complete(const GenerationRequest& request) override;
    [[nodiscard]] std::string fingerprint() const override { return name_; }

private:
    std::map<std::string, std::vector<std::string>> responses_;
    std::string name_;
};

/// In-memory script for tests: fixed summary, query answers indexed by attempt, and an
/// optional number of leading transport failures. Records every request it sees.
class ScriptedProvider final : public GenerationProvider {
public:
    std::string summary = "First paragraph.\n\nSecond paragraph.";
    std::vector<std::string> queries;
    unsigned transport_failures = 0;

    std::string complete(const GenerationRequest& request) override;
    [[nodiscard]] std::string fingerprint() const override { return "scripted"; }

    [[nodiscard]] std::vector<GenerationRequest> requests() const;

private:
    mutable std::mutex mu_;
    std::vector<GenerationRequest> seen_;
    unsigned calls_ = 0;
};

/// Deterministic offline stand-in for an LLM. Summaries are the title plus leading
/// sentences of the page split into two paragraphs; queries are seeded fragments of the
/// summary, so they sometimes repeat the entity name and trigger anonymity retries.
/// Temperature 0 makes every attempt identical.
class SimulatedProvider final : public GenerationProvider {
public:
    std::string complete(const GenerationRequest& request) override;
    [[nodiscard]] std::string fingerprint() const override { return "simulated-v1"; }
};

// ---------------------------------------------------------------------------

class IdentityTranslator final : public TranslationProvider {
public:
    std::string translate(std::string_view text, std::string_view) override { return std::string(text); }
    [[nodiscard]] std::string fingerprint() const override { return "identity"; }
};

/// Whole-text phrase table with an optional word lexicon fallback. Lexicon output is
/// joined without spaces for zh/ja/ko targets; unknown words pass through.
class TableTranslator final : public TranslationProvider {
public:
    TableTranslator(std::map<std::string, std::string> phrases,
                    std::map<std::string, std::string> lexicon = {});
    /// JSON object {"phrases": {...}, "lexicon": {...}}.
    static std::unique_ptr<TableTranslator> load(const std::filesystem::path& path);

    std::string translate(std::string_view text, std::string_view target_language) override;
    [[nodiscard]] std::string fingerprint() const override;

private:
    std::map<std::string, std::string> phrases_;
    std::map<std::string, std::string> lexicon_;
};

class TemplateSet;

/// Translation through a generation provider and the translate/en template.
class ChatTranslator final : public TranslationProvider {
public:
    ChatTranslator(GenerationProvider& provider, const TemplateSet& templates, double temperature,
                   RetryPolicy retry = {});

    std::string translate(std::string_view text, std::string_view target_language) override;
    [[nodiscard]] std::string fingerprint() const override;

private:
    GenerationProvider& provider_;
    const TemplateSet& templates_;
    double temperature_;
    RetryPolicy retry_;
};

}  // namespace totsim
