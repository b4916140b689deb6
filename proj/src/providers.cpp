#include "totsim/providers.hpp"

#include <algorithm>
#include <fstream>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>
#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include "totsim/error.hpp"
#include "totsim/hash.hpp"
#include "totsim/rng.hpp"
#include "totsim/templates.hpp"
#include "totsim/text.hpp"

namespace totsim {

using nlohmann::json;

std::string_view to_string(PromptRole r) {
    switch (r) {
        case PromptRole::Summarize: return "summarize";
        case PromptRole::Generate: return "generate";
        case PromptRole::Translate: return "translate";
    }
    return "?";
}

std::string complete_with_retries(GenerationProvider& provider, const GenerationRequest& request,
                                  const RetryPolicy& policy) {
    auto backoff = policy.initial_backoff;
    for (unsigned attempt = 0;; ++attempt) {
        try {
            return provider.complete(request);
        } catch (const TransportError& e) {
            if (attempt >= policy.max_retries) {
                throw GenerationError(fmt::format("{} request failed after {} attempts: {}",
                                                  to_string(request.role), attempt + 1, e.what()));
            }
            spdlog::warn("[generate] transport error ({}); retry {} of {}", e.what(), attempt + 1,
                         policy.max_retries);
            if (backoff.count() > 0) std::this_thread::sleep_for(backoff);
            backoff = std::chrono::milliseconds(
                static_cast<long long>(static_cast<double>(backoff.count()) * policy.multiplier));
        }
    }
}

std::string request_key(const GenerationRequest& request) {
    const json j{{"role", to_string(request.role)},
                 {"temperature", request.temperature},
                 {"prompt", request.prompt}};
    return sha256_hex(j.dump());
}

// ---------------------------------------------------------------------------

FileMockProvider::FileMockProvider(std::map<std::string, std::vector<std::string>> responses,
                                   std::string name)
    : responses_(std::move(responses)), name_(std::move(name)) {}

std::unique_ptr<FileMockProvider> FileMockProvider::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open mock response file " + path.string());
    std::map<std::string, std::vector<std::string>> responses;
    std::string line;
    for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
        if (text::trim(line).empty()) continue;
        try {
            const json j = json::parse(line);
            auto& list = responses[j.at("request").get<std::string>()];
            if (j.contains("responses")) {
                list = j.at("responses").get<std::vector<std::string>>();
            } else {
                list = {j.at("response").get<std::string>()};
            }
            if (list.empty()) throw ParseError("empty response list", line_no);
        } catch (const json::exception& e) {
            throw ParseError(std::string("bad mock record: ") + e.what(), line_no);
        }
    }
    return std::make_unique<FileMockProvider>(std::move(responses),
                                              "file-mock:" + path.filename().string());
}

std::string FileMockProvider::complete(const GenerationRequest& request) {
    const auto key = request_key(request);
    const auto it = responses_.find(key);
    if (it == responses_.end()) {
        throw GenerationError(fmt::format("no canned {} response for request {}",
                                          to_string(request.role), key));
    }
    const auto& list = it->second;
    return list[std::min<std::size_t>(request.sample_index, list.size() - 1)];
}

// ---------------------------------------------------------------------------

std::string ScriptedProvider::complete(const GenerationRequest& request) {
    std::lock_guard lock(mu_);
    seen_.push_back(request);
    if (calls_++ < transport_failures) throw TransportError("scripted transport failure");
    switch (request.role) {
        case PromptRole::Summarize: return summary;
        case PromptRole::Translate: return request.payload;
        case PromptRole::Generate:
            if (queries.empty()) return {};
            return queries[std::min<std::size_t>(request.sample_index, queries.size() - 1)];
    }
    return {};
}

std::vector<GenerationRequest> ScriptedProvider::requests() const {
    std::lock_guard lock(mu_);
    return seen_;
}

// ---------------------------------------------------------------------------

namespace {

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (const char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::vector<UChar32> decode(std::string_view s) {
    std::vector<UChar32> out;
    const auto* bytes = reinterpret_cast<const uint8_t*>(s.data());
    const auto n = static_cast<int32_t>(s.size());
    for (int32_t i = 0; i < n;) {
        UChar32 c = 0;
        U8_NEXT(bytes, i, n, c);
        if (c >= 0) out.push_back(c);
    }
    return out;
}

std::string encode(const std::vector<UChar32>& cps, std::size_t begin, std::size_t end) {
    std::string out;
    for (std::size_t i = begin; i < end; ++i) {
        char buf[4];
        int32_t len = 0;
        U8_APPEND_UNSAFE(reinterpret_cast<uint8_t*>(buf), len, cps[i]);
        out.append(buf, static_cast<std::size_t>(len));
    }
    return out;
}

bool is_sentence_end(UChar32 c) {
    return c == '.' || c == '!' || c == '?' || c == 0x3002 || c == 0xFF01 || c == 0xFF1F;
}

std::vector<std::string> sentences(std::string_view body) {
    const auto cps = decode(body);
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i < cps.size(); ++i) {
        if (is_sentence_end(cps[i]) || i + 1 == cps.size()) {
            auto s = text::trim(encode(cps, start, i + 1));
            if (!s.empty()) out.push_back(std::move(s));
            start = i + 1;
        }
    }
    return out;
}

std::string simulate_summary(std::string_view payload) {
    const auto split = payload.find("\n\n");
    const std::string title = text::trim(payload.substr(0, split));
    const std::string_view body = split == std::string_view::npos ? std::string_view{} : payload.substr(split + 2);
    const bool spaced = body.find(' ') != std::string_view::npos;
    const std::string sep = spaced ? " " : "";
    const auto parts = sentences(body);

    std::string first = title;
    for (std::size_t i = 0; i < std::min<std::size_t>(2, parts.size()); ++i) first += sep + parts[i];
    std::string second;
    for (std::size_t i = 2; i < std::min<std::size_t>(4, parts.size()); ++i) {
        second += (second.empty() ? "" : sep) + parts[i];
    }
    if (second.empty()) second = parts.empty() ? title : parts.back();
    return first + "\n\n" + second;
}

std::string simulate_query(std::string_view summary, std::uint64_t seed) {
    const bool spaced = summary.find(' ') != std::string_view::npos;
    std::vector<std::string> units;
    if (spaced) {
        std::string word;
        auto flush = [&] {
            const auto b = word.find_first_not_of(".,;:!?\"'()");
            const auto e = word.find_last_not_of(".,;:!?\"'()");
            if (b != std::string::npos) units.push_back(word.substr(b, e - b + 1));
            word.clear();
        };
        for (const char c : summary) {
            if (c == ' ' || c == '\n' || c == '\t') {
                flush();
            } else {
                word.push_back(c);
            }
        }
        flush();
    } else {
        const auto cps = decode(summary);
        for (std::size_t i = 0; i < cps.size(); ++i) {
            if (u_isalnum(cps[i])) units.push_back(encode(cps, i, i + 1));
        }
    }
    if (units.empty()) return {};

    Rng rng(seed);
    std::string query;
    for (int f = 0; f < 3; ++f) {
        const std::size_t len = std::min<std::size_t>(units.size(), (spaced ? 2 : 3) + rng.uniform_below(4));
        const std::size_t start = rng.uniform_below(units.size() - len + 1);
        std::string fragment;
        for (std::size_t i = start; i < start + len; ++i) {
            if (spaced && !fragment.empty()) fragment += ' ';
            fragment += units[i];
        }
        if (!query.empty()) query += spaced ? " ... " : "，";
        query += fragment;
    }
    return query;
}

}  // namespace

std::string SimulatedProvider::complete(const GenerationRequest& request) {
    switch (request.role) {
        case PromptRole::Summarize:
            return simulate_summary(request.payload);
        case PromptRole::Translate:
            return request.payload;
        case PromptRole::Generate: {
            std::uint64_t seed = fnv1a(request.prompt);
            if (request.temperature > 0.0) seed = mix64(seed + request.sample_index);
            return simulate_query(request.payload, seed);
        }
    }
    return {};
}

// ---------------------------------------------------------------------------

TableTranslator::TableTranslator(std::map<std::string, std::string> phrases,
                                 std::map<std::string, std::string> lexicon)
    : phrases_(std::move(phrases)), lexicon_(std::move(lexicon)) {}

std::unique_ptr<TableTranslator> TableTranslator::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open translation table " + path.string());
    try {
        const json j = json::parse(in);
        return std::make_unique<TableTranslator>(
            j.value("phrases", std::map<std::string, std::string>{}),
            j.value("lexicon", std::map<std::string, std::string>{}));
    } catch (const json::exception& e) {
        throw ConfigError("bad translation table " + path.string() + ": " + e.what());
    }
}

std::string TableTranslator::translate(std::string_view input, std::string_view target_language) {
    const std::string key = text::trim(input);
    if (const auto it = phrases_.find(key); it != phrases_.end()) return it->second;
    if (lexicon_.empty()) {
        throw GenerationError("no translation for '" + key + "'");
    }
    const bool cjk = target_language == "zh" || target_language == "ja" || target_language == "ko";
    std::string out;
    std::string word;
    auto flush = [&] {
        const auto e = word.find_last_not_of(".,;:!?");
        if (e == std::string::npos) {
            word.clear();
            return;
        }
        word.resize(e + 1);
        std::string lower = word;
        std::transform(lower.begin(), lower.end(), lower.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        const auto it = lexicon_.find(lower);
        if (!out.empty() && !cjk) out += ' ';
        out += it == lexicon_.end() ? word : it->second;
        word.clear();
    };
    for (const char c : key) {
        if (c == ' ' || c == '\t' || c == '\n') {
            flush();
        } else {
            word.push_back(c);
        }
    }
    flush();
    return out;
}

std::string TableTranslator::fingerprint() const {
    return fmt::format("table(phrases={},lexicon={})", phrases_.size(), lexicon_.size());
}

ChatTranslator::ChatTranslator(GenerationProvider& provider, const TemplateSet& templates,
                               double temperature, RetryPolicy retry)
    : provider_(provider), templates_(templates), temperature_(temperature), retry_(retry) {}

std::string ChatTranslator::translate(std::string_view input, std::string_view target_language) {
    GenerationRequest req;
    req.role = PromptRole::Translate;
    req.prompt = templates_.get(PromptRole::Translate, "en")
                     .render(input, templates_.instruction(target_language));
    req.temperature = temperature_;
    req.payload = std::string(input);
    req.target_language = std::string(target_language);
    auto out = text::trim(complete_with_retries(provider_, req, retry_));
    if (out.empty()) throw GenerationError("translator returned empty text");
    return out;
}

std::string ChatTranslator::fingerprint() const {
    return fmt::format("chat({};temperature={})", provider_.fingerprint(), temperature_);
}

}  // namespace totsim
