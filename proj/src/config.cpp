#include "totsim/config.hpp"

#include <cmath>
#include <set>

#include <fmt/format.h>

#include "totsim/error.hpp"
#include "totsim/hash.hpp"
#include "totsim/io.hpp"

namespace totsim {

using nlohmann::json;

namespace {

const json& require(const json& j, const std::string& prefix, const char* key) {
    if (!j.is_object() || !j.contains(key)) {
        throw ConfigError(fmt::format("missing config key '{}{}'", prefix, key));
    }
    return j.at(key);
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    return j.at(key).get<T>();
}

std::string path_str(const std::filesystem::path& p) { return p.generic_string(); }

}  // namespace

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw ConfigError("cannot parse " + path.string() + ": " + e.what());
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    return from_json(j, std::filesystem::absolute(path).parent_path());
}

PipelineConfig PipelineConfig::from_json(const json& j, std::filesystem::path base_dir) {
    PipelineConfig c;
    c.base_dir = std::move(base_dir);
    try {
        c.output_dir = get_or<std::string>(j, "output_dir", "out");
        c.seed = get_or<std::uint64_t>(j, "seed", 0);

        const auto& en = require(j, "", "english");
        c.english_language = get_or<std::string>(en, "language", "en");
        c.english_corpus = require(en, "english.", "corpus").get<std::string>();

        const auto& langs = require(j, "", "languages");
        if (!langs.is_array() || langs.empty()) throw ConfigError("config key 'languages' must be a non-empty list");
        for (std::size_t i = 0; i < langs.size(); ++i) {
            const auto prefix = fmt::format("languages[{}].", i);
            const auto& l = langs[i];
            LanguageInput in;
            in.language = require(l, prefix, "language").get<std::string>();
            in.corpus = require(l, prefix, "corpus").get<std::string>();
            in.tokenizer = get_or<std::string>(l, "tokenizer", "");
            in.real_queries = require(l, prefix, "real_queries").get<std::string>();
            in.real_qrels = require(l, prefix, "real_qrels").get<std::string>();
            c.languages.push_back(std::move(in));
        }

        c.domain_map = get_or<std::string>(j, "domain_map", "");
        if (j.contains("filters")) {
            const auto& f = j.at("filters");
            c.popularity_top_fraction = get_or(f, "popularity_top_fraction", c.popularity_top_fraction);
            c.min_chars = get_or(f, "min_chars", c.min_chars);
        }
        if (j.contains("sampling")) c.sampling = j.at("sampling").get<SamplingConfig>();
        c.sampling.seed = c.seed;

        const auto& g = require(j, "", "generation");
        auto& gc = c.generation;
        gc.templates = require(g, "generation.", "templates").get<std::string>();
        if (g.contains("provider")) {
            const auto& p = g.at("provider");
            gc.provider.kind = get_or<std::string>(p, "kind", "simulated");
            gc.provider.model = get_or<std::string>(p, "model", "");
            gc.provider.mock_path = get_or<std::string>(p, "mock_path", "");
        }
        if (g.contains("translator")) {
            const auto& t = g.at("translator");
            gc.translator.kind = get_or<std::string>(t, "kind", "identity");
            gc.translator.path = get_or<std::string>(t, "path", "");
            gc.translator.temperature = get_or(t, "temperature", 0.0);
        }
        gc.char_budget = get_or(g, "char_budget", gc.char_budget);
        gc.summary_temperature = get_or(g, "summary_temperature", gc.summary_temperature);
        gc.query_temperature = get_or(g, "query_temperature", gc.query_temperature);
        gc.concurrency = get_or(g, "concurrency", gc.concurrency);
        gc.transport_retries = get_or(g, "transport_retries", gc.transport_retries);
        gc.backoff_ms = get_or(g, "backoff_ms", gc.backoff_ms);

        if (j.contains("retrieval")) {
            const auto& r = j.at("retrieval");
            c.depth = get_or(r, "depth", c.depth);
            if (r.contains("lexical")) {
                c.lexical = r.at("lexical").get<std::vector<RetrievalSystem>>();
            } else {
                c.lexical = default_lexical_pool();
            }
            if (r.contains("external")) c.external = r.at("external").get<std::vector<RetrievalSystem>>();
        } else {
            c.lexical = default_lexical_pool();
        }
        if (j.contains("collection")) {
            const auto& col = j.at("collection");
            if (col.contains("split_ratio")) c.split_ratio = col.at("split_ratio").get<std::array<double, 3>>();
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }
    c.validate();
    return c;
}

json PipelineConfig::to_json() const {
    json langs = json::array();
    for (const auto& l : languages) {
        langs.push_back(json{{"language", l.language},
                             {"corpus", path_str(l.corpus)},
                             {"tokenizer", l.tokenizer},
                             {"real_queries", path_str(l.real_queries)},
                             {"real_qrels", path_str(l.real_qrels)}});
    }
    json sampling_json = sampling;
    sampling_json.erase("seed");
    const auto& g = generation;
    return json{
        {"output_dir", path_str(output_dir)},
        {"seed", seed},
        {"english", {{"language", english_language}, {"corpus", path_str(english_corpus)}}},
        {"languages", langs},
        {"domain_map", path_str(domain_map)},
        {"filters", {{"popularity_top_fraction", popularity_top_fraction}, {"min_chars", min_chars}}},
        {"sampling", sampling_json},
        {"generation",
         {{"provider", {{"kind", g.provider.kind}, {"model", g.provider.model}, {"mock_path", path_str(g.provider.mock_path)}}},
          {"translator", {{"kind", g.translator.kind}, {"path", path_str(g.translator.path)}, {"temperature", g.translator.temperature}}},
          {"templates", path_str(g.templates)},
          {"char_budget", g.char_budget},
          {"summary_temperature", g.summary_temperature},
          {"query_temperature", g.query_temperature},
          {"concurrency", g.concurrency},
          {"transport_retries", g.transport_retries},
          {"backoff_ms", g.backoff_ms}}},
        {"retrieval", {{"depth", depth}, {"lexical", lexical}, {"external", external}}},
        {"collection", {{"split_ratio", split_ratio}}},
    };
}

std::filesystem::path PipelineConfig::resolve(const std::filesystem::path& p) const {
    if (p.empty() || p.is_absolute() || base_dir.empty()) return p;
    return base_dir / p;
}

const LanguageInput& PipelineConfig::language(const std::string& code) const {
    for (const auto& l : languages) {
        if (l.language == code) return l;
    }
    throw ConfigError("language '" + code + "' is not configured");
}

std::vector<RetrievalSystem> PipelineConfig::systems() const {
    auto all = lexical;
    all.insert(all.end(), external.begin(), external.end());
    return all;
}

std::string PipelineConfig::hash() const {
    auto j = to_json();
    j.erase("output_dir");
    return sha256_hex(j.dump());
}

void PipelineConfig::validate() const {
    std::set<std::string> codes;
    for (const auto& l : languages) {
        if (l.language == english_language) {
            throw ConfigError("target language '" + l.language + "' equals the English source language");
        }
        if (!codes.insert(l.language).second) throw ConfigError("language '" + l.language + "' listed twice");
    }
    if (!(popularity_top_fraction > 0.0 && popularity_top_fraction <= 1.0)) {
        throw ConfigError("filters.popularity_top_fraction must be in (0, 1]");
    }
    sampling.validate();
    const double split_sum = split_ratio[0] + split_ratio[1] + split_ratio[2];
    if (std::abs(split_sum - 1.0) > 1e-9) throw ConfigError("collection.split_ratio must sum to 1");
    const std::set<std::string> provider_kinds{"simulated", "file-mock", "http"};
    if (!provider_kinds.count(generation.provider.kind)) {
        throw ConfigError("unknown generation.provider.kind '" + generation.provider.kind + "'");
    }
    if (generation.provider.kind == "file-mock" && generation.provider.mock_path.empty()) {
        throw ConfigError("missing config key 'generation.provider.mock_path'");
    }
    if (generation.provider.kind == "http" && generation.provider.model.empty()) {
        throw ConfigError("missing config key 'generation.provider.model'");
    }
    const std::set<std::string> translator_kinds{"identity", "table", "chat"};
    if (!translator_kinds.count(generation.translator.kind)) {
        throw ConfigError("unknown generation.translator.kind '" + generation.translator.kind + "'");
    }
    if (generation.translator.kind == "table" && generation.translator.path.empty()) {
        throw ConfigError("missing config key 'generation.translator.path'");
    }
    if (generation.char_budget == 0) throw ConfigError("generation.char_budget must be positive");
    if (depth == 0) throw ConfigError("retrieval.depth must be positive");
    for (const auto& s : lexical) {
        if (!s.is_lexical()) throw ConfigError("retrieval.lexical entry '" + s.system_id + "' is not lexical");
    }
    for (const auto& s : external) {
        if (s.is_lexical()) throw ConfigError("retrieval.external entry '" + s.system_id + "' is not external");
    }
    validate_pool(systems());
}

}  // namespace totsim
