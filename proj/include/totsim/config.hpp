#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "totsim/retrieval.hpp"
#include "totsim/sampling.hpp"

namespace totsim {

struct LanguageInput {
    std::string language;
    std::filesystem::path corpus;
    std::string tokenizer;  ///< descriptor; empty = default for the language
    std::filesystem::path real_queries;  ///< "query_id<TAB>text" lines
    std::filesystem::path real_qrels;
};

struct ProviderSettings {
    std::string kind = "simulated";  ///< simulated | file-mock | http
    std::string model;
    std::filesystem::path mock_path;
};

struct TranslatorSettings {
    std::string kind = "identity";  ///< identity | table | chat
    std::filesystem::path path;
    double temperature = 0.0;
};

struct GenerationConfig {
    ProviderSettings provider;
    TranslatorSettings translator;
    std::filesystem::path templates;
    std::size_t char_budget = 30000;
    double summary_temperature = 0.5;
    double query_temperature = 0.3;
    unsigned concurrency = 4;
    unsigned transport_retries = 3;
    unsigned backoff_ms = 500;
};

struct PipelineConfig {
    std::filesystem::path output_dir = "out";
    std::uint64_t seed = 0;
    std::string english_language = "en";
    std::filesystem::path english_corpus;
    std::vector<LanguageInput> languages;
    std::filesystem::path domain_map;  ///< empty = built-in table
    double popularity_top_fraction = 0.2;
    std::size_t min_chars = 1000;
    SamplingConfig sampling;  ///< seed is taken from `seed`
    GenerationConfig generation;
    std::vector<RetrievalSystem> lexical;  ///< empty in the file = default grid
    std::vector<RetrievalSystem> external;
    std::size_t depth = kRetrievalDepth;
    std::array<double, 3> split_ratio{0.8, 0.1, 0.1};

    /// Directory that relative paths are resolved against.
    std::filesystem::path base_dir;

    /// Throws ConfigError naming the missing key; relative paths resolve against the
    /// directory of the file.
    static PipelineConfig load(const std::filesystem::path& path);
    static PipelineConfig from_json(const nlohmann::json& j, std::filesystem::path base_dir = {});
    [[nodiscard]] nlohmann::json to_json() const;

    [[nodiscard]] std::filesystem::path resolve(const std::filesystem::path& p) const;
    [[nodiscard]] std::filesystem::path out(const std::filesystem::path& rel) const {
        return resolve(output_dir) / rel;
    }
    [[nodiscard]] const LanguageInput& language(const std::string& code) const;
    [[nodiscard]] std::vector<RetrievalSystem> systems() const;

    /// SHA-256 of the canonical JSON form, excluding output_dir.
    [[nodiscard]] std::string hash() const;

    void validate() const;
};

}  // namespace totsim
