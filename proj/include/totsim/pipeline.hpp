#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "totsim/collection.hpp"
#include "totsim/config.hpp"
#include "totsim/corpus.hpp"
#include "totsim/error.hpp"
#include "totsim/evaluation.hpp"
#include "totsim/generation.hpp"
#include "totsim/providers.hpp"
#include "totsim/templates.hpp"

namespace totsim {

/// A stage input does not exist yet; the message names the subcommand that makes it.
class StageInputError : public Error {
public:
    using Error::Error;
};

struct PipelineOptions {
    unsigned workers = 1;
    bool force = false;
};

/// Stage names in execution order.
inline const std::vector<std::string> kStages = {
    "ingest", "partition", "sample", "index", "generate-validation", "search",
    "evaluate", "correlate", "select", "generate-collection", "assemble"};

/// Query sets searched per language: real queries, then one synthetic set per variation.
inline const std::vector<std::string> kQuerySets = {"real", "V1", "V2", "V3", "V4"};

/// (partition, variation) pairs scored per language, in report order.
[[nodiscard]] std::vector<StrategyKey> correlation_grid();

/// File-based stage runner. Every stage reads the outputs of earlier stages from the
/// output directory and writes stages/<name>.json when it finishes.
class Pipeline {
public:
    Pipeline(PipelineConfig config, PipelineOptions options);
    ~Pipeline();

    void ingest();
    void partition();
    void sample();
    void index();
    void generate_validation();
    void search();
    void evaluate();
    void correlate();
    void select();
    void generate_collection();
    void assemble();

    void run_stage(const std::string& name);

    /// Runs every stage, skipping those whose manifest matches the current config
    /// unless forced. Once a stage runs, every later stage runs as well.
    /// Returns the names of the stages that ran.
    std::vector<std::string> run_all();

    [[nodiscard]] bool stage_complete(const std::string& name) const;
    [[nodiscard]] const PipelineConfig& config() const noexcept { return config_; }
    [[nodiscard]] std::filesystem::path out(const std::filesystem::path& rel) const { return config_.out(rel); }

private:

    const Corpus& corpus(const std::string& language);
    const Corpus& english();
    const DomainMap& domain_map();
    PartitionResult load_partition(const std::string& language);
    std::map<std::string, std::string> real_queries(const std::string& language);
    Qrels real_qrels(const std::string& language);
    QueryMetadataMap real_metadata(const std::string& language, const Qrels& qrels);
    std::vector<QueryRecord> load_records(const std::filesystem::path& path, const char* producer);
    GenerationProvider& provider();
    TranslationProvider& translator();
    const TemplateSet& templates();
    GenerationSettings generation_settings() const;
    std::vector<QueryRecord> run_generation(const std::string& language,
                                            const std::vector<GenerationJob>& jobs);
    void require_input(const std::filesystem::path& path, const char* producer) const;
    void finish_stage(const std::string& name, std::vector<std::filesystem::path> outputs);
    void write_output(const std::filesystem::path& rel, const std::string& contents,
                      std::vector<std::filesystem::path>& outputs);

    PipelineConfig config_;
    PipelineOptions options_;
    std::string config_hash_;
    std::map<std::string, std::unique_ptr<Corpus>> corpora_;
    std::unique_ptr<DomainMap> domain_map_;
    std::unique_ptr<GenerationProvider> provider_;
    std::unique_ptr<TranslationProvider> translator_;
    std::unique_ptr<TemplateSet> templates_;
};

}  // namespace totsim
