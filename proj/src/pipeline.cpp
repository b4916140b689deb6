#include "totsim/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "totsim/error.hpp"
#include "totsim/index.hpp"
#include "totsim/io.hpp"
#include "totsim/retrieval.hpp"
#include "totsim/sampling.hpp"
#include "totsim/text.hpp"
#include "totsim/tokenizer.hpp"

namespace totsim {

using nlohmann::json;
namespace fs = std::filesystem;

std::vector<StrategyKey> correlation_grid() {
    return {{Partition::Full, VariationId::V1},        {Partition::Full, VariationId::V2},
            {Partition::Monolingual, VariationId::V1}, {Partition::Monolingual, VariationId::V2},
            {Partition::Bilingual, VariationId::V1},   {Partition::Bilingual, VariationId::V2},
            {Partition::Bilingual, VariationId::V3},   {Partition::Bilingual, VariationId::V4}};
}

namespace {

std::string partition_slice(std::optional<Partition> p, std::optional<DomainLabel> d) {
    std::string s(p ? to_string(*p) : "Full");
    if (d) s += "-" + std::string(to_string(*d));
    return s;
}

QueryFilter slice_filter(Partition p, std::optional<DomainLabel> d) {
    QueryFilter f;
    if (p != Partition::Full) f.partition = p;
    f.domain = d;
    return f;
}

std::vector<std::optional<DomainLabel>> domain_slices() {
    return {std::nullopt, DomainLabel::Movies, DomainLabel::People, DomainLabel::General};
}

std::string run_file_name(const std::string& system_id) { return system_id + ".run"; }

fs::path eval_path(const std::string& lang, const std::string& set, const std::string& slice) {
    return fs::path("evaluate") / lang / set / (slice + ".jsonl");
}

std::vector<MetricReport> read_reports(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw StageInputError("missing " + path.string() + "; run `totsim evaluate` first");
    return read_report_jsonl(in);
}

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
    for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
        s.replace(pos, from.size(), to);
    }
    return s;
}

}  // namespace

Pipeline::Pipeline(PipelineConfig config, PipelineOptions options)
    : config_(std::move(config)), options_(options), config_hash_(config_.hash()) {}

Pipeline::~Pipeline() = default;

// --- shared inputs ---------------------------------------------------------

const Corpus& Pipeline::corpus(const std::string& language) {
    auto& slot = corpora_[language];
    if (!slot) {
        const fs::path path = language == config_.english_language
                                  ? config_.resolve(config_.english_corpus)
                                  : config_.resolve(config_.language(language).corpus);
        slot = std::make_unique<Corpus>(Corpus::load(path, language, options_.workers));
    }
    return *slot;
}

const Corpus& Pipeline::english() { return corpus(config_.english_language); }

const DomainMap& Pipeline::domain_map() {
    if (!domain_map_) {
        domain_map_ = std::make_unique<DomainMap>(config_.domain_map.empty()
                                                      ? DomainMap::builtin()
                                                      : DomainMap::load(config_.resolve(config_.domain_map)));
    }
    return *domain_map_;
}

void Pipeline::require_input(const fs::path& path, const char* producer) const {
    if (!fs::exists(path)) {
        throw StageInputError(fmt::format("missing {}; run `totsim {}` first", path.string(), producer));
    }
}

PartitionResult Pipeline::load_partition(const std::string& language) {
    const auto path = out(fs::path("partition") / (language + ".tsv"));
    require_input(path, "partition");
    std::istringstream in(read_file(path));
    PartitionResult result;
    std::string line;
    for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw ParseError(path.string() + ": malformed line", line_no);
        result.assignment.emplace(line.substr(0, tab), parse_partition(line.substr(tab + 1)));
    }
    return result;
}

std::map<std::string, std::string> Pipeline::real_queries(const std::string& language) {
    const auto path = config_.resolve(config_.language(language).real_queries);
    std::istringstream in(read_file(path));
    std::map<std::string, std::string> queries;
    std::string line;
    for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
        if (text::trim(line).empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw ParseError(path.string() + ": expected query_id<TAB>text", line_no);
        if (!queries.emplace(line.substr(0, tab), line.substr(tab + 1)).second) {
            throw ParseError(path.string() + ": duplicate query id " + line.substr(0, tab), line_no);
        }
    }
    return queries;
}

Qrels Pipeline::real_qrels(const std::string& language) {
    return Qrels::load(config_.resolve(config_.language(language).real_qrels));
}

QueryMetadataMap Pipeline::real_metadata(const std::string& language, const Qrels& qrels) {
    const auto parts = load_partition(language);
    const Corpus& c = corpus(language);
    QueryMetadataMap meta;
    for (const auto& [qid, doc_id] : qrels.entries()) {
        const Document* doc = c.find(doc_id);
        if (doc == nullptr) {
            throw ValidationError(fmt::format("real query {} targets {} which is not in the {} corpus", qid,
                                              doc_id, language));
        }
        meta[qid] = QueryMetadata{parts.of(doc_id), assign_domain(*doc, domain_map())};
    }
    return meta;
}

std::vector<QueryRecord> Pipeline::load_records(const fs::path& path, const char* producer) {
    require_input(path, producer);
    std::istringstream in(read_file(path));
    return read_query_manifest(in);
}

GenerationProvider& Pipeline::provider() {
    if (!provider_) {
        const auto& p = config_.generation.provider;
        if (p.kind == "simulated") {
            provider_ = std::make_unique<SimulatedProvider>();
        } else if (p.kind == "file-mock") {
            provider_ = FileMockProvider::load(config_.resolve(p.mock_path));
        } else {
            provider_ = HttpChatProvider::from_environment(p.model);
        }
    }
    return *provider_;
}

const TemplateSet& Pipeline::templates() {
    if (!templates_) {
        templates_ = std::make_unique<TemplateSet>(TemplateSet::load(config_.resolve(config_.generation.templates)));
    }
    return *templates_;
}

TranslationProvider& Pipeline::translator() {
    if (!translator_) {
        const auto& t = config_.generation.translator;
        if (t.kind == "identity") {
            translator_ = std::make_unique<IdentityTranslator>();
        } else if (t.kind == "table") {
            translator_ = TableTranslator::load(config_.resolve(t.path));
        } else {
            translator_ = std::make_unique<ChatTranslator>(provider(), templates(), t.temperature,
                                                           generation_settings().retry);
        }
    }
    return *translator_;
}

GenerationSettings Pipeline::generation_settings() const {
    const auto& g = config_.generation;
    GenerationSettings s;
    s.char_budget = g.char_budget;
    s.summary_temperature = g.summary_temperature;
    s.query_temperature = g.query_temperature;
    s.retry.max_retries = g.transport_retries;
    s.retry.initial_backoff = std::chrono::milliseconds(g.backoff_ms);
    return s;
}

std::vector<QueryRecord> Pipeline::run_generation(const std::string& language,
                                                  const std::vector<GenerationJob>& jobs) {
    SummaryCache cache;
    GenerationContext ctx{corpus(language), &english(), provider(), translator(), templates(),
                          generation_settings(), &cache};
    return generate_queries(jobs, ctx, std::max(1U, config_.generation.concurrency));
}

// --- stage bookkeeping -----------------------------------------------------

void Pipeline::write_output(const fs::path& rel, const std::string& contents, std::vector<fs::path>& outputs) {
    atomic_write_file(out(rel), contents);
    outputs.push_back(rel);
}

void Pipeline::finish_stage(const std::string& name, std::vector<fs::path> outputs) {
    std::sort(outputs.begin(), outputs.end());
    std::vector<std::string> names;
    for (const auto& p : outputs) names.push_back(p.generic_string());
    const json manifest{{"stage", name}, {"config_hash", config_hash_}, {"outputs", names}};
    atomic_write_file(out(fs::path("stages") / (name + ".json")), manifest.dump(2) + "\n");
    spdlog::info("[{}] done ({} outputs)", name, outputs.size());
}

bool Pipeline::stage_complete(const std::string& name) const {
    const auto path = out(fs::path("stages") / (name + ".json"));
    if (!fs::exists(path)) return false;
    try {
        const json j = json::parse(read_file(path));
        if (j.at("config_hash").get<std::string>() != config_hash_) return false;
        for (const auto& o : j.at("outputs")) {
            if (!fs::exists(out(o.get<std::string>()))) return false;
        }
        return true;
    } catch (const std::exception&) {
        return false;
    }
}

void Pipeline::run_stage(const std::string& name) {
    if (name == "ingest") return ingest();
    if (name == "partition") return partition();
    if (name == "sample") return sample();
    if (name == "index") return index();
    if (name == "generate-validation") return generate_validation();
    if (name == "search") return search();
    if (name == "evaluate") return evaluate();
    if (name == "correlate") return correlate();
    if (name == "select") return select();
    if (name == "generate-collection") return generate_collection();
    if (name == "assemble") return assemble();
    throw ConfigError("unknown stage '" + name + "'");
}

std::vector<std::string> Pipeline::run_all() {
    std::vector<std::string> ran;
    bool dirty = options_.force;
    for (const auto& name : kStages) {
        if (!dirty && stage_complete(name)) {
            spdlog::info("[{}] up to date, skipped", name);
            continue;
        }
        dirty = true;
        spdlog::info("[{}] running", name);
        run_stage(name);
        ran.push_back(name);
    }
    return ran;
}

// --- stages ----------------------------------------------------------------

void Pipeline::ingest() {
    std::vector<fs::path> outputs;
    std::vector<std::string> codes{config_.english_language};
    for (const auto& l : config_.languages) codes.push_back(l.language);
    for (const auto& code : codes) {
        const Corpus& c = corpus(code);
        std::size_t linked = 0;
        std::uint64_t chars = 0;
        for (const auto& d : c.documents()) {
            linked += d.en_link ? 1 : 0;
            chars += d.length_chars;
        }
        const json summary{{"language", code},
                           {"documents", c.size()},
                           {"with_en_link", linked},
                           {"body_chars", chars},
                           {"config_hash", config_hash_}};
        spdlog::info("[ingest] {}: {} documents", code, c.size());
        write_output(fs::path("ingest") / (code + ".json"), summary.dump(2) + "\n", outputs);
    }
    finish_stage("ingest", outputs);
}

void Pipeline::partition() {
    std::vector<fs::path> outputs;
    for (const auto& l : config_.languages) {
        const auto result = partition_corpus(corpus(l.language), english());
        std::string tsv;
        for (const auto& [doc, p] : result.assignment) tsv += doc + "\t" + std::string(to_string(p)) + "\n";
        write_output(fs::path("partition") / (l.language + ".tsv"), tsv, outputs);
        const json summary{{"language", l.language},
                           {"monolingual", result.count(Partition::Monolingual)},
                           {"bilingual", result.count(Partition::Bilingual)},
                           {"demoted", result.demoted},
                           {"config_hash", config_hash_}};
        write_output(fs::path("partition") / (l.language + ".json"), summary.dump(2) + "\n", outputs);
        spdlog::info("[partition] {}: {} monolingual, {} bilingual, {} dangling links", l.language,
                     result.count(Partition::Monolingual), result.count(Partition::Bilingual),
                     result.demoted.size());
    }
    finish_stage("partition", outputs);
}

void Pipeline::sample() {
    std::vector<fs::path> outputs;
    for (const auto& l : config_.languages) {
        const Corpus& c = corpus(l.language);
        const auto parts = load_partition(l.language);
        auto pool = all_documents(c);
        sort_by_popularity(pool);
        const auto eligible = filter_by_length(filter_by_popularity(pool, config_.popularity_top_fraction),
                                               config_.min_chars);
        spdlog::info("[sample] {}: {} of {} documents pass the popularity and length filters", l.language,
                     eligible.size(), c.size());

        std::vector<EntityCandidate> candidates;
        for (const Partition p : {Partition::Monolingual, Partition::Bilingual}) {
            std::map<DomainLabel, DocumentPool> by_domain;
            for (const Document* d : eligible) {
                if (parts.of(d->doc_id) == p) by_domain[assign_domain(*d, domain_map())].push_back(d);
            }
            std::map<DomainLabel, StratifiedPool> pools;
            for (const auto& [domain, docs] : by_domain) pools[domain] = stratify(docs, config_.sampling.bucket_count);
            auto drawn = sample_candidates(pools, config_.sampling, p);
            candidates.insert(candidates.end(), drawn.begin(), drawn.end());
        }
        std::ostringstream manifest;
        write_candidate_manifest(manifest, candidates, config_.seed, config_hash_);
        write_output(fs::path("sample") / (l.language + ".candidates.jsonl"), manifest.str(), outputs);
    }
    finish_stage("sample", outputs);
}

void Pipeline::index() {
    std::vector<fs::path> outputs;
    for (const auto& l : config_.languages) {
        const auto tokenizer = l.tokenizer.empty() ? Tokenizer::for_language(l.language)
                                                   : Tokenizer::from_descriptor(l.tokenizer);
        const auto idx = InvertedIndex::build(corpus(l.language), tokenizer, options_.workers);
        std::ostringstream bytes;
        idx.write(bytes);
        write_output(fs::path("index") / (l.language + ".idx"), bytes.str(), outputs);
        spdlog::info("[index] {}: {} documents, {} terms", l.language, idx.document_count(),
                     idx.vocabulary_size());
    }
    finish_stage("index", outputs);
}

void Pipeline::generate_validation() {
    std::vector<fs::path> outputs;
    for (const auto& l : config_.languages) {
        const auto qrels = real_qrels(l.language);
        const auto parts = load_partition(l.language);
        const Corpus& c = corpus(l.language);
        std::set<std::string> targets;
        for (const auto& [qid, doc] : qrels.entries()) targets.insert(doc);

        std::vector<GenerationJob> jobs;
        for (const auto& doc_id : targets) {
            const Document* doc = c.find(doc_id);
            if (doc == nullptr) throw ValidationError("real qrels name unknown document " + doc_id);
            EntityCandidate cand{doc_id, parts.of(doc_id), assign_domain(*doc, domain_map()), 0};
            for (const auto v : kAllVariations) {
                if (PromptVariation::of(v).needs_english_page() && cand.partition != Partition::Bilingual) continue;
                jobs.push_back(GenerationJob{cand, v});
            }
        }
        spdlog::info("[generate] {}: {} validation jobs for {} target entities", l.language, jobs.size(),
                     targets.size());
        const auto records = run_generation(l.language, jobs);
        std::ostringstream manifest;
        write_query_manifest(manifest, records);
        write_output(fs::path("generate") / "validation" / (l.language + ".jsonl"), manifest.str(), outputs);
    }
    finish_stage("generate-validation", outputs);
}

void Pipeline::search() {
    std::vector<fs::path> outputs;
    const auto systems = config_.systems();
    for (const auto& l : config_.languages) {
        const auto idx_path = out(fs::path("index") / (l.language + ".idx"));
        require_input(idx_path, "index");
        const auto idx = InvertedIndex::load(idx_path);
        const auto records =
            load_records(out(fs::path("generate") / "validation" / (l.language + ".jsonl")), "generate");

        std::map<std::string, std::map<std::string, std::string>> sets;
        {
            const auto qrels = real_qrels(l.language);
            for (const auto& [qid, txt] : real_queries(l.language)) {
                if (qrels.contains(qid)) sets["real"][qid] = txt;
            }
        }
        for (const auto& r : records) {
            if (!r.discarded) sets[std::string(to_string(r.variation))][r.query_id] = r.text;
        }

        for (const auto& set : kQuerySets) {
            const auto it = sets.find(set);
            if (it == sets.end() || it->second.empty()) continue;
            const auto& queries = it->second;
            std::set<std::string> expected;
            for (const auto& [qid, txt] : queries) expected.insert(qid);
            for (const auto& system : systems) {
                RunResult run;
                if (system.is_lexical()) {
                    run = run_lexical_system(system, idx, queries, config_.depth, options_.workers);
                } else {
                    const auto& ext = std::get<ExternalRunParams>(system.kind);
                    fs::path path = ext.real_run;
                    if (set != "real" && !ext.synthetic_run.empty()) {
                        path = replace_all(ext.synthetic_run.generic_string(), "{variation}", set);
                    }
                    path = replace_all(path.generic_string(), "{language}", l.language);
                    auto loaded = load_external_run(config_.resolve(path), expected, config_.depth);
                    run = std::move(loaded.run);
                    run.system_id = system.system_id;
                }
                std::ostringstream bytes;
                write_run(bytes, run);
                write_output(fs::path("search") / l.language / set / run_file_name(system.system_id), bytes.str(),
                             outputs);
            }
            spdlog::info("[search] {}/{}: {} queries x {} systems", l.language, set, queries.size(), systems.size());
        }
    }
    finish_stage("search", outputs);
}

void Pipeline::evaluate() {
    std::vector<fs::path> outputs;
    const auto systems = config_.systems();
    for (const auto& l : config_.languages) {
        const auto records =
            load_records(out(fs::path("generate") / "validation" / (l.language + ".jsonl")), "generate");
        for (const auto& set : kQuerySets) {
            const auto dir = out(fs::path("search") / l.language / set);
            if (!fs::exists(dir)) continue;
            Qrels qrels;
            QueryMetadataMap meta;
            if (set == "real") {
                qrels = real_qrels(l.language);
                meta = real_metadata(l.language, qrels);
            } else {
                for (const auto& r : records) {
                    if (r.discarded || to_string(r.variation) != set) continue;
                    qrels.add(r.query_id, r.doc_id);
                    meta[r.query_id] = QueryMetadata{r.partition, r.domain};
                }
            }
            std::vector<RunResult> runs;
            for (const auto& system : systems) {
                const auto path = dir / run_file_name(system.system_id);
                require_input(path, "search");
                runs.push_back(read_run_file(path, config_.depth));
                runs.back().system_id = system.system_id;
            }
            for (const Partition p : {Partition::Full, Partition::Monolingual, Partition::Bilingual}) {
                for (const auto& d : domain_slices()) {
                    const auto reports = evaluate_pool(runs, qrels, &meta, slice_filter(p, d));
                    const auto slice = partition_slice(p == Partition::Full ? std::nullopt : std::optional(p), d);
                    std::ostringstream jsonl;
                    write_report_jsonl(jsonl, reports);
                    write_output(eval_path(l.language, set, slice), jsonl.str(), outputs);
                    if (!d) {
                        std::ostringstream table;
                        write_report_table(table, reports);
                        write_output(fs::path("evaluate") / l.language / set / (slice + ".tsv"), table.str(), outputs);
                    }
                }
            }
        }
    }
    finish_stage("evaluate", outputs);
}

void Pipeline::correlate() {
    std::vector<fs::path> outputs;
    for (const auto& l : config_.languages) {
        std::vector<CorrelationRow> rows;
        json by_domain = json::array();
        for (const auto& [p, v] : correlation_grid()) {
            const std::string set(to_string(v));
            for (const auto& d : domain_slices()) {
                const auto slice = partition_slice(p == Partition::Full ? std::nullopt : std::optional(p), d);
                const auto real_path = out(eval_path(l.language, "real", slice));
                const auto syn_path = out(eval_path(l.language, set, slice));
                require_input(real_path, "evaluate");
                json entry{{"partition", to_string(p)},
                           {"variation", set},
                           {"domain", d ? std::string(to_string(*d)) : std::string("All")}};
                std::optional<CorrelationResult> result;
                std::string why;
                if (!fs::exists(syn_path)) {
                    why = "no synthetic queries";
                } else {
                    const auto real = read_reports(real_path);
                    const auto syn = read_reports(syn_path);
                    if (real.empty() || real.front().query_count == 0) {
                        why = "no real queries";
                    } else if (syn.empty() || syn.front().query_count == 0) {
                        why = "no synthetic queries";
                    } else {
                        try {
                            result = totsim::correlate(real, syn);
                        } catch (const CorrelationError& e) {
                            why = e.what();
                        }
                    }
                }
                if (!d) {
                    if (result) {
                        rows.push_back(CorrelationRow{p, v, *result});
                    } else {
                        spdlog::warn("[correlate] {} {} {}: not computed ({})", l.language, to_string(p), set, why);
                    }
                }
                if (result) {
                    entry["mean_tau"] = result->mean_tau;
                    entry["mean_pearson"] = result->mean_pearson;
                } else {
                    entry["status"] = "n/a";
                    entry["reason"] = why;
                }
                by_domain.push_back(std::move(entry));
            }
        }
        std::ostringstream table;
        write_correlation_table(table, l.language, rows);
        write_output(fs::path("correlate") / (l.language + ".tsv"), table.str(), outputs);
        std::ostringstream jsonl;
        write_correlation_jsonl(jsonl, rows);
        write_output(fs::path("correlate") / (l.language + ".jsonl"), jsonl.str(), outputs);
        std::string slices;
        for (const auto& e : by_domain) slices += e.dump() + "\n";
        write_output(fs::path("correlate") / (l.language + ".slices.jsonl"), slices, outputs);
    }
    finish_stage("correlate", outputs);
}

void Pipeline::select() {
    std::vector<fs::path> outputs;
    for (const auto& l : config_.languages) {
        const auto path = out(fs::path("correlate") / (l.language + ".jsonl"));
        require_input(path, "correlate");
        std::ifstream in(path);
        std::map<StrategyKey, CorrelationResult> results;
        for (const auto& row : read_correlation_jsonl(in)) {
            if (row.partition != Partition::Full) results[{row.partition, row.variation}] = row.result;
        }
        for (const Partition p : {Partition::Monolingual, Partition::Bilingual}) {
            const bool any = std::any_of(results.begin(), results.end(),
                                         [&](const auto& kv) { return kv.first.first == p; });
            if (!any) {
                throw EvaluationError(fmt::format("no correlation results for the {} partition of {}",
                                                  to_string(p), l.language));
            }
        }
        const auto choice = select_best_strategy(results);
        json strategy = json::object();
        json scores = json::object();
        for (const auto& [p, v] : choice) {
            strategy[std::string(to_string(p))] = to_string(v);
            spdlog::info("[select] {} {}: {} (mean tau {:.4f})", l.language, to_string(p), to_string(v),
                         results.at({p, v}).mean_tau);
        }
        for (const auto& [key, r] : results) {
            scores[std::string(to_string(key.first))][std::string(to_string(key.second))] = r.mean_tau;
        }
        const json doc{{"language", l.language}, {"strategy", strategy}, {"mean_tau", scores},
                       {"config_hash", config_hash_}};
        write_output(fs::path("select") / (l.language + ".json"), doc.dump(2) + "\n", outputs);
    }
    finish_stage("select", outputs);
}

namespace {

std::map<Partition, VariationId> read_strategy(const fs::path& path) {
    const json j = json::parse(read_file(path));
    std::map<Partition, VariationId> strategy;
    for (const auto& [k, v] : j.at("strategy").items()) {
        strategy[parse_partition(k)] = parse_variation(v.get<std::string>());
    }
    return strategy;
}

}  // namespace

void Pipeline::generate_collection() {
    std::vector<fs::path> outputs;
    for (const auto& l : config_.languages) {
        const auto select_path = out(fs::path("select") / (l.language + ".json"));
        require_input(select_path, "select");
        const auto strategy = read_strategy(select_path);
        const auto cand_path = out(fs::path("sample") / (l.language + ".candidates.jsonl"));
        require_input(cand_path, "sample");
        std::ifstream in(cand_path);
        std::vector<GenerationJob> jobs;
        for (const auto& row : read_candidate_manifest(in)) {
            jobs.push_back(GenerationJob{row.candidate, strategy.at(row.candidate.partition)});
        }
        spdlog::info("[generate] {}: {} collection jobs", l.language, jobs.size());
        const auto records = run_generation(l.language, jobs);
        std::ostringstream manifest;
        write_query_manifest(manifest, records);
        write_output(fs::path("generate") / "collection" / (l.language + ".jsonl"), manifest.str(), outputs);
    }
    finish_stage("generate-collection", outputs);
}

void Pipeline::assemble() {
    std::vector<fs::path> outputs;
    for (const auto& l : config_.languages) {
        const auto select_path = out(fs::path("select") / (l.language + ".json"));
        require_input(select_path, "select");
        const auto records =
            load_records(out(fs::path("generate") / "collection" / (l.language + ".jsonl")), "generate");

        CollectionSpec spec;
        spec.language = l.language;
        spec.query_count = records.size();
        spec.split_ratio = config_.split_ratio;
        spec.strategy_map = read_strategy(select_path);
        spec.seed = config_.seed;
        spec.domain_ratio = config_.sampling.domain_ratio;
        const Corpus& c = corpus(l.language);
        const auto bundle = assemble_collection(records, spec, c, config_hash_);
        const auto report = validate_collection(bundle, c);
        if (!report.ok()) {
            for (const auto& v : report.violations) {
                spdlog::error("[assemble] {} violation {}: {}", v.kind, v.query_id, v.message);
            }
            throw ValidationError(fmt::format("{} collection has {} violations; first: {}", l.language,
                                              report.violations.size(), report.violations.front().message));
        }
        const fs::path rel = fs::path("collection") / l.language;
        write_collection(bundle, out(rel));
        for (const char* f : {"queries.tsv", "qrels.txt", "splits.tsv", "metadata.jsonl", "manifest.json"}) {
            outputs.push_back(rel / f);
        }
        spdlog::info("[assemble] {}: {} queries, {} discarded", l.language, bundle.queries.size(),
                     bundle.manifest.at("counts").at("discarded").get<std::size_t>());
    }
    finish_stage("assemble", outputs);
}

}  // namespace totsim
