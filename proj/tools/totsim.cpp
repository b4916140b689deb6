// Command-line front end: one subcommand per pipeline stage plus `pipeline`.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "totsim/config.hpp"
#include "totsim/error.hpp"
#include "totsim/evaluation.hpp"
#include "totsim/pipeline.hpp"
#include "totsim/retrieval.hpp"

namespace {

using namespace totsim;

struct CommonOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    unsigned workers = 1;
    bool force = false;
    std::string output_dir;
    std::vector<std::string> languages;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool config_required) {
    auto* c = cmd->add_option("--config", o.config, "pipeline configuration file (JSON)");
    if (config_required) c->required();
    cmd->add_option("--seed", o.seed, "override the configured seed");
    cmd->add_option("--workers", o.workers, "worker threads for parallel stages")->check(CLI::PositiveNumber);
    cmd->add_flag("--force", o.force, "rerun stages even when their outputs are current");
    cmd->add_option("--output-dir", o.output_dir, "override the configured output directory");
    cmd->add_option("--language", o.languages, "restrict to these target languages");
}

PipelineConfig load_config(const CommonOptions& o) {
    auto cfg = PipelineConfig::load(o.config);
    if (o.seed) {
        cfg.seed = *o.seed;
        cfg.sampling.seed = *o.seed;
    }
    if (!o.output_dir.empty()) cfg.output_dir = std::filesystem::absolute(o.output_dir);
    if (!o.languages.empty()) {
        std::vector<LanguageInput> keep;
        for (const auto& code : o.languages) keep.push_back(cfg.language(code));
        cfg.languages = std::move(keep);
    }
    return cfg;
}

int run_stage(const CommonOptions& o, const std::string& stage) {
    Pipeline pipeline(load_config(o), PipelineOptions{o.workers, o.force});
    if (!o.force && pipeline.stage_complete(stage)) {
        spdlog::info("[{}] up to date, skipped (use --force to rerun)", stage);
        return 0;
    }
    pipeline.run_stage(stage);
    return 0;
}

std::vector<MetricReport> read_reports(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    return read_report_jsonl(in);
}

}  // namespace

int main(int argc, char** argv) {
    auto logger = spdlog::stderr_color_mt("totsim");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("%^%l%$ %v");

    CLI::App app{"Synthetic tip-of-the-tongue test collection builder"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "debug logging");

    CommonOptions common;
    std::string phase = "validation";
    std::vector<std::string> eval_runs;
    std::string eval_qrels;
    std::string real_reports;
    std::string syn_reports;
    std::string correlations;

    const std::vector<std::pair<std::string, std::string>> plain = {
        {"ingest", "load and validate corpora"},
        {"partition", "split target corpora into monolingual and bilingual pages"},
        {"sample", "draw popularity-stratified entity candidates"},
        {"index", "build inverted indexes"},
        {"search", "run the retrieval pool over real and synthetic queries"},
        {"assemble", "build and validate the released collection"},
    };
    std::map<std::string, CLI::App*> cmds;
    for (const auto& [name, help] : plain) {
        cmds[name] = app.add_subcommand(name, help);
        add_common(cmds[name], common, true);
    }

    auto* generate = app.add_subcommand("generate", "generate synthetic queries");
    add_common(generate, common, true);
    generate->add_option("--phase", phase, "validation (real-query targets) or collection (sampled candidates)")
        ->check(CLI::IsMember({"validation", "collection"}));

    auto* evaluate = app.add_subcommand("evaluate", "score runs against qrels");
    add_common(evaluate, common, false);
    evaluate->add_option("--run", eval_runs, "run files to score instead of the pipeline outputs");
    evaluate->add_option("--qrels", eval_qrels, "qrels for --run");

    auto* correlate = app.add_subcommand("correlate", "rank correlation of real and synthetic system rankings");
    add_common(correlate, common, false);
    correlate->add_option("--real", real_reports, "metric report (JSON lines) from real queries");
    correlate->add_option("--synthetic", syn_reports, "metric report (JSON lines) from synthetic queries");

    auto* select = app.add_subcommand("select", "pick the best variation per partition");
    add_common(select, common, false);
    select->add_option("--correlations", correlations, "correlation rows (JSON lines) to select from");

    auto* pipeline = app.add_subcommand("pipeline", "run every stage, skipping completed ones");
    add_common(pipeline, common, true);

    CLI11_PARSE(app, argc, argv);
    if (verbose) spdlog::set_level(spdlog::level::debug);

    try {
        for (const auto& [name, cmd] : cmds) {
            if (cmd->parsed()) return run_stage(common, name);
        }
        if (generate->parsed()) {
            return run_stage(common, phase == "validation" ? "generate-validation" : "generate-collection");
        }
        if (evaluate->parsed()) {
            if (eval_runs.empty()) {
                if (common.config.empty()) throw ConfigError("evaluate needs --config or --run/--qrels");
                return run_stage(common, "evaluate");
            }
            if (eval_qrels.empty()) throw ConfigError("--run requires --qrels");
            const auto qrels = Qrels::load(eval_qrels);
            std::vector<RunResult> runs;
            for (const auto& path : eval_runs) runs.push_back(read_run_file(path));
            write_report_table(std::cout, evaluate_pool(runs, qrels));
            return 0;
        }
        if (correlate->parsed()) {
            if (real_reports.empty() && syn_reports.empty()) {
                if (common.config.empty()) throw ConfigError("correlate needs --config or --real/--synthetic");
                return run_stage(common, "correlate");
            }
            if (real_reports.empty() || syn_reports.empty()) {
                throw ConfigError("--real and --synthetic must be given together");
            }
            const auto r = totsim::correlate(read_reports(real_reports), read_reports(syn_reports));
            std::cout << "metric\ttau\tpearson\n";
            for (std::size_t i = 0; i < kBaseMetrics.size(); ++i) {
                std::cout << to_string(kBaseMetrics[i]) << '\t' << fmt::format("{:.4f}\t{:.4f}\n", r.per_metric[i].tau,
                                                                              r.per_metric[i].pearson);
            }
            std::cout << fmt::format("mean\t{:.4f}\t{:.4f}\n", r.mean_tau, r.mean_pearson);
            return 0;
        }
        if (select->parsed()) {
            if (correlations.empty()) {
                if (common.config.empty()) throw ConfigError("select needs --config or --correlations");
                return run_stage(common, "select");
            }
            std::ifstream in(correlations);
            if (!in) throw Error("cannot open " + correlations);
            std::map<StrategyKey, CorrelationResult> results;
            for (const auto& row : read_correlation_jsonl(in)) {
                if (row.partition != Partition::Full) results[{row.partition, row.variation}] = row.result;
            }
            for (const auto& [p, v] : select_best_strategy(results)) {
                std::cout << to_string(p) << '\t' << to_string(v) << '\n';
            }
            return 0;
        }
        if (pipeline->parsed()) {
            Pipeline p(load_config(common), PipelineOptions{common.workers, common.force});
            const auto ran = p.run_all();
            spdlog::info("[pipeline] {} of {} stages ran", ran.size(), kStages.size());
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "totsim: error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
