#include "totsim/generation.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <istream>
#include <ostream>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "totsim/error.hpp"
#include "totsim/text.hpp"

namespace totsim {

using nlohmann::json;

std::string summary_content(const Document& doc, std::size_t char_budget) {
    std::string out = doc.title;
    out += "\n\n";
    out += text::codepoint_prefix(doc.body, char_budget);
    return out;
}

std::string summarize_entity(const Document& doc, GenerationProvider& provider,
                             const TemplateSet& templates, const GenerationSettings& settings) {
    if (doc.body.empty()) throw GenerationError("document " + doc.doc_id + " has an empty body");
    GenerationRequest req;
    req.role = PromptRole::Summarize;
    req.payload = summary_content(doc, settings.char_budget);
    req.prompt = templates.get(PromptRole::Summarize, doc.language).render(req.payload);
    req.temperature = settings.summary_temperature;

    std::string out;
    try {
        out = text::trim(complete_with_retries(provider, req, settings.retry));
    } catch (const GenerationError& e) {
        throw GenerationError("summarizing " + doc.doc_id + ": " + e.what());
    }
    if (out.empty()) throw GenerationError("empty summary for " + doc.doc_id);

    std::size_t breaks = 0;
    for (auto pos = out.find("\n\n"); pos != std::string::npos; pos = out.find("\n\n", pos + 2)) {
        ++breaks;
        while (pos + 2 < out.size() && out[pos + 2] == '\n') ++pos;
    }
    if (breaks != 1) {
        spdlog::warn("[generate] summary of {} has {} paragraph breaks, expected 1", doc.doc_id, breaks);
    }
    return out;
}

std::string build_generation_prompt(const PromptVariation& variation, const EntityCandidate& candidate,
                                    std::string_view target_language,
                                    const std::optional<std::string>& summary_target,
                                    const std::optional<std::string>& summary_english,
                                    const TemplateSet& templates) {
    const auto& summary =
        variation.wiki_language == SourceLanguage::Target ? summary_target : summary_english;
    if (!summary) {
        throw GenerationError(fmt::format(
            "{} needs the {} summary of candidate {}", to_string(variation.id),
            variation.wiki_language == SourceLanguage::Target ? "target-language" : "English",
            candidate.doc_id));
    }
    switch (variation.id) {
        case VariationId::V1:
        case VariationId::V3:
            return templates.get(PromptRole::Generate, target_language).render(*summary);
        case VariationId::V2:
            return templates.get(PromptRole::Generate, "en")
                .render(*summary, templates.instruction(target_language));
        case VariationId::V4:
            return templates.get(PromptRole::Generate, "en").render(*summary);
    }
    throw GenerationError("unknown variation");
}

bool anonymity_check(std::string_view query, std::string_view title,
                     const std::vector<std::string>& aliases) {
    const auto q = text::match_key(query);
    auto leaks = [&](std::string_view name) {
        const auto key = text::match_key(name);
        return !key.empty() && q.find(key) != std::string::npos;
    };
    if (leaks(title)) return false;
    return std::none_of(aliases.begin(), aliases.end(), leaks);
}

std::string translate_text(std::string_view input, std::string_view target_language,
                           TranslationProvider& translator, const RetryPolicy& retry) {
    if (text::trim(input).empty()) throw GenerationError("cannot translate empty text");
    auto backoff = retry.initial_backoff;
    for (unsigned attempt = 0;; ++attempt) {
        try {
            auto out = translator.translate(input, target_language);
            if (text::trim(out).empty()) throw GenerationError("translator returned empty text");
            return out;
        } catch (const TransportError& e) {
            if (attempt >= retry.max_retries) {
                throw GenerationError(fmt::format("translation failed after {} attempts: {}",
                                                  attempt + 1, e.what()));
            }
            if (backoff.count() > 0) std::this_thread::sleep_for(backoff);
            backoff = std::chrono::milliseconds(
                static_cast<long long>(static_cast<double>(backoff.count()) * retry.multiplier));
        }
    }
}

std::string make_query_id(std::string_view language, Partition partition, std::string_view doc_id) {
    return fmt::format("{}-{}-{}", language, initial(partition), doc_id);
}

namespace {

const Document* english_page(const Document& doc, const EntityCandidate& candidate,
                             const GenerationContext& ctx) {
    if (doc.language == "en") return &doc;
    if (candidate.partition == Partition::Monolingual || !doc.en_link || ctx.english == nullptr) {
        return nullptr;
    }
    return ctx.english->find(*doc.en_link);
}

std::string cached_summary(const Document& doc, const GenerationContext& ctx) {
    auto compute = [&] { return summarize_entity(doc, ctx.provider, ctx.templates, ctx.settings); };
    if (ctx.cache == nullptr) return compute();
    return ctx.cache->get_or_compute(doc.language, doc.doc_id, compute);
}

}  // namespace

QueryRecord generate_query(const EntityCandidate& candidate, VariationId variation_id,
                           const GenerationContext& ctx) {
    const auto variation = PromptVariation::of(variation_id);
    const std::string& language = ctx.target.language();
    const Document* doc = ctx.target.find(candidate.doc_id);
    if (doc == nullptr) {
        throw GenerationError("candidate " + candidate.doc_id + " is not in the " + language + " corpus");
    }

    const Document* en_doc = nullptr;
    if (variation.needs_english_page()) {
        en_doc = english_page(*doc, candidate, ctx);
        if (en_doc == nullptr) {
            throw GenerationError(fmt::format("{} needs an English page but candidate {} ({}) has none",
                                              to_string(variation_id), candidate.doc_id,
                                              to_string(candidate.partition)));
        }
    }

    std::optional<std::string> summary_target;
    std::optional<std::string> summary_english;
    if (en_doc != nullptr) {
        summary_english = cached_summary(*en_doc, ctx);
    } else {
        summary_target = cached_summary(*doc, ctx);
    }
    const auto prompt = build_generation_prompt(variation, candidate, language, summary_target,
                                                summary_english, ctx.templates);
    const bool translate = variation.post_translate && language != "en";

    QueryRecord record;
    record.query_id = make_query_id(language, candidate.partition, candidate.doc_id);
    record.doc_id = candidate.doc_id;
    record.language = language;
    record.variation = variation_id;
    record.summary = summary_english ? *summary_english : *summary_target;
    record.partition = candidate.partition;
    record.domain = candidate.domain;
    record.provider_fingerprint =
        fmt::format("{};summary_temperature={};query_temperature={}", ctx.provider.fingerprint(),
                    ctx.settings.summary_temperature, ctx.settings.query_temperature);
    if (translate) record.provider_fingerprint += ";translator=" + ctx.translator.fingerprint();

    std::vector<std::string> aliases = doc->aliases;
    if (en_doc != nullptr && en_doc != doc) {
        aliases.push_back(en_doc->title);
        aliases.insert(aliases.end(), en_doc->aliases.begin(), en_doc->aliases.end());
    }

    for (unsigned attempt = 1; attempt <= kMaxAnonymityAttempts; ++attempt) {
        GenerationRequest req;
        req.role = PromptRole::Generate;
        req.prompt = prompt;
        req.temperature = ctx.settings.query_temperature;
        req.payload = record.summary;
        req.sample_index = attempt - 1;
        std::string out;
        try {
            out = text::trim(complete_with_retries(ctx.provider, req, ctx.settings.retry));
        } catch (const GenerationError& e) {
            throw GenerationError("generating query for " + candidate.doc_id + ": " + e.what());
        }
        if (out.empty()) throw GenerationError("empty query generated for " + candidate.doc_id);
        if (translate) out = text::trim(translate_text(out, language, ctx.translator, ctx.settings.retry));

        record.attempts = attempt;
        if (anonymity_check(out, doc->title, aliases)) {
            record.text = std::move(out);
            return record;
        }
        spdlog::debug("[generate] {} attempt {} mentions the entity name", record.query_id, attempt);
    }
    spdlog::info("[generate] discarding {} after {} leaking attempts", record.query_id,
                 kMaxAnonymityAttempts);
    record.discarded = true;
    return record;
}

std::vector<QueryRecord> generate_queries(const std::vector<GenerationJob>& jobs,
                                          const GenerationContext& ctx, unsigned concurrency) {
    std::vector<QueryRecord> results(jobs.size());
    std::vector<std::exception_ptr> errors(jobs.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            try {
                results[i] = generate_query(jobs[i].candidate, jobs[i].variation, ctx);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const unsigned n = std::max(1U, std::min<unsigned>(concurrency, static_cast<unsigned>(jobs.size())));
    {
        std::vector<std::jthread> pool;
        for (unsigned t = 1; t < n; ++t) pool.emplace_back(work);
        work();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return results;
}

void write_query_manifest(std::ostream& out, const std::vector<QueryRecord>& records) {
    for (const auto& r : records) {
        const json j{{"query_id", r.query_id},
                     {"doc_id", r.doc_id},
                     {"language", r.language},
                     {"variation", to_string(r.variation)},
                     {"attempts", r.attempts},
                     {"text", r.text},
                     {"summary", r.summary},
                     {"provider_fingerprint", r.provider_fingerprint},
                     {"discarded", r.discarded},
                     {"partition", to_string(r.partition)},
                     {"domain", to_string(r.domain)}};
        out << j.dump() << '\n';
    }
}

std::vector<QueryRecord> read_query_manifest(std::istream& in) {
    std::vector<QueryRecord> records;
    std::string line;
    for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
        if (text::trim(line).empty()) continue;
        try {
            const json j = json::parse(line);
            QueryRecord r;
            r.query_id = j.at("query_id").get<std::string>();
            r.doc_id = j.at("doc_id").get<std::string>();
            r.language = j.at("language").get<std::string>();
            r.variation = parse_variation(j.at("variation").get<std::string>());
            r.attempts = j.at("attempts").get<unsigned>();
            r.text = j.at("text").get<std::string>();
            r.summary = j.at("summary").get<std::string>();
            r.provider_fingerprint = j.at("provider_fingerprint").get<std::string>();
            r.discarded = j.at("discarded").get<bool>();
            r.partition = parse_partition(j.value("partition", std::string("Full")));
            r.domain = parse_domain(j.value("domain", std::string("General")));
            if (r.attempts < 1 || r.attempts > kMaxAnonymityAttempts) {
                throw ParseError("attempts out of range", line_no);
            }
            records.push_back(std::move(r));
        } catch (const json::exception& e) {
            throw ParseError(std::string("bad query manifest record: ") + e.what(), line_no);
        } catch (const ParseError&) {
            throw;
        } catch (const Error& e) {
            throw ParseError(e.what(), line_no);
        }
    }
    return records;
}

}  // namespace totsim
