#pragma once

#include <cstddef>
#include <future>
#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "totsim/corpus.hpp"
#include "totsim/providers.hpp"
#include "totsim/sampling.hpp"
#include "totsim/templates.hpp"
#include "totsim/variation.hpp"

namespace totsim {

inline constexpr unsigned kMaxAnonymityAttempts = 3;

struct GenerationSettings {
    std::size_t char_budget = 30000;  ///< code points of page body sent for summarization
    double summary_temperature = 0.5;
    double query_temperature = 0.3;
    RetryPolicy retry;
};

/// Title, blank line, then the first `char_budget` code points of the body.
[[nodiscard]] std::string summary_content(const Document& doc, std::size_t char_budget);

/// Two-paragraph summary of a page, using the summarize template of the page's language.
/// Throws GenerationError (mentioning the doc_id) on empty output or exhausted retries.
[[nodiscard]] std::string summarize_entity(const Document& doc, GenerationProvider& provider,
                                           const TemplateSet& templates,
                                           const GenerationSettings& settings);

/// Insert the summary matching the variation's source language into the generation template.
[[nodiscard]] std::string build_generation_prompt(const PromptVariation& variation,
                                                  const EntityCandidate& candidate,
                                                  std::string_view target_language,
                                                  const std::optional<std::string>& summary_target,
                                                  const std::optional<std::string>& summary_english,
                                                  const TemplateSet& templates);

/// False when the query mentions the title or an alias after NFKC_Casefold and removal
/// of white space.
[[nodiscard]] bool anonymity_check(std::string_view query, std::string_view title,
                                   const std::vector<std::string>& aliases);

/// Translate non-empty text, retrying transport failures per `retry`.
[[nodiscard]] std::string translate_text(std::string_view text, std::string_view target_language,
                                         TranslationProvider& translator,
                                         const RetryPolicy& retry = {});

/// "<language>-<partition initial>-<doc_id>".
[[nodiscard]] std::string make_query_id(std::string_view language, Partition partition,
                                        std::string_view doc_id);

/// One generated query, or a discard record when every attempt leaked the entity name.
struct QueryRecord {
    std::string query_id;
    std::string doc_id;
    std::string language;
    VariationId variation = VariationId::V1;
    unsigned attempts = 0;
    std::string text;  ///< empty for discard records
    std::string summary;
    std::string provider_fingerprint;
    bool discarded = false;
    Partition partition = Partition::Full;
    DomainLabel domain = DomainLabel::General;
};

/// Summaries keyed by (language, doc_id), computed at most once even when several
/// workers ask for the same page.
class SummaryCache {
public:
    template <class F>
    std::string get_or_compute(const std::string& language, const std::string& doc_id, F&& compute) {
        std::shared_future<std::string> fut;
        std::promise<std::string> promise;
        bool owner = false;
        {
            std::lock_guard lock(mu_);
            auto key = std::make_pair(language, doc_id);
            auto it = entries_.find(key);
            if (it == entries_.end()) {
                fut = promise.get_future().share();
                entries_.emplace(std::move(key), fut);
                owner = true;
            } else {
                fut = it->second;
            }
        }
        if (owner) {
            try {
                promise.set_value(compute());
            } catch (...) {
                promise.set_exception(std::current_exception());
            }
        }
        return fut.get();
    }

private:
    std::mutex mu_;
    std::map<std::pair<std::string, std::string>, std::shared_future<std::string>> entries_;
};

struct GenerationContext {
    const Corpus& target;
    const Corpus* english = nullptr;  ///< needed for V3/V4 on non-English targets
    GenerationProvider& provider;
    TranslationProvider& translator;
    const TemplateSet& templates;
    GenerationSettings settings;
    SummaryCache* cache = nullptr;
};

/// Summarize, prompt, generate (and translate for V4), then enforce anonymity with up to
/// kMaxAnonymityAttempts identical requests. Provider and translator failures throw
/// GenerationError; persistent name leaks produce a discard record.
[[nodiscard]] QueryRecord generate_query(const EntityCandidate& candidate, VariationId variation,
                                         const GenerationContext& ctx);

struct GenerationJob {
    EntityCandidate candidate;
    VariationId variation = VariationId::V1;
};

/// Runs jobs on up to `concurrency` threads; results are in job order. When jobs fail,
/// the error of the earliest failing job is rethrown.
[[nodiscard]] std::vector<QueryRecord> generate_queries(const std::vector<GenerationJob>& jobs,
                                                        const GenerationContext& ctx,
                                                        unsigned concurrency);

/// JSON lines with query_id, doc_id, language, variation, attempts, text, summary,
/// provider_fingerprint, discarded, partition, domain.
void write_query_manifest(std::ostream& out, const std::vector<QueryRecord>& records);
[[nodiscard]] std::vector<QueryRecord> read_query_manifest(std::istream& in);

}  // namespace totsim
