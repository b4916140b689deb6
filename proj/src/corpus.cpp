#include "totsim/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "totsim/error.hpp"
#include "totsim/text.hpp"

namespace totsim {

using nlohmann::json;

std::string_view to_string(Partition p) {
    switch (p) {
        case Partition::Monolingual: return "Monolingual";
        case Partition::Bilingual: return "Bilingual";
        case Partition::Full: return "Full";
    }
    return "?";
}

std::string_view to_string(DomainLabel d) {
    switch (d) {
        case DomainLabel::Movies: return "Movies";
        case DomainLabel::People: return "People";
        case DomainLabel::General: return "General";
    }
    return "?";
}

char initial(Partition p) { return to_string(p).front(); }

Partition parse_partition(std::string_view s) {
    if (s == "Monolingual") return Partition::Monolingual;
    if (s == "Bilingual") return Partition::Bilingual;
    if (s == "Full") return Partition::Full;
    throw Error("unknown partition '" + std::string(s) + "'");
}

DomainLabel parse_domain(std::string_view s) {
    if (s == "Movies") return DomainLabel::Movies;
    if (s == "People") return DomainLabel::People;
    if (s == "General") return DomainLabel::General;
    throw Error("unknown domain label '" + std::string(s) + "'");
}

namespace {

std::string required_string(const json& obj, const char* key, std::size_t line_no) {
    const auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(std::string("missing required key '") + key + "'", line_no);
    if (!it->is_string()) throw ParseError(std::string("key '") + key + "' must be a string", line_no);
    auto value = it->get<std::string>();
    if (!text::is_valid_utf8(value)) {
        throw ParseError(std::string("key '") + key + "' is not valid UTF-8", line_no);
    }
    return value;
}

std::vector<std::string> optional_strings(const json& obj, const char* key, std::size_t line_no) {
    std::vector<std::string> out;
    const auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return out;
    if (!it->is_array()) throw ParseError(std::string("key '") + key + "' must be an array", line_no);
    for (const auto& v : *it) {
        if (!v.is_string()) {
            throw ParseError(std::string("key '") + key + "' must hold strings", line_no);
        }
        out.push_back(v.get<std::string>());
    }
    return out;
}

}  // namespace

Document parse_document_line(std::string_view line, std::string_view language,
                             std::size_t line_no) {
    json obj;
    try {
        obj = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
    }
    if (!obj.is_object()) throw ParseError("record is not a JSON object", line_no);

    Document doc;
    doc.doc_id = required_string(obj, "id", line_no);
    if (doc.doc_id.empty()) throw ParseError("empty id", line_no);
    doc.title = required_string(obj, "title", line_no);
    doc.body = required_string(obj, "text", line_no);
    doc.language = std::string(language);
    doc.length_chars = text::codepoint_count(doc.body);

    if (const auto it = obj.find("views"); it != obj.end() && !it->is_null()) {
        if (!it->is_number_integer()) throw ParseError("key 'views' must be an integer", line_no);
        if (it->is_number_unsigned()) {
            doc.page_views = it->get<std::uint64_t>();
        } else {
            const auto v = it->get<std::int64_t>();
            if (v < 0) throw ParseError("key 'views' must be non-negative", line_no);
            doc.page_views = static_cast<std::uint64_t>(v);
        }
    }
    doc.aliases = optional_strings(obj, "aliases", line_no);
    doc.instance_of = optional_strings(obj, "instance_of", line_no);
    if (const auto it = obj.find("en_id"); it != obj.end() && !it->is_null()) {
        if (!it->is_string()) throw ParseError("key 'en_id' must be a string", line_no);
        doc.en_link = it->get<std::string>();
    }
    return doc;
}

Corpus Corpus::from_documents(std::string language, std::vector<Document> docs) {
    // Stable sort keeps file order among equal ids, so the reported duplicate is
    // always the one introduced later in the input.
    std::stable_sort(docs.begin(), docs.end(),
                     [](const Document& a, const Document& b) { return a.doc_id < b.doc_id; });
    for (std::size_t i = 1; i < docs.size(); ++i) {
        if (docs[i].doc_id == docs[i - 1].doc_id) {
            throw IngestError("duplicate doc_id '" + docs[i].doc_id + "'");
        }
    }
    Corpus c;
    c.language_ = std::move(language);
    c.docs_ = std::move(docs);
    return c;
}

Corpus Corpus::parse(std::istream& in, std::string language, unsigned workers) {
    std::vector<std::pair<std::size_t, std::string>> lines;
    std::string line;
    for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
        if (text::trim(line).empty()) continue;
        lines.emplace_back(line_no, std::move(line));
    }

    std::vector<Document> docs(lines.size());
    auto parse_range = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            docs[i] = parse_document_line(lines[i].second, language, lines[i].first);
        }
    };
    workers = std::max(1U, workers);
    if (workers == 1 || lines.size() < 2 * workers) {
        parse_range(0, lines.size());
    } else {
        // Each chunk reports its own first failure; the earliest chunk's error wins,
        // matching what a sequential pass would raise.
        const std::size_t chunk = (lines.size() + workers - 1) / workers;
        std::vector<std::future<void>> jobs;
        for (std::size_t b = 0; b < lines.size(); b += chunk) {
            jobs.push_back(std::async(std::launch::async, parse_range, b,
                                      std::min(lines.size(), b + chunk)));
        }
        for (auto& job : jobs) job.get();
    }

    // Duplicate detection must name the id of the first repeated line in file order.
    std::map<std::string_view, std::size_t> seen;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (!seen.emplace(docs[i].doc_id, lines[i].first).second) {
            throw IngestError("duplicate doc_id '" + docs[i].doc_id + "' at line " +
                              std::to_string(lines[i].first));
        }
    }
    return from_documents(std::move(language), std::move(docs));
}

Corpus Corpus::load(const std::filesystem::path& path, std::string language, unsigned workers) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open corpus file " + path.string());
    return parse(in, std::move(language), workers);
}

const Document* Corpus::find(std::string_view doc_id) const {
    const auto it = std::lower_bound(
        docs_.begin(), docs_.end(), doc_id,
        [](const Document& d, std::string_view id) { return d.doc_id < id; });
    if (it == docs_.end() || it->doc_id != doc_id) return nullptr;
    return &*it;
}

const Document& Corpus::at(std::string_view doc_id) const {
    const Document* d = find(doc_id);
    if (d == nullptr) throw std::out_of_range("no document '" + std::string(doc_id) + "'");
    return *d;
}

std::size_t PartitionResult::count(Partition p) const {
    return static_cast<std::size_t>(std::count_if(assignment.begin(), assignment.end(),
                                                  [p](const auto& kv) { return kv.second == p; }));
}

Partition PartitionResult::of(std::string_view doc_id) const {
    const auto it = assignment.find(std::string(doc_id));
    if (it == assignment.end()) throw std::out_of_range("unpartitioned document '" + std::string(doc_id) + "'");
    return it->second;
}

PartitionResult partition_corpus(const Corpus& corpus, const Corpus& english) {
    if (corpus.language() == "en") {
        throw Error("partition_corpus: corpus must not be English (use full_partition)");
    }
    if (english.language() != "en") {
        throw Error("partition_corpus: reference corpus must be English, got '" +
                    english.language() + "'");
    }
    PartitionResult result;
    for (const Document& doc : corpus.documents()) {
        Partition p = Partition::Monolingual;
        if (doc.en_link) {
            if (english.find(*doc.en_link) != nullptr) {
                p = Partition::Bilingual;
            } else {
                result.demoted.push_back(doc.doc_id);
                spdlog::warn("[partition] {}:{} links to missing English page '{}'; treated as "
                             "Monolingual",
                             corpus.language(), doc.doc_id, *doc.en_link);
            }
        }
        result.assignment.emplace(doc.doc_id, p);
    }
    return result;
}

PartitionResult full_partition(const Corpus& corpus) {
    PartitionResult result;
    for (const Document& doc : corpus.documents()) result.assignment.emplace(doc.doc_id, Partition::Full);
    return result;
}

DocumentPool all_documents(const Corpus& corpus) {
    DocumentPool pool;
    pool.reserve(corpus.size());
    for (const Document& d : corpus.documents()) pool.push_back(&d);
    return pool;
}

void sort_by_popularity(DocumentPool& pool) {
    std::sort(pool.begin(), pool.end(), [](const Document* a, const Document* b) {
        if (a->page_views != b->page_views) return a->page_views > b->page_views;
        return a->doc_id < b->doc_id;
    });
}

DocumentPool filter_by_popularity(const DocumentPool& pool, double top_fraction) {
    if (pool.empty()) throw Error("filter_by_popularity: empty pool");
    if (!(top_fraction > 0.0 && top_fraction <= 1.0)) {
        throw Error("filter_by_popularity: top_fraction must lie in (0, 1]");
    }
    // The epsilon keeps products like 0.7 * 10 = 7.000000000000001 from rounding up.
    const double exact = top_fraction * static_cast<double>(pool.size());
    auto keep = static_cast<std::size_t>(std::ceil(exact - 1e-9));
    keep = std::clamp<std::size_t>(keep, 1, pool.size());

    DocumentPool ranked = pool;
    sort_by_popularity(ranked);
    ranked.resize(keep);
    return ranked;
}

DocumentPool filter_by_length(const DocumentPool& pool, std::size_t min_chars) {
    DocumentPool out;
    std::copy_if(pool.begin(), pool.end(), std::back_inserter(out),
                 [min_chars](const Document* d) { return d->length_chars >= min_chars; });
    return out;
}

DomainMap DomainMap::parse(std::istream& in) {
    std::map<std::string, DomainLabel> table;
    std::string line;
    for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
        const std::string trimmed = text::trim(line);
        if (trimmed.empty() || trimmed.front() == '#') continue;
        const auto tab = trimmed.find('\t');
        if (tab == std::string::npos) throw ParseError("expected class_id<TAB>label", line_no);
        const std::string class_id = text::trim(trimmed.substr(0, tab));
        const std::string label = text::trim(trimmed.substr(tab + 1));
        try {
            table[class_id] = parse_domain(label);
        } catch (const Error& e) {
            throw ParseError(e.what(), line_no);
        }
    }
    return DomainMap(std::move(table));
}

DomainMap DomainMap::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open domain map " + path.string());
    return parse(in);
}

DomainMap DomainMap::builtin() {
    return DomainMap({{"Q5", DomainLabel::People},
                      {"Q11424", DomainLabel::Movies},
                      {"Q202866", DomainLabel::Movies},
                      {"Q506240", DomainLabel::Movies}});
}

std::optional<DomainLabel> DomainMap::lookup(std::string_view class_id) const {
    const auto it = table_.find(std::string(class_id));
    if (it == table_.end()) return std::nullopt;
    return it->second;
}

DomainLabel assign_domain(const Document& doc, const DomainMap& mapping) {
    for (const auto& cls : doc.instance_of) {
        if (auto label = mapping.lookup(cls)) return *label;
    }
    return DomainLabel::General;
}

}  // namespace totsim
