#include "totsim/index.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <future>
#include <istream>
#include <map>
#include <ostream>

#include "totsim/error.hpp"

namespace totsim {

namespace {

constexpr std::array<char, 8> kMagic = {'T', 'O', 'T', 'S', 'I', 'M', 'I', 'X'};

void put_u32(std::ostream& out, std::uint32_t v) {
    std::array<char, 4> b{};
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(b.data(), b.size());
}

void put_u64(std::ostream& out, std::uint64_t v) {
    std::array<char, 8> b{};
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(b.data(), b.size());
}

void put_str(std::ostream& out, std::string_view s) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    std::uint64_t u(int bytes) {
        std::array<unsigned char, 8> b{};
        in_.read(reinterpret_cast<char*>(b.data()), bytes);
        if (in_.gcount() != bytes) throw Error("index file truncated");
        std::uint64_t v = 0;
        for (int i = bytes - 1; i >= 0; --i) v = (v << 8) | b[i];
        return v;
    }
    std::uint32_t u32() { return static_cast<std::uint32_t>(u(4)); }
    std::uint64_t u64() { return u(8); }
    std::string str() {
        const std::uint32_t n = u32();
        std::string s(n, '\0');
        in_.read(s.data(), n);
        if (static_cast<std::uint32_t>(in_.gcount()) != n) throw Error("index file truncated");
        return s;
    }

private:
    std::istream& in_;
};

using TermCounts = std::map<std::string, std::uint32_t>;

}  // namespace

InvertedIndex InvertedIndex::build(const Corpus& corpus, const Tokenizer& tokenizer,
                                   unsigned workers) {
    const auto docs = corpus.documents();
    std::vector<TermCounts> counts(docs.size());
    std::vector<std::uint32_t> lengths(docs.size());

    auto tokenize_range = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const auto tokens = tokenizer.tokenize(docs[i].body);
            lengths[i] = static_cast<std::uint32_t>(tokens.size());
            for (const auto& t : tokens) ++counts[i][t];
        }
    };
    workers = std::max(1U, workers);
    if (workers == 1 || docs.size() < 2 * workers) {
        tokenize_range(0, docs.size());
    } else {
        const std::size_t chunk = (docs.size() + workers - 1) / workers;
        std::vector<std::future<void>> jobs;
        for (std::size_t b = 0; b < docs.size(); b += chunk) {
            jobs.push_back(std::async(std::launch::async, tokenize_range, b,
                                      std::min(docs.size(), b + chunk)));
        }
        for (auto& j : jobs) j.get();
    }

    std::map<std::string, std::vector<Posting>> merged;
    InvertedIndex index;
    index.tokenizer_ = tokenizer;
    index.language_ = corpus.language();
    index.doc_ids_.reserve(docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i) {
        index.doc_ids_.push_back(docs[i].doc_id);
        index.collection_length_ += lengths[i];
        for (const auto& [term, tf] : counts[i]) {
            merged[term].push_back(Posting{static_cast<std::uint32_t>(i), tf});
        }
    }
    index.doc_lengths_ = std::move(lengths);
    index.terms_.reserve(merged.size());
    for (auto& [term, plist] : merged) {
        std::uint64_t total = 0;
        for (const auto& p : plist) total += p.tf;
        index.terms_.push_back(term);
        index.ctf_.push_back(total);
        index.postings_.push_back(std::move(plist));
    }
    return index;
}

void InvertedIndex::write(std::ostream& out) const {
    out.write(kMagic.data(), kMagic.size());
    put_u32(out, kFormatVersion);
    put_str(out, language_);
    put_str(out, tokenizer_.descriptor());
    put_u64(out, doc_ids_.size());
    for (std::size_t i = 0; i < doc_ids_.size(); ++i) {
        put_str(out, doc_ids_[i]);
        put_u32(out, doc_lengths_[i]);
    }
    put_u64(out, collection_length_);
    put_u64(out, terms_.size());
    for (std::size_t t = 0; t < terms_.size(); ++t) {
        put_str(out, terms_[t]);
        put_u64(out, ctf_[t]);
        put_u32(out, static_cast<std::uint32_t>(postings_[t].size()));
        for (const auto& p : postings_[t]) {
            put_u32(out, p.doc);
            put_u32(out, p.tf);
        }
    }
    if (!out) throw Error("failed writing index");
}

InvertedIndex InvertedIndex::read(std::istream& in) {
    std::array<char, 8> magic{};
    in.read(magic.data(), magic.size());
    if (in.gcount() != static_cast<std::streamsize>(magic.size()) || magic != kMagic) {
        throw Error("not a totsim index file");
    }
    Reader r(in);
    const std::uint32_t version = r.u32();
    if (version != kFormatVersion) {
        throw Error("unsupported index format version " + std::to_string(version));
    }
    InvertedIndex index;
    index.language_ = r.str();
    index.tokenizer_ = Tokenizer::from_descriptor(r.str());
    const std::uint64_t ndocs = r.u64();
    for (std::uint64_t i = 0; i < ndocs; ++i) {
        index.doc_ids_.push_back(r.str());
        index.doc_lengths_.push_back(r.u32());
    }
    index.collection_length_ = r.u64();
    const std::uint64_t nterms = r.u64();
    for (std::uint64_t t = 0; t < nterms; ++t) {
        index.terms_.push_back(r.str());
        index.ctf_.push_back(r.u64());
        const std::uint32_t n = r.u32();
        std::vector<Posting> plist;
        plist.reserve(n);
        for (std::uint32_t k = 0; k < n; ++k) {
            const std::uint32_t doc = r.u32();
            const std::uint32_t tf = r.u32();
            if (doc >= ndocs) throw Error("index posting references unknown document");
            plist.push_back(Posting{doc, tf});
        }
        index.postings_.push_back(std::move(plist));
    }
    if (!std::is_sorted(index.terms_.begin(), index.terms_.end())) {
        throw Error("index vocabulary is not sorted");
    }
    return index;
}

void InvertedIndex::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write index " + path.string());
    write(out);
}

InvertedIndex InvertedIndex::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open index " + path.string());
    return read(in);
}

double InvertedIndex::average_doc_length() const noexcept {
    if (doc_ids_.empty()) return 0.0;
    return static_cast<double>(collection_length_) / static_cast<double>(doc_ids_.size());
}

std::int64_t InvertedIndex::term_number(std::string_view term) const {
    const auto it = std::lower_bound(terms_.begin(), terms_.end(), term);
    if (it == terms_.end() || *it != term) return -1;
    return it - terms_.begin();
}

std::int64_t InvertedIndex::doc_number(std::string_view doc_id) const {
    // doc_ids_ is in corpus order, which is ascending doc_id.
    const auto it = std::lower_bound(doc_ids_.begin(), doc_ids_.end(), doc_id);
    if (it == doc_ids_.end() || *it != doc_id) return -1;
    return it - doc_ids_.begin();
}

std::span<const InvertedIndex::Posting> InvertedIndex::postings(std::string_view term) const {
    const auto t = term_number(term);
    if (t < 0) return {};
    return postings_[static_cast<std::size_t>(t)];
}

std::uint32_t InvertedIndex::df(std::string_view term) const {
    return static_cast<std::uint32_t>(postings(term).size());
}

std::uint64_t InvertedIndex::ctf(std::string_view term) const {
    const auto t = term_number(term);
    return t < 0 ? 0 : ctf_[static_cast<std::size_t>(t)];
}

std::uint32_t InvertedIndex::tf_in(std::span<const Posting> plist, std::uint32_t doc) {
    const auto it = std::lower_bound(plist.begin(), plist.end(), doc,
                                     [](const Posting& p, std::uint32_t d) { return p.doc < d; });
    return (it != plist.end() && it->doc == doc) ? it->tf : 0;
}

std::uint32_t InvertedIndex::tf(std::string_view term, std::string_view doc_id) const {
    const auto doc = doc_number(doc_id);
    if (doc < 0) return 0;
    return tf_in(postings(term), static_cast<std::uint32_t>(doc));
}

}  // namespace totsim
