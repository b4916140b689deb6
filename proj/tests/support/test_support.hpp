#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "totsim/corpus.hpp"
#include "totsim/evaluation.hpp"
#include "totsim/text.hpp"

namespace testing_support {

inline totsim::Document make_doc(std::string id, std::string title, std::string body,
                                 std::string language = "en", std::uint64_t views = 0,
                                 std::optional<std::string> en_link = std::nullopt,
                                 std::vector<std::string> instance_of = {},
                                 std::vector<std::string> aliases = {}) {
    totsim::Document d;
    d.doc_id = std::move(id);
    d.title = std::move(title);
    d.body = std::move(body);
    d.language = std::move(language);
    d.page_views = views;
    d.en_link = std::move(en_link);
    d.instance_of = std::move(instance_of);
    d.aliases = std::move(aliases);
    d.length_chars = totsim::text::codepoint_count(d.body);
    return d;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
        path_ = std::filesystem::temp_directory_path() /
                ("totsim-test-" + std::to_string(stamp) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const std::filesystem::path& path() const { return path_; }
    [[nodiscard]] std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& s) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << s;
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// One printed row of the published correlation tables.
struct TableRow {
    std::string language;
    int row = 0;
    totsim::Partition partition = totsim::Partition::Full;
    totsim::VariationId variation = totsim::VariationId::V1;
    std::array<totsim::MetricCorrelation, 3> per_metric{};
    std::string printed_mean_tau;
    std::string printed_mean_r;
};

inline std::vector<TableRow> load_table_rows() {
    std::ifstream in(std::string(TOTSIM_FIXTURE_DIR) + "/correlation_tables.tsv");
    std::vector<TableRow> rows;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream f(line);
        TableRow r;
        std::string partition, variation;
        f >> r.language >> r.row >> partition >> variation;
        r.partition = totsim::parse_partition(partition);
        r.variation = totsim::parse_variation(variation);
        for (auto& m : r.per_metric) f >> m.tau >> m.pearson;
        f >> r.printed_mean_tau >> r.printed_mean_r;
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace testing_support
