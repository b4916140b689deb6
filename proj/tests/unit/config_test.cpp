#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "support/test_support.hpp"
#include "totsim/config.hpp"
#include "totsim/error.hpp"

using namespace totsim;
using testing_support::slurp;
using testing_support::TempDir;
using testing_support::write_text;

namespace {

std::filesystem::path toy_config() { return std::filesystem::path(TOTSIM_DATA_DIR) / "toy" / "config.json"; }

std::string missing_key_message(nlohmann::json j) {
    try {
        (void)PipelineConfig::from_json(j, "/tmp");
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST(Config, LoadsToyConfig) {
    const auto cfg = PipelineConfig::load(toy_config());
    EXPECT_EQ(cfg.seed, 7u);
    ASSERT_EQ(cfg.languages.size(), 1u);
    EXPECT_EQ(cfg.languages[0].language, "zh");
    EXPECT_EQ(cfg.lexical.size(), 7u);  // default grid when the key is absent
    EXPECT_EQ(cfg.external.size(), 2u);
    EXPECT_EQ(cfg.systems().size(), 9u);
    EXPECT_EQ(cfg.sampling.seed, 7u);
    EXPECT_TRUE(std::filesystem::exists(cfg.resolve(cfg.languages[0].corpus)));
    EXPECT_NO_THROW(cfg.validate());
}

TEST(Config, SerializationRoundTrip) {
    const auto cfg = PipelineConfig::load(toy_config());
    const auto j = cfg.to_json();
    const auto back = PipelineConfig::from_json(j, cfg.base_dir);
    EXPECT_EQ(back.to_json(), j);
    EXPECT_EQ(back.hash(), cfg.hash());
}

TEST(Config, HashTracksContentButNotOutputDir) {
    auto cfg = PipelineConfig::load(toy_config());
    const auto h = cfg.hash();
    EXPECT_EQ(h.size(), 64u);
    cfg.output_dir = "/elsewhere";
    EXPECT_EQ(cfg.hash(), h);
    cfg.seed = 8;
    EXPECT_NE(cfg.hash(), h);
}

TEST(Config, MissingKeysAreNamed) {
    const auto full = nlohmann::json::parse(slurp(toy_config()));
    auto j = full;
    j["english"].erase("corpus");
    EXPECT_NE(missing_key_message(j).find("english.corpus"), std::string::npos);
    j = full;
    j["languages"][0].erase("real_qrels");
    EXPECT_NE(missing_key_message(j).find("real_qrels"), std::string::npos);
    j = full;
    j["generation"].erase("templates");
    EXPECT_NE(missing_key_message(j).find("generation.templates"), std::string::npos);
}

TEST(Config, RejectsBadValues) {
    auto j = nlohmann::json::parse(slurp(toy_config()));
    j["generation"]["provider"]["kind"] = "oracle-of-delphi";
    EXPECT_THROW(PipelineConfig::from_json(j, toy_config().parent_path()).validate(), ConfigError);
    EXPECT_THROW((void)PipelineConfig::load("/nonexistent/config.json"), ConfigError);
    TempDir dir;
    write_text(dir / "bad.json", "{ not json");
    EXPECT_THROW((void)PipelineConfig::load(dir / "bad.json"), ConfigError);
}
