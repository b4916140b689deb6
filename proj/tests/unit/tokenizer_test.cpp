#include <gtest/gtest.h>

#include "totsim/error.hpp"
#include "totsim/tokenizer.hpp"

using namespace totsim;
using Tokens = std::vector<std::string>;

TEST(Tokenizer, WhitespaceModeFoldsCaseAndSplitsOnPunctuation) {
    const auto t = Tokenizer::whitespace();
    EXPECT_EQ(t.tokenize("The Dream-Heist, (2010) FILM!"), (Tokens{"the", "dream", "heist", "2010", "film"}));
    EXPECT_TRUE(t.tokenize("  ... ").empty());
}

TEST(Tokenizer, BigramsOverHanRuns) {
    const auto t = Tokenizer::char_ngram(2);
    EXPECT_EQ(t.tokenize("千与千寻"), (Tokens{"千与", "与千", "千寻"}));
}

TEST(Tokenizer, ShortCjkRunKeptWhole) {
    const auto t = Tokenizer::char_ngram(2);
    EXPECT_EQ(t.tokenize("猫。犬"), (Tokens{"猫", "犬"}));
}

TEST(Tokenizer, IdeographicPunctuationSeparatesRuns) {
    const auto t = Tokenizer::char_ngram(2);
    EXPECT_EQ(t.tokenize("电影，导演"), (Tokens{"电影", "导演"}));
}

TEST(Tokenizer, MixedScriptKeepsLatinWords) {
    const auto t = Tokenizer::char_ngram(2);
    EXPECT_EQ(t.tokenize("映画Matrix三部作"), (Tokens{"映画", "matrix", "三部", "部作"}));
}

TEST(Tokenizer, HangulAndKana) {
    const auto t = Tokenizer::char_ngram(2);
    EXPECT_EQ(t.tokenize("영화 제목"), (Tokens{"영화", "제목"}));
    EXPECT_EQ(t.tokenize("カタカナ"), (Tokens{"カタ", "タカ", "カナ"}));
}

TEST(Tokenizer, FullWidthNormalizedBeforeSplitting) {
    const auto t = Tokenizer::whitespace();
    EXPECT_EQ(t.tokenize("ＦＩＬＭ１"), (Tokens{"film1"}));
}

TEST(Tokenizer, Descriptors) {
    EXPECT_EQ(Tokenizer::from_descriptor("whitespace"), Tokenizer::whitespace());
    EXPECT_EQ(Tokenizer::from_descriptor("cjk-bigram"), Tokenizer::char_ngram(2));
    EXPECT_EQ(Tokenizer::from_descriptor("cjk-ngram:3"), Tokenizer::char_ngram(3));
    EXPECT_EQ(Tokenizer::from_descriptor(Tokenizer::char_ngram(3).descriptor()), Tokenizer::char_ngram(3));
    EXPECT_THROW((void)Tokenizer::from_descriptor("morfologik"), ConfigError);
    EXPECT_EQ(Tokenizer::for_language("ja"), Tokenizer::char_ngram(2));
    EXPECT_EQ(Tokenizer::for_language("en"), Tokenizer::whitespace());
}
