#include <gtest/gtest.h>

#include "totsim/hash.hpp"
#include "totsim/rng.hpp"
#include "totsim/text.hpp"

using namespace totsim;

TEST(Text, Utf8Validation) {
    EXPECT_TRUE(text::is_valid_utf8("plain"));
    EXPECT_TRUE(text::is_valid_utf8("漢字とかな"));
    EXPECT_FALSE(text::is_valid_utf8("\xC3\x28"));
    EXPECT_FALSE(text::is_valid_utf8("\xED\xA0\x80"));  // encoded surrogate
}

TEST(Text, CodepointCountAndPrefix) {
    EXPECT_EQ(text::codepoint_count("abc"), 3u);
    EXPECT_EQ(text::codepoint_count("한국어"), 3u);
    EXPECT_EQ(text::codepoint_prefix("한국어 문서", 2), "한국");
    EXPECT_EQ(text::codepoint_prefix("ab", 10), "ab");
}

TEST(Text, NfkcCasefold) {
    EXPECT_EQ(text::nfkc_casefold("ＡＢＣ"), "abc");  // full-width letters
    EXPECT_EQ(text::nfkc_casefold("Straße"), "strasse");
    EXPECT_EQ(text::nfkc_casefold("ｶﾀｶﾅ"), "カタカナ");
}

TEST(Text, MatchKeyDropsWhitespace) {
    EXPECT_EQ(text::match_key(" In ce\tption\n"), "inception");
    EXPECT_EQ(text::match_key("千と　千尋"), "千と千尋");  // ideographic space
}

TEST(Text, SingleLineAndTrim) {
    EXPECT_EQ(text::single_line("a\tb\r\nc"), "a b  c");
    EXPECT_EQ(text::trim("  x y \n"), "x y");
    EXPECT_EQ(text::trim("   "), "");
}

TEST(Hash, Sha256KnownVector) {
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Rng, BoundedDrawsStayInRangeAndAreSeeded) {
    Rng a(42), b(42), c(43);
    bool differs = false;
    for (int i = 0; i < 1000; ++i) {
        const auto x = a.uniform_below(7);
        EXPECT_LT(x, 7u);
        EXPECT_EQ(x, b.uniform_below(7));
        differs |= (x != c.uniform_below(7));
    }
    EXPECT_TRUE(differs);
}

TEST(Rng, DerivedStreamsDependOnLabel) {
    auto a = Rng::derive(1, "sample/x");
    auto b = Rng::derive(1, "sample/y");
    auto a2 = Rng::derive(1, "sample/x");
    const auto first = a.next();
    EXPECT_EQ(first, a2.next());
    EXPECT_NE(first, b.next());
}

TEST(Rng, UniformBelowIsRoughlyUniform) {
    Rng r(9);
    std::array<int, 5> counts{};
    for (int i = 0; i < 50000; ++i) ++counts[r.uniform_below(5)];
    for (const int c : counts) EXPECT_NEAR(c, 10000, 400);
}
