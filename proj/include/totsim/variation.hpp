#pragma once

#include <array>
#include <string_view>

namespace totsim {

enum class SourceLanguage { Target, English };

/// The four prompt/source-language configurations for producing a target-language query.
struct PromptVariation {
    enum class Id { V1 = 1, V2, V3, V4 };

    Id id;
    SourceLanguage prompt_language;
    SourceLanguage wiki_language;
    bool post_translate;

    [[nodiscard]] static PromptVariation of(Id id);
    [[nodiscard]] bool needs_english_page() const noexcept {
        return wiki_language == SourceLanguage::English;
    }
};

using VariationId = PromptVariation::Id;

inline constexpr std::array<VariationId, 4> kAllVariations = {VariationId::V1, VariationId::V2,
                                                              VariationId::V3, VariationId::V4};

[[nodiscard]] std::string_view to_string(VariationId v);
/// "V1".."V4"; throws Error otherwise.
[[nodiscard]] VariationId parse_variation(std::string_view s);

}  // namespace totsim
