#include "totsim/variation.hpp"

#include <string>

#include "totsim/error.hpp"

namespace totsim {

PromptVariation PromptVariation::of(Id id) {
    using enum SourceLanguage;
    switch (id) {
        case Id::V1: return {id, Target, Target, false};
        case Id::V2: return {id, English, Target, false};
        case Id::V3: return {id, Target, English, false};
        case Id::V4: return {id, English, English, true};
    }
    throw Error("invalid variation id");
}

std::string_view to_string(VariationId v) {
    switch (v) {
        case VariationId::V1: return "V1";
        case VariationId::V2: return "V2";
        case VariationId::V3: return "V3";
        case VariationId::V4: return "V4";
    }
    return "?";
}

VariationId parse_variation(std::string_view s) {
    for (const auto v : kAllVariations) {
        if (to_string(v) == s) return v;
    }
    throw Error("unknown prompt variation '" + std::string(s) + "'");
}

}  // namespace totsim
