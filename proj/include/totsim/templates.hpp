#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "totsim/providers.hpp"

namespace totsim {

/// Prompt text with a "{content}" slot and an optional "{output_language_instruction}" slot.
class PromptTemplate {
public:
    static constexpr std::string_view kContentSlot = "{content}";
    static constexpr std::string_view kInstructionSlot = "{output_language_instruction}";

    /// Throws ConfigError unless the text holds exactly one content slot.
    PromptTemplate(PromptRole role, std::string language, std::string text);

    /// Single pass over the template text; slot markers inside `content` stay literal.
    /// A non-empty instruction is appended after the text when the template has no slot.
    [[nodiscard]] std::string render(std::string_view content,
                                     std::string_view instruction = {}) const;

    [[nodiscard]] PromptRole role() const noexcept { return role_; }
    [[nodiscard]] const std::string& language() const noexcept { return language_; }
    [[nodiscard]] const std::string& text() const noexcept { return text_; }
    [[nodiscard]] bool has_instruction_slot() const noexcept;

private:
    PromptRole role_;
    std::string language_;
    std::string text_;
};

/// Template assets laid out as <dir>/<role>/<language>.txt with role in
/// {summarize, generate, translate}, plus <dir>/instruction/<language>.txt holding the
/// English sentence that asks for output in that language.
class TemplateSet {
public:
    TemplateSet() = default;
    static TemplateSet load(const std::filesystem::path& dir);

    void add(PromptTemplate tmpl);
    void add_instruction(std::string language, std::string text);

    /// Throws ConfigError naming the missing asset.
    [[nodiscard]] const PromptTemplate& get(PromptRole role, std::string_view language) const;
    [[nodiscard]] const std::string& instruction(std::string_view language) const;
    [[nodiscard]] bool has(PromptRole role, std::string_view language) const;

private:
    std::map<std::pair<PromptRole, std::string>, PromptTemplate> templates_;
    std::map<std::string, std::string, std::less<>> instructions_;
};

}  // namespace totsim
