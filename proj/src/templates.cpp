#include "totsim/templates.hpp"

#include <fstream>
#include <sstream>

#include "totsim/error.hpp"
#include "totsim/text.hpp"

namespace totsim {

namespace {

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
    std::size_t n = 0;
    for (auto pos = haystack.find(needle); pos != std::string_view::npos;
         pos = haystack.find(needle, pos + needle.size())) {
        ++n;
    }
    return n;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open template " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

PromptTemplate::PromptTemplate(PromptRole role, std::string language, std::string text)
    : role_(role), language_(std::move(language)), text_(std::move(text)) {
    if (count_occurrences(text_, kContentSlot) != 1) {
        throw ConfigError("template " + std::string(to_string(role_)) + "/" + language_ +
                          " must contain exactly one " + std::string(kContentSlot) + " slot");
    }
}

bool PromptTemplate::has_instruction_slot() const noexcept {
    return text_.find(kInstructionSlot) != std::string::npos;
}

std::string PromptTemplate::render(std::string_view content, std::string_view instruction) const {
    std::string out;
    out.reserve(text_.size() + content.size() + instruction.size());
    const std::string_view t = text_;
    std::size_t i = 0;
    while (i < t.size()) {
        if (t.compare(i, kContentSlot.size(), kContentSlot) == 0) {
            out += content;
            i += kContentSlot.size();
        } else if (t.compare(i, kInstructionSlot.size(), kInstructionSlot) == 0) {
            out += instruction;
            i += kInstructionSlot.size();
        } else {
            out += t[i++];
        }
    }
    if (!instruction.empty() && !has_instruction_slot()) {
        while (!out.empty() && out.back() == '\n') out.pop_back();
        out += "\n\n";
        out += instruction;
    }
    return out;
}

TemplateSet TemplateSet::load(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw ConfigError("template directory not found: " + dir.string());
    }
    TemplateSet set;
    for (const auto role : {PromptRole::Summarize, PromptRole::Generate, PromptRole::Translate}) {
        const auto sub = dir / std::string(to_string(role));
        if (!std::filesystem::is_directory(sub)) continue;
        for (const auto& entry : std::filesystem::directory_iterator(sub)) {
            if (entry.path().extension() != ".txt") continue;
            set.add(PromptTemplate(role, entry.path().stem().string(), read_file(entry.path())));
        }
    }
    const auto instr = dir / "instruction";
    if (std::filesystem::is_directory(instr)) {
        for (const auto& entry : std::filesystem::directory_iterator(instr)) {
            if (entry.path().extension() != ".txt") continue;
            set.add_instruction(entry.path().stem().string(), text::trim(read_file(entry.path())));
        }
    }
    return set;
}

void TemplateSet::add(PromptTemplate tmpl) {
    auto key = std::make_pair(tmpl.role(), tmpl.language());
    templates_.insert_or_assign(std::move(key), std::move(tmpl));
}

void TemplateSet::add_instruction(std::string language, std::string text) {
    instructions_.insert_or_assign(std::move(language), std::move(text));
}

const PromptTemplate& TemplateSet::get(PromptRole role, std::string_view language) const {
    const auto it = templates_.find({role, std::string(language)});
    if (it == templates_.end()) {
        throw ConfigError("missing prompt template " + std::string(to_string(role)) + "/" +
                          std::string(language));
    }
    return it->second;
}

const std::string& TemplateSet::instruction(std::string_view language) const {
    const auto it = instructions_.find(language);
    if (it == instructions_.end()) {
        throw ConfigError("missing output-language instruction for " + std::string(language));
    }
    return it->second;
}

bool TemplateSet::has(PromptRole role, std::string_view language) const {
    return templates_.count({role, std::string(language)}) > 0;
}

}  // namespace totsim
