#include "talkfashion/prompt_engine.hpp"

#include <algorithm>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "talkfashion/error.hpp"
#include "talkfashion/response_parser.hpp"
#include "talkfashion/text.hpp"

namespace talkfashion {
namespace {

using ordered_json = nlohmann::ordered_json;

bool is_identifier(std::string_view s) {
    if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) {
        return false;
    }
    return std::all_of(s.begin(), s.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
    });
}

std::string require_string(const ordered_json& obj, const char* key) {
    const auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) {
        throw Error(ErrorCode::InvalidTemplate, std::string("template field '") + key +
                                                    "' must be a string");
    }
    return it->get<std::string>();
}

const ordered_json& require_array(const ordered_json& obj, const char* key) {
    const auto it = obj.find(key);
    if (it == obj.end() || !it->is_array()) {
        throw Error(ErrorCode::InvalidTemplate, std::string("template field '") + key +
                                                    "' must be an array");
    }
    return *it;
}

// Built-in names whose examples must pass the full typed parse.
bool is_builtin(std::string_view name) {
    return name == kNoFunction || function_from_string(name).has_value();
}

}  // namespace

void FunctionRegistry::add(FunctionDescriptor descriptor) {
    if (!is_identifier(descriptor.name)) {
        throw Error(ErrorCode::InvalidTemplate,
                    "function name '" + descriptor.name + "' is not an identifier");
    }
    if (descriptor.parameter_names.empty()) {
        throw Error(ErrorCode::InvalidTemplate,
                    "function '" + descriptor.name + "' declares no parameters");
    }
    if (contains(descriptor.name)) {
        throw Error(ErrorCode::DuplicateFunction,
                    "function '" + descriptor.name + "' is already registered", descriptor.name);
    }
    functions_.push_back(std::move(descriptor));
}

bool FunctionRegistry::contains(std::string_view name) const noexcept {
    return std::any_of(functions_.begin(), functions_.end(),
                       [&](const FunctionDescriptor& f) { return f.name == name; });
}

FunctionRegistry register_function(FunctionRegistry registry, FunctionDescriptor descriptor) {
    registry.add(std::move(descriptor));
    return registry;
}

void PromptTemplate::validate() const {
    if (registry.size() == 0) {
        throw Error(ErrorCode::InvalidTemplate, "template registers no functions");
    }
    for (const char* key : {"\"function\"", "\"item\"", "\"details\"", "\"reply\""}) {
        if (output_format.find(key) == std::string::npos) {
            throw Error(ErrorCode::InvalidTemplate,
                        std::string("output format does not name key ") + key);
        }
    }
    std::set<std::string> covered;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const auto& ex = examples[i];
        const std::string where = "example " + std::to_string(i + 1);
        if (text::trim(ex.user_instruction).empty()) {
            throw Error(ErrorCode::InvalidTemplate, where + " has an empty user instruction");
        }
        FunctionCall call;
        try {
            call = parse_function_call(ex.expected_response);
            if (is_builtin(call.function)) {
                parse_response(ex.expected_response);
            }
        } catch (const Error& e) {
            throw Error(ErrorCode::InvalidTemplate, where + " does not parse: " + e.what());
        }
        if (!registry.contains(call.function)) {
            throw Error(ErrorCode::InvalidTemplate,
                        where + " calls unregistered function '" + call.function + "'");
        }
        covered.insert(call.function);
    }
    for (const auto& f : registry.functions()) {
        if (!covered.count(f.name)) {
            throw Error(ErrorCode::InvalidTemplate,
                        "function '" + f.name + "' has no few-shot example");
        }
    }
}

PromptTemplate PromptTemplate::from_json(std::string_view document) {
    const ordered_json doc = ordered_json::parse(document, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw Error(ErrorCode::InvalidTemplate, "template is not a JSON object");
    }
    const auto version = doc.find("template_version");
    if (version == doc.end() || !version->is_number_integer()) {
        throw Error(ErrorCode::InvalidTemplate, "template_version must be an integer");
    }
    if (version->get<int>() != kTemplateVersion) {
        throw Error(ErrorCode::InvalidTemplate,
                    "unsupported template_version " + std::to_string(version->get<int>()));
    }

    PromptTemplate tmpl;
    tmpl.prefix = require_string(doc, "prefix");
    tmpl.output_format = require_string(doc, "output_format");
    for (const auto& f : require_array(doc, "functions")) {
        FunctionDescriptor d;
        d.name = require_string(f, "name");
        d.description = require_string(f, "description");
        for (const auto& p : require_array(f, "parameters")) {
            if (!p.is_string()) {
                throw Error(ErrorCode::InvalidTemplate, "parameter names must be strings");
            }
            d.parameter_names.push_back(p.get<std::string>());
        }
        tmpl.registry.add(std::move(d));
    }
    for (const auto& ex : require_array(doc, "examples")) {
        tmpl.examples.push_back({require_string(ex, "user"), require_string(ex, "assistant")});
    }
    tmpl.validate();
    return tmpl;
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot open template " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

std::string PromptTemplate::to_json() const {
    ordered_json doc;
    doc["template_version"] = kTemplateVersion;
    doc["prefix"] = prefix;
    doc["functions"] = ordered_json::array();
    for (const auto& f : registry.functions()) {
        doc["functions"].push_back(
            {{"name", f.name}, {"description", f.description}, {"parameters", f.parameter_names}});
    }
    doc["output_format"] = output_format;
    doc["examples"] = ordered_json::array();
    for (const auto& ex : examples) {
        doc["examples"].push_back({{"user", ex.user_instruction}, {"assistant", ex.expected_response}});
    }
    return doc.dump(2);
}

std::string render_prompt(const PromptTemplate& tmpl, std::string_view user_instruction) {
    if (text::trim(user_instruction).empty()) {
        throw Error(ErrorCode::EmptyInstruction, "user instruction is blank");
    }
    std::string out;
    out += tmpl.prefix;
    out += "\n\n## Available functions\n";
    int n = 1;
    for (const auto& f : tmpl.registry.functions()) {
        out += std::to_string(n++) + ". " + f.name + "(";
        for (std::size_t i = 0; i < f.parameter_names.size(); ++i) {
            out += (i ? ", " : "") + f.parameter_names[i];
        }
        out += ")\n   " + f.description + "\n";
    }
    out += "\n## Output format\n";
    out += tmpl.output_format;
    out += "\n\n## Examples\n";
    n = 1;
    for (const auto& ex : tmpl.examples) {
        out += "### Example " + std::to_string(n++) + "\n";
        out += "User: " + ex.user_instruction + "\n";
        out += "Assistant: " + ex.expected_response + "\n";
    }
    out += "\n## User instruction\n";
    out += kInstructionBegin;
    out += "\n";
    out += user_instruction;
    out += "\n";
    out += kInstructionEnd;
    out += "\n";
    return out;
}

std::string render_repair_prompt(const PromptTemplate& tmpl, std::string_view user_instruction,
                                 std::string_view parse_error) {
    std::string out = render_prompt(tmpl, user_instruction);
    out += "\n## Correction\nYour previous reply could not be parsed (";
    out += parse_error;
    out += "). Reply again with exactly one JSON object in the output format above and no other text.\n";
    return out;
}

std::optional<std::string> extract_instruction(std::string_view rendered) {
    const std::string begin = std::string(kInstructionBegin) + "\n";
    const std::string end = "\n" + std::string(kInstructionEnd);
    const auto b = rendered.rfind(begin);
    if (b == std::string_view::npos) {
        return std::nullopt;
    }
    const auto start = b + begin.size();
    const auto e = rendered.find(end, start);
    if (e == std::string_view::npos) {
        return std::nullopt;
    }
    return std::string(rendered.substr(start, e - start));
}

}  // namespace talkfashion
