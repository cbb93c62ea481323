#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace talkfashion {

struct FunctionDescriptor {
    std::string name;
    std::string description;
    std::vector<std::string> parameter_names;

    bool operator==(const FunctionDescriptor&) const = default;
};

struct FewShotExample {
    std::string user_instruction;
    std::string expected_response;

    bool operator==(const FewShotExample&) const = default;
};

// Functions the model may call, in registration order.
class FunctionRegistry {
public:
    // Throws DuplicateFunction, InvalidTemplate (empty name or parameters).
    void add(FunctionDescriptor descriptor);

    const std::vector<FunctionDescriptor>& functions() const noexcept { return functions_; }
    std::size_t size() const noexcept { return functions_.size(); }
    bool contains(std::string_view name) const noexcept;

private:
    std::vector<FunctionDescriptor> functions_;
};

FunctionRegistry register_function(FunctionRegistry registry, FunctionDescriptor descriptor);

inline constexpr int kTemplateVersion = 1;

// Lines that fence the user's instruction at the end of every prompt.
inline constexpr std::string_view kInstructionBegin = "<<<USER_INSTRUCTION>>>";
inline constexpr std::string_view kInstructionEnd = "<<<END_USER_INSTRUCTION>>>";

// Prefix, function list, output format and few-shot examples. Immutable
// once validated; construct through from_json/load or validate explicitly.
struct PromptTemplate {
    std::string prefix;
    FunctionRegistry registry;
    std::string output_format;
    std::vector<FewShotExample> examples;

    // Throws InvalidTemplate when:
    //  - no functions are registered,
    //  - the output format does not name "function", "item", "details", "reply",
    //  - an example response does not parse or names an unregistered function,
    //  - a registered function has no example.
    void validate() const;

    // Schema: {template_version, prefix, functions[{name, description,
    // parameters[]}], output_format, examples[{user, assistant}]}.
    static PromptTemplate from_json(std::string_view document);
    static PromptTemplate load(const std::filesystem::path& path);
    std::string to_json() const;
};

// Pure: same inputs give byte-identical output. Throws EmptyInstruction.
std::string render_prompt(const PromptTemplate& tmpl, std::string_view user_instruction);

// Prompt for the single repair retry: the rendered prompt followed by the
// parser's complaint.
std::string render_repair_prompt(const PromptTemplate& tmpl, std::string_view user_instruction,
                                 std::string_view parse_error);

// Text between the last instruction fence pair, if any.
std::optional<std::string> extract_instruction(std::string_view rendered);

}  // namespace talkfashion
