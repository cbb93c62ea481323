#pragma once

#include <string>
#include <string_view>
#include <variant>

#include "talkfashion/invocation.hpp"

namespace talkfashion {

// Name of the pseudo-function the model emits for requests that are not
// try-on instructions.
inline constexpr std::string_view kNoFunction = "none";

// The model declined to invoke a try-on function; `reply` is shown as-is.
struct NotATryOn {
    std::string reply;

    bool operator==(const NotATryOn&) const = default;
};

using ParsedResponse = std::variant<Invocation, NotATryOn>;

// Loosely typed view of a response block, before the function name is
// checked against the closed set. Used to validate few-shot examples for
// functions registered at the prompt level.
struct FunctionCall {
    std::string function;
    std::string reply;
};

// First balanced {...} block in `raw` (braces inside string literals do not
// count). Throws NoStructuredBlock.
std::string extract_structured_block(std::string_view raw);

// Throws NoStructuredBlock or MalformedBlock.
FunctionCall parse_function_call(std::string_view raw);

// Throws NoStructuredBlock, MalformedBlock, UnknownFunction (detail = name),
// MissingDetails, ItemRequired.
ParsedResponse parse_response(std::string_view raw);

// As parse_response, but an off-task response is an error:
// NotATryOnRequest with the model's reply in detail().
Invocation parse_invocation(std::string_view raw);

// Canonical wire form:
// {"function": ..., "item": ..., "details": ..., "reply": ...}
std::string to_wire(const Invocation& inv);
std::string to_wire(const NotATryOn& off_topic);

}  // namespace talkfashion
