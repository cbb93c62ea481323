#include "talkfashion/response_parser.hpp"

#include <limits>
#include <nlohmann/json.hpp>
#include <vector>

#include "talkfashion/error.hpp"
#include "talkfashion/text.hpp"

namespace talkfashion {
namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string optional_string(const json& obj, const char* key) {
    const auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        return {};
    }
    if (!it->is_string()) {
        throw Error(ErrorCode::MalformedBlock, std::string("field '") + key + "' is not a string");
    }
    return it->get<std::string>();
}

json decode_block(std::string_view raw) {
    const std::string block = extract_structured_block(raw);
    json obj = json::parse(block, nullptr, /*allow_exceptions=*/false);
    if (obj.is_discarded()) {
        throw Error(ErrorCode::MalformedBlock, "response block is not valid JSON");
    }
    if (!obj.is_object()) {
        throw Error(ErrorCode::MalformedBlock, "response block is not an object");
    }
    const auto it = obj.find("function");
    if (it == obj.end() || !it->is_string()) {
        throw Error(ErrorCode::MalformedBlock, "response block has no string 'function' field");
    }
    return obj;
}

std::string dump(const ordered_json& j) {
    return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

}  // namespace

std::string extract_structured_block(std::string_view raw) {
    // Single pass with a stack of open-brace positions. Among all balanced
    // blocks the one with the smallest start is the first maximal block.
    std::vector<std::size_t> open;
    std::size_t best_start = std::numeric_limits<std::size_t>::max();
    std::size_t best_end = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const char c = raw[i];
        if (in_string) {
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"' && !open.empty()) {
            in_string = true;
        } else if (c == '{') {
            open.push_back(i);
        } else if (c == '}' && !open.empty()) {
            const std::size_t start = open.back();
            open.pop_back();
            if (start < best_start) {
                best_start = start;
                best_end = i;
            }
            if (open.empty() && best_start == start) {
                // Nothing opened earlier is still pending, so no later block
                // can start before this one.
                break;
            }
        }
    }
    if (best_start == std::numeric_limits<std::size_t>::max()) {
        throw Error(ErrorCode::NoStructuredBlock, "no balanced {...} block in response");
    }
    return std::string(raw.substr(best_start, best_end - best_start + 1));
}

FunctionCall parse_function_call(std::string_view raw) {
    const json obj = decode_block(raw);
    return {obj["function"].get<std::string>(), optional_string(obj, "reply")};
}

ParsedResponse parse_response(std::string_view raw) {
    const json obj = decode_block(raw);
    const std::string name = obj["function"].get<std::string>();
    const std::string reply = optional_string(obj, "reply");

    if (text::to_lower(text::trim(name)) == kNoFunction) {
        return NotATryOn{reply};
    }
    const auto function = function_from_string(name);
    if (!function) {
        throw Error(ErrorCode::UnknownFunction, "unknown function '" + name + "'", name);
    }

    Invocation inv;
    inv.function = *function;
    inv.reply = reply;
    inv.details = optional_string(obj, "details");

    const std::string item = optional_string(obj, "item");
    if (!text::trim(item).empty()) {
        const auto kind = item_from_string(item);
        if (!kind) {
            throw Error(ErrorCode::MalformedBlock, "unknown item '" + item + "'");
        }
        inv.item = *kind;
    }
    validate(inv);
    return inv;
}

Invocation parse_invocation(std::string_view raw) {
    auto parsed = parse_response(raw);
    if (auto* off = std::get_if<NotATryOn>(&parsed)) {
        throw Error(ErrorCode::NotATryOnRequest, "the request is not a try-on instruction",
                    off->reply);
    }
    return std::get<Invocation>(std::move(parsed));
}

std::string to_wire(const Invocation& inv) {
    ordered_json j;
    j["function"] = to_string(inv.function);
    j["item"] = to_string(inv.item);
    j["details"] = inv.details;
    j["reply"] = inv.reply;
    return dump(j);
}

std::string to_wire(const NotATryOn& off_topic) {
    ordered_json j;
    j["function"] = kNoFunction;
    j["reply"] = off_topic.reply;
    return dump(j);
}

}  // namespace talkfashion
