#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace talkfashion {

enum class FunctionKind { FullOutfitChange, LocalizedEditing };

enum class ItemKind { UpperBody, LowerBody, FullBody, Unspecified };

// Wire names: full_outfit_change, localized_editing.
std::string_view to_string(FunctionKind kind) noexcept;
// Wire names: upper_body, lower_body, full_body, unspecified.
std::string_view to_string(ItemKind kind) noexcept;

// Case-insensitive, surrounding whitespace ignored.
std::optional<FunctionKind> function_from_string(std::string_view name);
std::optional<ItemKind> item_from_string(std::string_view name);

// The structured result of one LLM call: which function to run, on which
// clothing item, with what details, plus the reply shown to the user.
struct Invocation {
    FunctionKind function = FunctionKind::LocalizedEditing;
    ItemKind item = ItemKind::Unspecified;
    std::string details;
    std::string reply;

    bool operator==(const Invocation&) const = default;
};

// Throws Error(MissingDetails | ItemRequired) when the invariants fail.
void validate(const Invocation& inv);

}  // namespace talkfashion
