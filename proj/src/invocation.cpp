#include "talkfashion/invocation.hpp"

#include <algorithm>
#include <cctype>

#include "talkfashion/error.hpp"
#include "talkfashion/text.hpp"

namespace talkfashion {

std::string_view to_string(FunctionKind kind) noexcept {
    switch (kind) {
        case FunctionKind::FullOutfitChange: return "full_outfit_change";
        case FunctionKind::LocalizedEditing: return "localized_editing";
    }
    return "";
}

std::string_view to_string(ItemKind kind) noexcept {
    switch (kind) {
        case ItemKind::UpperBody: return "upper_body";
        case ItemKind::LowerBody: return "lower_body";
        case ItemKind::FullBody: return "full_body";
        case ItemKind::Unspecified: return "unspecified";
    }
    return "";
}

std::optional<FunctionKind> function_from_string(std::string_view name) {
    const std::string key = text::to_lower(text::trim(name));
    for (auto kind : {FunctionKind::FullOutfitChange, FunctionKind::LocalizedEditing}) {
        if (key == to_string(kind)) {
            return kind;
        }
    }
    return std::nullopt;
}

std::optional<ItemKind> item_from_string(std::string_view name) {
    const std::string key = text::to_lower(text::trim(name));
    for (auto kind : {ItemKind::UpperBody, ItemKind::LowerBody, ItemKind::FullBody,
                      ItemKind::Unspecified}) {
        if (key == to_string(kind)) {
            return kind;
        }
    }
    return std::nullopt;
}

void validate(const Invocation& inv) {
    if (text::trim(inv.details).empty()) {
        throw Error(ErrorCode::MissingDetails, "invocation details are empty");
    }
    if (inv.function == FunctionKind::FullOutfitChange && inv.item == ItemKind::Unspecified) {
        throw Error(ErrorCode::ItemRequired, "full_outfit_change requires an item");
    }
}

}  // namespace talkfashion
