#include "talkfashion/error.hpp"

namespace talkfashion {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::DuplicateFunction: return "DuplicateFunction";
        case ErrorCode::EmptyInstruction: return "EmptyInstruction";
        case ErrorCode::InvalidTemplate: return "InvalidTemplate";
        case ErrorCode::NoStructuredBlock: return "NoStructuredBlock";
        case ErrorCode::MalformedBlock: return "MalformedBlock";
        case ErrorCode::UnknownFunction: return "UnknownFunction";
        case ErrorCode::MissingDetails: return "MissingDetails";
        case ErrorCode::ItemRequired: return "ItemRequired";
        case ErrorCode::NotATryOnRequest: return "NotATryOnRequest";
        case ErrorCode::ZeroVector: return "ZeroVector";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::EmptyCatalog: return "EmptyCatalog";
        case ErrorCode::ItemUnspecified: return "ItemUnspecified";
        case ErrorCode::TooSmall: return "TooSmall";
        case ErrorCode::ImageDecodeError: return "ImageDecodeError";
        case ErrorCode::BackendUnavailable: return "BackendUnavailable";
        case ErrorCode::Timeout: return "Timeout";
        case ErrorCode::ProtocolError: return "ProtocolError";
        case ErrorCode::NoRegionFound: return "NoRegionFound";
        case ErrorCode::MissingImage: return "MissingImage";
        case ErrorCode::CaptionParseError: return "CaptionParseError";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::VersionMismatch: return "VersionMismatch";
        case ErrorCode::CorruptIndex: return "CorruptIndex";
        case ErrorCode::SessionNotFound: return "SessionNotFound";
        case ErrorCode::NoPersonImage: return "NoPersonImage";
        case ErrorCode::ParseFailed: return "ParseFailed";
        case ErrorCode::RegionNotFound: return "RegionNotFound";
    }
    return "Unknown";
}

}  // namespace talkfashion
