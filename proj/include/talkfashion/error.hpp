#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace talkfashion {

enum class ErrorCode {
    InvalidArgument,
    // prompt_engine
    DuplicateFunction,
    EmptyInstruction,
    InvalidTemplate,
    // response_parser
    NoStructuredBlock,
    MalformedBlock,
    UnknownFunction,
    MissingDetails,
    ItemRequired,
    NotATryOnRequest,
    // matching / imaging
    ZeroVector,
    DimensionMismatch,
    EmptyCatalog,
    ItemUnspecified,
    TooSmall,
    ImageDecodeError,
    // backends
    BackendUnavailable,
    Timeout,
    ProtocolError,
    NoRegionFound,
    // catalog_store
    MissingImage,
    CaptionParseError,
    IoError,
    VersionMismatch,
    CorruptIndex,
    // pipeline
    SessionNotFound,
    NoPersonImage,
    ParseFailed,
    RegionNotFound,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure surfaced by the library carries a typed code. `detail` holds
// the code's payload when it has one (the unknown function name, the backend
// kind that failed, the offending caption line).
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::string detail = {})
        : std::runtime_error(std::string(to_string(code)) + ": " + message),
          code_(code),
          detail_(std::move(detail)) {}

    ErrorCode code() const noexcept { return code_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string detail_;
};

}  // namespace talkfashion
