#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace haarreg {

enum class ErrorCode {
    InvalidLevel,
    EmptySample,
    InvalidIndex,
    ZeroMassCube,
    EmptyDictionary,
    SampleMismatch,
    InvalidLattice,
    NonBipartite,
    Degenerate,
    InadmissibleEta,
    NotPositiveDefinite,
    TooLarge,
    OutOfRange,
    InvalidConfig,
    InvalidLadder,
    DomainError,
    IoError,
    ParseError,
    ReplicationFailed,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::InvalidLevel: return "InvalidLevel";
    case ErrorCode::EmptySample: return "EmptySample";
    case ErrorCode::InvalidIndex: return "InvalidIndex";
    case ErrorCode::ZeroMassCube: return "ZeroMassCube";
    case ErrorCode::EmptyDictionary: return "EmptyDictionary";
    case ErrorCode::SampleMismatch: return "SampleMismatch";
    case ErrorCode::InvalidLattice: return "InvalidLattice";
    case ErrorCode::NonBipartite: return "NonBipartite";
    case ErrorCode::Degenerate: return "Degenerate";
    case ErrorCode::InadmissibleEta: return "InadmissibleEta";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidLadder: return "InvalidLadder";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ReplicationFailed: return "ReplicationFailed";
    }
    return "Unknown";
}

/// Exception carrying a machine-checkable code next to the message.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace haarreg
