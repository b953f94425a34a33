#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace entrain {

enum class Errc {
    InvalidImage,
    InvalidDimensions,
    InvalidArgument,
    BadSeed,
    DimensionError,
    DecodeError,
    NoEvidence,
    EmptyContent,
    EmptyQuery,
    NoResults,
    ProviderError,
    Contradiction,
    MissingColumn,
    MalformedRow,
    IoError,
    InvalidConfig,
    UnknownPack,
    SessionNotFound,
    NoOutstandingGuess,
};

constexpr std::string_view to_string(Errc code) noexcept {
    switch (code) {
        case Errc::InvalidImage: return "InvalidImage";
        case Errc::InvalidDimensions: return "InvalidDimensions";
        case Errc::InvalidArgument: return "InvalidArgument";
        case Errc::BadSeed: return "BadSeed";
        case Errc::DimensionError: return "DimensionError";
        case Errc::DecodeError: return "DecodeError";
        case Errc::NoEvidence: return "NoEvidence";
        case Errc::EmptyContent: return "EmptyContent";
        case Errc::EmptyQuery: return "EmptyQuery";
        case Errc::NoResults: return "NoResults";
        case Errc::ProviderError: return "ProviderError";
        case Errc::Contradiction: return "ContradictionError";
        case Errc::MissingColumn: return "MissingColumn";
        case Errc::MalformedRow: return "MalformedRow";
        case Errc::IoError: return "IoError";
        case Errc::InvalidConfig: return "InvalidConfig";
        case Errc::UnknownPack: return "UnknownPack";
        case Errc::SessionNotFound: return "SessionNotFound";
        case Errc::NoOutstandingGuess: return "NoOutstandingGuess";
    }
    return "Unknown";
}

/// Every failure surfaced by the library carries one of the codes above.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace entrain
