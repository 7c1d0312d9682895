#pragma once
#include <stdexcept>
#include <string>

namespace ratsim {

enum class ErrorCode {
    SizeTooSmall,
    DuplicateId,
    InvalidWiring,
    NoLayout,
    EmptyChoiceSet,
    ExplosionCap,
    RoundLimitExceeded,
    UnknownProblem,
    DomainError,
    Precondition,
    ConfigError,
    NotApplicable,
};

inline const char* error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::SizeTooSmall: return "SizeTooSmall";
        case ErrorCode::DuplicateId: return "DuplicateId";
        case ErrorCode::InvalidWiring: return "InvalidWiring";
        case ErrorCode::NoLayout: return "NoLayout";
        case ErrorCode::EmptyChoiceSet: return "EmptyChoiceSet";
        case ErrorCode::ExplosionCap: return "ExplosionCap";
        case ErrorCode::RoundLimitExceeded: return "RoundLimitExceeded";
        case ErrorCode::UnknownProblem: return "UnknownProblem";
        case ErrorCode::DomainError: return "DomainError";
        case ErrorCode::Precondition: return "Precondition";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::NotApplicable: return "NotApplicable";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

}  // namespace ratsim
