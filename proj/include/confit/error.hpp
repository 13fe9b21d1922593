// Copyright 2026 The confit-rerank Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace confit {

enum class ErrorCode {
    MalformedRecord,
    DuplicateId,
    UnknownDocument,
    EmptyPool,
    InvalidK,
    NoPositives,
    InvalidNdcg,
    UnknownCandidate,
    EmptyGroup,
    MissingDifficulty,
    MalformedAnswer,
    ConfigError,
    EndpointUnreachable,
    InvalidOrdering,
    NumericalError,
    InvalidConfig,
    IoError,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::MalformedRecord: return "MalformedRecord";
        case ErrorCode::DuplicateId: return "DuplicateId";
        case ErrorCode::UnknownDocument: return "UnknownDocument";
        case ErrorCode::EmptyPool: return "EmptyPool";
        case ErrorCode::InvalidK: return "InvalidK";
        case ErrorCode::NoPositives: return "NoPositives";
        case ErrorCode::InvalidNdcg: return "InvalidNdcg";
        case ErrorCode::UnknownCandidate: return "UnknownCandidate";
        case ErrorCode::EmptyGroup: return "EmptyGroup";
        case ErrorCode::MissingDifficulty: return "MissingDifficulty";
        case ErrorCode::MalformedAnswer: return "MalformedAnswer";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::EndpointUnreachable: return "EndpointUnreachable";
        case ErrorCode::InvalidOrdering: return "InvalidOrdering";
        case ErrorCode::NumericalError: return "NumericalError";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI exit-code mapping) can branch without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Raised by the corpus readers; remembers the 1-based line of the bad record.
class MalformedRecord : public Error {
public:
    MalformedRecord(std::size_t line, const std::string& message)
        : Error(ErrorCode::MalformedRecord, "line " + std::to_string(line) + ": " + message),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace confit
