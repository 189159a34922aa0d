#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace r2ps {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// corpus
struct ParseError : Error {
    std::size_t line;
    ParseError(std::size_t line_, const std::string& what_)
        : Error("line " + std::to_string(line_) + ": " + what_), line(line_) {}
};
struct EmptyAfterTokenize : Error {
    using Error::Error;
};

// neural core / encoders
struct AllMaskedRow : Error {
    using Error::Error;
};
struct EmptySequence : Error {
    using Error::Error;
};
struct SequenceTooLong : Error {
    using Error::Error;
};
struct DimensionMismatch : Error {
    using Error::Error;
};
struct PreconditionViolation : Error {
    using Error::Error;
};

// training
struct NonFiniteScore : Error {
    using Error::Error;
};
struct InsufficientCandidates : Error {
    using Error::Error;
};
struct StartBeyondCorpus : Error {
    using Error::Error;
};

// index / persistence
struct EmptyCodebase : Error {
    using Error::Error;
};
struct FormatError : Error {
    using Error::Error;
};

// evaluation
struct MissingGold : Error {
    std::int64_t id;
    explicit MissingGold(std::int64_t id_)
        : Error("gold code id " + std::to_string(id_) + " not present in codebase"), id(id_) {}
};
struct EmptyEvaluation : Error {
    using Error::Error;
};

} // namespace r2ps
