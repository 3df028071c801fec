// errors.hpp: exception taxonomy shared by the cpal library.
#pragma once

#include <stdexcept>
#include <string>

namespace cpal {

// File could not be read or written.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// File exists but its contents are not a well-formed array file.
struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

// Array file is well-formed but stores a payload type we do not handle.
struct UnsupportedDtypeError : FormatError {
    explicit UnsupportedDtypeError(const std::string& what) : FormatError(what) {}
};

// Operand shapes or depths do not agree.
struct DimensionError : std::invalid_argument {
    explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

// Input is structurally valid but degenerate for the requested operation
// (empty list, zero-norm vector, too few prototypes).
struct DegenerateInputError : std::invalid_argument {
    explicit DegenerateInputError(const std::string& what) : std::invalid_argument(what) {}
};

// A class marked present has no entries in its support bank.
struct EmptyBankError : DegenerateInputError {
    explicit EmptyBankError(const std::string& what) : DegenerateInputError(what) {}
};

// A candidate prototype set is empty.
struct EmptyCandidateError : DegenerateInputError {
    explicit EmptyCandidateError(const std::string& what) : DegenerateInputError(what) {}
};

// Numeric argument outside the mathematical domain (e.g. nonpositive weight).
struct DomainError : std::invalid_argument {
    explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace cpal
