#pragma once

#include <stdexcept>
#include <string>

namespace seppmix {

// Error taxonomy. The CLI maps these onto process exit codes; library code
// throws and never exits.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Precondition violation on operation inputs (bad shapes, out-of-range ids).
class InputDomainError : public Error {
public:
    using Error::Error;
};

// Invalid or inconsistent run configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Dataset ingestion failure (missing class directory, undecodable file).
class IngestError : public Error {
public:
    using Error::Error;
};

// Non-finite values where finite arithmetic is required (diverged loss).
class NumericalError : public Error {
public:
    using Error::Error;
};

// Refusal to clobber an existing output directory without --overwrite.
class OutputConflictError : public Error {
public:
    using Error::Error;
};

} // namespace seppmix
