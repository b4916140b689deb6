#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace totsim {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input record. Carries the 1-based line number of the offending line.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class IngestError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class SamplingError : public Error {
public:
    using Error::Error;
};

/// Provider produced no usable answer (after transport retries, or an empty answer).
class GenerationError : public Error {
public:
    using Error::Error;
};

/// Retryable failure talking to a remote provider (network, 429, 5xx).
class TransportError : public Error {
public:
    using Error::Error;
};

/// Run-file or qrels content violating its contract.
class ValidationError : public Error {
public:
    ValidationError(const std::string& what, std::size_t line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    explicit ValidationError(const std::string& what) : Error(what), line_(0) {}

    /// 0 when the violation is not tied to a single line.
    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class EvaluationError : public Error {
public:
    using Error::Error;
};

/// Correlation is undefined (constant vector, n < 2) or the inputs disagree.
class CorrelationError : public Error {
public:
    using Error::Error;
};

}  // namespace totsim
