#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace trafficpm {

/// Root of every error thrown by the library. Callers that only need a
/// message and a failure signal catch this.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller passed something outside an operation's precondition.
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Network failure talking to the image repository or a detector service.
class TransportError : public Error {
public:
    TransportError(const std::string& what, bool retryable = true)
        : Error(what), retryable_(retryable) {}

    bool retryable() const noexcept { return retryable_; }

private:
    bool retryable_;
};

/// Malformed structured payload. `offset` is the byte position where
/// parsing failed, or 0 when the syntax was fine but the shape was wrong.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : Error(what), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class DecodeError : public Error {
public:
    using Error::Error;
};

/// Data decoded fine but contradicts what was declared for it.
class IntegrityError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Input file content violates a documented invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A detector backend answered with something outside the wire protocol.
class ProtocolError : public Error {
public:
    ProtocolError(const std::string& what, std::string field)
        : Error(what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Correlation requested on a series with zero variance.
class UndefinedCorrelationError : public Error {
public:
    using Error::Error;
};

class InsufficientDataError : public Error {
public:
    using Error::Error;
};

}  // namespace trafficpm
