#pragma once

#include <stdexcept>
#include <string>

namespace bdarma {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input fails a documented precondition (bad composition, bad shape, bad config).
class ValidationError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

/// Numerical failure tied to a time index (likelihood evaluation, simulation).
class TimeIndexedError : public Error {
public:
    TimeIndexedError(const std::string& what, long t)
        : Error(what + " at t=" + std::to_string(t)), t_(t) {}

    long time_index() const noexcept { return t_; }

private:
    long t_;
};

class LikelihoodError : public TimeIndexedError {
public:
    using TimeIndexedError::TimeIndexedError;
};

class SimulationDiverged : public TimeIndexedError {
public:
    using TimeIndexedError::TimeIndexedError;
};

class InitializationFailure : public Error {
public:
    using Error::Error;
};

/// Too many failed fits in a study; `dump` holds the per-fit records as JSON.
class StudyAborted : public Error {
public:
    StudyAborted(const std::string& what, std::string dump) : Error(what), dump_(std::move(dump)) {}
    const std::string& dump() const noexcept { return dump_; }

private:
    std::string dump_;
};

}  // namespace bdarma
