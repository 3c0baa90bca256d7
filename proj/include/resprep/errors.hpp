#pragma once

#include <stdexcept>
#include <string>

namespace resprep {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Phase unwrapping could not resolve an interval even after subdivision.
class RefinementFailure : public Error {
public:
    RefinementFailure(const std::string& what, double lo, double hi)
        : Error(what), lo_(lo), hi_(hi) {}
    double interval_lo() const noexcept { return lo_; }
    double interval_hi() const noexcept { return hi_; }

private:
    double lo_;
    double hi_;
};

/// The argument-principle count disagrees with the poles that were located.
class IncompleteSearch : public Error {
public:
    IncompleteSearch(const std::string& what, int found, int expected)
        : Error(what), found_(found), expected_(expected) {}
    int found() const noexcept { return found_; }
    int expected() const noexcept { return expected_; }

private:
    int found_;
    int expected_;
};

class NoBoundState : public Error {
public:
    using Error::Error;
};

class AmbiguousGroundState : public Error {
public:
    using Error::Error;
};

/// Time step or grid too coarse for the requested accuracy.
class ResolutionError : public Error {
public:
    using Error::Error;
};

class NumericalBlowup : public Error {
public:
    NumericalBlowup(const std::string& what, long step) : Error(what), step_(step) {}
    long step() const noexcept { return step_; }

private:
    long step_;
};

/// Energy projection requested for a final configuration that binds.
class CompletenessViolation : public Error {
public:
    using Error::Error;
};

class ContainmentError : public Error {
public:
    using Error::Error;
};

class FitFailure : public Error {
public:
    using Error::Error;
};

class WindowError : public Error {
public:
    using Error::Error;
};

class InsufficientData : public Error {
public:
    using Error::Error;
};

/// Iso-resonance tracing could not find a starting point.
class ContinuationFailure : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, int line, int column)
        : Error(what), line_(line), column_(column) {}
    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

/// A library error re-raised with the experiment stage it came from.
class StageError : public Error {
public:
    StageError(const std::string& stage, const std::string& what)
        : Error(stage + ": " + what), stage_(stage) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace resprep
