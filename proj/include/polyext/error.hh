#pragma once

#include <stdexcept>
#include <string>

namespace polyext {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad sample count, wrong base kind, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Expression text could not be parsed. Carries a 1-based line/column.
class ParseError : public Error {
public:
    ParseError(int line, int column, const std::string & message) :
        Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message),
        line_(line), column_(column), message_(message)
    {
    }

    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }
    const std::string & message() const noexcept { return message_; }

private:
    int line_;
    int column_;
    std::string message_;
};

/// Expression evaluation failed (variable not available on this base, non-finite value).
class EvalError : public Error {
public:
    using Error::Error;
};

/// A sampled self-map jumps further than the configured edge-distance bound.
class ContinuityError : public Error {
public:
    using Error::Error;
};

/// Polynomial root iteration did not converge.
class SolverError : public Error {
public:
    using Error::Error;
};

/// Sheet matching along an edge stayed ambiguous at the maximum refinement depth.
class AmbiguityError : public Error {
public:
    AmbiguityError(int edge, const std::string & message) : Error(message), edge_(edge) {}
    int edge() const noexcept { return edge_; }

private:
    int edge_;
};

/// The polynomial failed the admissibility test required by an analysis.
class InadmissibleError : public Error {
public:
    using Error::Error;
};

}
