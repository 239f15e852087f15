#pragma once

#include <stdexcept>
#include <string>

namespace fm {

// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input text (expressions, system files). Carries a location when known.
struct ParseError : Error {
    int line = 0;
    int column = 0;
    ParseError(const std::string& msg, int line_ = 0, int column_ = 0)
        : Error(format(msg, line_, column_)), line(line_), column(column_) {}

  private:
    static std::string format(const std::string& msg, int line, int column) {
        if (line <= 0) return msg;
        return "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + msg;
    }
};

// Numeric evaluation failure: unbound symbol, log of a non-positive number,
// division by zero, non-finite intermediate.
struct EvalError : Error {
    using Error::Error;
};

// A mathematical precondition does not hold (singular Hessian, non-cyclic
// coordinate, asymmetric tensor, ...).
struct PreconditionError : Error {
    using Error::Error;
};

// A probabilistic zero test could not reach a verdict (too many domain
// failures while sampling, or rank decisions too close to tolerance).
struct IndeterminateError : Error {
    using Error::Error;
};

// Requested derivative does not exist in closed form (quadrature-backed nodes).
struct DerivativeUnavailableError : Error {
    using Error::Error;
};

// Tri-state outcome of probabilistic identity checks.
enum class Verdict { True, False, Indeterminate };

inline const char* to_string(Verdict v) {
    switch (v) {
    case Verdict::True: return "true";
    case Verdict::False: return "false";
    default: return "indeterminate";
    }
}

} // namespace fm
