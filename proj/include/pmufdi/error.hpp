#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace pmufdi {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed case or config text; carries the 1-based position of the offending token.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, int line, int column)
        : Error(format(msg, line, column)), line_(line), column_(column) {}

    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    static std::string format(const std::string& msg, int line, int column) {
        std::ostringstream os;
        os << "line " << line << ", column " << column << ": " << msg;
        return os.str();
    }

    int line_;
    int column_;
};

/// A domain invariant was violated (missing slack, dangling endpoint, bad plan, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

/// Singular normal matrix, singular Jacobian, SVD failure.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Iterative solver stopped at its iteration cap.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& msg, int iterations, double primal, double dual)
        : Error(format(msg, iterations, primal, dual)),
          iterations_(iterations), primal_(primal), dual_(dual) {}

    int iterations() const noexcept { return iterations_; }
    double primal_residual() const noexcept { return primal_; }
    double dual_residual() const noexcept { return dual_; }

private:
    static std::string format(const std::string& msg, int it, double p, double d) {
        std::ostringstream os;
        os << msg << " (iterations " << it << ", primal residual " << p
           << ", dual residual " << d << ")";
        return os.str();
    }

    int iterations_;
    double primal_;
    double dual_;
};

}  // namespace pmufdi
