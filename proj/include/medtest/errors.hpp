#ifndef MEDTEST_ERRORS_HPP
#define MEDTEST_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace medtest {

class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Argument outside its mathematical domain (non-finite x, p outside (0,1), ...).
class DomainError : public Error {
  public:
    explicit DomainError(const std::string& msg) : Error(msg) {}
};

// Invalid configuration (bad ladder, unknown column, duplicate column, ...).
class ConfigError : public Error {
  public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Quadrature or root finding failed to converge; carries the best estimate.
class NumericalError : public Error {
  public:
    NumericalError(const std::string& msg, double best_estimate, double error_bound)
        : Error(msg), best_estimate(best_estimate), error_bound(error_bound) {}
    double best_estimate;
    double error_bound;
};

class SingularDesignError : public Error {
  public:
    explicit SingularDesignError(const std::string& msg) : Error(msg) {}
};

class InsufficientDataError : public Error {
  public:
    explicit InsufficientDataError(const std::string& msg) : Error(msg) {}
};

// Residual variance is (numerically) zero, so t statistics are undefined.
class DegenerateFitError : public Error {
  public:
    explicit DegenerateFitError(const std::string& msg) : Error(msg) {}
};

}  // namespace medtest

#endif
