#ifndef MEDTEST_QUADRATURE_HPP
#define MEDTEST_QUADRATURE_HPP

#include <functional>
#include <span>
#include <vector>

namespace medtest::quad {

struct QuadResult {
    double value = 0.0;
    double error_estimate = 0.0;
    bool converged = true;
    int evaluations = 0;
};

struct QuadOptions {
    double abs_tol = 1e-10;
    int max_subdivisions = 4000;
    // Known integrand kinks; the interval is pre-split at these points.
    std::vector<double> breakpoints{};
};

// Adaptive Gauss-Kronrod 15(7) on [a, b]. a > b integrates with flipped sign.
QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     const QuadOptions& opts = {});

// Convenience wrapper: returns the value, throws NumericalError when the
// subdivision budget is exhausted before reaching abs_tol.
double integrate_or_throw(const std::function<double(double)>& f, double a, double b,
                          double abs_tol,
                          std::span<const double> breakpoints = {});

}  // namespace medtest::quad

#endif
