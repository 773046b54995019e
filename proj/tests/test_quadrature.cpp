#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "medtest/distributions.hpp"
#include "medtest/errors.hpp"
#include "medtest/quadrature.hpp"

using medtest::quad::integrate;
using medtest::quad::integrate_or_throw;
using medtest::quad::QuadOptions;

TEST_CASE("polynomial exactness") {
    CHECK(integrate_or_throw([](double) { return 1.0; }, 0.0, 1.0, 1e-12) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(integrate_or_throw([](double x) { return x * x; }, 0.0, 1.0, 1e-12) ==
          doctest::Approx(1.0 / 3.0).epsilon(1e-13));
    // Reversed limits flip the sign.
    CHECK(integrate_or_throw([](double x) { return x; }, 1.0, 0.0, 1e-12) ==
          doctest::Approx(-0.5).epsilon(1e-13));
}

TEST_CASE("change of variables against the closed form") {
    // int_0^1 phi(Phi^-1(p)) dp = int phi(z)^2 dz = 1/(2 sqrt(pi))
    auto f = [](double p) {
        const double z = medtest::dist::normal_quantile(p);
        return medtest::dist::normal_pdf(z);
    };
    QuadOptions opts;
    opts.abs_tol = 1e-10;
    auto r = integrate(f, 1e-14, 1.0 - 1e-14, opts);
    CHECK(r.converged);
    CHECK(r.value == doctest::Approx(0.28209479177387814).epsilon(1e-8));
}

TEST_CASE("breakpoints make kinks cheap") {
    auto f = [](double x) { return std::fabs(x - 1.0 / 3.0); };
    QuadOptions opts;
    opts.abs_tol = 1e-13;
    opts.breakpoints = {1.0 / 3.0};
    auto r = integrate(f, 0.0, 1.0, opts);
    CHECK(r.converged);
    CHECK(r.value == doctest::Approx(5.0 / 18.0).epsilon(1e-13));
    CHECK(r.evaluations <= 60);  // two panels, no subdivision needed
}

TEST_CASE("budget exhaustion reports the best estimate") {
    auto nasty = [](double x) { return std::sin(1.0 / (x + 1e-6)); };
    QuadOptions opts;
    opts.abs_tol = 1e-14;
    opts.max_subdivisions = 3;
    auto r = integrate(nasty, 0.0, 1.0, opts);
    CHECK_FALSE(r.converged);
    CHECK(std::isfinite(r.value));
    CHECK(r.error_estimate > 0.0);
    CHECK_THROWS_AS((void)integrate_or_throw(nasty, 0.0, 1.0, 1e-14), medtest::NumericalError);
}

TEST_CASE("tolerance precondition") {
    CHECK_THROWS_AS((void)integrate_or_throw([](double) { return 1.0; }, 0.0, 1.0, -1.0),
                    medtest::DomainError);
}
