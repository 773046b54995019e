#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "medtest/distributions.hpp"
#include "medtest/errors.hpp"
#include "medtest/linmod.hpp"
#include "medtest/rng.hpp"

using namespace medtest::linmod;
using medtest::rng::Xoshiro256;

namespace {

// The simulation process: G ~ Bernoulli(0.5), M = beta G + e, Y = 0.2 G + gamma M + e.
MediationFits simulate_and_fit(double beta, double gamma, int n, Xoshiro256& gen,
                               Reference ref = Reference::StudentT) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd g(n), m(n), y(n);
    for (int i = 0; i < n; ++i) {
        g(i) = gen.uniform01() < 0.5 ? 0.0 : 1.0;
        m(i) = beta * g(i) + gauss(gen);
        y(i) = 0.2 * g(i) + gamma * m(i) + gauss(gen);
    }
    return mediation_fits(g, m, y, Eigen::MatrixXd(), ref);
}

}  // namespace

TEST_CASE("hand-computed four-point fit") {
    // X = {0,1,2,3}, y = {0,1,2,4}: slope 1.3, intercept -0.2 from the normal
    // equations; rss = 0.3, df = 2, se_slope = sqrt(0.15/5).
    Eigen::MatrixXd X(4, 2);
    X << 1, 0, 1, 1, 1, 2, 1, 3;
    Eigen::VectorXd y(4);
    y << 0, 1, 2, 4;
    const FitSummary slope = ols_fit(X, y, 1);
    CHECK(slope.estimate == doctest::Approx(1.3).epsilon(1e-12));
    CHECK(slope.se == doctest::Approx(std::sqrt(0.03)).epsilon(1e-12));
    CHECK(slope.df == 2);
    CHECK(slope.t_stat == doctest::Approx(1.3 / std::sqrt(0.03)).epsilon(1e-12));
    CHECK(slope.u ==
          doctest::Approx(medtest::dist::student_t_cdf(1.3 / std::sqrt(0.03), 2)).epsilon(1e-12));
    const FitSummary intercept = ols_fit(X, y, 0);
    CHECK(intercept.estimate == doctest::Approx(-0.2).epsilon(1e-12));
    CHECK(intercept.se == doctest::Approx(std::sqrt(0.105)).epsilon(1e-12));
}

TEST_CASE("degenerate, singular and undersized designs") {
    Eigen::MatrixXd X(4, 2);
    X << 1, 0, 1, 1, 1, 2, 1, 3;
    Eigen::VectorXd y_exact = 2.0 * X.col(1);
    CHECK_THROWS_AS((void)ols_fit(X, y_exact, 1), medtest::DegenerateFitError);

    Eigen::MatrixXd Xc(5, 2);
    Xc.col(0).setOnes();
    Xc.col(1).setOnes();  // constant exposure duplicates the intercept
    Eigen::VectorXd y(5);
    y << 1, 2, 0, 4, 3;
    CHECK_THROWS_AS((void)ols_fit(Xc, y, 1), medtest::SingularDesignError);

    Eigen::MatrixXd Xs(2, 2);
    Xs << 1, 0, 1, 1;
    Eigen::VectorXd ys(2);
    ys << 0, 1;
    CHECK_THROWS_AS((void)ols_fit(Xs, ys, 1), medtest::InsufficientDataError);
}

TEST_CASE("row permutation leaves the fit unchanged") {
    Xoshiro256 gen(42, 0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int n = 40;
    Eigen::MatrixXd X(n, 3);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        X(i, 0) = 1.0;
        X(i, 1) = gauss(gen);
        X(i, 2) = gauss(gen);
        y(i) = 0.5 + 0.25 * X(i, 1) - 0.1 * X(i, 2) + gauss(gen);
    }
    const FitSummary base = ols_fit(X, y, 1);
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), std::mt19937(1234));
    Eigen::MatrixXd Xp(n, 3);
    Eigen::VectorXd yp(n);
    for (int i = 0; i < n; ++i) {
        Xp.row(i) = X.row(order[i]);
        yp(i) = y(order[i]);
    }
    const FitSummary perm = ols_fit(Xp, yp, 1);
    CHECK(perm.estimate == doctest::Approx(base.estimate).epsilon(1e-12));
    CHECK(perm.se == doctest::Approx(base.se).epsilon(1e-12));
    CHECK(perm.df == base.df);
}

TEST_CASE("normal equations residual") {
    Xoshiro256 gen(314, 0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 30 + static_cast<int>(gen.uniform01() * 100);
        const int p = 2 + static_cast<int>(gen.uniform01() * 4);
        Eigen::MatrixXd X(n, p);
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) {
            X(i, 0) = 1.0;
            for (int j = 1; j < p; ++j) X(i, j) = gauss(gen);
            y(i) = gauss(gen);
        }
        // Recover the full coefficient vector through p single-target fits.
        Eigen::VectorXd coef(p);
        for (int j = 0; j < p; ++j) coef(j) = ols_fit(X, y, j).estimate;
        const Eigen::VectorXd lhs = X.transpose() * (y - X * coef);
        const double rel = lhs.norm() / std::max(1e-30, (X.transpose() * y).norm());
        CHECK(rel < 1e-8);
    }
}

TEST_CASE("mediation_fits wiring") {
    Xoshiro256 gen(1001, 0);
    SUBCASE("strong effects push both u values to the extremes") {
        int outside = 0;
        const int trials = 40;
        for (int t = 0; t < trials; ++t) {
            const MediationFits f = simulate_and_fit(0.4, 0.4, 1000, gen);
            if ((f.beta.u < 0.025 || f.beta.u > 0.975) &&
                (f.gamma.u < 0.025 || f.gamma.u > 0.975))
                ++outside;
        }
        CHECK(outside >= trials - 2);  // beta=gamma=0.4 at n=1000 is near-certain
    }

    SUBCASE("constant exposure is a singular design") {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(50);
        Eigen::VectorXd m = Eigen::VectorXd::LinSpaced(50, 0.0, 1.0);
        Eigen::VectorXd y = Eigen::VectorXd::Random(50);
        CHECK_THROWS_AS((void)mediation_fits(g, m, y, Eigen::MatrixXd()),
                        medtest::SingularDesignError);
    }

    SUBCASE("beta fit ignores the outcome column") {
        Xoshiro256 g2(55, 0);
        std::normal_distribution<double> gauss(0.0, 1.0);
        const int n = 60;
        Eigen::VectorXd g(n), m(n), y1(n), y2(n);
        for (int i = 0; i < n; ++i) {
            g(i) = g2.uniform01() < 0.5 ? 0.0 : 1.0;
            m(i) = 0.3 * g(i) + gauss(g2);
            y1(i) = gauss(g2);
            y2(i) = 1000.0 * std::sin(i * 2.7);  // corrupted outcome, still finite
        }
        const MediationFits a = mediation_fits(g, m, y1, Eigen::MatrixXd());
        const MediationFits b = mediation_fits(g, m, y2, Eigen::MatrixXd());
        CHECK(a.beta.estimate == doctest::Approx(b.beta.estimate).epsilon(1e-14));
        CHECK(a.beta.se == doctest::Approx(b.beta.se).epsilon(1e-14));
        CHECK(a.beta.u == doctest::Approx(b.beta.u).epsilon(1e-12));
    }

    SUBCASE("missing rows are dropped; too few complete rows error") {
        const int n = 30;
        Eigen::VectorXd g(n), m(n), y(n);
        Xoshiro256 g3(66, 0);
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (int i = 0; i < n; ++i) {
            g(i) = i % 2;
            m(i) = gauss(g3);
            y(i) = gauss(g3);
        }
        Eigen::VectorXd m_holes = m;
        for (int i = 0; i < n - 9; ++i) m_holes(i) = std::nan("");
        CHECK_THROWS_AS((void)mediation_fits(g, m_holes, y, Eigen::MatrixXd()),
                        medtest::InsufficientDataError);
        // 12 complete rows is enough.
        Eigen::VectorXd m_ok = m;
        for (int i = 0; i < n - 12; ++i) m_ok(i) = std::nan("");
        const MediationFits f = mediation_fits(g, m_ok, y, Eigen::MatrixXd());
        CHECK(f.n_complete == 12);
        CHECK(f.n_dropped == n - 12);
    }
}

TEST_CASE("null U values are uniform and the two estimates uncorrelated") {
    // Under beta = gamma = 0 the cumulative probability U_beta is exactly
    // Uniform(0,1) with the t reference; Kolmogorov-Smirnov at the 1% level.
    const int reps = 20000;
    std::vector<double> u;
    u.reserve(reps);
    for (int r = 0; r < reps; ++r) {
        Xoshiro256 gen(8675309, static_cast<std::uint64_t>(r) + 1);
        const MediationFits f = simulate_and_fit(0.0, 0.0, 100, gen);
        u.push_back(f.beta.u);
    }
    std::sort(u.begin(), u.end());
    double ks = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double hi = (i + 1.0) / u.size() - u[i];
        const double lo = u[i] - static_cast<double>(i) / u.size();
        ks = std::max({ks, hi, lo});
    }
    CHECK(ks < 1.628 / std::sqrt(static_cast<double>(reps)));  // 1% critical value

    std::vector<double> beta_hats, gamma_hats;
    beta_hats.reserve(reps);
    gamma_hats.reserve(reps);
    for (int r = 0; r < reps; ++r) {
        Xoshiro256 gen(24601, static_cast<std::uint64_t>(r) + 1);
        const MediationFits f = simulate_and_fit(0.0, 0.0, 500, gen);
        beta_hats.push_back(f.beta.estimate);
        gamma_hats.push_back(f.gamma.estimate);
    }
    double mb = 0.0, mg = 0.0;
    for (int r = 0; r < reps; ++r) {
        mb += beta_hats[r];
        mg += gamma_hats[r];
    }
    mb /= reps;
    mg /= reps;
    double sbb = 0.0, sgg = 0.0, sbg = 0.0;
    for (int r = 0; r < reps; ++r) {
        sbb += (beta_hats[r] - mb) * (beta_hats[r] - mb);
        sgg += (gamma_hats[r] - mg) * (gamma_hats[r] - mg);
        sbg += (beta_hats[r] - mb) * (gamma_hats[r] - mg);
    }
    const double corr = sbg / std::sqrt(sbb * sgg);
    CHECK(std::fabs(corr) < 0.03);
}
