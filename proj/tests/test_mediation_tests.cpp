#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "medtest/distributions.hpp"
#include "medtest/errors.hpp"
#include "medtest/mediation_tests.hpp"
#include "medtest/rng.hpp"

using namespace medtest::mtests;
using medtest::rng::Xoshiro256;
namespace dist = medtest::dist;

namespace {

FitSummary make_fit(double estimate, double se, int df = 100,
                    bool normal_ref = true) {
    FitSummary f;
    f.estimate = estimate;
    f.se = se;
    f.t_stat = estimate / se;
    f.df = df;
    f.u = normal_ref ? dist::normal_cdf(f.t_stat) : dist::student_t_cdf(f.t_stat, df);
    return f;
}

}  // namespace

TEST_CASE("sobel") {
    const TestReport zero = sobel(make_fit(1.0, 1.0), make_fit(0.0, 1.0));
    CHECK(*zero.statistic == doctest::Approx(0.0));
    CHECK(*zero.p_value == doctest::Approx(1.0));

    // Hand evaluation: z = 0.06 / 0.025 = 2.4, p = 2(1 - Phi(2.4)).
    const TestReport rep = sobel(make_fit(0.2, 0.05), make_fit(0.3, 0.1));
    CHECK(*rep.statistic == doctest::Approx(2.4).epsilon(1e-12));
    CHECK(*rep.p_value == doctest::Approx(0.016395071845).epsilon(1e-9));
    CHECK(rep.rejects(0.05));
    CHECK_FALSE(rep.rejects(0.01));

    // Both estimates zero: statistic 0, p = 1, not an error.
    const TestReport bothzero = sobel(make_fit(0.0, 1.0), make_fit(0.0, 2.0));
    CHECK(*bothzero.statistic == doctest::Approx(0.0));
    CHECK(*bothzero.p_value == doctest::Approx(1.0));

    CHECK_THROWS_AS((void)sobel(make_fit(0.2, 0.0 /*bad se*/), make_fit(0.3, 0.1)),
                    medtest::DomainError);

    SUBCASE("|z| <= min(|t_beta|, |t_gamma|)") {
        Xoshiro256 gen(404, 0);
        for (int i = 0; i < 10000; ++i) {
            const FitSummary fb = make_fit(4.0 * gen.uniform01() - 2.0, 0.05 + gen.uniform01());
            const FitSummary fg = make_fit(4.0 * gen.uniform01() - 2.0, 0.05 + gen.uniform01());
            const TestReport rep2 = sobel(fb, fg);
            CHECK(std::fabs(*rep2.statistic) <=
                  std::min(std::fabs(fb.t_stat), std::fabs(fg.t_stat)) + 1e-12);
        }
    }
}

TEST_CASE("maxp") {
    FitSummary fb = make_fit(0.0, 1.0);
    FitSummary fg = make_fit(0.0, 1.0);
    fb.u = 0.5;
    fg.u = 0.5;
    CHECK(*maxp(fb, fg).p_value == doctest::Approx(1.0));
    fb.u = 0.01;
    fg.u = 0.99;
    CHECK(*maxp(fb, fg).p_value == doctest::Approx(0.02).epsilon(1e-12));

    SUBCASE("rejection is exactly S1 membership") {
        Xoshiro256 gen(405, 0);
        for (int i = 0; i < 10000; ++i) {
            fb.u = gen.uniform01();
            fg.u = gen.uniform01();
            const double alpha = 0.2 * gen.uniform01() + 1e-9;
            CHECK((*maxp(fb, fg).p_value <= alpha) ==
                  medtest::regions::s1_contains({fb.u, fg.u}, alpha));
        }
    }
}

TEST_CASE("product normal test") {
    const TestReport rep = product_normal_test(make_fit(0.0, 1.0), make_fit(1.3, 0.7));
    CHECK(*rep.p_value == doctest::Approx(1.0));

    double prev = 1.0;
    for (double t = 0.4; t < 6.0; t += 0.4) {
        const TestReport r = product_normal_test(make_fit(t, 1.0), make_fit(t, 1.0));
        CHECK(*r.p_value < prev);
        prev = *r.p_value;
    }
}

TEST_CASE("region-based tests and the unified report") {
    const TestReport s = s_test({0.5, 0.5}, {0.01, 0.05, 0.1});
    CHECK_FALSE(s.p_value.has_value());
    CHECK_FALSE(s.p_threshold.has_value());
    CHECK(s.rejects(0.05));  // center of the bands

    const TestReport ps = ps_test({0.5, 0.5}, 0.5, {0.05});
    CHECK(*ps.p_value == doctest::Approx(1.0));
    CHECK_FALSE(ps.rejects(0.05));

    RegionSpec spec;
    spec.family = medtest::regions::Family::ASQ;
    spec.lambda = 0.5;
    const TestReport asq_none = asq_test({0.5, 0.5}, spec, {0.05});
    CHECK_FALSE(asq_none.p_threshold.has_value());
    CHECK_FALSE(asq_none.rejects(0.05));

    const TestReport asq_hit = asq_test({0.012, 0.019}, spec, {0.01, 0.05, 0.1});
    REQUIRE(asq_hit.p_threshold.has_value());
    CHECK(*asq_hit.p_threshold == doctest::Approx(0.05));
    CHECK(asq_hit.rejects(0.05));
    CHECK(asq_hit.rejects(0.1));
    CHECK_FALSE(asq_hit.rejects(0.01));
}

TEST_CASE("report decisions are consistent with the p-value") {
    Xoshiro256 gen(406, 0);
    RegionSpec spec;
    spec.family = medtest::regions::Family::ASQ;
    spec.lambda = 0.5;
    const std::vector<double> alphas = {0.001, 0.005, 0.01, 0.05, 0.1};
    for (int i = 0; i < 4000; ++i) {
        FitSummary fb = make_fit(3.0 * gen.uniform01() - 1.5, 0.1 + gen.uniform01());
        FitSummary fg = make_fit(3.0 * gen.uniform01() - 1.5, 0.1 + gen.uniform01());
        for (const TestReport& rep :
             {sobel(fb, fg, alphas), maxp(fb, fg, alphas), product_normal_test(fb, fg, alphas),
              ps_test({fb.u, fg.u}, 0.5, alphas), asq_test({fb.u, fg.u}, spec, alphas)}) {
            for (const auto& [a, rej] : rep.reject_at) {
                bool expect = false;
                if (rep.p_value) expect = *rep.p_value <= a;
                if (rep.p_threshold) expect = *rep.p_threshold <= a;
                CHECK(rej == expect);
            }
        }
    }
}

TEST_CASE("dominance and conservativeness orderings") {
    Xoshiro256 gen(407, 0);
    RegionSpec spec;
    spec.family = medtest::regions::Family::ASQ;
    spec.lambda = 0.5;
    for (int i = 0; i < 10000; ++i) {
        const FitSummary fb = make_fit(6.0 * gen.uniform01() - 3.0, 0.1 + gen.uniform01());
        const FitSummary fg = make_fit(6.0 * gen.uniform01() - 3.0, 0.1 + gen.uniform01());
        const double p_maxp = *maxp(fb, fg).p_value;
        const double p_sobel = *sobel(fb, fg).p_value;
        // Sobel cannot beat joint significance when U uses the normal reference.
        CHECK(p_sobel >= p_maxp - 1e-12);
        // maxP rejection implies PS and ASQ rejection at every ladder level.
        for (double a : medtest::regions::RegionSpec::default_ladder()) {
            if (p_maxp <= a) {
                CHECK(*ps_test({fb.u, fg.u}, 0.5).p_value <= a);
                CHECK(medtest::regions::asq_contains({fb.u, fg.u}, a, 0.5, true));
            }
        }
    }
}
