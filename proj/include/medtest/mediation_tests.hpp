#ifndef MEDTEST_MEDIATION_TESTS_HPP
#define MEDTEST_MEDIATION_TESTS_HPP

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "medtest/linmod.hpp"
#include "medtest/regions.hpp"

namespace medtest::mtests {

enum class Method { Sobel, MaxP, ProductNormal, S, PS, ASQ };

const char* method_name(Method m);
constexpr int kNumMethods = 6;

struct TestReport {
    Method method = Method::Sobel;
    std::optional<double> statistic{};
    std::optional<double> p_value{};
    std::optional<double> p_threshold{};  // ASQ: strict upper bound on the p-value
    std::vector<std::pair<double, bool>> reject_at{};

    bool rejects(double alpha) const;
};

using linmod::FitSummary;
using regions::CumulativePair;
using regions::RegionSpec;

// First-order delta method on beta*gamma with the normal reference.
TestReport sobel(const FitSummary& beta_fit, const FitSummary& gamma_fit,
                 const std::vector<double>& alphas = {0.05});

// Joint significance: p = larger of the two two-sided p-values; rejection at
// alpha is exactly S1 membership.
TestReport maxp(const FitSummary& beta_fit, const FitSummary& gamma_fit,
                const std::vector<double>& alphas = {0.05});

// Refers t_beta * t_gamma to the product of two standard normals.
TestReport product_normal_test(const FitSummary& beta_fit, const FitSummary& gamma_fit,
                               const std::vector<double>& alphas = {0.05});

// Decision-only: the S-test is not compatible across levels, so no p-value
// is reported.
TestReport s_test(const CumulativePair& pair, const std::vector<double>& alphas = {0.05});

TestReport ps_test(const CumulativePair& pair, double lambda,
                   const std::vector<double>& alphas = {0.05});

TestReport asq_test(const CumulativePair& pair, const RegionSpec& spec,
                    const std::vector<double>& alphas = {0.05});

}  // namespace medtest::mtests

#endif
