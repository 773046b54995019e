#ifndef MEDTEST_WORSTCASE_HPP
#define MEDTEST_WORSTCASE_HPP

#include <string>
#include <vector>

namespace medtest::worstcase {

// Reference law of the beta test statistic under the single null (gamma = 0,
// beta != 0): small-sample t with 5 df, or the asymptotic normal.
enum class Scenario { T5, Normal };

// Density of U_beta = F0(T_beta) when T_beta follows the noncentral law with
// parameter delta. x is clamped away from {0,1} to guard the quantile tails.
double u_density(Scenario scenario, double delta, double x);

// Type I error of the PS-test at the single null:
//   integral over [0,1] of g(x) f_{U_beta}(x) dx,
// with g the cross-section of the effective PS region. Absolute error <= 1e-6
// (tighter at small alpha so the inflation ratio stays resolved).
double type1_error(double alpha, double lambda, double delta, Scenario scenario);

struct AlphaResult {
    double alpha;
    double worst_delta;
    double max_type1_error;
    double inflation_ratio;  // max type I error / alpha
};

struct WorstCaseReport {
    Scenario scenario = Scenario::Normal;
    double lambda = 1.0;
    std::vector<AlphaResult> per_alpha;
    AlphaResult global_max{};
};

// Grid search over delta (with golden-section refinement) per alpha, then the
// maximum over the alpha grid (also golden-refined between neighbours).
WorstCaseReport maximize_inflation(Scenario scenario, double lambda,
                                   const std::vector<double>& alpha_grid,
                                   const std::vector<double>& delta_grid,
                                   int threads = 1);

std::vector<double> default_alpha_grid();
std::vector<double> default_delta_grid();

std::string format_csv(const WorstCaseReport& report);

}  // namespace medtest::worstcase

#endif
