#include "medtest/worstcase.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <thread>

#include "medtest/distributions.hpp"
#include "medtest/errors.hpp"
#include "medtest/quadrature.hpp"
#include "medtest/regions.hpp"

namespace medtest::worstcase {

namespace {

constexpr int kT5Df = 5;

double central_cdf(Scenario sc, double q) {
    return sc == Scenario::Normal ? dist::normal_cdf(q) : dist::student_t_cdf(q, kT5Df);
}

double central_quantile(Scenario sc, double p) {
    return sc == Scenario::Normal ? dist::normal_quantile(p)
                                  : dist::student_t_quantile(p, kT5Df);
}

double noncentral_cdf(Scenario sc, double delta, double q) {
    return sc == Scenario::Normal ? dist::normal_cdf(q - delta)
                                  : dist::noncentral_t_cdf(q, kT5Df, delta);
}

double noncentral_pdf(Scenario sc, double delta, double q) {
    return sc == Scenario::Normal ? dist::normal_pdf(q - delta)
                                  : dist::noncentral_t_pdf(q, kT5Df, delta);
}

// Golden-section maximization on [lo, hi] for a unimodal bracket.
double golden_max(const std::function<double(double)>& f, double lo, double hi,
                  double tol, double* best_value) {
    constexpr double kInvPhi = 0.6180339887498949;
    double a = lo, b = hi;
    double x1 = b - kInvPhi * (b - a);
    double x2 = a + kInvPhi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > tol) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + kInvPhi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - kInvPhi * (b - a);
            f1 = f(x1);
        }
    }
    const double xm = 0.5 * (a + b);
    const double fm = f(xm);
    if (best_value) *best_value = std::max({fm, f1, f2});
    if (f1 >= f2 && f1 >= fm) return x1;
    if (f2 >= f1 && f2 >= fm) return x2;
    return xm;
}

std::vector<double> slice_kinks(double alpha, double lambda) {
    const double reach = alpha + lambda * (1.0 - 1.25 * alpha);
    std::vector<double> pts = {alpha / 3.0,
                               alpha / 2.0,
                               0.75 * alpha,
                               alpha,
                               1.25 * alpha,
                               0.1,
                               0.15,
                               0.5 - 0.25 * alpha,
                               0.5,
                               0.5 * (reach - 0.25 * alpha),
                               0.5 * (reach + 0.25 * alpha),
                               reach - 0.5 * alpha};
    std::vector<double> all;
    for (double p : pts) {
        if (p > 0.0 && p < 1.0) all.push_back(p);
        const double q = 1.0 - p;
        if (q > 0.0 && q < 1.0) all.push_back(q);
    }
    std::sort(all.begin(), all.end());
    return all;
}

struct DeltaObjective {
    double alpha;
    double lambda;
    Scenario scenario;
    double operator()(double delta) const {
        return type1_error(alpha, lambda, delta, scenario) / alpha;
    }
};

AlphaResult optimize_delta(double alpha, double lambda, Scenario scenario,
                           const std::vector<double>& delta_grid) {
    DeltaObjective obj{alpha, lambda, scenario};
    std::size_t best = 0;
    double best_val = -1.0;
    std::vector<double> vals(delta_grid.size());
    for (std::size_t i = 0; i < delta_grid.size(); ++i) {
        vals[i] = obj(delta_grid[i]);
        if (vals[i] > best_val) {
            best_val = vals[i];
            best = i;
        }
    }
    const double lo = delta_grid[best > 0 ? best - 1 : 0];
    const double hi = delta_grid[std::min(best + 1, delta_grid.size() - 1)];
    double refined_val = best_val;
    double refined_delta = delta_grid[best];
    if (hi > lo) {
        double v = 0.0;
        const double d = golden_max(obj, lo, hi, 1e-3, &v);
        if (v > refined_val) {
            refined_val = v;
            refined_delta = d;
        }
    }
    return {alpha, refined_delta, refined_val * alpha, refined_val};
}

}  // namespace

double u_density(Scenario scenario, double delta, double x) {
    x = std::clamp(x, 1e-12, 1.0 - 1e-12);
    const double q = central_quantile(scenario, x);
    if (scenario == Scenario::Normal) {
        // phi(q - delta) / phi(q)
        return std::exp(delta * q - 0.5 * delta * delta);
    }
    const double denom = dist::student_t_pdf(q, kT5Df);
    return dist::noncentral_t_pdf(q, kT5Df, delta) / denom;
}

double type1_error(double alpha, double lambda, double delta, Scenario scenario) {
    if (!(alpha > 0.0 && alpha <= regions::kAlphaMax + 1e-12))
        throw DomainError("type1_error: alpha in (0, 0.2]");
    if (!std::isfinite(delta)) throw DomainError("type1_error: delta must be finite");

    regions::RegionSpec spec;
    spec.family = regions::Family::PS;
    spec.alpha = alpha;
    spec.lambda = lambda;

    // Below alpha/3 and above 1 - alpha/3 the slice is exactly alpha (corner
    // strips only); those tails integrate in closed form through the
    // noncentral CDF. The middle runs in the statistic scale q = F0^{-1}(x),
    // which avoids quantile and density-ratio evaluations per point.
    const double x_lo = alpha / 3.0;
    const double x_hi = 1.0 - alpha / 3.0;
    const double q_lo = central_quantile(scenario, x_lo);
    const double q_hi = central_quantile(scenario, x_hi);

    double total = alpha * noncentral_cdf(scenario, delta, q_lo);
    total += alpha * (1.0 - noncentral_cdf(scenario, delta, q_hi));

    quad::QuadOptions opts;
    opts.abs_tol = std::max(1e-9, 2e-5 * alpha);
    opts.max_subdivisions = 6000;
    for (double kink : slice_kinks(alpha, lambda)) {
        if (kink > x_lo && kink < x_hi)
            opts.breakpoints.push_back(central_quantile(scenario, kink));
    }
    if (delta > q_lo && delta < q_hi) opts.breakpoints.push_back(delta);

    auto integrand = [&](double q) {
        const double x = central_cdf(scenario, q);
        const double g = regions::cross_section(spec, x, alpha, /*effective=*/true);
        return g * noncentral_pdf(scenario, delta, q);
    };
    quad::QuadResult r = quad::integrate(integrand, q_lo, q_hi, opts);
    if (!r.converged)
        throw NumericalError("type1_error: quadrature did not converge", total + r.value,
                             r.error_estimate);
    return total + r.value;
}

WorstCaseReport maximize_inflation(Scenario scenario, double lambda,
                                   const std::vector<double>& alpha_grid,
                                   const std::vector<double>& delta_grid, int threads) {
    if (alpha_grid.empty() || delta_grid.empty())
        throw ConfigError("maximize_inflation: grids must be nonempty");
    WorstCaseReport report;
    report.scenario = scenario;
    report.lambda = lambda;
    report.per_alpha.resize(alpha_grid.size());

    const int nthreads = std::max(1, threads);
    std::vector<std::thread> pool;
    auto worker = [&](int t) {
        for (std::size_t i = t; i < alpha_grid.size(); i += nthreads)
            report.per_alpha[i] = optimize_delta(alpha_grid[i], lambda, scenario, delta_grid);
    };
    if (nthreads == 1) {
        worker(0);
    } else {
        for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker, t);
        for (auto& th : pool) th.join();
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i < report.per_alpha.size(); ++i)
        if (report.per_alpha[i].inflation_ratio > report.per_alpha[best].inflation_ratio)
            best = i;
    report.global_max = report.per_alpha[best];

    // Refine the level between its grid neighbours.
    const double a_lo = alpha_grid[best > 0 ? best - 1 : 0];
    const double a_hi = alpha_grid[std::min(best + 1, alpha_grid.size() - 1)];
    if (a_hi > a_lo) {
        auto ratio_at = [&](double a) {
            return optimize_delta(a, lambda, scenario, delta_grid).inflation_ratio;
        };
        double v = 0.0;
        const double a_star = golden_max(ratio_at, a_lo, a_hi, 5e-4, &v);
        if (v > report.global_max.inflation_ratio)
            report.global_max = optimize_delta(a_star, lambda, scenario, delta_grid);
    }
    return report;
}

std::vector<double> default_alpha_grid() {
    return {0.0005, 0.001, 0.0015, 0.002, 0.0025, 0.003, 0.004,  0.005, 0.006, 0.008,
            0.01,   0.012, 0.014,  0.016, 0.018,  0.02,  0.022,  0.024, 0.026, 0.028,
            0.03,   0.032, 0.034,  0.036, 0.04,   0.045, 0.05,   0.06,  0.07,  0.08,
            0.09,   0.1,   0.12,   0.14,  0.16,   0.18,  0.2};
}

std::vector<double> default_delta_grid() {
    std::vector<double> grid;
    for (double d = 0.0; d <= 8.0; d += 0.25) grid.push_back(d);
    for (double d = 9.0; d <= 20.0; d += 1.0) grid.push_back(d);
    for (double d = 25.0; d <= 50.0; d += 5.0) grid.push_back(d);
    return grid;
}

std::string format_csv(const WorstCaseReport& report) {
    std::ostringstream os;
    os << "scenario,lambda,alpha,worst_delta,max_type1_error,inflation_ratio,is_global_max\n";
    char buf[256];
    const char* name = report.scenario == Scenario::Normal ? "normal" : "t5";
    for (const AlphaResult& r : report.per_alpha) {
        std::snprintf(buf, sizeof(buf), "%s,%.10g,%.10g,%.10g,%.10g,%.10g,0\n", name,
                      report.lambda, r.alpha, r.worst_delta, r.max_type1_error,
                      r.inflation_ratio);
        os << buf;
    }
    const AlphaResult& g = report.global_max;
    std::snprintf(buf, sizeof(buf), "%s,%.10g,%.10g,%.10g,%.10g,%.10g,1\n", name,
                  report.lambda, g.alpha, g.worst_delta, g.max_type1_error,
                  g.inflation_ratio);
    os << buf;
    return os.str();
}

}  // namespace medtest::worstcase
