#include "medtest/simlab.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

#include "medtest/distributions.hpp"
#include "medtest/errors.hpp"
#include "medtest/rng.hpp"

namespace medtest::sim {

namespace {

using mtests::Method;

// Bisection inverse of the product-normal tail; the per-replicate decision
// then reduces to one comparison on |t_beta * t_gamma|.
double product_normal_critical(double alpha) {
    double lo = 0.0, hi = 60.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (dist::product_normal_tail(mid) > alpha)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-12) break;
    }
    return 0.5 * (lo + hi);
}

struct Replicate {
    linmod::MediationFits fits;
    long redraws = 0;
};

// One simulated dataset and its two regression fits. The stream is consumed
// in a fixed order (G, then eps_M, then eps_Y) so results are reproducible.
Replicate simulate_replicate(const SimScenario& sc, std::uint64_t rep,
                             Eigen::MatrixXd& Xb, Eigen::MatrixXd& Xg,
                             Eigen::VectorXd& yb, Eigen::VectorXd& yg) {
    rng::Xoshiro256 gen(sc.seed, rep);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int n = sc.n;

    Replicate out;
    Eigen::VectorXd g(n);
    for (;;) {
        int ones = 0;
        for (int i = 0; i < n; ++i) {
            const double gi = gen.uniform01() < 0.5 ? 0.0 : 1.0;
            g(i) = gi;
            ones += gi > 0.5;
        }
        if (ones > 0 && ones < n) break;
        ++out.redraws;
    }
    for (int i = 0; i < n; ++i) {
        const double m = sc.beta * g(i) + gauss(gen);
        const double y = sc.direct_effect * g(i) + sc.gamma * m + gauss(gen);
        Xb(i, 0) = 1.0;
        Xb(i, 1) = g(i);
        Xg(i, 0) = 1.0;
        Xg(i, 1) = g(i);
        Xg(i, 2) = m;
        yb(i) = m;
        yg(i) = y;
    }
    out.fits.beta = linmod::ols_fit(Xb, yb, 1, sc.reference);
    out.fits.gamma = linmod::ols_fit(Xg, yg, 2, sc.reference);
    out.fits.n_complete = n;
    return out;
}

struct Decisions {
    std::array<long, mtests::kNumMethods> count{};
    long redraws = 0;
};

}  // namespace

void SimScenario::validate() const {
    if (n < 20) throw ConfigError("scenario: n must be >= 20");
    if (replicates < 1) throw ConfigError("scenario: replicates must be >= 1");
    if (!(alpha > 0.0 && alpha <= regions::kAlphaMax)) throw ConfigError("scenario: alpha in (0, 0.2]");
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("scenario: lambda in [0, 1]");
}

double SimCell::relative_efficiency(mtests::Method m) const {
    const double denom = rate[static_cast<int>(Method::MaxP)];
    if (denom <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    return rate[static_cast<int>(m)] / denom;
}

SimCell run_scenario(const SimScenario& scenario, int threads) {
    scenario.validate();
    const long reps = scenario.replicates;
    const double alpha = scenario.alpha;
    const double z_crit = dist::normal_quantile(1.0 - 0.5 * alpha);
    const double pn_crit = product_normal_critical(alpha);
    regions::RegionSpec asq_spec;
    asq_spec.family = regions::Family::ASQ;
    asq_spec.alpha = alpha;
    asq_spec.lambda = scenario.lambda;
    asq_spec.ladder = scenario.ladder.empty() ? regions::RegionSpec::default_ladder()
                                              : scenario.ladder;
    asq_spec.omit_center = scenario.omit_center;
    asq_spec.validate();

    const int nthreads = std::max(1, threads);
    std::vector<Decisions> partial(nthreads);

    auto worker = [&](int t) {
        Eigen::MatrixXd Xb(scenario.n, 2), Xg(scenario.n, 3);
        Eigen::VectorXd yb(scenario.n), yg(scenario.n);
        Decisions& d = partial[t];
        for (long rep = t; rep < reps; rep += nthreads) {
            Replicate r = simulate_replicate(scenario, static_cast<std::uint64_t>(rep),
                                             Xb, Xg, yb, yg);
            d.redraws += r.redraws;
            const auto& fb = r.fits.beta;
            const auto& fg = r.fits.gamma;
            const regions::CumulativePair pair = r.fits.pair();

            // Sobel: |z| = |tb*tg| / sqrt(tb^2 + tg^2)
            const double tb = fb.t_stat, tg = fg.t_stat;
            const double denom = std::sqrt(tb * tb + tg * tg);
            const double z = denom > 0.0 ? std::fabs(tb * tg) / denom : 0.0;
            if (z >= z_crit) ++d.count[static_cast<int>(Method::Sobel)];
            if (2.0 * std::max(regions::fold(pair.u), regions::fold(pair.v)) <= alpha)
                ++d.count[static_cast<int>(Method::MaxP)];
            if (std::fabs(tb * tg) >= pn_crit)
                ++d.count[static_cast<int>(Method::ProductNormal)];
            if (regions::s_contains(pair, alpha)) ++d.count[static_cast<int>(Method::S)];
            if (regions::ps_pvalue(pair, scenario.lambda) <= alpha)
                ++d.count[static_cast<int>(Method::PS)];
            if (regions::asq_contains(pair, alpha, scenario.lambda, scenario.omit_center))
                ++d.count[static_cast<int>(Method::ASQ)];
        }
    };

    if (nthreads == 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(nthreads);
        for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker, t);
        for (auto& th : pool) th.join();
    }

    SimCell cell;
    cell.replicates = reps;
    for (const Decisions& d : partial) {
        cell.redraws += d.redraws;
        for (int m = 0; m < mtests::kNumMethods; ++m) cell.reject_count[m] += d.count[m];
    }
    for (int m = 0; m < mtests::kNumMethods; ++m) {
        const double r = static_cast<double>(cell.reject_count[m]) / reps;
        cell.rate[m] = r;
        cell.mc_se[m] = std::sqrt(r * (1.0 - r) / reps);
    }
    return cell;
}

Table run_table(const std::vector<SimScenario>& scenarios, int threads, bool power_table) {
    Table table;
    table.power_table = power_table;
    table.rows.reserve(scenarios.size());
    for (const SimScenario& sc : scenarios)
        table.rows.push_back({sc, run_scenario(sc, threads)});
    return table;
}

namespace {

std::vector<SimScenario> make_scenarios(const std::vector<std::pair<double, double>>& effects,
                                        std::uint64_t seed, long replicates) {
    std::vector<SimScenario> out;
    std::uint64_t stream = 0;
    for (const auto& [beta, gamma] : effects)
        for (int n : {100, 500, 1000}) {
            SimScenario sc;
            sc.beta = beta;
            sc.gamma = gamma;
            sc.n = n;
            sc.replicates = replicates;
            // Distinct seed per cell, derived from the master seed.
            std::uint64_t mix = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
            sc.seed = rng::splitmix64(mix);
            ++stream;
            out.push_back(sc);
        }
    return out;
}

}  // namespace

std::vector<SimScenario> table1_scenarios(std::uint64_t seed, long replicates) {
    return make_scenarios({{0.0, 0.0},
                           {0.0, 0.1},
                           {0.0, 0.2},
                           {0.0, 0.3},
                           {0.0, 0.4},
                           {0.1, 0.0},
                           {0.2, 0.0},
                           {0.3, 0.0},
                           {0.4, 0.0}},
                          seed, replicates);
}

std::vector<SimScenario> table2_scenarios(std::uint64_t seed, long replicates) {
    return make_scenarios({{0.05, 0.03},
                           {0.1, 0.1},
                           {0.1, 0.2},
                           {0.1, 0.3},
                           {0.1, 0.4},
                           {0.4, 0.1},
                           {0.4, 0.2},
                           {0.4, 0.3},
                           {0.4, 0.4}},
                          seed, replicates);
}

namespace {

constexpr int kSobel = 0, kMaxP = 1, kPN = 2, kS = 3, kPS = 4, kASQ = 5;

ReferenceRow ref_row(double beta, double gamma, int n,
                     std::initializer_list<std::pair<int, RefValue>> values) {
    ReferenceRow row{beta, gamma, n, {}};
    for (const auto& [m, v] : values) row.value[m] = v;
    return row;
}

RefValue ub(double v) { return {v, true}; }
RefValue ex(double v) { return {v, false}; }

}  // namespace

const std::vector<ReferenceRow>& reference_table1() {
    static const std::vector<ReferenceRow> table = {
        ref_row(0.0, 0.0, 100, {{kSobel, ub(0.001)}, {kMaxP, ex(0.003)}, {kPN, ex(0.054)}, {kS, ex(0.053)}, {kPS, ex(0.026)}, {kASQ, ex(0.025)}}),
        ref_row(0.0, 0.0, 500, {{kSobel, ub(0.001)}, {kMaxP, ex(0.003)}, {kPN, ex(0.048)}, {kS, ex(0.049)}, {kPS, ex(0.025)}, {kASQ, ex(0.024)}}),
        ref_row(0.0, 0.0, 1000, {{kSobel, ub(0.001)}, {kMaxP, ex(0.003)}, {kPN, ex(0.051)}, {kS, ex(0.049)}, {kPS, ex(0.024)}, {kASQ, ex(0.024)}}),
        ref_row(0.0, 0.1, 100, {{kSobel, ex(0.001)}, {kMaxP, ex(0.008)}, {kPN, ex(0.110)}, {kS, ex(0.049)}, {kPS, ex(0.033)}, {kASQ, ex(0.032)}}),
        ref_row(0.0, 0.1, 500, {{kSobel, ex(0.005)}, {kMaxP, ex(0.028)}, {kPN, ex(0.303)}, {kS, ex(0.050)}, {kPS, ex(0.047)}, {kASQ, ex(0.047)}}),
        ref_row(0.0, 0.1, 1000, {{kSobel, ex(0.012)}, {kMaxP, ex(0.041)}, {kPN, ex(0.459)}, {kS, ex(0.047)}, {kPS, ex(0.047)}, {kASQ, ex(0.046)}}),
        ref_row(0.0, 0.2, 100, {{kSobel, ex(0.004)}, {kMaxP, ex(0.023)}, {kPN, ex(0.261)}, {kS, ex(0.047)}, {kPS, ex(0.042)}, {kASQ, ex(0.042)}}),
        ref_row(0.0, 0.2, 500, {{kSobel, ex(0.029)}, {kMaxP, ex(0.051)}, {kPN, ex(0.613)}, {kS, ex(0.051)}, {kPS, ex(0.051)}, {kASQ, ex(0.051)}}),
        ref_row(0.0, 0.2, 1000, {{kSobel, ex(0.038)}, {kMaxP, ex(0.048)}, {kPN, ex(0.723)}, {kS, ex(0.048)}, {kPS, ex(0.048)}, {kASQ, ex(0.048)}}),
        ref_row(0.0, 0.3, 100, {{kSobel, ex(0.013)}, {kMaxP, ex(0.042)}, {kPN, ex(0.435)}, {kS, ex(0.051)}, {kPS, ex(0.051)}, {kASQ, ex(0.050)}}),
        ref_row(0.0, 0.3, 500, {{kSobel, ex(0.041)}, {kMaxP, ex(0.052)}, {kPN, ex(0.740)}, {kS, ex(0.052)}, {kPS, ex(0.052)}, {kASQ, ex(0.052)}}),
        ref_row(0.0, 0.3, 1000, {{kSobel, ex(0.044)}, {kMaxP, ex(0.049)}, {kPN, ex(0.814)}, {kS, ex(0.049)}, {kPS, ex(0.049)}, {kASQ, ex(0.049)}}),
        ref_row(0.0, 0.4, 100, {{kSobel, ex(0.023)}, {kMaxP, ex(0.048)}, {kPN, ex(0.564)}, {kS, ex(0.050)}, {kPS, ex(0.050)}, {kASQ, ex(0.050)}}),
        ref_row(0.0, 0.4, 500, {{kSobel, ex(0.045)}, {kMaxP, ex(0.051)}, {kPN, ex(0.801)}, {kS, ex(0.051)}, {kPS, ex(0.051)}, {kASQ, ex(0.051)}}),
        ref_row(0.0, 0.4, 1000, {{kSobel, ex(0.045)}, {kMaxP, ex(0.048)}, {kPN, ex(0.861)}, {kS, ex(0.048)}, {kPS, ex(0.048)}, {kASQ, ex(0.048)}}),
        ref_row(0.1, 0.0, 100, {{kSobel, ub(0.001)}, {kMaxP, ex(0.004)}, {kPN, ex(0.070)}, {kS, ex(0.049)}, {kPS, ex(0.026)}, {kASQ, ex(0.026)}}),
        ref_row(0.1, 0.0, 500, {{kSobel, ex(0.001)}, {kMaxP, ex(0.009)}, {kPN, ex(0.126)}, {kS, ex(0.050)}, {kPS, ex(0.035)}, {kASQ, ex(0.035)}}),
        ref_row(0.1, 0.0, 1000, {{kSobel, ex(0.002)}, {kMaxP, ex(0.017)}, {kPN, ex(0.191)}, {kS, ex(0.049)}, {kPS, ex(0.042)}, {kASQ, ex(0.041)}}),
        ref_row(0.2, 0.0, 100, {{kSobel, ex(0.001)}, {kMaxP, ex(0.009)}, {kPN, ex(0.116)}, {kS, ex(0.053)}, {kPS, ex(0.035)}, {kASQ, ex(0.035)}}),
        ref_row(0.2, 0.0, 500, {{kSobel, ex(0.006)}, {kMaxP, ex(0.031)}, {kPN, ex(0.307)}, {kS, ex(0.048)}, {kPS, ex(0.046)}, {kASQ, ex(0.047)}}),
        ref_row(0.2, 0.0, 1000, {{kSobel, ex(0.013)}, {kMaxP, ex(0.042)}, {kPN, ex(0.457)}, {kS, ex(0.048)}, {kPS, ex(0.048)}, {kASQ, ex(0.047)}}),
        ref_row(0.3, 0.0, 100, {{kSobel, ex(0.002)}, {kMaxP, ex(0.016)}, {kPN, ex(0.187)}, {kS, ex(0.048)}, {kPS, ex(0.039)}, {kASQ, ex(0.038)}}),
        ref_row(0.3, 0.0, 500, {{kSobel, ex(0.016)}, {kMaxP, ex(0.046)}, {kPN, ex(0.488)}, {kS, ex(0.048)}, {kPS, ex(0.048)}, {kASQ, ex(0.049)}}),
        ref_row(0.3, 0.0, 1000, {{kSobel, ex(0.030)}, {kMaxP, ex(0.050)}, {kPN, ex(0.626)}, {kS, ex(0.050)}, {kPS, ex(0.050)}, {kASQ, ex(0.050)}}),
        ref_row(0.4, 0.0, 100, {{kSobel, ex(0.005)}, {kMaxP, ex(0.025)}, {kPN, ex(0.268)}, {kS, ex(0.049)}, {kPS, ex(0.045)}, {kASQ, ex(0.044)}}),
        ref_row(0.4, 0.0, 500, {{kSobel, ex(0.028)}, {kMaxP, ex(0.051)}, {kPN, ex(0.615)}, {kS, ex(0.051)}, {kPS, ex(0.052)}, {kASQ, ex(0.052)}}),
        ref_row(0.4, 0.0, 1000, {{kSobel, ex(0.039)}, {kMaxP, ex(0.049)}, {kPN, ex(0.724)}, {kS, ex(0.049)}, {kPS, ex(0.049)}, {kASQ, ex(0.049)}}),
    };
    return table;
}

const std::vector<ReferenceRow>& reference_table2() {
    static const std::vector<ReferenceRow> table = {
        ref_row(0.05, 0.03, 100, {{kSobel, ub(0.001)}, {kMaxP, ex(0.003)}, {kS, ex(0.052)}, {kPS, ex(0.028)}, {kASQ, ex(0.026)}}),
        ref_row(0.05, 0.03, 500, {{kSobel, ex(0.001)}, {kMaxP, ex(0.010)}, {kS, ex(0.054)}, {kPS, ex(0.037)}, {kASQ, ex(0.035)}}),
        ref_row(0.05, 0.03, 1000, {{kSobel, ex(0.002)}, {kMaxP, ex(0.019)}, {kS, ex(0.064)}, {kPS, ex(0.052)}, {kASQ, ex(0.050)}}),
        ref_row(0.1, 0.1, 100, {{kSobel, ex(0.001)}, {kMaxP, ex(0.011)}, {kS, ex(0.053)}, {kPS, ex(0.039)}, {kASQ, ex(0.038)}}),
        ref_row(0.1, 0.1, 500, {{kSobel, ex(0.033)}, {kMaxP, ex(0.122)}, {kS, ex(0.148)}, {kPS, ex(0.149)}, {kASQ, ex(0.148)}}),
        ref_row(0.1, 0.1, 1000, {{kSobel, ex(0.152)}, {kMaxP, ex(0.307)}, {kS, ex(0.317)}, {kPS, ex(0.320)}, {kASQ, ex(0.317)}}),
        ref_row(0.1, 0.2, 100, {{kSobel, ex(0.007)}, {kMaxP, ex(0.037)}, {kS, ex(0.065)}, {kPS, ex(0.061)}, {kASQ, ex(0.061)}}),
        ref_row(0.1, 0.2, 500, {{kSobel, ex(0.132)}, {kMaxP, ex(0.198)}, {kS, ex(0.198)}, {kPS, ex(0.198)}, {kASQ, ex(0.198)}}),
        ref_row(0.1, 0.2, 1000, {{kSobel, ex(0.311)}, {kMaxP, ex(0.351)}, {kS, ex(0.351)}, {kPS, ex(0.351)}, {kASQ, ex(0.351)}}),
        ref_row(0.1, 0.3, 100, {{kSobel, ex(0.023)}, {kMaxP, ex(0.066)}, {kS, ex(0.075)}, {kPS, ex(0.075)}, {kASQ, ex(0.074)}}),
        ref_row(0.1, 0.3, 500, {{kSobel, ex(0.175)}, {kMaxP, ex(0.202)}, {kS, ex(0.202)}, {kPS, ex(0.202)}, {kASQ, ex(0.202)}}),
        ref_row(0.1, 0.3, 1000, {{kSobel, ex(0.327)}, {kMaxP, ex(0.342)}, {kS, ex(0.342)}, {kPS, ex(0.342)}, {kASQ, ex(0.342)}}),
        ref_row(0.1, 0.4, 100, {{kSobel, ex(0.041)}, {kMaxP, ex(0.076)}, {kS, ex(0.078)}, {kPS, ex(0.078)}, {kASQ, ex(0.078)}}),
        ref_row(0.1, 0.4, 500, {{kSobel, ex(0.190)}, {kMaxP, ex(0.202)}, {kS, ex(0.202)}, {kPS, ex(0.202)}, {kASQ, ex(0.202)}}),
        ref_row(0.1, 0.4, 1000, {{kSobel, ex(0.337)}, {kMaxP, ex(0.345)}, {kS, ex(0.345)}, {kPS, ex(0.345)}, {kASQ, ex(0.345)}}),
        ref_row(0.4, 0.1, 100, {{kSobel, ex(0.020)}, {kMaxP, ex(0.083)}, {kS, ex(0.112)}, {kPS, ex(0.111)}, {kASQ, ex(0.109)}}),
        ref_row(0.4, 0.1, 500, {{kSobel, ex(0.485)}, {kMaxP, ex(0.595)}, {kS, ex(0.595)}, {kPS, ex(0.596)}, {kASQ, ex(0.596)}}),
        ref_row(0.4, 0.1, 1000, {{kSobel, ex(0.860)}, {kMaxP, ex(0.883)}, {kS, ex(0.883)}, {kPS, ex(0.883)}, {kASQ, ex(0.883)}}),
        ref_row(0.4, 0.2, 100, {{kSobel, ex(0.093)}, {kMaxP, ex(0.242)}, {kS, ex(0.269)}, {kPS, ex(0.274)}, {kASQ, ex(0.270)}}),
        ref_row(0.4, 0.2, 500, {{kSobel, ex(0.971)}, {kMaxP, ex(0.987)}, {kS, ex(0.987)}, {kPS, ex(0.987)}, {kASQ, ex(0.987)}}),
        ref_row(0.4, 0.2, 1000, {{kSobel, ex(1.000)}, {kMaxP, ex(1.000)}, {kS, ex(1.000)}, {kPS, ex(1.000)}, {kASQ, ex(1.000)}}),
        ref_row(0.4, 0.3, 100, {{kSobel, ex(0.225)}, {kMaxP, ex(0.414)}, {kS, ex(0.425)}, {kPS, ex(0.428)}, {kASQ, ex(0.426)}}),
        ref_row(0.4, 0.3, 500, {{kSobel, ex(0.992)}, {kMaxP, ex(0.994)}, {kS, ex(0.994)}, {kPS, ex(0.994)}, {kASQ, ex(0.994)}}),
        ref_row(0.4, 0.3, 1000, {{kSobel, ex(1.000)}, {kMaxP, ex(1.000)}, {kS, ex(1.000)}, {kPS, ex(1.000)}, {kASQ, ex(1.000)}}),
        ref_row(0.4, 0.4, 100, {{kSobel, ex(0.348)}, {kMaxP, ex(0.485)}, {kS, ex(0.487)}, {kPS, ex(0.488)}, {kASQ, ex(0.488)}}),
        ref_row(0.4, 0.4, 500, {{kSobel, ex(0.993)}, {kMaxP, ex(0.994)}, {kS, ex(0.994)}, {kPS, ex(0.994)}, {kASQ, ex(0.994)}}),
        ref_row(0.4, 0.4, 1000, {{kSobel, ex(1.000)}, {kMaxP, ex(1.000)}, {kS, ex(1.000)}, {kPS, ex(1.000)}, {kASQ, ex(1.000)}}),
    };
    return table;
}

std::vector<CellFlag> flag_deviations(const Table& table,
                                      const std::vector<ReferenceRow>& reference,
                                      double se_multiplier, double quantization) {
    std::vector<CellFlag> flags;
    const std::size_t n = std::min(table.rows.size(), reference.size());
    for (std::size_t i = 0; i < n; ++i) {
        const SimCell& cell = table.rows[i].cell;
        for (int m = 0; m < mtests::kNumMethods; ++m) {
            const auto& ref = reference[i].value[m];
            if (!ref) continue;
            const double tol = se_multiplier * cell.mc_se[m] + quantization;
            bool deviates;
            if (ref->upper_bound)
                deviates = cell.rate[m] > ref->value + tol;
            else
                deviates = std::fabs(cell.rate[m] - ref->value) > tol;
            if (deviates)
                flags.push_back({i, static_cast<Method>(m), cell.rate[m], ref->value, tol});
        }
    }
    return flags;
}

std::string format_text(const Table& table, const MethodMask& methods) {
    std::ostringstream os;
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%6s %6s %6s", "beta", "gamma", "n");
    os << buf;
    const char* names[] = {"sobel", "maxp", "prodnorm", "s", "ps", "asq"};
    for (int m = 0; m < mtests::kNumMethods; ++m) {
        if (!methods[m]) continue;
        std::snprintf(buf, sizeof(buf), " %9s", names[m]);
        os << buf;
    }
    if (table.power_table) {
        for (Method m : {Method::Sobel, Method::S, Method::PS, Method::ASQ}) {
            if (!methods[static_cast<int>(m)]) continue;
            std::snprintf(buf, sizeof(buf), " re_%6s", names[static_cast<int>(m)]);
            os << buf;
        }
    }
    os << '\n';
    for (const TableRow& row : table.rows) {
        std::snprintf(buf, sizeof(buf), "%6.2f %6.2f %6d", row.scenario.beta,
                      row.scenario.gamma, row.scenario.n);
        os << buf;
        for (int m = 0; m < mtests::kNumMethods; ++m) {
            if (!methods[m]) continue;
            std::snprintf(buf, sizeof(buf), " %9.4f", row.cell.rate[m]);
            os << buf;
        }
        if (table.power_table) {
            for (Method m : {Method::Sobel, Method::S, Method::PS, Method::ASQ}) {
                if (!methods[static_cast<int>(m)]) continue;
                std::snprintf(buf, sizeof(buf), " %9.2f", row.cell.relative_efficiency(m));
                os << buf;
            }
        }
        os << '\n';
    }
    return os.str();
}

std::string format_csv(const Table& table, const MethodMask& methods) {
    std::ostringstream os;
    os << "beta,gamma,n,replicates,seed,method,rate,mc_se";
    if (table.power_table) os << ",relative_efficiency";
    os << '\n';
    char buf[256];
    for (const TableRow& row : table.rows) {
        for (int m = 0; m < mtests::kNumMethods; ++m) {
            if (!methods[m]) continue;
            std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%d,%ld,%llu,%s,%.10g,%.10g",
                          row.scenario.beta, row.scenario.gamma, row.scenario.n,
                          row.scenario.replicates,
                          static_cast<unsigned long long>(row.scenario.seed),
                          mtests::method_name(static_cast<Method>(m)), row.cell.rate[m],
                          row.cell.mc_se[m]);
            os << buf;
            if (table.power_table) {
                std::snprintf(buf, sizeof(buf), ",%.10g",
                              row.cell.relative_efficiency(static_cast<Method>(m)));
                os << buf;
            }
            os << '\n';
        }
    }
    return os.str();
}

std::vector<BandSweepRow> band_sweep(const std::vector<double>& lambdas,
                                     const std::vector<SimScenario>& scenarios,
                                     int threads) {
    std::vector<BandSweepRow> out;
    const int nthreads = std::max(1, threads);
    for (const SimScenario& sc : scenarios) {
        sc.validate();
        const std::size_t nl = lambdas.size();
        std::vector<std::vector<long>> partial(nthreads, std::vector<long>(nl, 0));

        auto worker = [&](int t) {
            Eigen::MatrixXd Xb(sc.n, 2), Xg(sc.n, 3);
            Eigen::VectorXd yb(sc.n), yg(sc.n);
            for (long rep = t; rep < sc.replicates; rep += nthreads) {
                Replicate r = simulate_replicate(sc, static_cast<std::uint64_t>(rep),
                                                 Xb, Xg, yb, yg);
                const regions::CumulativePair pair = r.fits.pair();
                for (std::size_t li = 0; li < nl; ++li)
                    if (regions::ps_pvalue(pair, lambdas[li]) <= sc.alpha)
                        ++partial[t][li];
            }
        };
        if (nthreads == 1) {
            worker(0);
        } else {
            std::vector<std::thread> pool;
            for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker, t);
            for (auto& th : pool) th.join();
        }

        for (std::size_t li = 0; li < nl; ++li) {
            long count = 0;
            for (int t = 0; t < nthreads; ++t) count += partial[t][li];
            const double rate = static_cast<double>(count) / sc.replicates;
            out.push_back({lambdas[li], sc, rate,
                           std::sqrt(rate * (1.0 - rate) / sc.replicates)});
        }
    }
    return out;
}

std::string format_band_sweep_csv(const std::vector<BandSweepRow>& rows) {
    std::ostringstream os;
    os << "lambda,beta,gamma,n,alpha,replicates,ps_rate,ps_mc_se\n";
    char buf[256];
    for (const BandSweepRow& r : rows) {
        std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g,%d,%.10g,%ld,%.10g,%.10g\n",
                      r.lambda, r.scenario.beta, r.scenario.gamma, r.scenario.n,
                      r.scenario.alpha, r.scenario.replicates, r.ps_rate, r.ps_mc_se);
        os << buf;
    }
    return os.str();
}

}  // namespace medtest::sim
