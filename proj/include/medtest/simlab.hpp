#ifndef MEDTEST_SIMLAB_HPP
#define MEDTEST_SIMLAB_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "medtest/linmod.hpp"
#include "medtest/mediation_tests.hpp"

namespace medtest::sim {

// One (beta, gamma, n) cell of the simulation study. The data generating
// process: G ~ Bernoulli(0.5), M = beta*G + eps_M, Y = direct*G + gamma*M +
// eps_Y with independent standard normal noise.
struct SimScenario {
    double beta = 0.0;
    double gamma = 0.0;
    int n = 100;
    double direct_effect = 0.2;
    long replicates = 20000;
    double alpha = 0.05;
    double lambda = 0.5;
    std::uint64_t seed = 20240613;
    linmod::Reference reference = linmod::Reference::StudentT;
    std::vector<double> ladder{};  // empty -> regions default
    bool omit_center = true;

    void validate() const;
};

// Per-method rejection rates, indexed by mtests::Method.
struct SimCell {
    std::array<long, mtests::kNumMethods> reject_count{};
    std::array<double, mtests::kNumMethods> rate{};
    std::array<double, mtests::kNumMethods> mc_se{};
    long replicates = 0;
    long redraws = 0;  // degenerate (constant G) samples redrawn

    double relative_efficiency(mtests::Method m) const;  // power relative to maxP
};

// Deterministic given the scenario seed: replicate r draws from an
// independent stream keyed by (seed, r), so the result is invariant to
// thread count and execution order.
SimCell run_scenario(const SimScenario& scenario, int threads = 1);

struct TableRow {
    SimScenario scenario;
    SimCell cell;
};

struct Table {
    std::vector<TableRow> rows;
    bool power_table = false;  // adds relative-efficiency columns
};

Table run_table(const std::vector<SimScenario>& scenarios, int threads, bool power_table);

// Reference cell for cross-checking a run against published values; a value
// may be an upper bound (reported as "<bound").
struct RefValue {
    double value = 0.0;
    bool upper_bound = false;
};

struct ReferenceRow {
    double beta, gamma;
    int n;
    std::array<std::optional<RefValue>, mtests::kNumMethods> value{};
};

const std::vector<ReferenceRow>& reference_table1();
const std::vector<ReferenceRow>& reference_table2();

std::vector<SimScenario> table1_scenarios(std::uint64_t seed, long replicates = 20000);
std::vector<SimScenario> table2_scenarios(std::uint64_t seed, long replicates = 20000);

// Cell-by-cell comparison: |rate - ref| <= 3*mc_se + quantization slack (the
// reference values are rounded to three decimals). Upper-bound references
// pass when rate < bound + 3*mc_se.
struct CellFlag {
    std::size_t row;
    mtests::Method method;
    double rate;
    double ref;
    double tol;
};

std::vector<CellFlag> flag_deviations(const Table& table,
                                      const std::vector<ReferenceRow>& reference,
                                      double se_multiplier = 3.0,
                                      double quantization = 0.0005);

using MethodMask = std::array<bool, mtests::kNumMethods>;
inline constexpr MethodMask kAllMethods{true, true, true, true, true, true};

std::string format_text(const Table& table, const MethodMask& methods = kAllMethods);
std::string format_csv(const Table& table, const MethodMask& methods = kAllMethods);

// PS-test rejection rate across center-band lengths; fits are shared across
// lambdas within a replicate.
struct BandSweepRow {
    double lambda;
    SimScenario scenario;
    double ps_rate;
    double ps_mc_se;
};

std::vector<BandSweepRow> band_sweep(const std::vector<double>& lambdas,
                                     const std::vector<SimScenario>& scenarios,
                                     int threads = 1);

std::string format_band_sweep_csv(const std::vector<BandSweepRow>& rows);

}  // namespace medtest::sim

#endif
