#ifndef MEDTEST_SCAN_HPP
#define MEDTEST_SCAN_HPP

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "medtest/linmod.hpp"
#include "medtest/mediation_tests.hpp"

namespace medtest::scan {

// Numeric table with NaN for missing entries.
struct Table {
    std::vector<std::string> headers;
    std::vector<std::vector<double>> columns;

    std::size_t n_rows() const { return columns.empty() ? 0 : columns.front().size(); }
    std::optional<std::size_t> column_index(const std::string& name) const;
};

Table read_table(const std::string& path, char delimiter = '\t',
                 const std::string& missing_token = "NA");

struct DetectionLimits {
    double lower = 0.0;
    double upper = 0.0;
};

// Limits file: mediator, lower, upper (same delimiter), one row per mediator.
std::map<std::string, DetectionLimits> read_limits(const std::string& path,
                                                   char delimiter = '\t');

struct PreprocessSummary {
    bool all_missing = false;
    int clamped_low = 0;   // below detection limit, replaced by lower/2
    int clamped_high = 0;  // above upper limit, capped at upper
};

// Detection-limit clamping, then (optionally) the rank-based inverse-normal
// transform Phi^-1((rank - 0.5)/n) with average ranks for ties. Missing stays
// missing.
PreprocessSummary preprocess(std::vector<double>& column,
                             const std::optional<DetectionLimits>& limits,
                             bool inverse_normal);

struct ScanConfig {
    std::string input_path;
    char delimiter = '\t';
    std::string missing_token = "NA";
    std::string outcome;
    std::vector<std::string> exposures;
    std::vector<std::string> mediators;
    std::vector<std::string> covariates;
    std::map<std::string, DetectionLimits> limits;
    bool inverse_normal = false;
    std::vector<double> alphas = {0.05};
    double lambda = 0.5;
    std::vector<double> ladder;  // empty -> regions default
    bool omit_center = true;
    linmod::Reference reference = linmod::Reference::StudentT;
    std::uint64_t seed = 0;
    int threads = 1;
};

struct ScanRecord {
    std::string exposure;
    std::string mediator;
    bool ok = false;
    std::string error;  // per-pair failure tag; the scan itself never aborts
    int n_complete = 0;
    linmod::FitSummary beta;
    linmod::FitSummary gamma;
    double sobel_p = 1.0;
    double maxp_p = 1.0;
    double product_normal_p = 1.0;
    double ps_p = 1.0;
    std::optional<double> asq_threshold;
    // reject[alpha index][method index]
    std::vector<std::array<bool, mtests::kNumMethods>> reject;
};

struct ScanResult {
    ScanConfig config;
    std::vector<ScanRecord> records;
    std::size_t n_pairs = 0;
    std::size_t n_failed = 0;
    std::vector<std::string> warnings;
};

// Validates the config against the table header (fatal ConfigError), then
// tests every (exposure, mediator) pair. Pairs are independent work units;
// output order is exposure-major config order regardless of thread count.
ScanResult run_scan(const ScanConfig& cfg);

std::string records_tsv(const ScanResult& result);

struct QQPoint {
    double expected_neglog10;
    double observed_neglog10;
    bool censored;  // threshold-style p-value (ASQ)
};

// Expected quantile for rank i of N is (i - 0.5)/N; observed sorted ascending.
// Requires at least 10 p-values.
std::vector<QQPoint> qq_points(std::vector<std::pair<double, bool>> pvalues);

// Per-method QQ data pooled over the scan's successful records.
std::string qq_csv(const ScanResult& result);

}  // namespace medtest::scan

#endif
