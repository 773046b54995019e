#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "medtest/distributions.hpp"
#include "medtest/errors.hpp"
#include "medtest/rng.hpp"
#include "medtest/scan.hpp"

using namespace medtest::scan;
using medtest::rng::Xoshiro256;

namespace {

// Writes a small mediation dataset: one exposure, one real mediator, a few
// null mediators (exposure-associated, outcome-null), one covariate.
std::string write_dataset(const std::string& path, int n, int null_mediators,
                          std::uint64_t seed, int missing_every = 0) {
    Xoshiro256 gen(seed, 0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::ofstream out(path);
    out << "Y\tG\tM_planted";
    for (int j = 0; j < null_mediators; ++j) out << "\tM_null" << j;
    out << "\tage\n";
    for (int i = 0; i < n; ++i) {
        const double g = gen.uniform01() < 0.5 ? 0.0 : 1.0;
        const double m = 0.4 * g + gauss(gen);
        const double age = 50.0 + 10.0 * gauss(gen);
        const double y = 0.2 * g + 0.4 * m + 0.01 * (age - 50.0) + gauss(gen);
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.9g\t%g\t%.9g", y, g, m);
        out << buf;
        for (int j = 0; j < null_mediators; ++j) {
            if (missing_every > 0 && (i + j) % missing_every == 0) {
                out << "\tNA";
            } else {
                const double mj = 0.4 * g + gauss(gen);
                std::snprintf(buf, sizeof(buf), "\t%.9g", mj);
                out << buf;
            }
        }
        std::snprintf(buf, sizeof(buf), "\t%.9g\n", age);
        out << buf;
    }
    return path;
}

ScanConfig base_config(const std::string& input, int null_mediators) {
    ScanConfig cfg;
    cfg.input_path = input;
    cfg.outcome = "Y";
    cfg.exposures = {"G"};
    cfg.mediators = {"M_planted"};
    for (int j = 0; j < null_mediators; ++j) cfg.mediators.push_back("M_null" + std::to_string(j));
    cfg.covariates = {"age"};
    cfg.alphas = {0.05};
    return cfg;
}

}  // namespace

TEST_CASE("preprocess clamping") {
    std::vector<double> col = {0.5, 3.0, 99.0};
    const auto s = preprocess(col, DetectionLimits{1.0, 10.0}, false);
    CHECK(col[0] == doctest::Approx(0.5));   // below limit: half of 1.0
    CHECK(col[1] == doctest::Approx(3.0));
    CHECK(col[2] == doctest::Approx(10.0));  // capped at the upper limit
    CHECK(s.clamped_low == 1);
    CHECK(s.clamped_high == 1);
}

TEST_CASE("inverse normal transform") {
    SUBCASE("distinct values match the exact normal scores") {
        std::vector<double> col = {5.0, 1.0, 3.0, 2.0, 4.0};
        preprocess(col, std::nullopt, true);
        double mean = 0.0;
        for (double x : col) mean += x;
        CHECK(std::fabs(mean / col.size()) < 1e-10);
        // rank of 3.0 is 3 of 5 -> Phi^-1(0.5) = 0
        CHECK(col[2] == doctest::Approx(0.0));
        CHECK(col[1] == doctest::Approx(medtest::dist::normal_quantile(0.1)));
        CHECK(col[0] == doctest::Approx(medtest::dist::normal_quantile(0.9)));
    }
    SUBCASE("ties get average ranks; missing stays missing") {
        std::vector<double> col = {2.0, std::nan(""), 2.0, 7.0};
        preprocess(col, std::nullopt, true);
        CHECK(std::isnan(col[1]));
        CHECK(col[0] == doctest::Approx(col[2]));
        // average rank 1.5 of 3 -> Phi^-1((1.5-0.5)/3)
        CHECK(col[0] == doctest::Approx(medtest::dist::normal_quantile(1.0 / 3.0)));
        CHECK(col[3] == doctest::Approx(medtest::dist::normal_quantile(2.5 / 3.0)));
    }
    SUBCASE("idempotence up to rank preservation") {
        Xoshiro256 gen(3, 3);
        std::vector<double> col(50);
        for (double& x : col) x = gen.uniform01() * 10.0;
        std::vector<double> once = col;
        preprocess(once, std::nullopt, true);
        std::vector<double> twice = once;
        preprocess(twice, std::nullopt, true);
        for (std::size_t i = 0; i < col.size(); ++i)
            for (std::size_t j = 0; j < col.size(); ++j)
                CHECK((once[i] < once[j]) == (twice[i] < twice[j]));
    }
    SUBCASE("all-missing column is flagged") {
        std::vector<double> col = {std::nan(""), std::nan("")};
        CHECK(preprocess(col, std::nullopt, true).all_missing);
    }
}

TEST_CASE("config validation errors are fatal") {
    const std::string path = write_dataset("/tmp/medtest_scan_cfg.tsv", 60, 2, 11);
    ScanConfig cfg = base_config(path, 2);
    SUBCASE("missing column") {
        cfg.mediators.push_back("NOPE");
        CHECK_THROWS_AS((void)run_scan(cfg), medtest::ConfigError);
    }
    SUBCASE("duplicate mediator") {
        cfg.mediators.push_back("M_null0");
        CHECK_THROWS_AS((void)run_scan(cfg), medtest::ConfigError);
    }
    SUBCASE("unreadable input") {
        cfg.input_path = "/tmp/does_not_exist_medtest.tsv";
        CHECK_THROWS_AS((void)run_scan(cfg), medtest::ConfigError);
    }
    SUBCASE("limits for unknown mediator") {
        cfg.limits["NOPE"] = {0.0, 1.0};
        CHECK_THROWS_AS((void)run_scan(cfg), medtest::ConfigError);
    }
}

TEST_CASE("ragged rows are rejected") {
    const std::string path = "/tmp/medtest_ragged.tsv";
    std::ofstream out(path);
    out << "a\tb\n1\t2\n3\n";
    out.close();
    CHECK_THROWS_AS((void)read_table(path), medtest::ConfigError);
}

TEST_CASE("scan end to end, small") {
    const std::string path = write_dataset("/tmp/medtest_scan_small.tsv", 400, 12, 2024);
    ScanConfig cfg = base_config(path, 12);
    cfg.threads = 2;
    const ScanResult result = run_scan(cfg);
    REQUIRE(result.records.size() == 13);
    CHECK(result.n_failed == 0);

    const auto it = std::find_if(result.records.begin(), result.records.end(),
                                 [](const ScanRecord& r) { return r.mediator == "M_planted"; });
    REQUIRE(it != result.records.end());
    const ScanRecord& planted = *it;
    REQUIRE(planted.ok);
    CHECK(planted.ps_p < 0.02);  // n = 400 here; the n = 1000 run pins < 1e-3
    CHECK(planted.sobel_p > planted.maxp_p - 1e-15);
    CHECK(planted.reject[0][static_cast<int>(medtest::mtests::Method::PS)]);

    SUBCASE("dominance invariant on every record") {
        for (const ScanRecord& rec : result.records) {
            if (!rec.ok) continue;
            for (std::size_t a = 0; a < cfg.alphas.size(); ++a) {
                if (rec.reject[a][static_cast<int>(medtest::mtests::Method::MaxP)]) {
                    CHECK(rec.reject[a][static_cast<int>(medtest::mtests::Method::PS)]);
                    CHECK(rec.reject[a][static_cast<int>(medtest::mtests::Method::ASQ)]);
                }
            }
        }
    }

    SUBCASE("bit-identical output across worker counts") {
        const std::string tsv = records_tsv(result);
        for (int workers : {1, 3, 5}) {
            ScanConfig c2 = cfg;
            c2.threads = workers;
            CHECK(records_tsv(run_scan(c2)) == tsv);
        }
    }

    SUBCASE("qq csv emits per-method curves") {
        const std::string qq = qq_csv(result);
        CHECK(qq.find("ps,") != std::string::npos);
        CHECK(qq.find("sobel,") != std::string::npos);
        CHECK(qq.find("asq,") == std::string::npos);  // too few uncensored thresholds here
    }
}

TEST_CASE("records come out sorted by exposure then mediator") {
    const std::string path = write_dataset("/tmp/medtest_scan_sort.tsv", 60, 3, 21);
    ScanConfig cfg = base_config(path, 3);
    cfg.mediators = {"M_null2", "M_planted", "M_null0", "M_null1"};  // scrambled
    const ScanResult result = run_scan(cfg);
    REQUIRE(result.records.size() == 4);
    CHECK(result.records[0].mediator == "M_null0");
    CHECK(result.records[1].mediator == "M_null1");
    CHECK(result.records[2].mediator == "M_null2");
    CHECK(result.records[3].mediator == "M_planted");
}

TEST_CASE("null scan QQ pattern: maxP deflated, PS near the identity") {
    // 20 independent exposures x 50 independent mediators: 1000 double-null
    // pairs. maxP p-values concentrate near 1 (P(p <= t) = t^2); the PS
    // p-value stays within a small offset of the identity in -log10 scale.
    const std::string path = "/tmp/medtest_scan_nullqq.tsv";
    {
        Xoshiro256 gen(31337, 0);
        std::normal_distribution<double> gauss(0.0, 1.0);
        const int n = 150;
        std::ofstream out(path);
        out << "Y";
        for (int e = 0; e < 20; ++e) out << "\tG" << e;
        for (int m = 0; m < 50; ++m) out << "\tM" << m;
        out << "\n";
        char buf[32];
        for (int i = 0; i < n; ++i) {
            std::snprintf(buf, sizeof(buf), "%.9g", gauss(gen));
            out << buf;
            for (int e = 0; e < 20; ++e) out << '\t' << (gen.uniform01() < 0.5 ? 0 : 1);
            for (int m = 0; m < 50; ++m) {
                std::snprintf(buf, sizeof(buf), "\t%.9g", gauss(gen));
                out << buf;
            }
            out << "\n";
        }
    }
    ScanConfig cfg;
    cfg.input_path = path;
    cfg.outcome = "Y";
    for (int e = 0; e < 20; ++e) cfg.exposures.push_back("G" + std::to_string(e));
    for (int m = 0; m < 50; ++m) cfg.mediators.push_back("M" + std::to_string(m));
    cfg.threads = 2;
    const ScanResult result = run_scan(cfg);
    REQUIRE(result.records.size() == 1000);
    CHECK(result.n_failed == 0);

    auto tail_deviation = [&](auto select) {
        std::vector<std::pair<double, bool>> ps;
        for (const ScanRecord& rec : result.records) ps.emplace_back(select(rec), false);
        double total = 0.0;
        int count = 0;
        for (const QQPoint& pt : qq_points(ps)) {
            if (pt.expected_neglog10 < 0.5 || pt.expected_neglog10 > 1.5) continue;
            total += pt.expected_neglog10 - pt.observed_neglog10;  // >0 means deflated
            ++count;
        }
        return total / count;
    };
    const double maxp_dev = tail_deviation([](const ScanRecord& r) { return r.maxp_p; });
    const double ps_dev = tail_deviation([](const ScanRecord& r) { return r.ps_p; });
    CHECK(maxp_dev > 0.4);              // strongly below the identity line
    CHECK(std::fabs(ps_dev) < 0.45);    // near the identity line
    CHECK(maxp_dev > ps_dev + 0.15);
}

TEST_CASE("insufficient rows produce an error-tagged record, not an abort") {
    const std::string path = "/tmp/medtest_scan_tiny.tsv";
    {
        std::ofstream out(path);
        out << "Y\tG\tM\n";
        for (int i = 0; i < 9; ++i) out << i * 0.1 << '\t' << i % 2 << '\t' << 0.2 * i << '\n';
    }
    ScanConfig cfg;
    cfg.input_path = path;
    cfg.outcome = "Y";
    cfg.exposures = {"G"};
    cfg.mediators = {"M"};
    const ScanResult result = run_scan(cfg);
    REQUIRE(result.records.size() == 1);
    CHECK_FALSE(result.records[0].ok);
    CHECK(result.records[0].error.find("complete rows") != std::string::npos);
    CHECK(result.n_failed == 1);
    CHECK(records_tsv(result).find("error") != std::string::npos);
}

TEST_CASE("constant mediator after preprocessing becomes a per-pair error") {
    const std::string path = "/tmp/medtest_scan_const.tsv";
    {
        std::ofstream out(path);
        out << "Y\tG\tM\n";
        Xoshiro256 gen(5, 0);
        for (int i = 0; i < 40; ++i)
            out << gen.uniform01() << '\t' << i % 2 << '\t' << 3.14 << '\n';
    }
    ScanConfig cfg;
    cfg.input_path = path;
    cfg.outcome = "Y";
    cfg.exposures = {"G"};
    cfg.mediators = {"M"};
    cfg.inverse_normal = true;
    const ScanResult result = run_scan(cfg);
    REQUIRE(result.records.size() == 1);
    CHECK_FALSE(result.records[0].ok);
}

TEST_CASE("qq_points") {
    SUBCASE("rank-quantile p-values lie exactly on the identity line") {
        std::vector<std::pair<double, bool>> ps;
        const int n = 20;
        for (int i = 1; i <= n; ++i) ps.emplace_back((i - 0.5) / n, false);
        const auto pts = qq_points(ps);
        REQUIRE(pts.size() == 20);
        for (const QQPoint& pt : pts)
            CHECK(std::fabs(pt.observed_neglog10 - pt.expected_neglog10) < 1e-12);
    }
    SUBCASE("a uniform grid is within rank-quantile rounding of the identity") {
        std::vector<std::pair<double, bool>> ps;
        for (int i = 1; i <= 9; ++i) ps.emplace_back(i / 10.0, false);
        // Pad to the minimum size with a second decade copy.
        for (int i = 1; i <= 9; ++i) ps.emplace_back(i / 10.0 - 0.05, false);
        for (const QQPoint& pt : qq_points(ps))
            CHECK(std::fabs(pt.observed_neglog10 - pt.expected_neglog10) < 0.3);
    }
    SUBCASE("too few p-values error") {
        std::vector<std::pair<double, bool>> ps = {{0.5, false}};
        CHECK_THROWS_AS((void)qq_points(ps), medtest::InsufficientDataError);
    }
}

TEST_CASE("limits file parsing") {
    const std::string path = "/tmp/medtest_limits.tsv";
    {
        std::ofstream out(path);
        out << "mediator\tlower\tupper\nM1\t0.5\t10\nM2\t1\t2\n";
    }
    const auto limits = read_limits(path);
    REQUIRE(limits.size() == 2);
    CHECK(limits.at("M1").lower == doctest::Approx(0.5));
    CHECK(limits.at("M2").upper == doctest::Approx(2.0));
    {
        std::ofstream out(path);
        out << "M1\t5\t2\n";  // lower >= upper
    }
    CHECK_THROWS_AS((void)read_limits(path), medtest::ConfigError);
}
