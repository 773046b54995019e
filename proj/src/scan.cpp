#include "medtest/scan.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include "medtest/distributions.hpp"
#include "medtest/errors.hpp"

namespace medtest::scan {

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, delim)) out.push_back(field);
    if (!line.empty() && line.back() == delim) out.emplace_back();
    return out;
}

std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

double fmt_or_nan(const std::string& token, const std::string& missing_token,
                  const std::string& where) {
    if (token == missing_token || token.empty())
        return std::numeric_limits<double>::quiet_NaN();
    std::size_t pos = 0;
    double value;
    try {
        value = std::stod(token, &pos);
    } catch (const std::exception&) {
        throw ConfigError("unparseable numeric field '" + token + "' " + where);
    }
    if (pos != token.size())
        throw ConfigError("unparseable numeric field '" + token + "' " + where);
    return value;
}

}  // namespace

std::optional<std::size_t> Table::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < headers.size(); ++i)
        if (headers[i] == name) return i;
    return std::nullopt;
}

Table read_table(const std::string& path, char delimiter, const std::string& missing_token) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open input file: " + path);
    Table table;
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("empty input file: " + path);
    for (const std::string& h : split_line(strip_cr(line), delimiter))
        table.headers.push_back(h);
    table.columns.assign(table.headers.size(), {});
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_line(line, delimiter);
        if (fields.size() != table.headers.size())
            throw ConfigError("row " + std::to_string(line_no) + " has " +
                              std::to_string(fields.size()) + " fields, expected " +
                              std::to_string(table.headers.size()));
        for (std::size_t c = 0; c < fields.size(); ++c)
            table.columns[c].push_back(
                fmt_or_nan(fields[c], missing_token, "at line " + std::to_string(line_no)));
    }
    return table;
}

std::map<std::string, DetectionLimits> read_limits(const std::string& path, char delimiter) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open limits file: " + path);
    std::map<std::string, DetectionLimits> limits;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_line(line, delimiter);
        if (fields.size() != 3)
            throw ConfigError("limits row " + std::to_string(line_no) +
                              ": expected 'mediator lower upper'");
        if (line_no == 1 && fields[0] == "mediator") continue;  // optional header
        DetectionLimits lim;
        lim.lower = fmt_or_nan(fields[1], "", "in limits file");
        lim.upper = fmt_or_nan(fields[2], "", "in limits file");
        if (!(lim.lower < lim.upper))
            throw ConfigError("limits for " + fields[0] + ": lower must be < upper");
        if (!limits.emplace(fields[0], lim).second)
            throw ConfigError("duplicate limits entry for " + fields[0]);
    }
    return limits;
}

PreprocessSummary preprocess(std::vector<double>& column,
                             const std::optional<DetectionLimits>& limits,
                             bool inverse_normal) {
    PreprocessSummary summary;
    if (limits) {
        for (double& x : column) {
            if (std::isnan(x)) continue;
            if (x < limits->lower) {
                x = 0.5 * limits->lower;
                ++summary.clamped_low;
            } else if (x > limits->upper) {
                x = limits->upper;
                ++summary.clamped_high;
            }
        }
    }
    std::vector<std::size_t> idx;
    idx.reserve(column.size());
    for (std::size_t i = 0; i < column.size(); ++i)
        if (!std::isnan(column[i])) idx.push_back(i);
    if (idx.empty()) {
        summary.all_missing = true;
        return summary;
    }
    if (!inverse_normal) return summary;

    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return column[a] < column[b]; });
    const std::size_t n = idx.size();
    std::vector<double> scores(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && column[idx[j + 1]] == column[idx[i]]) ++j;
        // Average rank over the tie block, 1-based.
        const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        const double score = dist::normal_quantile((avg_rank - 0.5) / static_cast<double>(n));
        for (std::size_t k = i; k <= j; ++k) scores[k] = score;
        i = j + 1;
    }
    for (std::size_t k = 0; k < n; ++k) column[idx[k]] = scores[k];
    return summary;
}

namespace {

void validate_config(const ScanConfig& cfg, const Table& table) {
    if (cfg.outcome.empty()) throw ConfigError("scan: outcome column required");
    if (cfg.exposures.empty()) throw ConfigError("scan: at least one exposure required");
    if (cfg.mediators.empty()) throw ConfigError("scan: at least one mediator required");
    std::vector<std::string> all{cfg.outcome};
    all.insert(all.end(), cfg.exposures.begin(), cfg.exposures.end());
    all.insert(all.end(), cfg.mediators.begin(), cfg.mediators.end());
    all.insert(all.end(), cfg.covariates.begin(), cfg.covariates.end());
    std::set<std::string> seen;
    for (const std::string& name : all) {
        if (!table.column_index(name))
            throw ConfigError("scan: column '" + name + "' not found in input header");
        if (!seen.insert(name).second)
            throw ConfigError("scan: column '" + name + "' configured more than once");
    }
    for (const auto& [name, lim] : cfg.limits) {
        (void)lim;
        if (std::find(cfg.mediators.begin(), cfg.mediators.end(), name) == cfg.mediators.end())
            throw ConfigError("scan: limits given for unknown mediator '" + name + "'");
    }
    for (double a : cfg.alphas)
        if (!(a > 0.0 && a <= regions::kAlphaMax))
            throw ConfigError("scan: alpha must lie in (0, 0.2]");
    if (!(cfg.lambda >= 0.0 && cfg.lambda <= 1.0))
        throw ConfigError("scan: lambda must lie in [0, 1]");
}

std::string fmt(double x) {
    if (std::isnan(x)) return "NA";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", x);
    return buf;
}

}  // namespace

ScanResult run_scan(const ScanConfig& cfg) {
    Table table = read_table(cfg.input_path, cfg.delimiter, cfg.missing_token);
    validate_config(cfg, table);

    regions::RegionSpec asq_spec;
    asq_spec.family = regions::Family::ASQ;
    asq_spec.alpha = cfg.alphas.front();
    asq_spec.lambda = cfg.lambda;
    asq_spec.ladder = cfg.ladder.empty() ? regions::RegionSpec::default_ladder() : cfg.ladder;
    asq_spec.omit_center = cfg.omit_center;
    asq_spec.validate();

    ScanResult result;
    result.config = cfg;

    // Mediator preprocessing happens once, on the shared table.
    for (const std::string& name : cfg.mediators) {
        const std::size_t c = *table.column_index(name);
        std::optional<DetectionLimits> lim;
        if (auto it = cfg.limits.find(name); it != cfg.limits.end()) lim = it->second;
        const PreprocessSummary s = preprocess(table.columns[c], lim, cfg.inverse_normal);
        if (s.all_missing)
            result.warnings.push_back("mediator '" + name + "' has no nonmissing values");
    }

    const std::size_t out_col = *table.column_index(cfg.outcome);
    const Eigen::Index n = static_cast<Eigen::Index>(table.n_rows());
    Eigen::VectorXd outcome(n);
    for (Eigen::Index i = 0; i < n; ++i) outcome(i) = table.columns[out_col][i];
    Eigen::MatrixXd covariates(n, static_cast<Eigen::Index>(cfg.covariates.size()));
    for (std::size_t j = 0; j < cfg.covariates.size(); ++j) {
        const std::size_t c = *table.column_index(cfg.covariates[j]);
        for (Eigen::Index i = 0; i < n; ++i) covariates(i, static_cast<Eigen::Index>(j)) = table.columns[c][i];
    }

    struct Task {
        std::size_t exposure_idx;
        std::size_t mediator_idx;
    };
    std::vector<Task> tasks;
    for (std::size_t e = 0; e < cfg.exposures.size(); ++e)
        for (std::size_t m = 0; m < cfg.mediators.size(); ++m) tasks.push_back({e, m});
    // Output order: exposure then mediator, independent of config order and
    // of how the work is parallelized.
    std::sort(tasks.begin(), tasks.end(), [&](const Task& x, const Task& y) {
        const std::string& ex = cfg.exposures[x.exposure_idx];
        const std::string& ey = cfg.exposures[y.exposure_idx];
        if (ex != ey) return ex < ey;
        return cfg.mediators[x.mediator_idx] < cfg.mediators[y.mediator_idx];
    });
    result.records.resize(tasks.size());
    result.n_pairs = tasks.size();

    auto run_pair = [&](const Task& task, ScanRecord& rec) {
        rec.exposure = cfg.exposures[task.exposure_idx];
        rec.mediator = cfg.mediators[task.mediator_idx];
        try {
            const std::size_t e_col = *table.column_index(rec.exposure);
            const std::size_t m_col = *table.column_index(rec.mediator);
            Eigen::VectorXd exposure(n), mediator(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                exposure(i) = table.columns[e_col][i];
                mediator(i) = table.columns[m_col][i];
            }
            const linmod::MediationFits fits =
                linmod::mediation_fits(exposure, mediator, outcome, covariates, cfg.reference);
            rec.n_complete = fits.n_complete;
            rec.beta = fits.beta;
            rec.gamma = fits.gamma;
            const regions::CumulativePair pair = fits.pair();

            const auto sobel_rep = mtests::sobel(fits.beta, fits.gamma, cfg.alphas);
            const auto maxp_rep = mtests::maxp(fits.beta, fits.gamma, cfg.alphas);
            const auto pn_rep = mtests::product_normal_test(fits.beta, fits.gamma, cfg.alphas);
            const auto ps_rep = mtests::ps_test(pair, cfg.lambda, cfg.alphas);
            const auto asq_rep = mtests::asq_test(pair, asq_spec, cfg.alphas);
            rec.sobel_p = *sobel_rep.p_value;
            rec.maxp_p = *maxp_rep.p_value;
            rec.product_normal_p = *pn_rep.p_value;
            rec.ps_p = *ps_rep.p_value;
            rec.asq_threshold = asq_rep.p_threshold;

            rec.reject.resize(cfg.alphas.size());
            for (std::size_t a = 0; a < cfg.alphas.size(); ++a) {
                const double alpha = cfg.alphas[a];
                rec.reject[a][static_cast<int>(mtests::Method::Sobel)] = rec.sobel_p <= alpha;
                rec.reject[a][static_cast<int>(mtests::Method::MaxP)] = rec.maxp_p <= alpha;
                rec.reject[a][static_cast<int>(mtests::Method::ProductNormal)] =
                    rec.product_normal_p <= alpha;
                rec.reject[a][static_cast<int>(mtests::Method::S)] =
                    regions::s_contains(pair, alpha);
                rec.reject[a][static_cast<int>(mtests::Method::PS)] = rec.ps_p <= alpha;
                rec.reject[a][static_cast<int>(mtests::Method::ASQ)] =
                    rec.asq_threshold && *rec.asq_threshold <= alpha;
            }
            rec.ok = true;
        } catch (const Error& e) {
            rec.ok = false;
            rec.error = e.what();
        }
    };

    const int nthreads = std::max(1, cfg.threads);
    if (nthreads == 1) {
        for (std::size_t i = 0; i < tasks.size(); ++i) run_pair(tasks[i], result.records[i]);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < nthreads; ++t)
            pool.emplace_back([&, t] {
                for (std::size_t i = t; i < tasks.size(); i += nthreads)
                    run_pair(tasks[i], result.records[i]);
            });
        for (auto& th : pool) th.join();
    }

    for (const ScanRecord& rec : result.records)
        if (!rec.ok) ++result.n_failed;
    return result;
}

std::string records_tsv(const ScanResult& result) {
    std::ostringstream os;
    os << "exposure\tmediator\tstatus\terror\tn_complete\tbeta_hat\tbeta_se\tu_beta"
          "\tgamma_hat\tgamma_se\tu_gamma\tsobel_p\tmaxp_p\tproduct_normal_p\tps_p"
          "\tasq_threshold";
    for (double a : result.config.alphas)
        for (int m = 0; m < mtests::kNumMethods; ++m)
            os << "\treject_" << mtests::method_name(static_cast<mtests::Method>(m)) << '_'
               << fmt(a);
    os << '\n';
    for (const ScanRecord& rec : result.records) {
        os << rec.exposure << '\t' << rec.mediator << '\t' << (rec.ok ? "ok" : "error") << '\t'
           << (rec.error.empty() ? "-" : rec.error) << '\t' << rec.n_complete;
        if (rec.ok) {
            os << '\t' << fmt(rec.beta.estimate) << '\t' << fmt(rec.beta.se) << '\t'
               << fmt(rec.beta.u) << '\t' << fmt(rec.gamma.estimate) << '\t'
               << fmt(rec.gamma.se) << '\t' << fmt(rec.gamma.u) << '\t' << fmt(rec.sobel_p)
               << '\t' << fmt(rec.maxp_p) << '\t' << fmt(rec.product_normal_p) << '\t'
               << fmt(rec.ps_p) << '\t'
               << (rec.asq_threshold ? fmt(*rec.asq_threshold) : "none");
            for (std::size_t a = 0; a < result.config.alphas.size(); ++a)
                for (int m = 0; m < mtests::kNumMethods; ++m)
                    os << '\t' << (rec.reject[a][m] ? 1 : 0);
        } else {
            const int n_alpha_cols =
                static_cast<int>(result.config.alphas.size()) * mtests::kNumMethods;
            for (int c = 0; c < 11 + n_alpha_cols; ++c) os << "\tNA";
        }
        os << '\n';
    }
    return os.str();
}

std::vector<QQPoint> qq_points(std::vector<std::pair<double, bool>> pvalues) {
    if (pvalues.size() < 10)
        throw InsufficientDataError("qq_points: need at least 10 p-values");
    std::sort(pvalues.begin(), pvalues.end());
    const double n = static_cast<double>(pvalues.size());
    std::vector<QQPoint> points;
    points.reserve(pvalues.size());
    for (std::size_t i = 0; i < pvalues.size(); ++i) {
        const double expected = (static_cast<double>(i) + 0.5) / n;
        const double p = std::max(pvalues[i].first, 1e-300);
        points.push_back({-std::log10(expected), -std::log10(p), pvalues[i].second});
    }
    return points;
}

std::string qq_csv(const ScanResult& result) {
    std::ostringstream os;
    os << "method,expected_neglog10,observed_neglog10,censored\n";
    const mtests::Method methods[] = {mtests::Method::Sobel, mtests::Method::MaxP,
                                      mtests::Method::ProductNormal, mtests::Method::PS,
                                      mtests::Method::ASQ};
    for (mtests::Method m : methods) {
        std::vector<std::pair<double, bool>> ps;
        for (const ScanRecord& rec : result.records) {
            if (!rec.ok) continue;
            switch (m) {
                case mtests::Method::Sobel: ps.emplace_back(rec.sobel_p, false); break;
                case mtests::Method::MaxP: ps.emplace_back(rec.maxp_p, false); break;
                case mtests::Method::ProductNormal:
                    ps.emplace_back(rec.product_normal_p, false);
                    break;
                case mtests::Method::PS: ps.emplace_back(rec.ps_p, false); break;
                case mtests::Method::ASQ:
                    if (rec.asq_threshold) ps.emplace_back(*rec.asq_threshold, true);
                    break;
                default: break;
            }
        }
        if (ps.size() < 10) continue;  // not enough data for this method's curve
        for (const QQPoint& pt : qq_points(std::move(ps)))
            os << mtests::method_name(m) << ',' << fmt(pt.expected_neglog10) << ','
               << fmt(pt.observed_neglog10) << ',' << (pt.censored ? 1 : 0) << '\n';
    }
    return os.str();
}

}  // namespace medtest::scan
