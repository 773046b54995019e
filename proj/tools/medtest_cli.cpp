// Command line front end: simulate / scan / worstcase / region-dump / test-one.
// Every run writes a JSON manifest (resolved config, seed, timestamps, library
// version, input digests) next to its primary output.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "medtest/distributions.hpp"
#include "medtest/errors.hpp"
#include "medtest/mediation_tests.hpp"
#include "medtest/regions.hpp"
#include "medtest/scan.hpp"
#include "medtest/simlab.hpp"
#include "medtest/version.hpp"
#include "medtest/worstcase.hpp"

namespace {

using nlohmann::json;

std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

std::string fnv1a64_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return "unreadable";
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    char chunk[8192];
    while (in.read(chunk, sizeof(chunk)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            hash ^= static_cast<unsigned char>(chunk[i]);
            hash *= 0x100000001b3ULL;
        }
        if (!in) break;
    }
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return std::string("fnv1a64:") + buf;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw medtest::ConfigError("cannot write output file: " + path);
    out << content;
}

struct ManifestWriter {
    json doc;
    std::string path;

    ManifestWriter(const std::string& subcommand, const std::string& manifest_path)
        : path(manifest_path) {
        doc["subcommand"] = subcommand;
        doc["library_version"] = medtest::kVersion;
        doc["start_time"] = iso_timestamp();
        doc["config"] = json::object();
        doc["inputs"] = json::object();
        doc["outputs"] = json::array();
    }

    void input(const std::string& file) {
        if (!file.empty()) doc["inputs"][file] = fnv1a64_file(file);
    }
    void output(const std::string& file) {
        if (!file.empty()) doc["outputs"].push_back(file);
    }
    void finish() {
        doc["end_time"] = iso_timestamp();
        write_file(path, doc.dump(2) + "\n");
    }
};

std::string default_manifest(const std::string& out, const std::string& sub) {
    return out.empty() ? ("medtest_" + sub + ".manifest.json") : (out + ".manifest.json");
}

std::vector<double> parse_list(const std::string& csv, const char* what) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            out.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw medtest::ConfigError(std::string("bad numeric list for ") + what + ": " + csv);
        }
    }
    if (out.empty()) throw medtest::ConfigError(std::string("empty list for ") + what);
    return out;
}

std::vector<std::string> parse_names(const std::string& csv) {
    std::vector<std::string> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(tok);
    }
    return out;
}

std::string fmt_opt(const std::optional<double>& v) {
    if (!v) return "none";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", *v);
    return buf;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateArgs {
    double beta = 0.0, gamma = 0.0;
    int n = 100;
    long reps = 20000;
    double alpha = 0.05, lambda = 0.5;
    std::uint64_t seed = 20240613;
    int table = 0;
    std::string band_sweep;
    std::string methods = "sobel,maxp,product-normal,s,ps,asq";
    std::string reference = "t";
    bool check = false;
    std::string out;
    std::string manifest;
};

int run_simulate(const SimulateArgs& a, int threads) {
    namespace sim = medtest::sim;
    ManifestWriter manifest("simulate", a.manifest.empty() ? default_manifest(a.out, "simulate")
                                                           : a.manifest);
    json& cfg = manifest.doc["config"];
    cfg = {{"beta", a.beta},     {"gamma", a.gamma},   {"n", a.n},
           {"replicates", a.reps}, {"alpha", a.alpha}, {"lambda", a.lambda},
           {"seed", a.seed},     {"table", a.table},   {"band_sweep", a.band_sweep},
           {"methods", a.methods}, {"reference", a.reference}, {"threads", threads},
           {"check", a.check},   {"out", a.out}};
    manifest.doc["seed"] = a.seed;

    const medtest::linmod::Reference ref = (a.reference == "normal")
                                               ? medtest::linmod::Reference::Normal
                                               : medtest::linmod::Reference::StudentT;

    sim::MethodMask mask{};
    for (const std::string& name : parse_names(a.methods)) {
        bool known = false;
        for (int m = 0; m < medtest::mtests::kNumMethods; ++m)
            if (name == medtest::mtests::method_name(static_cast<medtest::mtests::Method>(m))) {
                mask[m] = true;
                known = true;
            }
        if (!known) throw medtest::ConfigError("unknown method in --methods: " + name);
    }

    int exit_code = 0;
    if (!a.band_sweep.empty()) {
        sim::SimScenario sc;
        sc.beta = a.beta;
        sc.gamma = a.gamma;
        sc.n = a.n;
        sc.replicates = a.reps;
        sc.alpha = a.alpha;
        sc.seed = a.seed;
        sc.reference = ref;
        const auto rows =
            sim::band_sweep(parse_list(a.band_sweep, "--band-sweep"), {sc}, threads);
        const std::string csv = sim::format_band_sweep_csv(rows);
        std::cout << csv;
        if (!a.out.empty()) write_file(a.out, csv);
    } else {
        std::vector<sim::SimScenario> scenarios;
        bool power_table = false;
        if (a.table == 1) {
            scenarios = sim::table1_scenarios(a.seed, a.reps);
        } else if (a.table == 2) {
            scenarios = sim::table2_scenarios(a.seed, a.reps);
            power_table = true;
        } else {
            sim::SimScenario sc;
            sc.beta = a.beta;
            sc.gamma = a.gamma;
            sc.n = a.n;
            sc.replicates = a.reps;
            sc.alpha = a.alpha;
            sc.seed = a.seed;
            scenarios = {sc};
        }
        for (auto& sc : scenarios) {
            sc.lambda = a.lambda;
            sc.reference = ref;
        }
        const sim::Table table = sim::run_table(scenarios, threads, power_table);
        std::cout << sim::format_text(table, mask);
        if (!a.out.empty()) write_file(a.out, sim::format_csv(table, mask));
        long redraws = 0;
        for (const auto& row : table.rows) redraws += row.cell.redraws;
        manifest.doc["degenerate_redraws"] = redraws;
        if (a.check && (a.table == 1 || a.table == 2)) {
            const auto& reference =
                a.table == 1 ? sim::reference_table1() : sim::reference_table2();
            const auto flags = sim::flag_deviations(table, reference);
            std::cout << "reference check: " << flags.size() << " cell(s) beyond 3 mc_se\n";
            for (const auto& f : flags)
                std::printf("  row %zu method %s: %.4f vs %.4f (tol %.4f)\n", f.row,
                            medtest::mtests::method_name(f.method), f.rate, f.ref, f.tol);
            const std::size_t cells = table.rows.size() * 6;
            if (flags.size() * 20 > cells) exit_code = 1;  // more than 5% flagged
        }
    }

    manifest.output(a.out);
    manifest.finish();
    return exit_code;
}

// ---------------------------------------------------------------------------
// scan
// ---------------------------------------------------------------------------

struct ScanArgs {
    std::string input;
    std::string outcome;
    std::string exposures, mediators, covariates;
    std::string limits;
    bool inverse_normal = false;
    std::string alphas = "0.05";
    double lambda = 0.5;
    std::string ladder;
    bool keep_center = false;
    std::string reference = "t";
    std::uint64_t seed = 0;
    std::string out = "results.tsv";
    std::string qq;
    std::string manifest;
    std::string delimiter = "\t";
    std::string missing = "NA";
};

int run_scan_cmd(const ScanArgs& a, int threads) {
    namespace scan = medtest::scan;
    ManifestWriter manifest("scan",
                            a.manifest.empty() ? default_manifest(a.out, "scan") : a.manifest);
    json& cfg = manifest.doc["config"];
    cfg = {{"input", a.input},       {"outcome", a.outcome},
           {"exposures", a.exposures}, {"mediators", a.mediators},
           {"covariates", a.covariates}, {"limits", a.limits},
           {"inverse_normal", a.inverse_normal}, {"alpha", a.alphas},
           {"lambda", a.lambda},     {"ladder", a.ladder},
           {"omit_center", !a.keep_center}, {"reference", a.reference},
           {"seed", a.seed},         {"threads", threads},
           {"out", a.out},           {"qq", a.qq}};
    manifest.doc["seed"] = a.seed;
    manifest.input(a.input);
    manifest.input(a.limits);

    scan::ScanConfig cfg2;
    cfg2.input_path = a.input;
    if (a.delimiter.size() != 1)
        throw medtest::ConfigError("--delimiter must be a single character");
    cfg2.delimiter = a.delimiter[0];
    cfg2.missing_token = a.missing;
    cfg2.outcome = a.outcome;
    cfg2.exposures = parse_names(a.exposures);
    cfg2.mediators = parse_names(a.mediators);
    cfg2.covariates = parse_names(a.covariates);
    if (!a.limits.empty()) cfg2.limits = scan::read_limits(a.limits, cfg2.delimiter);
    cfg2.inverse_normal = a.inverse_normal;
    cfg2.alphas = parse_list(a.alphas, "--alpha");
    cfg2.lambda = a.lambda;
    if (!a.ladder.empty()) cfg2.ladder = parse_list(a.ladder, "--ladder");
    cfg2.omit_center = !a.keep_center;
    cfg2.reference = (a.reference == "normal") ? medtest::linmod::Reference::Normal
                                               : medtest::linmod::Reference::StudentT;
    cfg2.seed = a.seed;
    cfg2.threads = threads;

    const scan::ScanResult result = scan::run_scan(cfg2);
    write_file(a.out, scan::records_tsv(result));
    manifest.output(a.out);
    if (!a.qq.empty()) {
        write_file(a.qq, scan::qq_csv(result));
        manifest.output(a.qq);
    }
    for (const std::string& w : result.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "scan: " << result.n_pairs << " pair(s), " << result.n_failed
              << " error-tagged\n";
    manifest.doc["pairs"] = result.n_pairs;
    manifest.doc["pair_errors"] = result.n_failed;
    manifest.finish();
    return 0;  // per-pair errors do not fail the run
}

// ---------------------------------------------------------------------------
// worstcase
// ---------------------------------------------------------------------------

struct WorstcaseArgs {
    std::string scenario = "normal";
    double lambda = 1.0;
    std::string alpha_grid;
    std::string delta_grid;
    std::string out = "worstcase.csv";
    std::string manifest;
};

int run_worstcase(const WorstcaseArgs& a, int threads) {
    namespace wc = medtest::worstcase;
    ManifestWriter manifest("worstcase", a.manifest.empty()
                                             ? default_manifest(a.out, "worstcase")
                                             : a.manifest);
    manifest.doc["config"] = {{"scenario", a.scenario},   {"lambda", a.lambda},
                              {"alpha_grid", a.alpha_grid}, {"delta_grid", a.delta_grid},
                              {"threads", threads},       {"out", a.out}};

    if (a.scenario != "normal" && a.scenario != "t5")
        throw medtest::ConfigError("--scenario must be 'normal' or 't5'");
    const wc::Scenario sc = (a.scenario == "t5") ? wc::Scenario::T5 : wc::Scenario::Normal;
    const std::vector<double> alphas = a.alpha_grid.empty()
                                           ? wc::default_alpha_grid()
                                           : parse_list(a.alpha_grid, "--alpha-grid");
    const std::vector<double> deltas = a.delta_grid.empty()
                                           ? wc::default_delta_grid()
                                           : parse_list(a.delta_grid, "--delta-grid");

    const wc::WorstCaseReport report =
        wc::maximize_inflation(sc, a.lambda, alphas, deltas, threads);
    write_file(a.out, wc::format_csv(report));
    manifest.output(a.out);
    std::printf("%s lambda=%.3g: global max ratio %.6f at alpha %.5g (delta %.4g)\n",
                a.scenario.c_str(), a.lambda, report.global_max.inflation_ratio,
                report.global_max.alpha, report.global_max.worst_delta);
    manifest.finish();
    return 0;
}

// ---------------------------------------------------------------------------
// region-dump
// ---------------------------------------------------------------------------

struct RegionDumpArgs {
    double alpha = 0.05;
    double lambda = 0.5;
    int grid = 201;
    bool keep_center = false;
    bool effective = false;
    std::string out = "regions.csv";
    std::string manifest;
};

int run_region_dump(const RegionDumpArgs& a) {
    namespace regions = medtest::regions;
    ManifestWriter manifest("region-dump", a.manifest.empty()
                                               ? default_manifest(a.out, "region-dump")
                                               : a.manifest);
    manifest.doc["config"] = {{"alpha", a.alpha},       {"lambda", a.lambda},
                              {"grid", a.grid},         {"omit_center", !a.keep_center},
                              {"effective", a.effective}, {"out", a.out}};
    if (a.grid < 2) throw medtest::ConfigError("--grid must be >= 2");

    std::ostringstream os;
    os << "u,v,in_s,in_ps,in_asq\n";
    char buf[128];
    for (int i = 0; i < a.grid; ++i) {
        const double u = static_cast<double>(i) / (a.grid - 1);
        for (int j = 0; j < a.grid; ++j) {
            const double v = static_cast<double>(j) / (a.grid - 1);
            const regions::CumulativePair p{u, v};
            const bool in_s = regions::s_contains(p, a.alpha);
            const bool in_ps = a.effective
                                   ? regions::ps_effective_contains(p, a.alpha, a.lambda)
                                   : regions::ps_contains(p, a.alpha, a.lambda);
            const bool in_asq = regions::asq_contains(p, a.alpha, a.lambda, !a.keep_center);
            std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%d,%d,%d\n", u, v, in_s, in_ps,
                          in_asq);
            os << buf;
        }
    }
    write_file(a.out, os.str());
    manifest.output(a.out);
    manifest.finish();
    return 0;
}

// ---------------------------------------------------------------------------
// test-one
// ---------------------------------------------------------------------------

struct TestOneArgs {
    double u = 0.5, v = 0.5;
    std::string alphas = "0.05";
    double lambda = 0.5;
    std::string ladder;
    std::optional<double> tb, tg;
    std::string manifest;
};

int run_test_one(const TestOneArgs& a) {
    namespace mt = medtest::mtests;
    namespace regions = medtest::regions;
    ManifestWriter manifest("test-one", a.manifest.empty() ? default_manifest("", "test-one")
                                                           : a.manifest);
    manifest.doc["config"] = {{"u", a.u},
                              {"v", a.v},
                              {"alpha", a.alphas},
                              {"lambda", a.lambda},
                              {"ladder", a.ladder},
                              {"tb", a.tb ? json(*a.tb) : json(nullptr)},
                              {"tg", a.tg ? json(*a.tg) : json(nullptr)}};

    if (!(a.u > 0.0 && a.u < 1.0 && a.v > 0.0 && a.v < 1.0))
        throw medtest::DomainError("test-one: u and v must lie in (0,1)");
    const std::vector<double> alphas = parse_list(a.alphas, "--alpha");
    regions::RegionSpec spec;
    spec.family = regions::Family::ASQ;
    spec.lambda = a.lambda;
    if (!a.ladder.empty()) spec.ladder = parse_list(a.ladder, "--ladder");
    const regions::CumulativePair pair{a.u, a.v};

    std::vector<mt::TestReport> reports;
    if (a.tb && a.tg) {
        medtest::linmod::FitSummary fb, fg;
        fb.t_stat = *a.tb;
        fb.estimate = *a.tb;
        fb.se = 1.0;
        fb.u = a.u;
        fg.t_stat = *a.tg;
        fg.estimate = *a.tg;
        fg.se = 1.0;
        fg.u = a.v;
        reports.push_back(mt::sobel(fb, fg, alphas));
        reports.push_back(mt::product_normal_test(fb, fg, alphas));
    }
    {
        medtest::linmod::FitSummary fb, fg;
        fb.u = a.u;
        fg.u = a.v;
        reports.push_back(mt::maxp(fb, fg, alphas));
    }
    reports.push_back(mt::s_test(pair, alphas));
    reports.push_back(mt::ps_test(pair, a.lambda, alphas));
    reports.push_back(mt::asq_test(pair, spec, alphas));

    std::printf("%-15s %12s %12s %12s", "method", "statistic", "p_value", "p_threshold");
    for (double al : alphas) std::printf("  reject@%g", al);
    std::printf("\n");
    if (!a.tb || !a.tg) {
        std::printf("%-15s %12s %12s %12s  (supply --tb and --tg)\n", "sobel", "n/a", "n/a",
                    "n/a");
        std::printf("%-15s %12s %12s %12s  (supply --tb and --tg)\n", "product-normal", "n/a",
                    "n/a", "n/a");
    }
    for (const auto& rep : reports) {
        std::printf("%-15s %12s %12s %12s", mt::method_name(rep.method),
                    fmt_opt(rep.statistic).c_str(), fmt_opt(rep.p_value).c_str(),
                    fmt_opt(rep.p_threshold).c_str());
        for (const auto& [al, rej] : rep.reject_at) {
            (void)al;
            std::printf("  %8s", rej ? "yes" : "no");
        }
        std::printf("\n");
    }

    manifest.finish();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Intersection-union mediation tests: simulation, scanning and diagnostics"};
    app.set_version_flag("--version", medtest::kVersion);
    app.set_config("--config");
    int threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;
    app.add_option("--threads", threads, "Worker thread cap (default: hardware)");
    app.require_subcommand(1);

    SimulateArgs sim_args;
    CLI::App* sim = app.add_subcommand("simulate", "Monte Carlo rejection-rate studies");
    sim->add_option("--beta", sim_args.beta, "Exposure-to-mediator effect");
    sim->add_option("--gamma", sim_args.gamma, "Mediator-to-outcome effect");
    sim->add_option("--n", sim_args.n, "Sample size per replicate");
    sim->add_option("--reps", sim_args.reps, "Replicates");
    sim->add_option("--alpha", sim_args.alpha, "Significance level");
    sim->add_option("--lambda", sim_args.lambda, "Band/square extension fraction");
    sim->add_option("--seed", sim_args.seed, "Master seed");
    sim->add_option("--table", sim_args.table, "Run the full battery (1 or 2)")
        ->check(CLI::IsMember({0, 1, 2}));
    sim->add_option("--band-sweep", sim_args.band_sweep, "Comma list of lambdas (PS only)");
    sim->add_option("--methods", sim_args.methods, "Comma list of methods to report");
    sim->add_option("--reference", sim_args.reference, "U reference: t or normal")
        ->check(CLI::IsMember({"t", "normal"}));
    sim->add_flag("--check", sim_args.check, "Compare a --table run against stored references");
    sim->add_option("--out", sim_args.out, "CSV output path");
    sim->add_option("--manifest", sim_args.manifest, "Manifest path override");

    ScanArgs scan_args;
    CLI::App* scn = app.add_subcommand("scan", "Batch mediation scan over a delimited table");
    scn->add_option("--input", scan_args.input, "Input table")->required();
    scn->add_option("--outcome", scan_args.outcome, "Outcome column")->required();
    scn->add_option("--exposures", scan_args.exposures, "Comma list of exposure columns")
        ->required();
    scn->add_option("--mediators", scan_args.mediators, "Comma list of mediator columns")
        ->required();
    scn->add_option("--covariates", scan_args.covariates, "Comma list of covariate columns");
    scn->add_option("--limits", scan_args.limits, "Detection-limit file (mediator lower upper)");
    scn->add_flag("--inverse-normal", scan_args.inverse_normal,
                  "Rank-based inverse normal transform for mediators");
    scn->add_option("--alpha", scan_args.alphas, "Comma list of levels");
    scn->add_option("--lambda", scan_args.lambda, "Extension fraction");
    scn->add_option("--ladder", scan_args.ladder, "ASQ ladder (comma list)");
    scn->add_flag("--keep-center", scan_args.keep_center, "Keep the center-most ASQ squares");
    scn->add_option("--reference", scan_args.reference, "U reference: t or normal")
        ->check(CLI::IsMember({"t", "normal"}));
    scn->add_option("--seed", scan_args.seed, "Seed (recorded; ties are deterministic)");
    scn->add_option("--delimiter", scan_args.delimiter, "Field delimiter (default tab)");
    scn->add_option("--missing", scan_args.missing, "Missing-value token (default NA)");
    scn->add_option("--out", scan_args.out, "Records TSV path");
    scn->add_option("--qq", scan_args.qq, "QQ CSV path");
    scn->add_option("--manifest", scan_args.manifest, "Manifest path override");

    WorstcaseArgs wc_args;
    CLI::App* wc = app.add_subcommand("worstcase", "Single-null type I error maximization");
    wc->add_option("--scenario", wc_args.scenario, "t5 or normal");
    wc->add_option("--lambda", wc_args.lambda, "Extension fraction");
    wc->add_option("--alpha-grid", wc_args.alpha_grid, "Comma list of levels");
    wc->add_option("--delta-grid", wc_args.delta_grid, "Comma list of noncentralities");
    wc->add_option("--out", wc_args.out, "Report CSV path");
    wc->add_option("--manifest", wc_args.manifest, "Manifest path override");

    RegionDumpArgs rd_args;
    CLI::App* rd = app.add_subcommand("region-dump", "Membership raster for plotting");
    rd->add_option("--alpha", rd_args.alpha, "Level");
    rd->add_option("--lambda", rd_args.lambda, "Extension fraction");
    rd->add_option("--grid", rd_args.grid, "Points per axis");
    rd->add_flag("--keep-center", rd_args.keep_center, "Keep the center-most ASQ squares");
    rd->add_flag("--effective", rd_args.effective, "Dump the effective PS region");
    rd->add_option("--out", rd_args.out, "CSV path");
    rd->add_option("--manifest", rd_args.manifest, "Manifest path override");

    TestOneArgs to_args;
    CLI::App* to = app.add_subcommand("test-one", "All six tests for one (u, v) pair");
    to->add_option("--u", to_args.u, "Cumulative probability U_beta")->required();
    to->add_option("--v", to_args.v, "Cumulative probability U_gamma")->required();
    to->add_option("--alpha", to_args.alphas, "Comma list of levels");
    to->add_option("--lambda", to_args.lambda, "Extension fraction");
    to->add_option("--ladder", to_args.ladder, "ASQ ladder (comma list)");
    double tb_val = 0.0, tg_val = 0.0;
    CLI::Option* tb_opt = to->add_option("--tb", tb_val, "t statistic for beta");
    CLI::Option* tg_opt = to->add_option("--tg", tg_val, "t statistic for gamma");
    to->add_option("--manifest", to_args.manifest, "Manifest path override");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim) return run_simulate(sim_args, threads);
        if (*scn) return run_scan_cmd(scan_args, threads);
        if (*wc) return run_worstcase(wc_args, threads);
        if (*rd) return run_region_dump(rd_args);
        if (*to) {
            if (tb_opt->count()) to_args.tb = tb_val;
            if (tg_opt->count()) to_args.tg = tg_val;
            return run_test_one(to_args);
        }
    } catch (const medtest::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
