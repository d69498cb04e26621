// Command-line front end: ties ingestion, projection, certification,
// regression, distances and simulation into reproducible runs.
//
// Exit codes: 0 success, 1 domain error (e.g. PerfectFit, DegenerateSupport),
// 2 I/O, parse or usage error.  Errors are printed to stderr as single-line
// JSON records.  Every output file is written atomically and accompanied by a
// <output>.manifest.json provenance record; the timestamp and timings are the
// only fields allowed to differ between reruns of the same command.

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "logcave/io.hpp"

namespace {

using logcave::io::json;

void print_error(const std::string& kind, const std::string& message) {
    json j;
    j["error"]["kind"] = kind;
    j["error"]["message"] = message;
    std::cerr << j.dump() << "\n";
}

int exit_code_for(const logcave::Error& e) {
    return (e.kind() == "IoError" || e.kind() == "BadInput") ? 2 : 1;
}

class Timer {
public:
    double ms() const {
        return std::chrono::duration<double, std::milli>(
                   std::chrono::steady_clock::now() - start_)
            .count();
    }

private:
    std::chrono::steady_clock::time_point start_ =
        std::chrono::steady_clock::now();
};

// Per-run provenance shared by all outputs of one invocation.
struct RunContext {
    std::string command;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> digests;
    std::vector<std::pair<std::string, double>> timings;

    void add_input(const std::string& path) {
        digests.emplace_back(path, logcave::io::digest_file(path));
    }

    void write_manifest(const std::string& output_path) const {
        logcave::io::RunManifest m;
        m.command = command;
        m.seed = seed;
        m.input_digests = digests;
        m.version = std::string(logcave::io::kToolVersion);
        m.timings_ms = timings;
        m.timestamp = logcave::io::iso_timestamp_utc();
        logcave::io::write_json(output_path + ".manifest.json",
                                logcave::io::manifest_to_json(m));
    }
};

std::string echo_command(int argc, char** argv) {
    std::string out;
    for (int i = 0; i < argc; ++i) {
        if (i) out += ' ';
        out += argv[i];
    }
    return out;
}

logcave::EmpiricalDistribution load_distribution(const std::string& path) {
    auto [values, weights] = logcave::io::read_values_weights(
        path, logcave::io::csv_has_header(path));
    return logcave::EmpiricalDistribution::from_samples(values, weights);
}

std::vector<std::string> split_tokens(const std::string& csv) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= csv.size()) {
        std::size_t comma = csv.find(',', start);
        std::size_t end = (comma == std::string::npos) ? csv.size() : comma;
        std::string tok(logcave::io::detail::trim(
            std::string_view(csv).substr(start, end - start)));
        if (!tok.empty()) out.push_back(std::move(tok));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

// ---------------------------------------------------------------------------
// project

int cmd_project(RunContext& ctx, const std::string& input,
                const std::string& out, const std::string& certificate,
                double tol) {
    ctx.add_input(input);
    Timer total;
    logcave::EmpiricalDistribution q = load_distribution(input);
    logcave::FitOptions opts;
    opts.certificate_tol = tol;
    Timer fit_timer;
    logcave::LogConcaveDensity psi = logcave::fit(q, opts);
    ctx.timings.emplace_back("fit", fit_timer.ms());
    logcave::io::write_json(out, logcave::io::density_to_json(psi));
    if (!certificate.empty()) {
        logcave::Certificate cert = logcave::certify(psi, q, tol);
        logcave::io::write_json(certificate,
                                logcave::io::certificate_to_json(cert));
    }
    ctx.timings.emplace_back("total", total.ms());
    ctx.write_manifest(out);
    if (!certificate.empty()) ctx.write_manifest(certificate);
    return 0;
}

// ---------------------------------------------------------------------------
// certify

int cmd_certify(RunContext& ctx, const std::string& psi_path,
                const std::string& data_path, const std::string& out,
                double tol) {
    ctx.add_input(psi_path);
    ctx.add_input(data_path);
    Timer total;
    logcave::LogConcaveDensity psi =
        logcave::io::density_from_json(logcave::io::parse_json(psi_path));
    logcave::EmpiricalDistribution q = load_distribution(data_path);
    logcave::Certificate cert = logcave::certify(psi, q, tol);
    json j = logcave::io::certificate_to_json(cert);
    ctx.timings.emplace_back("total", total.ms());
    if (out.empty()) {
        std::cout << j.dump(2) << "\n";
    } else {
        logcave::io::write_json(out, j);
        ctx.write_manifest(out);
    }
    return 0;
}

// ---------------------------------------------------------------------------
// distance

int cmd_distance(RunContext& ctx, const std::string& a_path,
                 const std::string& b_path, const std::string& metrics,
                 const std::string& out) {
    bool want_d1 = false, want_ks = false, want_bl = false;
    for (const std::string& tok : split_tokens(metrics)) {
        if (tok == "d1") {
            want_d1 = true;
        } else if (tok == "ks") {
            want_ks = true;
        } else if (tok == "bl") {
            want_bl = true;
        } else {
            throw logcave::BadInput("unknown metric '" + tok +
                                    "' (expected d1, ks or bl)");
        }
    }
    if (!want_d1 && !want_ks && !want_bl)
        throw logcave::BadInput("no metrics requested");
    ctx.add_input(a_path);
    ctx.add_input(b_path);
    Timer total;
    logcave::EmpiricalDistribution a = load_distribution(a_path);
    logcave::EmpiricalDistribution b = load_distribution(b_path);
    json j;
    if (want_bl) {
        logcave::DistanceReport report = logcave::distance_report(a, b);
        if (want_d1) j["d1"] = report.d1;
        if (want_ks) j["dks"] = report.dks;
        j["dbl_upper"] = report.dbl_upper;
        j["r_used"] = report.r_used;
        j["dbl_loose"] = report.dbl_loose;
    } else {
        if (want_d1) j["d1"] = logcave::mallows_d1(a, b);
        if (want_ks) j["dks"] = logcave::kolmogorov_smirnov(a, b);
    }
    ctx.timings.emplace_back("total", total.ms());
    if (out.empty()) {
        std::cout << j.dump(2) << "\n";
    } else {
        logcave::io::write_json(out, j);
        ctx.write_manifest(out);
    }
    return 0;
}

// ---------------------------------------------------------------------------
// regress

int cmd_regress(RunContext& ctx, const std::string& input,
                const std::string& model, const std::string& design_path,
                const std::string& quantiles, std::uint64_t seed,
                const std::string& out, const std::string& curves_path) {
    ctx.add_input(input);
    if (!design_path.empty()) ctx.add_input(design_path);

    std::vector<std::string> beta_labels = split_tokens(quantiles);
    std::vector<double> betas;
    for (const std::string& tok : beta_labels) {
        double b =
            logcave::io::detail::parse_field(tok, "--quantiles", 1);
        if (!(b > 0.0) || !(b < 1.0))
            throw logcave::BadInput("quantile level '" + tok +
                                    "' outside (0,1)");
        betas.push_back(b);
    }

    Timer total;
    auto [x, y] =
        logcave::io::read_xy(input, logcave::io::csv_has_header(input));

    Timer fit_timer;
    std::unique_ptr<logcave::RegressionFit> fit;
    if (model == "linear") {
        logcave::DesignMatrix design =
            design_path.empty()
                ? logcave::DesignMatrix::simple(x)
                : logcave::DesignMatrix::with_intercept(logcave::io::read_csv(
                      design_path,
                      logcave::io::csv_has_header(design_path)));
        if (design.rows() != y.size())
            throw logcave::BadDesign("design rows != observation count");
        logcave::DEOptions de;
        de.seed = seed;
        fit = std::make_unique<logcave::RegressionFit>(
            logcave::fit_linear(design, y, de));
    } else {
        fit = std::make_unique<logcave::RegressionFit>(
            logcave::fit_isotonic(x, y));
    }
    ctx.timings.emplace_back("fit", fit_timer.ms());

    logcave::io::write_json(out, logcave::io::regression_fit_to_json(
                                     *fit, model));
    std::vector<std::vector<double>> curves;
    for (double beta : betas)
        curves.push_back(logcave::quantile_curve(*fit, beta));
    logcave::io::atomic_write(
        curves_path,
        logcave::io::curves_csv(x, fit->mu_values, beta_labels, curves));
    ctx.timings.emplace_back("total", total.ms());
    ctx.write_manifest(out);
    ctx.write_manifest(curves_path);
    return 0;
}

// ---------------------------------------------------------------------------
// simulate

int cmd_simulate(RunContext& ctx, const std::string& scenario, std::size_t n,
                 std::size_t reps, double shape, std::uint64_t seed,
                 const std::string& out, int threads) {
    logcave::SimConfig cfg;
    cfg.scenario = logcave::scenario_from_name(scenario);
    cfg.n = n;
    cfg.reps = reps;
    cfg.shape_r = shape;
    cfg.seed = seed;
    if (threads < 1)
        throw logcave::BadInput("--threads must be at least 1");
    Timer total;
    logcave::SimReport report = logcave::run_sim(cfg, threads);
    ctx.timings.emplace_back("total", total.ms());
    logcave::io::write_json(out, logcave::io::sim_report_to_json(report));
    ctx.write_manifest(out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "log-concave projection, regression and simulation toolkit"};
    app.require_subcommand(1);

    RunContext ctx;
    ctx.command = echo_command(argc, argv);
    std::function<int()> runner;

    // project
    std::string pr_input, pr_out, pr_cert;
    double pr_tol = 1e-6;
    auto* project = app.add_subcommand(
        "project", "Fit the log-concave projection of a weighted sample");
    project->add_option("--input", pr_input, "CSV of value[,weight] rows")
        ->required();
    project->add_option("--out", pr_out, "output density JSON")->required();
    project->add_option("--certificate", pr_cert,
                        "also write the optimality certificate JSON");
    project->add_option("--tol", pr_tol, "certificate tolerance")
        ->capture_default_str();
    project->callback([&] {
        runner = [&] {
            return cmd_project(ctx, pr_input, pr_out, pr_cert, pr_tol);
        };
    });

    // certify
    std::string ce_psi, ce_data, ce_out;
    double ce_tol = 1e-6;
    auto* certify = app.add_subcommand(
        "certify", "Check a fitted density against a dataset");
    certify->add_option("--psi", ce_psi, "density JSON to check")->required();
    certify->add_option("--data", ce_data, "CSV of value[,weight] rows")
        ->required();
    certify->add_option("--out", ce_out,
                        "write the certificate JSON here instead of stdout");
    certify->add_option("--tol", ce_tol, "certificate tolerance")
        ->capture_default_str();
    certify->callback([&] {
        runner = [&] {
            return cmd_certify(ctx, ce_psi, ce_data, ce_out, ce_tol);
        };
    });

    // distance
    std::string di_a, di_b, di_metrics = "d1,ks,bl", di_out;
    auto* distance = app.add_subcommand(
        "distance", "Distances between two empirical distributions");
    distance->add_option("--a", di_a, "first CSV of value[,weight] rows")
        ->required();
    distance->add_option("--b", di_b, "second CSV of value[,weight] rows")
        ->required();
    distance->add_option("--metrics", di_metrics,
                         "comma list from d1, ks, bl")
        ->capture_default_str();
    distance->add_option("--out", di_out,
                         "write the report JSON here instead of stdout");
    distance->callback([&] {
        runner = [&] {
            return cmd_distance(ctx, di_a, di_b, di_metrics, di_out);
        };
    });

    // regress
    std::string rg_input, rg_model, rg_design, rg_out, rg_curves;
    std::string rg_quantiles = "0.1,0.25,0.5,0.75,0.9";
    std::uint64_t rg_seed = 0;
    auto* regress = app.add_subcommand(
        "regress", "Fit a regression with log-concave errors");
    regress->add_option("--input", rg_input, "CSV of x,y rows")->required();
    regress->add_option("--model", rg_model, "mean model")
        ->required()
        ->check(CLI::IsMember({"linear", "isotonic"}));
    regress->add_option("--design", rg_design,
                        "CSV of covariate rows (intercept added; replaces "
                        "the simple intercept+x design)");
    regress->add_option("--quantiles", rg_quantiles,
                        "comma list of quantile-curve levels in (0,1)")
        ->capture_default_str();
    regress->add_option("--seed", rg_seed, "global-optimizer seed")
        ->capture_default_str();
    regress->add_option("--out", rg_out, "output fit JSON")->required();
    regress->add_option("--curves", rg_curves, "output curve CSV")
        ->required();
    regress->callback([&] {
        runner = [&] {
            ctx.seed = rg_seed;
            return cmd_regress(ctx, rg_input, rg_model, rg_design,
                               rg_quantiles, rg_seed, rg_out, rg_curves);
        };
    });

    // simulate
    std::string si_scenario, si_out;
    std::size_t si_n = 100, si_reps = 200;
    double si_shape = 1.0;
    std::uint64_t si_seed = 1;
    int si_threads = 1;
    auto* simulate =
        app.add_subcommand("simulate", "Run a seeded Monte Carlo study");
    simulate->add_option("--scenario", si_scenario,
                         "linear_gamma | linear_gauss | isotonic | "
                         "projection_consistency | d1_continuity")
        ->required();
    simulate->add_option("--n", si_n, "per-replication sample size")
        ->capture_default_str();
    simulate->add_option("--reps", si_reps, "replication count")
        ->capture_default_str();
    simulate->add_option("--shape", si_shape, "gamma shape parameter")
        ->capture_default_str();
    simulate->add_option("--seed", si_seed, "master seed")
        ->capture_default_str();
    simulate->add_option("--out", si_out, "output report JSON")->required();
    simulate
        ->add_option("--threads", si_threads, "worker thread count")
        ->capture_default_str()
        ->envname("LOGCAVE_THREADS");
    simulate->callback([&] {
        runner = [&] {
            ctx.seed = si_seed;
            return cmd_simulate(ctx, si_scenario, si_n, si_reps, si_shape,
                                si_seed, si_out, si_threads);
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        print_error("UsageError", e.what());
        return 2;
    }

    try {
        return runner ? runner() : 2;
    } catch (const logcave::Error& e) {
        std::string msg = e.what();
        std::string prefix = e.kind() + ": ";
        if (msg.rfind(prefix, 0) == 0) msg = msg.substr(prefix.size());
        print_error(e.kind(), msg);
        return exit_code_for(e);
    } catch (const std::exception& e) {
        print_error("InternalError", e.what());
        return 2;
    }
}
