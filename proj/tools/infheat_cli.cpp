// infheat command line: exact | evolve | asymptotics | verify
//
// Exit codes: 0 ok, 1 a check failed, 2 bad configuration or input, 3 numerical abort.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "infheat/checks.hpp"
#include "infheat/config.hpp"
#include "infheat/error.hpp"
#include "infheat/exact.hpp"
#include "infheat/experiment.hpp"
#include "infheat/io.hpp"

#ifndef INFHEAT_VERSION
#define INFHEAT_VERSION "0.0.0"
#endif

namespace {

using namespace infheat;

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kBadInput = 2;
constexpr int kAborted = 3;

struct ExactArgs {
    std::string family;
    double h = 3.0;
    double R = 1.0;
    double t = 1.0;
    double r0 = 1.0;
    double t0 = std::nan("");
    double c = 1.0;
    std::vector<double> nu;
    int dim = 1;
    std::size_t samples = 201;
    double extent = 0.0;
    std::string out = "-";
    bool dump_profile = false;
    std::size_t profile_nodes = GiantProfile::kDefaultNodes;
    std::size_t spot_checks = 16;
    double stencil = 1e-3;
};

// Summary lines go to stdout unless the CSV does.
std::ostream& summary_stream(const ExactArgs& a)
{
    return a.out == "-" ? std::cerr : std::cout;
}

int cmd_exact(const ExactArgs& a)
{
    const Homogeneity H(a.h);
    std::vector<double> dir(static_cast<std::size_t>(a.dim), 0.0);
    dir[0] = 1.0;
    if (a.family == "wave" && !a.nu.empty()) {
        if (a.nu.size() != dir.size())
            throw std::invalid_argument("--nu needs " + std::to_string(a.dim) + " components");
        dir = a.nu;
    }

    std::shared_ptr<const GiantProfile> profile;
    if (a.family == "giant")
        profile = build_giant_profile(H, a.profile_nodes);

    std::ostream& info = summary_stream(a);
    std::ofstream file;
    if (a.out != "-") {
        file.open(a.out);
        if (!file)
            throw std::invalid_argument("cannot write '" + a.out + "'");
    }
    std::ostream& csv = a.out == "-" ? std::cout : file;
    csv.precision(17);

    if (a.dump_profile) {
        if (!profile)
            throw std::invalid_argument("--dump-profile needs --family giant");
        profile->write_csv(csv);
        info.precision(10);
        info << "Rbar = " << profile->Rbar() << "\n";
        info << "nodes = " << profile->size() << "\n";
        info << "quadrature error estimate = " << profile->quadrature_error() << "\n";
        return kOk;
    }

    std::optional<ExactSolution> u;
    double lo = 0.0;
    double hi = 0.0;
    if (a.family == "barenblatt") {
        Barenblatt b(H, a.R);
        const double L = a.extent > 0.0 ? a.extent : 1.5 * b.support_radius(a.t);
        lo = -L;
        hi = L;
        u = b;
    } else if (a.family == "giant") {
        const double t0 = std::isnan(a.t0) ? 0.0 : a.t0;
        FriendlyGiant g(profile, a.r0, t0);
        const double L = a.extent > 0.0 ? a.extent : a.r0;
        lo = -L;
        hi = L;
        u = g;
    } else if (a.family == "blowup") {
        const double t0 = std::isnan(a.t0) ? a.t + 1.0 : a.t0;
        BlowUp b(H, a.r0, t0);
        const double L = a.extent > 0.0 ? a.extent : a.r0 + 1.0;
        lo = -L;
        hi = L;
        u = b;
    } else if (a.family == "wave") {
        TravelingWave w(H, dir, a.c);
        const double L = a.extent > 0.0 ? a.extent : 2.0;
        lo = a.c * a.t - L;
        hi = a.c * a.t + L;
        u = w;
    } else {
        throw std::invalid_argument("unknown family '" + a.family + "' (barenblatt, giant, blowup, wave)");
    }

    if (a.samples < 2)
        throw std::invalid_argument("--axis-samples must be at least 2");
    std::vector<double> x(dir.size());
    csv << "s,u\n";
    double centre = std::nan("");
    for (std::size_t i = 0; i < a.samples; ++i) {
        const double s = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(a.samples - 1);
        for (std::size_t k = 0; k < x.size(); ++k)
            x[k] = s * dir[k];
        const double v = evaluate(*u, x, a.t);
        if (s == 0.0)
            centre = v;
        csv << s << ',' << v << '\n';
    }

    info.precision(12);
    info << "family = " << family_name(*u) << ", h = " << a.h << ", t = " << a.t << "\n";
    info << "axis samples = " << a.samples << " on [" << lo << ", " << hi << "]\n";
    if (!std::isnan(centre))
        info << "centre value = " << centre << "\n";
    if (a.family == "barenblatt")
        info << "support radius = " << std::get<Barenblatt>(*u).support_radius(a.t) << "\n";
    if (a.family == "wave")
        info << "front at x.nu = " << a.c * a.t << "\n";
    if (a.family == "giant")
        info << "Rbar = " << profile->Rbar() << "\n";

    double worst = 0.0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < a.spot_checks; ++i) {
        const double s = lo + (hi - lo) * (static_cast<double>(i) + 0.5) / static_cast<double>(a.spot_checks);
        for (std::size_t k = 0; k < x.size(); ++k)
            x[k] = s * dir[k];
        try {
            worst = std::max(worst, residual_at(*u, x, a.t, a.stencil));
            ++used;
        } catch (const std::domain_error&) {
        }
    }
    info << "residual spot checks: " << used << " of " << a.spot_checks << " points, max residual = " << worst
         << "\n";
    return kOk;
}

struct EvolveArgs {
    std::string config;
    std::vector<std::string> overrides;
    std::string output;
    bool quiet = false;
};

int cmd_evolve(const EvolveArgs& a)
{
    ExperimentConfig cfg = load_config(a.config);
    std::vector<std::string> sets = a.overrides;
    if (!a.output.empty())
        sets.push_back("output.directory=" + a.output);
    if (!sets.empty())
        cfg = apply_overrides(cfg, sets);
    const RunSummary s = run_evolve(cfg, a.quiet ? nullptr : &std::cerr);
    std::cout << "run directory: " << s.directory.string() << "\n";
    std::cout << "config hash: " << s.config_hash << "\n";
    std::cout << "steps: " << s.steps << ", snapshots: " << s.snapshots << ", final time: " << format_double(s.final_time)
              << "\n";
    if (s.final_error)
        std::cout << "final max-norm error vs exact: " << format_double(*s.final_error) << "\n";
    std::cout << "wall time: " << s.wall_seconds << " s\n";
    if (!s.ok) {
        std::cout << "aborted: " << s.message << "\n";
        return kAborted;
    }
    return kOk;
}

struct AsymptoticsArgs {
    std::string directory;
    std::vector<std::string> targets;
    std::string report;
};

int cmd_asymptotics(const AsymptoticsArgs& a)
{
    LoadedRun run;
    try {
        run = load_run(a.directory);
    } catch (const RunDataError& e) {
        std::cout << nlohmann::json{{"error", "missing run data"}, {"directory", a.directory}, {"message", e.what()}}.dump(2)
                  << "\n";
        return kBadInput;
    }
    std::vector<std::string> targets = a.targets;
    if (targets.empty() || (targets.size() == 1 && targets[0] == "all"))
        targets = applicable_targets(run.config);
    std::vector<TargetReport> reports;
    try {
        reports = run_asymptotics(run, targets);
    } catch (const RunDataError& e) {
        std::cout << nlohmann::json{{"error", "missing snapshots"}, {"directory", a.directory}, {"message", e.what()}}.dump(2)
                  << "\n";
        return kBadInput;
    }
    const std::string report = a.report.empty() ? (std::filesystem::path(a.directory) / "report.csv").string() : a.report;
    write_report_csv(report, reports);
    bool ok = true;
    for (const auto& r : reports) {
        std::cout << r.target << ": " << (r.passed ? "PASS" : "FAIL") << "  " << r.quantity << " = "
                  << format_double(r.measured) << " (expected " << format_double(r.expected) << " +- "
                  << format_double(r.tolerance) << ")";
        if (!r.detail.empty())
            std::cout << "  " << r.detail;
        std::cout << "\n";
        ok = ok && r.passed;
    }
    std::cout << "report: " << report << "\n";
    return ok ? kOk : kFailed;
}

struct VerifyArgs {
    std::string suite = "default";
    std::string mutate = "none";
    std::string config;
    std::string json;
    unsigned workers = 0;
    std::uint64_t seed = CheckOptions{}.seed;
    bool list = false;
    bool quiet = false;
};

int cmd_verify(const VerifyArgs& a)
{
    if (a.list) {
        for (const auto& s : suite_names())
            std::cout << s << "\n";
        return kOk;
    }
    CheckOptions o;
    o.mutation = parse_mutation(a.mutate);
    if (!a.config.empty())
        o.tol = load_config(a.config).tolerances;
    o.workers = a.workers > 0 ? a.workers : std::clamp(std::thread::hardware_concurrency(), 1u, 8u);
    o.seed = a.seed;
    o.log = a.quiet ? nullptr : &std::cerr;
    const SuiteResult r = run_suite(a.suite, o);
    const nlohmann::json j = to_json(r);
    std::cout << j.dump(2) << "\n";
    if (!a.json.empty())
        write_json(a.json, j);
    if (!a.quiet)
        std::cerr << "suite " << r.suite << ": " << (r.passed() ? "PASS" : "FAIL") << "\n";
    return r.passed() ? kOk : kFailed;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Explicit solvers and checks for the h-homogeneous infinity-Laplacian evolution"};
    app.set_version_flag("--version", INFHEAT_VERSION);
    // -h would collide with --h; subcommands inherit this
    app.set_help_flag("--help", "Print this help message and exit");
    app.require_subcommand(1);

    ExactArgs ex;
    auto* exact = app.add_subcommand("exact", "Sample an exact solution along an axis");
    exact->add_option("--family", ex.family, "barenblatt | giant | blowup | wave")->required();
    exact->add_option("--h", ex.h, "Homogeneity degree h > 1");
    exact->add_option("--R", ex.R, "Barenblatt radius parameter");
    exact->add_option("--t", ex.t, "Time");
    exact->add_option("--r0", ex.r0, "Giant zero radius / blow-up core radius");
    exact->add_option("--t0", ex.t0, "Giant time origin (default 0) / blow-up time (default t + 1)");
    exact->add_option("--c", ex.c, "Wave speed");
    exact->add_option("--nu", ex.nu, "Wave direction (unit vector, --dim components)");
    exact->add_option("--dim", ex.dim, "Space dimension")->check(CLI::Range(1, 3));
    exact->add_option("--axis-samples", ex.samples, "Samples along the axis");
    exact->add_option("--extent", ex.extent, "Half-length of the sampled segment (0 picks one per family)");
    exact->add_option("--out", ex.out, "CSV path, - for stdout");
    exact->add_flag("--dump-profile", ex.dump_profile, "Write the giant profile table s,r,X,Xprime");
    exact->add_option("--profile-nodes", ex.profile_nodes, "Giant table size");
    exact->add_option("--spot-checks", ex.spot_checks, "Residual evaluations along the axis");
    exact->add_option("--stencil", ex.stencil, "Finite-difference step of the residual");

    EvolveArgs ev;
    auto* evolve = app.add_subcommand("evolve", "Run an experiment from a config file");
    evolve->add_option("--config", ev.config, "Config file")->required();
    evolve->add_option("--set", ev.overrides, "Override section.key=value (repeatable)");
    evolve->add_option("--output", ev.output, "Run directory (overrides output.directory)");
    evolve->add_flag("--quiet", ev.quiet, "No per-snapshot lines");

    AsymptoticsArgs as;
    auto* asym = app.add_subcommand("asymptotics", "Evaluate large-time targets on a run directory");
    asym->add_option("run", as.directory, "Run directory")->required();
    asym->add_option("--targets", as.targets, "Comma-separated targets; all (default) picks those that fit the problem")->delimiter(',');
    asym->add_option("--report", as.report, "CSV report path (default <run>/report.csv)");

    VerifyArgs vf;
    auto* verify = app.add_subcommand("verify", "Run a property / acceptance suite");
    verify->add_option("--suite", vf.suite, "Suite or check group (see --list)");
    verify->add_option("--mutate", vf.mutate, "none | c_h | d_h | flux");
    verify->add_option("--config", vf.config, "Take tolerances from this config");
    verify->add_option("--json", vf.json, "Also write the JSON summary here");
    verify->add_option("--workers", vf.workers, "Grid threads (0: hardware concurrency, at most 8)");
    verify->add_option("--seed", vf.seed, "Seed of the random samples");
    verify->add_flag("--list", vf.list, "List suites and exit");
    verify->add_flag("--quiet", vf.quiet, "No progress on stderr");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kBadInput;
    }

    try {
        if (*exact)
            return cmd_exact(ex);
        if (*evolve)
            return cmd_evolve(ev);
        if (*asym)
            return cmd_asymptotics(as);
        return cmd_verify(vf);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kBadInput;
    } catch (const NumericalAbort& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return kAborted;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kBadInput;
    } catch (const std::out_of_range& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kBadInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailed;
    }
}
