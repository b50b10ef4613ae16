#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "infheat/config.hpp"
#include "infheat/exact.hpp"
#include "infheat/grid.hpp"
#include "infheat/radial.hpp"

namespace infheat {

/// Exact solution named by the initial-data section, if any.
std::optional<ExactSolution> exact_reference(const ExperimentConfig& config);

/// Initial data u0(x) at time.t0.
std::function<double(Point)> initial_data(const ExperimentConfig& config);

/// Grid problem described by a grid-solver config.
GridProblem build_grid_problem(const ExperimentConfig& config);

RadialProfile build_radial_initial(const ExperimentConfig& config);

SchemeParams build_scheme(const ExperimentConfig& config);

struct RunSummary {
    std::filesystem::path directory;
    bool ok = true;
    std::string message;
    std::size_t steps = 0;
    std::size_t snapshots = 0;
    double final_time = 0.0;
    /// Max-norm distance to the exact reference at the final snapshot.
    std::optional<double> final_error;
    double wall_seconds = 0.0;
    std::string config_hash;
};

/// Runs the configured evolution and writes config.ini, manifest.json,
/// diagnostics.csv and snapshots/ under config.output.directory.
/// A NumericalAbort is recorded in the manifest and reported with ok = false.
RunSummary run_evolve(const ExperimentConfig& config, std::ostream* log = nullptr);

/// Thrown when a run directory lacks the files a report needs.
class RunDataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct LoadedRun {
    std::filesystem::path directory;
    ExperimentConfig config;
    nlohmann::json manifest;
    std::vector<RadialProfile> radial;
    std::vector<Field> fields;
};

LoadedRun load_run(const std::filesystem::path& directory);

struct TargetReport {
    std::string target;
    std::string quantity;
    double measured = 0.0;
    double expected = 0.0;
    double tolerance = 0.0;
    bool passed = false;
    std::string detail;
};

/// cauchy-decay, support-rate, barenblatt-gap, dirichlet-decay, giant,
/// eigen-residual, benilan-crandall, bc-monotonicity.
const std::vector<std::string>& asymptotic_targets();

/// The targets that make sense for the run's problem: the Cauchy rates and
/// Barenblatt gap for whole-space runs, the Dirichlet rate, eigenvalue residual
/// and monotonicity for bounded domains, plus the giant comparison on a ball.
std::vector<std::string> applicable_targets(const ExperimentConfig& config);

/// Evaluates the named targets; an unknown name throws std::invalid_argument,
/// missing snapshots throw RunDataError.
std::vector<TargetReport> run_asymptotics(const LoadedRun& run, const std::vector<std::string>& targets);

/// `target,quantity,measured,expected,tolerance,pass` rows.
void write_report_csv(const std::filesystem::path& path, const std::vector<TargetReport>& reports);

}  // namespace infheat
