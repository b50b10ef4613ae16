#pragma once

#include <cstddef>
#include <filesystem>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "infheat/grid.hpp"
#include "infheat/operator.hpp"

namespace infheat {

enum class ProblemKind { cauchy, dirichlet, custom_mask };
enum class SolverKind { radial, grid };
enum class MaskKind { box, ball };
enum class InitialKind { zero, bump, two_bump, paraboloid, barenblatt, giant, blowup, wave, file };
enum class ScheduleKind { geometric, list, none };

struct EquationConfig {
    double h = 3.0;
    double eps = 0.0;
    double delta = 1e-3;
    SourceKind source = SourceKind::zero;
    double source_coefficient = 0.0;
    double source_bound = 0.0;
    bool operator==(const EquationConfig&) const = default;
};

struct ProblemConfig {
    ProblemKind kind = ProblemKind::cauchy;
    SolverKind solver = SolverKind::radial;
    int dimension = 1;
    MaskKind mask = MaskKind::box;
    std::vector<double> box_lower{-1.0};
    std::vector<double> box_upper{1.0};
    /// Radial extent, truncation radius (Cauchy on a grid) or ball radius.
    double radius = 5.0;
    double boundary_value = 0.0;
    bool operator==(const ProblemConfig&) const = default;
};

struct InitialConfig {
    InitialKind kind = InitialKind::zero;
    /// bump: amplitude (1 - (|x - center|/width)^2)^2_+ ; paraboloid: amplitude (1 - |x|^2/width^2)_+.
    double amplitude = 1.0;
    double width = 0.5;
    std::vector<double> center{0.0};
    /// two_bump adds amplitude2 (1 - ((|x| - ring_radius)/width2)^2)^2_+.
    double amplitude2 = 0.5;
    double width2 = 0.5;
    double ring_radius = 2.0;
    /// Exact-solution parameters.
    double R = 1.0;
    double r0 = 1.0;
    double t0 = 0.0;
    double c = 1.0;
    std::vector<double> nu{1.0};
    /// Two-column CSV `r,u` read as a radial profile.
    std::string file;
    bool operator==(const InitialConfig&) const = default;
};

struct GridConfig {
    std::size_t n = 400;
    StencilMode stencil = StencilMode::gradient_aligned;
    int aligned_reach = 2;
    double cfl_theta = 0.4;
    unsigned workers = 1;
    double dt_max = std::numeric_limits<double>::infinity();
    bool operator==(const GridConfig&) const = default;
};

struct TimeConfig {
    double t0 = 0.0;
    double t_end = 1.0;
    ScheduleKind schedule = ScheduleKind::geometric;
    /// First geometric snapshot; 0 picks t0 when positive, else min(1, t_end).
    double snapshot_first = 0.0;
    /// 10^{1/8}.
    double snapshot_ratio = 1.333521432163324;
    std::vector<double> snapshot_times;
    bool operator==(const TimeConfig&) const = default;
};

struct DiagnosticsConfig {
    /// Diagnostics row every `every` steps; 0 writes rows at snapshots only.
    std::size_t every = 0;
    bool error_vs_exact = true;
    bool operator==(const DiagnosticsConfig&) const = default;
};

struct OutputConfig {
    std::string directory = "run";
    bool csv = true;
    bool binary = true;
    bool operator==(const OutputConfig&) const = default;
};

/// Pass/fail thresholds used by the asymptotic reports and the acceptance checks.
struct Tolerances {
    double fit_t_lo = 10.0;
    double fit_t_hi = 1000.0;
    double exponent = 0.05;
    double residual = 1e-6;
    double giant_identity = 1e-6;
    double operator_relative = 1e-12;
    double radial_error = 5e-3;
    double refinement_order = 0.8;
    double giant_gap = 5e-3;
    double giant_uniqueness = 1e-2;
    double eigen_extracted = 1e-2;
    double eigen_exact = 1e-3;
    double stabilization = 1e-6;
    double bc_violation = 1e-6;
    double bc_monotonicity = 1e-8;
    double grid_error = 1e-2;
    double front_speed_cells = 2.0;
    double maximum_principle = 1e-10;
    double ordering = 1e-10;
    bool operator==(const Tolerances&) const = default;
};

struct ExperimentConfig {
    EquationConfig equation;
    ProblemConfig problem;
    InitialConfig initial;
    GridConfig grid;
    TimeConfig time;
    DiagnosticsConfig diagnostics;
    OutputConfig output;
    Tolerances tolerances;
    bool operator==(const ExperimentConfig&) const = default;
};

/// Parses the sectioned `key = value` text and validates it.
/// Throws ConfigError naming the offending key or violated rule.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Applies `section.key=value` overrides to an already parsed config and revalidates.
ExperimentConfig apply_overrides(const ExperimentConfig& base, const std::vector<std::string>& assignments);

/// Canonical text: every section and key in a fixed order, doubles in shortest round-trip form.
std::string serialize_config(const ExperimentConfig& config);

/// Cross-field checks; throws ConfigError.
void validate(const ExperimentConfig& config);

/// Snapshot times in [t0, t_end], sorted, including t0 and t_end; Dirichlet
/// problems also get t_end e^{-(h-1)} for giant extraction.
std::vector<double> snapshot_times(const ExperimentConfig& config);

std::string_view to_string(ProblemKind k);
std::string_view to_string(SolverKind k);
std::string_view to_string(MaskKind k);
std::string_view to_string(InitialKind k);
std::string_view to_string(ScheduleKind k);
std::string_view to_string(StencilMode k);
std::string_view to_string(SourceKind k);

}  // namespace infheat
