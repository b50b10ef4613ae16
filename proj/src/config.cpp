#include "infheat/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "infheat/error.hpp"
#include "infheat/homogeneity.hpp"
#include "infheat/io.hpp"
#include "infheat/radial.hpp"

namespace infheat {

namespace {

template <class E>
using Named = std::pair<E, std::string_view>;

constexpr auto kProblemNames = std::to_array<Named<ProblemKind>>({
    {ProblemKind::cauchy, "cauchy"}, {ProblemKind::dirichlet, "dirichlet"}, {ProblemKind::custom_mask, "custom_mask"}});
constexpr auto kSolverNames = std::to_array<Named<SolverKind>>({{SolverKind::radial, "radial"}, {SolverKind::grid, "grid"}});
constexpr auto kMaskNames = std::to_array<Named<MaskKind>>({{MaskKind::box, "box"}, {MaskKind::ball, "ball"}});
constexpr auto kInitialNames = std::to_array<Named<InitialKind>>({
    {InitialKind::zero, "zero"},         {InitialKind::bump, "bump"},   {InitialKind::two_bump, "two_bump"},
    {InitialKind::paraboloid, "paraboloid"}, {InitialKind::barenblatt, "barenblatt"}, {InitialKind::giant, "giant"},
    {InitialKind::blowup, "blowup"},     {InitialKind::wave, "wave"},   {InitialKind::file, "file"}});
constexpr auto kScheduleNames = std::to_array<Named<ScheduleKind>>({
    {ScheduleKind::geometric, "geometric"}, {ScheduleKind::list, "list"}, {ScheduleKind::none, "none"}});
constexpr auto kStencilNames = std::to_array<Named<StencilMode>>({{StencilMode::central, "central"},
                                              {StencilMode::gradient_aligned, "aligned"}});
constexpr auto kSourceNames = std::to_array<Named<SourceKind>>({
    {SourceKind::zero, "zero"}, {SourceKind::linear, "linear"}, {SourceKind::bounded_slope, "bounded_slope"}});

template <class E, std::size_t N>
std::string_view name_of(E e, const std::array<Named<E>, N>& table)
{
    for (const auto& [k, v] : table)
        if (k == e)
            return v;
    return "?";
}

template <class E, std::size_t N>
E enum_of(const std::string& s, const std::array<Named<E>, N>& table, const std::string& key)
{
    std::string options;
    for (const auto& [k, v] : table) {
        if (v == s)
            return k;
        options += (options.empty() ? "" : "|") + std::string(v);
    }
    throw ConfigError(key + ": unknown value '" + s + "' (expected " + options + ")");
}

std::string trim(std::string s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& raw, const std::string& key)
{
    const std::string s = trim(raw);
    if (s == "inf" || s == "+inf")
        return std::numeric_limits<double>::infinity();
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty())
        throw ConfigError(key + ": '" + raw + "' is not a number");
    if (std::isnan(v))
        throw ConfigError(key + ": NaN is not allowed");
    return v;
}

long long to_integer(const std::string& raw, const std::string& key)
{
    const std::string s = trim(raw);
    long long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty())
        throw ConfigError(key + ": '" + raw + "' is not an integer");
    return v;
}

// Value conversions by member type.
void parse_into(double& out, const std::string& s, const std::string& key) { out = to_double(s, key); }
void parse_into(int& out, const std::string& s, const std::string& key)
{
    out = static_cast<int>(to_integer(s, key));
}
void parse_into(unsigned& out, const std::string& s, const std::string& key)
{
    const long long v = to_integer(s, key);
    if (v < 0)
        throw ConfigError(key + ": must be nonnegative");
    out = static_cast<unsigned>(v);
}
void parse_into(std::size_t& out, const std::string& s, const std::string& key)
{
    const long long v = to_integer(s, key);
    if (v < 0)
        throw ConfigError(key + ": must be nonnegative");
    out = static_cast<std::size_t>(v);
}
void parse_into(bool& out, const std::string& raw, const std::string& key)
{
    const std::string s = trim(raw);
    if (s == "true" || s == "1" || s == "yes")
        out = true;
    else if (s == "false" || s == "0" || s == "no")
        out = false;
    else
        throw ConfigError(key + ": '" + raw + "' is not a boolean");
}
void parse_into(std::string& out, const std::string& s, const std::string&) { out = trim(s); }
void parse_into(std::vector<double>& out, const std::string& raw, const std::string& key)
{
    out.clear();
    const std::string s = trim(raw);
    if (s.empty())
        return;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(to_double(item, key));
}
void parse_into(ProblemKind& out, const std::string& s, const std::string& key) { out = enum_of(trim(s), kProblemNames, key); }
void parse_into(SolverKind& out, const std::string& s, const std::string& key) { out = enum_of(trim(s), kSolverNames, key); }
void parse_into(MaskKind& out, const std::string& s, const std::string& key) { out = enum_of(trim(s), kMaskNames, key); }
void parse_into(InitialKind& out, const std::string& s, const std::string& key) { out = enum_of(trim(s), kInitialNames, key); }
void parse_into(ScheduleKind& out, const std::string& s, const std::string& key) { out = enum_of(trim(s), kScheduleNames, key); }
void parse_into(StencilMode& out, const std::string& s, const std::string& key) { out = enum_of(trim(s), kStencilNames, key); }
void parse_into(SourceKind& out, const std::string& s, const std::string& key) { out = enum_of(trim(s), kSourceNames, key); }

std::string format(double v)
{
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    return format_double(v);
}
std::string format(int v) { return std::to_string(v); }
std::string format(unsigned v) { return std::to_string(v); }
std::string format(std::size_t v) { return std::to_string(v); }
std::string format(bool v) { return v ? "true" : "false"; }
std::string format(const std::string& v) { return v; }
std::string format(const std::vector<double>& v)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i)
        s += (i ? "," : "") + format(v[i]);
    return s;
}
std::string format(ProblemKind v) { return std::string(name_of(v, kProblemNames)); }
std::string format(SolverKind v) { return std::string(name_of(v, kSolverNames)); }
std::string format(MaskKind v) { return std::string(name_of(v, kMaskNames)); }
std::string format(InitialKind v) { return std::string(name_of(v, kInitialNames)); }
std::string format(ScheduleKind v) { return std::string(name_of(v, kScheduleNames)); }
std::string format(StencilMode v) { return std::string(name_of(v, kStencilNames)); }
std::string format(SourceKind v) { return std::string(name_of(v, kSourceNames)); }

struct Entry {
    std::string section;
    std::string key;
    std::function<std::string(const ExperimentConfig&)> get;
    std::function<void(ExperimentConfig&, const std::string&)> set;
};

template <class S, class T>
Entry entry(std::string section, std::string key, S ExperimentConfig::*sp, T S::*mp)
{
    const std::string full = section + "." + key;
    return {section, key, [sp, mp](const ExperimentConfig& c) { return format(c.*sp.*mp); },
            [sp, mp, full](ExperimentConfig& c, const std::string& v) { parse_into(c.*sp.*mp, v, full); }};
}

const std::vector<Entry>& entries()
{
    using C = ExperimentConfig;
    static const std::vector<Entry> table = {
        entry("equation", "h", &C::equation, &EquationConfig::h),
        entry("equation", "eps", &C::equation, &EquationConfig::eps),
        entry("equation", "delta", &C::equation, &EquationConfig::delta),
        entry("equation", "source", &C::equation, &EquationConfig::source),
        entry("equation", "source_coefficient", &C::equation, &EquationConfig::source_coefficient),
        entry("equation", "source_bound", &C::equation, &EquationConfig::source_bound),

        entry("problem", "kind", &C::problem, &ProblemConfig::kind),
        entry("problem", "solver", &C::problem, &ProblemConfig::solver),
        entry("problem", "dimension", &C::problem, &ProblemConfig::dimension),
        entry("problem", "mask", &C::problem, &ProblemConfig::mask),
        entry("problem", "box_lower", &C::problem, &ProblemConfig::box_lower),
        entry("problem", "box_upper", &C::problem, &ProblemConfig::box_upper),
        entry("problem", "radius", &C::problem, &ProblemConfig::radius),
        entry("problem", "boundary_value", &C::problem, &ProblemConfig::boundary_value),

        entry("initial", "kind", &C::initial, &InitialConfig::kind),
        entry("initial", "amplitude", &C::initial, &InitialConfig::amplitude),
        entry("initial", "width", &C::initial, &InitialConfig::width),
        entry("initial", "center", &C::initial, &InitialConfig::center),
        entry("initial", "amplitude2", &C::initial, &InitialConfig::amplitude2),
        entry("initial", "width2", &C::initial, &InitialConfig::width2),
        entry("initial", "ring_radius", &C::initial, &InitialConfig::ring_radius),
        entry("initial", "R", &C::initial, &InitialConfig::R),
        entry("initial", "r0", &C::initial, &InitialConfig::r0),
        entry("initial", "t0", &C::initial, &InitialConfig::t0),
        entry("initial", "c", &C::initial, &InitialConfig::c),
        entry("initial", "nu", &C::initial, &InitialConfig::nu),
        entry("initial", "file", &C::initial, &InitialConfig::file),

        entry("grid", "n", &C::grid, &GridConfig::n),
        entry("grid", "stencil", &C::grid, &GridConfig::stencil),
        entry("grid", "aligned_reach", &C::grid, &GridConfig::aligned_reach),
        entry("grid", "cfl_theta", &C::grid, &GridConfig::cfl_theta),
        entry("grid", "workers", &C::grid, &GridConfig::workers),
        entry("grid", "dt_max", &C::grid, &GridConfig::dt_max),

        entry("time", "t0", &C::time, &TimeConfig::t0),
        entry("time", "t_end", &C::time, &TimeConfig::t_end),
        entry("time", "schedule", &C::time, &TimeConfig::schedule),
        entry("time", "snapshot_first", &C::time, &TimeConfig::snapshot_first),
        entry("time", "snapshot_ratio", &C::time, &TimeConfig::snapshot_ratio),
        entry("time", "snapshot_times", &C::time, &TimeConfig::snapshot_times),

        entry("diagnostics", "every", &C::diagnostics, &DiagnosticsConfig::every),
        entry("diagnostics", "error_vs_exact", &C::diagnostics, &DiagnosticsConfig::error_vs_exact),

        entry("output", "directory", &C::output, &OutputConfig::directory),
        entry("output", "csv", &C::output, &OutputConfig::csv),
        entry("output", "binary", &C::output, &OutputConfig::binary),

        entry("tolerances", "fit_t_lo", &C::tolerances, &Tolerances::fit_t_lo),
        entry("tolerances", "fit_t_hi", &C::tolerances, &Tolerances::fit_t_hi),
        entry("tolerances", "exponent", &C::tolerances, &Tolerances::exponent),
        entry("tolerances", "residual", &C::tolerances, &Tolerances::residual),
        entry("tolerances", "giant_identity", &C::tolerances, &Tolerances::giant_identity),
        entry("tolerances", "operator_relative", &C::tolerances, &Tolerances::operator_relative),
        entry("tolerances", "radial_error", &C::tolerances, &Tolerances::radial_error),
        entry("tolerances", "refinement_order", &C::tolerances, &Tolerances::refinement_order),
        entry("tolerances", "giant_gap", &C::tolerances, &Tolerances::giant_gap),
        entry("tolerances", "giant_uniqueness", &C::tolerances, &Tolerances::giant_uniqueness),
        entry("tolerances", "eigen_extracted", &C::tolerances, &Tolerances::eigen_extracted),
        entry("tolerances", "eigen_exact", &C::tolerances, &Tolerances::eigen_exact),
        entry("tolerances", "stabilization", &C::tolerances, &Tolerances::stabilization),
        entry("tolerances", "bc_violation", &C::tolerances, &Tolerances::bc_violation),
        entry("tolerances", "bc_monotonicity", &C::tolerances, &Tolerances::bc_monotonicity),
        entry("tolerances", "grid_error", &C::tolerances, &Tolerances::grid_error),
        entry("tolerances", "front_speed_cells", &C::tolerances, &Tolerances::front_speed_cells),
        entry("tolerances", "maximum_principle", &C::tolerances, &Tolerances::maximum_principle),
        entry("tolerances", "ordering", &C::tolerances, &Tolerances::ordering),
    };
    return table;
}

const Entry& find_entry(const std::string& section, const std::string& key)
{
    for (const auto& e : entries())
        if (e.section == section && e.key == key)
            return e;
    bool known_section = false;
    for (const auto& e : entries())
        known_section = known_section || e.section == section;
    if (!known_section)
        throw ConfigError("unknown section [" + section + "]");
    throw ConfigError("unknown key '" + key + "' in section [" + section + "]");
}

void require(bool ok, const std::string& rule)
{
    if (!ok)
        throw ConfigError(rule);
}

}  // namespace

std::string_view to_string(ProblemKind k) { return name_of(k, kProblemNames); }
std::string_view to_string(SolverKind k) { return name_of(k, kSolverNames); }
std::string_view to_string(MaskKind k) { return name_of(k, kMaskNames); }
std::string_view to_string(InitialKind k) { return name_of(k, kInitialNames); }
std::string_view to_string(ScheduleKind k) { return name_of(k, kScheduleNames); }
std::string_view to_string(StencilMode k) { return name_of(k, kStencilNames); }
std::string_view to_string(SourceKind k) { return name_of(k, kSourceNames); }

void validate(const ExperimentConfig& c)
{
    const auto& eq = c.equation;
    require(std::isfinite(eq.h) && eq.h > 1.0, "equation.h: must be finite and > 1");
    require(std::isfinite(eq.eps) && eq.eps >= 0.0, "equation.eps: must be >= 0");
    require(std::isfinite(eq.delta) && eq.delta >= 0.0, "equation.delta: must be >= 0");
    require(eq.h >= 3.0 || eq.delta > 0.0, "equation.delta: delta > 0 is required when h < 3");
    require(eq.source_bound >= 0.0 && std::isfinite(eq.source_bound), "equation.source_bound: must be >= 0");
    require(std::abs(eq.source_coefficient) <= eq.source_bound || eq.source == SourceKind::zero,
            "equation.source_coefficient: |coefficient| must not exceed source_bound");

    const auto& pb = c.problem;
    require(pb.dimension >= 1 && pb.dimension <= 3, "problem.dimension: must be 1, 2 or 3");
    require(std::isfinite(pb.radius) && pb.radius > 0.0, "problem.radius: must be positive");
    require(std::isfinite(pb.boundary_value), "problem.boundary_value: must be finite");
    if (pb.solver == SolverKind::radial) {
        require(pb.kind != ProblemKind::custom_mask, "problem.kind: custom_mask requires solver = grid");
        require(c.initial.kind != InitialKind::wave, "initial.kind: wave data is not radial; use solver = grid");
        require(c.grid.n >= RadialProfile::kMinCells, "grid.n: the radial solver needs at least 16 cells");
        require(c.equation.eps == 0.0 && c.equation.source == SourceKind::zero,
                "equation: the radial solver has no eps or source term; set eps = 0 and source = zero");
    } else {
        require(c.grid.n >= 5, "grid.n: the grid solver needs at least 5 nodes per axis");
        if (pb.kind == ProblemKind::custom_mask) {
            const auto d = static_cast<std::size_t>(pb.dimension);
            require(pb.box_lower.size() == d && pb.box_upper.size() == d,
                    "problem.box_lower/box_upper: need one entry per dimension");
            for (std::size_t a = 0; a < d; ++a)
                require(pb.box_lower[a] < pb.box_upper[a], "problem.box_lower: must be below box_upper on every axis");
        }
    }

    const auto& g = c.grid;
    require(g.cfl_theta > 0.0 && g.cfl_theta < 1.0, "grid.cfl_theta: must lie in (0, 1)");
    require(g.aligned_reach >= 1 && g.aligned_reach <= Grid::kMaxReach, "grid.aligned_reach: must lie in [1, 8]");
    require(g.workers >= 1, "grid.workers: must be >= 1");
    require(g.dt_max > 0.0, "grid.dt_max: must be positive");

    const auto& t = c.time;
    require(std::isfinite(t.t0) && std::isfinite(t.t_end) && t.t_end >= t.t0, "time.t_end: must be finite and >= t0");
    require(t.snapshot_first >= 0.0, "time.snapshot_first: must be >= 0");
    require(t.snapshot_ratio > 1.0, "time.snapshot_ratio: must exceed 1");
    if (t.schedule == ScheduleKind::list)
        require(!t.snapshot_times.empty(), "time.snapshot_times: required when schedule = list");

    const auto& in = c.initial;
    require(in.width > 0.0 && in.width2 > 0.0, "initial.width: widths must be positive");
    switch (in.kind) {
    case InitialKind::barenblatt:
        require(in.R > 0.0, "initial.R: must be positive");
        require(t.t0 > 0.0, "time.t0: Barenblatt data need t0 > 0");
        break;
    case InitialKind::giant:
        require(in.r0 > 0.0, "initial.r0: must be positive");
        require(t.t0 > in.t0, "time.t0: giant data need time.t0 > initial.t0");
        break;
    case InitialKind::blowup:
        require(in.r0 >= 0.0, "initial.r0: must be >= 0");
        require(t.t_end < in.t0, "time.t_end: blow-up data need t_end < initial.t0");
        break;
    case InitialKind::wave: {
        require(in.c != 0.0, "initial.c: wave speed must be nonzero");
        require(in.nu.size() == static_cast<std::size_t>(pb.dimension), "initial.nu: need one entry per dimension");
        double n2 = 0.0;
        for (double v : in.nu)
            n2 += v * v;
        require(std::abs(std::sqrt(n2) - 1.0) <= 1e-12, "initial.nu: must be a unit vector");
        break;
    }
    case InitialKind::file:
        require(!in.file.empty(), "initial.file: required when kind = file");
        break;
    case InitialKind::bump:
        require(pb.solver == SolverKind::radial || in.center.size() == static_cast<std::size_t>(pb.dimension),
                "initial.center: need one entry per dimension");
        break;
    default:
        break;
    }
    require(!c.output.directory.empty(), "output.directory: must not be empty");

    const auto& tol = c.tolerances;
    require(tol.fit_t_lo > 0.0 && tol.fit_t_hi > tol.fit_t_lo, "tolerances.fit_t_lo: need 0 < fit_t_lo < fit_t_hi");
}

ExperimentConfig parse_config(std::string_view text)
{
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in{std::string(text)};
    try {
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config syntax: ") + e.what());
    }
    ExperimentConfig c;
    for (const auto& [section, body] : tree) {
        if (body.empty())
            throw ConfigError("key '" + section + "' appears outside any section");
        for (const auto& [key, value] : body)
            find_entry(section, key).set(c, value.data());
    }
    validate(c);
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

ExperimentConfig apply_overrides(const ExperimentConfig& base, const std::vector<std::string>& assignments)
{
    ExperimentConfig c = base;
    for (const auto& a : assignments) {
        const auto eq = a.find('=');
        const auto dot = a.find('.');
        if (eq == std::string::npos || dot == std::string::npos || dot > eq)
            throw ConfigError("override '" + a + "': expected section.key=value");
        find_entry(trim(a.substr(0, dot)), trim(a.substr(dot + 1, eq - dot - 1))).set(c, a.substr(eq + 1));
    }
    validate(c);
    return c;
}

std::string serialize_config(const ExperimentConfig& config)
{
    std::string out;
    std::string section;
    for (const auto& e : entries()) {
        if (e.section != section) {
            if (!section.empty())
                out += '\n';
            section = e.section;
            out += "[" + section + "]\n";
        }
        out += e.key + " = " + e.get(config) + '\n';
    }
    return out;
}

std::vector<double> snapshot_times(const ExperimentConfig& c)
{
    const double t0 = c.time.t0;
    const double t1 = c.time.t_end;
    std::vector<double> times{t0, t1};
    switch (c.time.schedule) {
    case ScheduleKind::geometric: {
        double first = c.time.snapshot_first > 0.0 ? c.time.snapshot_first : (t0 > 0.0 ? t0 : std::min(1.0, t1));
        for (int k = 0;; ++k) {
            const double t = first * std::pow(c.time.snapshot_ratio, k);
            if (t > t1 * (1.0 + 1e-12))
                break;
            if (t >= t0)
                times.push_back(std::min(t, t1));
        }
        break;
    }
    case ScheduleKind::list:
        for (double t : c.time.snapshot_times)
            if (t >= t0 && t <= t1)
                times.push_back(t);
        break;
    case ScheduleKind::none:
        break;
    }
    if (c.problem.kind == ProblemKind::dirichlet) {
        const double pair = t1 * std::exp(-(c.equation.h - 1.0));
        if (pair > t0)
            times.push_back(pair);
    }
    std::sort(times.begin(), times.end());
    // Merge times that agree to rounding so the solver never takes a zero step.
    // The later one wins, which keeps t_end exact at the top.
    std::vector<double> out;
    for (double t : times) {
        if (out.empty() || t > out.back() * (1.0 + 1e-12) + 1e-300)
            out.push_back(t);
        else if (out.back() != t0)
            out.back() = t;
    }
    return out;
}

}  // namespace infheat
