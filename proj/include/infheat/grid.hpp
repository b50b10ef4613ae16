#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "infheat/homogeneity.hpp"
#include "infheat/operator.hpp"

namespace infheat {

using Point = std::span<const double>;

enum class NodeKind : std::uint8_t { exterior = 0, boundary = 1, interior = 2 };

/// Uniform Cartesian node grid on a box in d = 1, 2 or 3 dimensions with a
/// node-resolved domain mask. Interior nodes are updated by the scheme,
/// boundary nodes carry Dirichlet data, exterior nodes are inactive.
class Grid {
public:
    static constexpr int kMaxDim = 3;
    static constexpr int kMaxReach = 8;
    using Index = std::array<std::size_t, kMaxDim>;

    /// Box grid whose outer faces are the boundary.
    Grid(std::vector<double> lower, std::vector<double> upper, std::vector<std::size_t> nodes);

    /// Grid whose interior is {x in box : inside(x)} minus the box faces.
    /// Throws std::invalid_argument if the interior is empty or not connected.
    Grid(std::vector<double> lower, std::vector<double> upper, std::vector<std::size_t> nodes,
         const std::function<bool(Point)>& inside);

    int dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return kind_.size(); }
    std::size_t nodes(int axis) const { return nodes_[static_cast<std::size_t>(axis)]; }
    double lower(int axis) const { return lower_[static_cast<std::size_t>(axis)]; }
    double upper(int axis) const { return upper_[static_cast<std::size_t>(axis)]; }
    double spacing(int axis) const { return spacing_[static_cast<std::size_t>(axis)]; }
    double min_spacing() const noexcept;
    /// Volume of one grid cell.
    double cell_volume() const noexcept;
    std::size_t stride(int axis) const { return stride_[static_cast<std::size_t>(axis)]; }

    Index index(std::size_t flat) const;
    std::size_t flat(const Index& idx) const;
    void coordinates(std::size_t flat, std::span<double> out) const;
    std::vector<double> coordinates(std::size_t flat) const;

    NodeKind kind(std::size_t flat) const { return kind_[flat]; }
    std::span<const std::size_t> interior_nodes() const noexcept { return interior_; }
    std::span<const std::size_t> boundary_nodes() const noexcept { return boundary_; }
    /// Largest k <= kMaxReach such that every node within index distance k is
    /// active; at least 1 on interior nodes.
    int reach(std::size_t flat) const { return reach_[flat]; }

private:
    void init_geometry(std::vector<double> lower, std::vector<double> upper, std::vector<std::size_t> nodes);
    void classify(const std::function<bool(Point)>& inside);
    void check_connected() const;

    int dim_ = 0;
    std::array<double, kMaxDim> lower_{};
    std::array<double, kMaxDim> upper_{};
    std::array<double, kMaxDim> spacing_{};
    std::array<std::size_t, kMaxDim> nodes_{1, 1, 1};
    std::array<std::size_t, kMaxDim> stride_{};
    std::vector<NodeKind> kind_;
    std::vector<std::uint8_t> reach_;
    std::vector<std::size_t> interior_;
    std::vector<std::size_t> boundary_;
};

/// Dirichlet data g(x, t) on the parabolic boundary (initial slice and boundary nodes).
using BoundaryData = std::function<double(Point, double)>;

struct GridProblem {
    std::shared_ptr<const Grid> grid;
    BoundaryData g;
};

/// Node values of a solution at time t; exterior nodes hold 0.
struct Field {
    std::shared_ptr<const Grid> grid;
    std::vector<double> values;
    double t = 0.0;

    double max_abs() const;
    double min_active() const;
    double max_active() const;
};

/// Field equal to g(., t0) on every active node.
Field initial_field(const GridProblem& problem, double t0);

enum class StencilMode { central, gradient_aligned };

struct SchemeParams {
    explicit SchemeParams(Homogeneity homogeneity) : h(homogeneity) {}

    double eps = 0.0;
    double delta = 1e-3;
    Homogeneity h;
    SourceTerm source;
    double cfl_theta = 0.4;
    StencilMode mode = StencilMode::gradient_aligned;
    /// Sampling radius of the aligned stencil, in units of the smallest
    /// spacing; shrinks near the mask boundary. Interpolation error scales like
    /// 1/reach^2 and truncation like (reach*dx)^2, so smooth data on finer
    /// grids want more; kinks such as a moving front want less.
    int aligned_reach = 2;
    double dt_max = std::numeric_limits<double>::infinity();
    unsigned workers = 1;

    /// Throws std::invalid_argument on inconsistent settings.
    void validate() const;
};

/// Below this gradient norm the degenerate term contributes nothing.
inline constexpr double kGradientThreshold = 1e-12;

/// Central differences (u_{i+1} - u_{i-1}) / (2 dx) at an interior node.
GradientVector grid_gradient(const Field& field, std::size_t node);

/// A^{eps,delta}(Du) : D^2u + H(u) at an interior node, using the stencil mode of `params`.
double grid_operator(const Field& field, std::size_t node, const SchemeParams& params);

/// theta dx^2 / (2d eps + 2d (G^2 + delta^2)^{(h-1)/2}) with G = max |Du|,
/// capped by 1/(2M) for a source with bound M and by params.dt_max.
double grid_cfl_dt(const Field& field, const SchemeParams& params);

/// One forward Euler step; boundary nodes take g(., t + dt).
/// Throws std::invalid_argument if dt exceeds grid_cfl_dt.
Field grid_step(const Field& field, const GridProblem& problem, const SchemeParams& params, double dt);

using FieldObserver = std::function<void(const Field&)>;
using StepObserver = std::function<void(const Field&, double dt)>;

struct GridEvolveOptions {
    std::vector<double> observe_times;
    std::size_t max_steps = 100'000'000;
    /// With H = 0, abort once max|u| exceeds this multiple of the parabolic-boundary maximum.
    double growth_abort_factor = 10.0;
    StepObserver on_step;
};

/// Marches to t_end with dt = min(grid_cfl_dt, time to next observation, time left).
Field grid_evolve(Field field, const GridProblem& problem, const SchemeParams& params, double t_end,
                  const GridEvolveOptions& options = {}, const FieldObserver& observer = {});

/// Cutoff chi(y): 1 for |y| <= 1/2, 0 for |y| >= 1, smooth monotone in between.
double cutoff(double y);

/// Problem on the ball B_R (box [-R, R]^d, node spacing `spacing`) with data
/// g_R(x, t) = chi(|x|/R) g(x, t), which vanishes on |x| >= R.
GridProblem truncate_unbounded(const BoundaryData& g, double R, int dim, double spacing);

}  // namespace infheat
