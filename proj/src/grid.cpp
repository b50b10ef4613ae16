#include "infheat/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>

#include "infheat/error.hpp"

namespace infheat {

namespace {

constexpr int kMaxReach = Grid::kMaxReach;
constexpr int kDirectionsPerQuadrant = 8;
constexpr int kCubeDirectionRadius = 5;

std::size_t chunk_count(std::size_t n, unsigned workers)
{
    return std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(1, n / 256));
}

// Runs fn(begin, end, chunk) over [0, n) split into contiguous chunks, one per worker.
template <class Fn>
void parallel_chunks(std::size_t n, unsigned workers, Fn&& fn)
{
    const std::size_t w = chunk_count(n, workers);
    const std::size_t len = (n + w - 1) / std::max<std::size_t>(w, 1);
    if (w <= 1) {
        fn(std::size_t{0}, n, std::size_t{0});
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(w - 1);
    for (std::size_t k = 1; k < w; ++k) {
        const std::size_t b = std::min(n, k * len);
        const std::size_t e = std::min(n, b + len);
        pool.emplace_back([&fn, b, e, k] { fn(b, e, k); });
    }
    fn(std::size_t{0}, std::min(n, len), std::size_t{0});
}

struct Stencil {
    int dim;
    std::array<double, Grid::kMaxDim> dx;
    std::array<std::ptrdiff_t, Grid::kMaxDim> stride;
};

Stencil stencil_of(const Grid& g)
{
    Stencil s{g.dim(), {}, {}};
    for (int a = 0; a < g.dim(); ++a) {
        s.dx[static_cast<std::size_t>(a)] = g.spacing(a);
        s.stride[static_cast<std::size_t>(a)] = static_cast<std::ptrdiff_t>(g.stride(a));
    }
    return s;
}

struct LocalGradient {
    std::array<double, Grid::kMaxDim> g{};
    double norm_sq = 0.0;
};

LocalGradient gradient_at(const Stencil& s, const double* u, std::size_t node)
{
    LocalGradient out;
    for (int a = 0; a < s.dim; ++a) {
        const auto k = static_cast<std::size_t>(a);
        const double up = u[static_cast<std::ptrdiff_t>(node) + s.stride[k]];
        const double um = u[static_cast<std::ptrdiff_t>(node) - s.stride[k]];
        out.g[k] = (up - um) / (2.0 * s.dx[k]);
        out.norm_sq += out.g[k] * out.g[k];
    }
    return out;
}

double laplacian_at(const Stencil& s, const double* u, std::size_t node)
{
    double lap = 0.0;
    for (int a = 0; a < s.dim; ++a) {
        const auto k = static_cast<std::size_t>(a);
        const double up = u[static_cast<std::ptrdiff_t>(node) + s.stride[k]];
        const double um = u[static_cast<std::ptrdiff_t>(node) - s.stride[k]];
        lap += ((up + um) - 2.0 * u[node]) / (s.dx[k] * s.dx[k]);
    }
    return lap;
}

// Corners and weights of the multilinear interpolant at a fixed offset (in
// cells) from a node. Per-axis weights depend only on |offset|, so mirror-image
// offsets get mirror-image samples.
struct Sample {
    std::array<std::ptrdiff_t, 1 << Grid::kMaxDim> shift{};
    std::array<double, 1 << Grid::kMaxDim> weight{};
    int corners = 0;
};

Sample make_sample(const Stencil& s, const std::array<double, Grid::kMaxDim>& offset)
{
    std::array<std::array<std::ptrdiff_t, 2>, Grid::kMaxDim> idx{};
    std::array<std::array<double, 2>, Grid::kMaxDim> w{};
    for (int a = 0; a < s.dim; ++a) {
        const auto k = static_cast<std::size_t>(a);
        const double m = std::abs(offset[k]);
        double base = std::floor(m);
        double frac = m - base;
        if (base > 0.0 && frac == 0.0) {
            // on a node: use the cell below so nothing past |offset| is read
            base -= 1.0;
            frac = 1.0;
        }
        const std::ptrdiff_t sgn = offset[k] < 0.0 ? -1 : 1;
        const auto b = static_cast<std::ptrdiff_t>(base);
        idx[k] = {sgn * b * s.stride[k], sgn * (b + 1) * s.stride[k]};
        w[k] = {1.0 - frac, frac};
    }
    Sample out;
    for (int c = 0; c < (1 << s.dim); ++c) {
        std::ptrdiff_t shift = 0;
        double weight = 1.0;
        for (int a = 0; a < s.dim; ++a) {
            const auto k = static_cast<std::size_t>(a);
            const auto bit = static_cast<std::size_t>((c >> a) & 1);
            shift += idx[k][bit];
            weight *= w[k][bit];
        }
        if (weight == 0.0)
            continue;
        out.shift[static_cast<std::size_t>(out.corners)] = shift;
        out.weight[static_cast<std::size_t>(out.corners)] = weight;
        ++out.corners;
    }
    return out;
}

// Interpolated u(sample) - u(node), exact on constants. Terms are summed in
// sorted order, so the value is invariant under grid symmetries.
double rise(const Sample& smp, const double* u, std::size_t node)
{
    std::array<double, 1 << Grid::kMaxDim> t{};
    const auto n = static_cast<std::ptrdiff_t>(node);
    for (int c = 0; c < smp.corners; ++c) {
        const auto k = static_cast<std::size_t>(c);
        const double v = smp.weight[k] * (u[n + smp.shift[k]] - u[node]);
        int j = c;
        for (; j > 0 && t[static_cast<std::size_t>(j - 1)] > v; --j)
            t[static_cast<std::size_t>(j)] = t[static_cast<std::size_t>(j - 1)];
        t[static_cast<std::size_t>(j)] = v;
    }
    double sum = 0.0;
    for (int c = 0; c < smp.corners; ++c)
        sum += t[static_cast<std::size_t>(c)];
    return sum;
}

using Direction = std::array<double, Grid::kMaxDim>;

// Unit directions closed under the grid symmetries (axis swaps and sign flips),
// built from one sector so the images are exact in floating point.
std::vector<Direction> build_directions(int dim)
{
    std::vector<Direction> out;
    if (dim == 1) {
        out = {{1.0, 0.0, 0.0}, {-1.0, 0.0, 0.0}};
    } else if (dim == 2) {
        constexpr int per_octant = kDirectionsPerQuadrant / 2;
        std::vector<std::pair<double, double>> quadrant;
        for (int k = 0; k <= per_octant; ++k) {
            const double a = 0.5 * std::numbers::pi * k / kDirectionsPerQuadrant;
            quadrant.emplace_back(std::cos(a), std::sin(a));
        }
        for (int k = per_octant - 1; k >= 1; --k) {
            const auto [c, sn] = quadrant[static_cast<std::size_t>(k)];
            quadrant.emplace_back(sn, c);
        }
        for (const auto& [c, sn] : quadrant) {
            out.push_back({c, sn, 0.0});
            out.push_back({-sn, c, 0.0});
            out.push_back({-c, -sn, 0.0});
            out.push_back({sn, -c, 0.0});
        }
    } else {
        // lattice points on the surface of the cube [-K, K]^3
        constexpr int K = kCubeDirectionRadius;
        for (int a = -K; a <= K; ++a)
            for (int b = -K; b <= K; ++b)
                for (int c = -K; c <= K; ++c) {
                    if (std::max({std::abs(a), std::abs(b), std::abs(c)}) != K)
                        continue;
                    const double n = std::sqrt(static_cast<double>(a * a + b * b + c * c));
                    out.push_back({a / n, b / n, c / n});
                }
    }
    return out;
}

const std::vector<Direction>& direction_set(int dim)
{
    static const std::array<std::vector<Direction>, 3> sets{build_directions(1), build_directions(2),
                                                            build_directions(3)};
    return sets[static_cast<std::size_t>(dim - 1)];
}

// Samples on the circle of radius reach * min_spacing, one list per reach.
struct AlignedSamples {
    std::array<std::vector<Sample>, kMaxReach + 1> by_reach;
};

AlignedSamples aligned_samples(const Grid& grid, const Stencil& s)
{
    AlignedSamples out;
    for (int r = 1; r <= kMaxReach; ++r) {
        const double rho = r * grid.min_spacing();
        for (const auto& e : direction_set(s.dim)) {
            std::array<double, Grid::kMaxDim> off{};
            for (int a = 0; a < s.dim; ++a) {
                const auto k = static_cast<std::size_t>(a);
                off[k] = rho * e[k] / s.dx[k];
            }
            out.by_reach[static_cast<std::size_t>(r)].push_back(make_sample(s, off));
        }
    }
    return out;
}

double operator_at(const Grid& grid, const Stencil& s, const AlignedSamples& samples, const double* u,
                   std::size_t node, const SchemeParams& p)
{
    const LocalGradient grad = gradient_at(s, u, node);
    const double hval = p.h.h();
    double value = 0.0;

    if (p.mode == StencilMode::central) {
        std::array<std::array<double, Grid::kMaxDim>, Grid::kMaxDim> d2{};
        for (int a = 0; a < s.dim; ++a) {
            const auto i = static_cast<std::size_t>(a);
            const auto n = static_cast<std::ptrdiff_t>(node);
            d2[i][i] = ((u[n + s.stride[i]] + u[n - s.stride[i]]) - 2.0 * u[node]) / (s.dx[i] * s.dx[i]);
            for (int b = a + 1; b < s.dim; ++b) {
                const auto j = static_cast<std::size_t>(b);
                const double pp = u[n + s.stride[i] + s.stride[j]] + u[n - s.stride[i] - s.stride[j]];
                const double pm = u[n + s.stride[i] - s.stride[j]] + u[n - s.stride[i] + s.stride[j]];
                d2[i][j] = d2[j][i] = (pp - pm) / (4.0 * s.dx[i] * s.dx[j]);
            }
        }
        if (p.eps > 0.0) {
            double tr = 0.0;
            for (int a = 0; a < s.dim; ++a)
                tr += d2[static_cast<std::size_t>(a)][static_cast<std::size_t>(a)];
            value += p.eps * tr;
        }
        if (std::sqrt(grad.norm_sq) > kGradientThreshold) {
            double q = 0.0;
            for (int a = 0; a < s.dim; ++a)
                for (int b = 0; b < s.dim; ++b) {
                    const auto i = static_cast<std::size_t>(a);
                    const auto j = static_cast<std::size_t>(b);
                    q += d2[i][j] * grad.g[i] * grad.g[j];
                }
            value += kernel::regularized_coefficient(grad.norm_sq, p.delta, hval) * q;
        }
    } else {
        if (p.eps > 0.0)
            value += p.eps * laplacian_at(s, u, node);
        // Forward and backward slopes along the directions where u rises and
        // falls fastest on the circle of radius rho. For smooth u both are +-Du/|Du|
        // up to O(rho); max and min over a fixed set keep the update monotone.
        const int reach = std::min(p.aligned_reach, grid.reach(node));
        const double rho = reach * grid.min_spacing();
        double hi = -std::numeric_limits<double>::infinity();
        double lo = std::numeric_limits<double>::infinity();
        for (const Sample& smp : samples.by_reach[static_cast<std::size_t>(reach)]) {
            const double v = rise(smp, u, node);
            hi = std::max(hi, v);
            lo = std::min(lo, v);
        }
        const double fp = kernel::regularized_flux(hi / rho, p.delta, hval);
        const double fm = kernel::regularized_flux(-lo / rho, p.delta, hval);
        value += (fp - fm) / rho;
    }
    return value + p.source(u[node]);
}

void require_interior(const Field& field, std::size_t node, const char* who)
{
    if (!field.grid)
        throw std::invalid_argument(std::string(who) + ": field has no grid");
    if (node >= field.grid->size() || field.grid->kind(node) != NodeKind::interior)
        throw std::invalid_argument(std::string(who) + ": node " + std::to_string(node) + " is not interior");
}

void require_matching(const Field& field, const char* who)
{
    if (!field.grid || field.values.size() != field.grid->size())
        throw std::invalid_argument(std::string(who) + ": field does not match its grid");
}

}  // namespace

// ---- Grid -----------------------------------------------------------------

void Grid::init_geometry(std::vector<double> lower, std::vector<double> upper, std::vector<std::size_t> nodes)
{
    const std::size_t d = lower.size();
    if (d < 1 || d > static_cast<std::size_t>(kMaxDim) || upper.size() != d || nodes.size() != d)
        throw std::invalid_argument("Grid: dimension must be 1, 2 or 3 with matching extents");
    dim_ = static_cast<int>(d);
    std::size_t total = 1;
    for (std::size_t a = 0; a < d; ++a) {
        if (!std::isfinite(lower[a]) || !std::isfinite(upper[a]) || !(upper[a] > lower[a]))
            throw std::invalid_argument("Grid: each axis needs finite lower < upper");
        if (nodes[a] < 3)
            throw std::invalid_argument("Grid: at least 3 nodes per axis");
        lower_[a] = lower[a];
        upper_[a] = upper[a];
        nodes_[a] = nodes[a];
        spacing_[a] = (upper[a] - lower[a]) / static_cast<double>(nodes[a] - 1);
        if (!(spacing_[a] > 0.0))
            throw std::invalid_argument("Grid: spacing must be positive");
        stride_[a] = total;
        total *= nodes[a];
    }
    kind_.assign(total, NodeKind::exterior);
    reach_.assign(total, 0);
}

Grid::Grid(std::vector<double> lower, std::vector<double> upper, std::vector<std::size_t> nodes)
    : Grid(std::move(lower), std::move(upper), std::move(nodes), [](Point) { return true; })
{
}

Grid::Grid(std::vector<double> lower, std::vector<double> upper, std::vector<std::size_t> nodes,
           const std::function<bool(Point)>& inside)
{
    init_geometry(std::move(lower), std::move(upper), std::move(nodes));
    classify(inside);
    check_connected();
}

double Grid::min_spacing() const noexcept
{
    double m = spacing_[0];
    for (int a = 1; a < dim_; ++a)
        m = std::min(m, spacing_[static_cast<std::size_t>(a)]);
    return m;
}

double Grid::cell_volume() const noexcept
{
    double v = 1.0;
    for (int a = 0; a < dim_; ++a)
        v *= spacing_[static_cast<std::size_t>(a)];
    return v;
}

Grid::Index Grid::index(std::size_t flat) const
{
    Index idx{0, 0, 0};
    for (int a = 0; a < dim_; ++a) {
        const auto k = static_cast<std::size_t>(a);
        idx[k] = flat % nodes_[k];
        flat /= nodes_[k];
    }
    return idx;
}

std::size_t Grid::flat(const Index& idx) const
{
    std::size_t f = 0;
    for (int a = 0; a < dim_; ++a) {
        const auto k = static_cast<std::size_t>(a);
        if (idx[k] >= nodes_[k])
            throw std::out_of_range("Grid::flat: index outside the grid");
        f += idx[k] * stride_[k];
    }
    return f;
}

void Grid::coordinates(std::size_t flat, std::span<double> out) const
{
    const Index idx = index(flat);
    for (int a = 0; a < dim_; ++a) {
        const auto k = static_cast<std::size_t>(a);
        // Pin the last node to the upper corner so symmetric boxes give symmetric coordinates.
        out[k] = idx[k] + 1 == nodes_[k] ? upper_[k] : lower_[k] + static_cast<double>(idx[k]) * spacing_[k];
    }
}

std::vector<double> Grid::coordinates(std::size_t flat) const
{
    std::vector<double> x(static_cast<std::size_t>(dim_));
    coordinates(flat, x);
    return x;
}

void Grid::classify(const std::function<bool(Point)>& inside)
{
    const std::size_t n = kind_.size();
    std::vector<double> x(static_cast<std::size_t>(dim_));
    for (std::size_t f = 0; f < n; ++f) {
        const Index idx = index(f);
        bool face = false;
        for (int a = 0; a < dim_; ++a) {
            const auto k = static_cast<std::size_t>(a);
            face = face || idx[k] == 0 || idx[k] + 1 == nodes_[k];
        }
        if (face)
            continue;
        coordinates(f, x);
        if (inside(x))
            kind_[f] = NodeKind::interior;
    }

    // Offsets of the (2r+1)^d neighbourhood.
    auto cube = [&](int r) {
        std::vector<std::array<int, kMaxDim>> offs;
        const int side = 2 * r + 1;
        int count = 1;
        for (int a = 0; a < dim_; ++a)
            count *= side;
        for (int c = 0; c < count; ++c) {
            std::array<int, kMaxDim> o{0, 0, 0};
            int rem = c;
            for (int a = 0; a < dim_; ++a) {
                o[static_cast<std::size_t>(a)] = rem % side - r;
                rem /= side;
            }
            offs.push_back(o);
        }
        return offs;
    };
    auto neighbour = [&](const Index& idx, const std::array<int, kMaxDim>& o, std::size_t& out) {
        std::size_t f = 0;
        for (int a = 0; a < dim_; ++a) {
            const auto k = static_cast<std::size_t>(a);
            const auto v = static_cast<std::ptrdiff_t>(idx[k]) + o[k];
            if (v < 0 || v >= static_cast<std::ptrdiff_t>(nodes_[k]))
                return false;
            f += static_cast<std::size_t>(v) * stride_[k];
        }
        out = f;
        return true;
    };

    const auto ring1 = cube(1);
    for (std::size_t f = 0; f < n; ++f) {
        if (kind_[f] != NodeKind::interior)
            continue;
        const Index idx = index(f);
        for (const auto& o : ring1) {
            std::size_t nb = 0;
            if (neighbour(idx, o, nb) && kind_[nb] == NodeKind::exterior)
                kind_[nb] = NodeKind::boundary;
        }
    }

    for (std::size_t f = 0; f < n; ++f) {
        if (kind_[f] == NodeKind::interior)
            interior_.push_back(f);
        else if (kind_[f] == NodeKind::boundary)
            boundary_.push_back(f);
    }
    if (interior_.empty())
        throw std::invalid_argument("Grid: the domain contains no interior node");

    // Chebyshev distance to the nearest exterior node, with everything past the
    // grid edge counted as exterior. Breadth-first over the 3^d neighbourhood.
    std::vector<int> dist(n, std::numeric_limits<int>::max());
    std::vector<std::size_t> frontier;
    for (std::size_t f = 0; f < n; ++f) {
        if (kind_[f] == NodeKind::exterior) {
            dist[f] = 0;
            frontier.push_back(f);
            continue;
        }
        const Index idx = index(f);
        for (int a = 0; a < dim_; ++a) {
            const auto k = static_cast<std::size_t>(a);
            if (idx[k] == 0 || idx[k] + 1 == nodes_[k]) {
                dist[f] = 1;
                break;
            }
        }
        if (dist[f] == 1)
            frontier.push_back(f);
    }
    while (!frontier.empty()) {
        std::vector<std::size_t> next;
        for (std::size_t f : frontier) {
            const Index idx = index(f);
            for (const auto& o : ring1) {
                std::size_t nb = 0;
                if (neighbour(idx, o, nb) && dist[nb] > dist[f] + 1) {
                    dist[nb] = dist[f] + 1;
                    next.push_back(nb);
                }
            }
        }
        frontier = std::move(next);
    }
    for (std::size_t f : interior_)
        reach_[f] = static_cast<std::uint8_t>(std::clamp(dist[f] - 1, 1, kMaxReach));
}

void Grid::check_connected() const
{
    std::vector<char> seen(kind_.size(), 0);
    std::vector<std::size_t> stack{interior_.front()};
    seen[interior_.front()] = 1;
    std::size_t count = 0;
    while (!stack.empty()) {
        const std::size_t f = stack.back();
        stack.pop_back();
        ++count;
        for (int a = 0; a < dim_; ++a) {
            const std::size_t s = stride_[static_cast<std::size_t>(a)];
            for (std::size_t nb : {f + s, f - s}) {
                if (nb < kind_.size() && kind_[nb] == NodeKind::interior && !seen[nb]) {
                    seen[nb] = 1;
                    stack.push_back(nb);
                }
            }
        }
    }
    if (count != interior_.size())
        throw std::invalid_argument("Grid: interior mask is not connected");
}

// ---- Field ----------------------------------------------------------------

double Field::max_abs() const
{
    double m = 0.0;
    for (std::size_t f = 0; f < values.size(); ++f)
        if (grid->kind(f) != NodeKind::exterior)
            m = std::max(m, std::abs(values[f]));
    return m;
}

double Field::min_active() const
{
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t f = 0; f < values.size(); ++f)
        if (grid->kind(f) != NodeKind::exterior)
            m = std::min(m, values[f]);
    return m;
}

double Field::max_active() const
{
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t f = 0; f < values.size(); ++f)
        if (grid->kind(f) != NodeKind::exterior)
            m = std::max(m, values[f]);
    return m;
}

Field initial_field(const GridProblem& problem, double t0)
{
    if (!problem.grid || !problem.g)
        throw std::invalid_argument("initial_field: problem needs a grid and boundary data");
    const Grid& grid = *problem.grid;
    Field field{problem.grid, std::vector<double>(grid.size(), 0.0), t0};
    std::vector<double> x(static_cast<std::size_t>(grid.dim()));
    for (std::size_t f = 0; f < grid.size(); ++f) {
        if (grid.kind(f) == NodeKind::exterior)
            continue;
        grid.coordinates(f, x);
        const double v = problem.g(x, t0);
        if (!std::isfinite(v))
            throw std::invalid_argument("initial_field: non-finite data at node " + std::to_string(f));
        field.values[f] = v;
    }
    return field;
}

// ---- scheme ---------------------------------------------------------------

void SchemeParams::validate() const
{
    kernel::check_regularization(eps, delta, h.h());
    if (!(cfl_theta > 0.0 && cfl_theta < 1.0))
        throw std::invalid_argument("SchemeParams: cfl_theta must lie in (0, 1)");
    if (aligned_reach < 1 || aligned_reach > kMaxReach)
        throw std::invalid_argument("SchemeParams: aligned_reach must lie in [1, 8]");
    if (!(dt_max > 0.0))
        throw std::invalid_argument("SchemeParams: dt_max must be positive");
}

GradientVector grid_gradient(const Field& field, std::size_t node)
{
    require_matching(field, "grid_gradient");
    require_interior(field, node, "grid_gradient");
    const Stencil s = stencil_of(*field.grid);
    const LocalGradient g = gradient_at(s, field.values.data(), node);
    Eigen::VectorXd v(s.dim);
    for (int a = 0; a < s.dim; ++a)
        v(a) = g.g[static_cast<std::size_t>(a)];
    return GradientVector(v);
}

double grid_operator(const Field& field, std::size_t node, const SchemeParams& params)
{
    require_matching(field, "grid_operator");
    require_interior(field, node, "grid_operator");
    params.validate();
    const Stencil s = stencil_of(*field.grid);
    const AlignedSamples samples =
        params.mode == StencilMode::gradient_aligned ? aligned_samples(*field.grid, s) : AlignedSamples{};
    return operator_at(*field.grid, s, samples, field.values.data(), node, params);
}

namespace {

double max_gradient(const Field& field, unsigned workers)
{
    const Grid& grid = *field.grid;
    const Stencil s = stencil_of(grid);
    const auto nodes = grid.interior_nodes();
    // max is exact, so the per-chunk partials combine identically for any partition.
    std::vector<double> partial(chunk_count(nodes.size(), workers), 0.0);
    parallel_chunks(nodes.size(), workers, [&](std::size_t b, std::size_t e, std::size_t k) {
        double m = 0.0;
        for (std::size_t i = b; i < e; ++i)
            m = std::max(m, gradient_at(s, field.values.data(), nodes[i]).norm_sq);
        partial[k] = m;
    });
    return std::sqrt(*std::max_element(partial.begin(), partial.end()));
}

double cfl_from_gradient(double G, const Grid& grid, const SchemeParams& params)
{
    const double d2 = 2.0 * grid.dim();
    const double dx = grid.min_spacing();
    const double denom = d2 * params.eps + d2 * std::pow(G * G + params.delta * params.delta, 0.5 * (params.h.h() - 1.0));
    double dt = denom > 0.0 ? params.cfl_theta * dx * dx / denom : std::numeric_limits<double>::infinity();
    if (params.source.bound() > 0.0)
        dt = std::min(dt, 1.0 / (2.0 * params.source.bound()));
    return std::min(dt, params.dt_max);
}

void advance(const Field& field, Field& next, const SchemeParams& params, double dt)
{
    const Grid& grid = *field.grid;
    const Stencil s = stencil_of(grid);
    const AlignedSamples samples =
        params.mode == StencilMode::gradient_aligned ? aligned_samples(grid, s) : AlignedSamples{};
    const auto nodes = grid.interior_nodes();
    const double* u = field.values.data();
    double* out = next.values.data();
    parallel_chunks(nodes.size(), params.workers, [&](std::size_t b, std::size_t e, std::size_t) {
        for (std::size_t i = b; i < e; ++i) {
            const std::size_t f = nodes[i];
            out[f] = u[f] + dt * operator_at(grid, s, samples, u, f, params);
        }
    });
}

double refresh_boundary(Field& next, const GridProblem& problem)
{
    const Grid& grid = *next.grid;
    std::vector<double> x(static_cast<std::size_t>(grid.dim()));
    double bmax = 0.0;
    for (std::size_t f : grid.boundary_nodes()) {
        grid.coordinates(f, x);
        next.values[f] = problem.g(x, next.t);
        bmax = std::max(bmax, std::abs(next.values[f]));
    }
    return bmax;
}

}  // namespace

double grid_cfl_dt(const Field& field, const SchemeParams& params)
{
    require_matching(field, "grid_cfl_dt");
    params.validate();
    return cfl_from_gradient(max_gradient(field, params.workers), *field.grid, params);
}

Field grid_step(const Field& field, const GridProblem& problem, const SchemeParams& params, double dt)
{
    require_matching(field, "grid_step");
    if (problem.grid != field.grid)
        throw std::invalid_argument("grid_step: field and problem use different grids");
    params.validate();
    const double limit = grid_cfl_dt(field, params);
    if (!(dt > 0.0) || dt > limit * (1.0 + 1e-12))
        throw std::invalid_argument("grid_step: dt = " + std::to_string(dt) + " violates the CFL limit " +
                                    std::to_string(limit));
    Field next = field;
    next.t = field.t + dt;
    advance(field, next, params, dt);
    refresh_boundary(next, problem);
    return next;
}

Field grid_evolve(Field field, const GridProblem& problem, const SchemeParams& params, double t_end,
                  const GridEvolveOptions& options, const FieldObserver& observer)
{
    require_matching(field, "grid_evolve");
    if (problem.grid != field.grid)
        throw std::invalid_argument("grid_evolve: field and problem use different grids");
    params.validate();
    if (!(t_end >= field.t))
        throw std::invalid_argument("grid_evolve: t_end precedes the current time");

    std::vector<double> marks = options.observe_times;
    std::sort(marks.begin(), marks.end());
    auto next_mark = std::lower_bound(marks.begin(), marks.end(), field.t);
    while (next_mark != marks.end() && *next_mark == field.t) {
        if (observer)
            observer(field);
        ++next_mark;
    }

    const bool check_growth = params.source.is_zero();
    double gamma_bound = field.max_abs();
    Field next = field;
    std::size_t steps = 0;
    while (field.t < t_end) {
        if (steps >= options.max_steps)
            throw NumericalAbort("grid_evolve: step budget exhausted at t = " + std::to_string(field.t), steps);
        double dt = cfl_from_gradient(max_gradient(field, params.workers), *field.grid, params);
        if (!(dt > 0.0) || field.t + dt == field.t)
            throw NumericalAbort("grid_evolve: stable step collapsed to dt = " + std::to_string(dt) +
                                     " at t = " + std::to_string(field.t),
                                 steps);
        double target = t_end;
        if (next_mark != marks.end() && *next_mark < target)
            target = *next_mark;
        bool lands = false;
        if (field.t + dt >= target) {
            dt = target - field.t;
            lands = true;
        }
        next.t = lands ? target : field.t + dt;
        advance(field, next, params, dt);
        gamma_bound = std::max(gamma_bound, refresh_boundary(next, problem));
        ++steps;

        double m = 0.0;
        for (std::size_t f : field.grid->interior_nodes()) {
            const double v = next.values[f];
            if (!std::isfinite(v))
                throw NumericalAbort("grid_evolve: non-finite value at node " + std::to_string(f) +
                                         ", t = " + std::to_string(next.t),
                                     steps);
            m = std::max(m, std::abs(v));
        }
        if (check_growth && m > options.growth_abort_factor * gamma_bound && m > 1e-300)
            throw NumericalAbort("grid_evolve: max|u| = " + std::to_string(m) + " exceeds " +
                                     std::to_string(options.growth_abort_factor) + " x boundary bound " +
                                     std::to_string(gamma_bound) + " at t = " + std::to_string(next.t),
                                 steps);
        std::swap(field, next);
        if (options.on_step)
            options.on_step(field, dt);
        while (next_mark != marks.end() && *next_mark <= field.t) {
            if (observer)
                observer(field);
            ++next_mark;
        }
    }
    return field;
}

double cutoff(double y)
{
    const double a = std::abs(y);
    if (a <= 0.5)
        return 1.0;
    if (a >= 1.0)
        return 0.0;
    const double s = 2.0 * a - 1.0;
    return 0.5 * (1.0 + std::cos(std::numbers::pi * s));
}

GridProblem truncate_unbounded(const BoundaryData& g, double R, int dim, double spacing)
{
    if (!g)
        throw std::invalid_argument("truncate_unbounded: missing boundary data");
    if (!(R > 0.0) || !(spacing > 0.0) || !std::isfinite(R))
        throw std::invalid_argument("truncate_unbounded: R and spacing must be positive");
    if (dim < 1 || dim > Grid::kMaxDim)
        throw std::invalid_argument("truncate_unbounded: dimension must be 1, 2 or 3");
    const auto half = static_cast<std::size_t>(std::llround(R / spacing));
    if (half < 2)
        throw std::invalid_argument("truncate_unbounded: spacing too coarse for R");
    const double extent = static_cast<double>(half) * spacing;
    const auto d = static_cast<std::size_t>(dim);
    auto inside = [R](Point x) {
        double r2 = 0.0;
        for (double v : x)
            r2 += v * v;
        return std::sqrt(r2) < R;
    };
    auto grid = std::make_shared<const Grid>(std::vector<double>(d, -extent), std::vector<double>(d, extent),
                                             std::vector<std::size_t>(d, 2 * half + 1), inside);
    BoundaryData gr = [g, R](Point x, double t) {
        double r2 = 0.0;
        for (double v : x)
            r2 += v * v;
        const double c = cutoff(std::sqrt(r2) / R);
        return c == 0.0 ? 0.0 : c * g(x, t);
    };
    return {grid, gr};
}

}  // namespace infheat
