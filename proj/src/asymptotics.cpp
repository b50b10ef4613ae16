#include "infheat/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

#include "infheat/exact.hpp"
#include "infheat/operator.hpp"

namespace infheat {

// ---- TimeSeries / fits ----------------------------------------------------

TimeSeries::TimeSeries(std::string quantity, std::string run_id)
    : quantity_(std::move(quantity)), run_id_(std::move(run_id))
{
}

void TimeSeries::push(double t, double value)
{
    if (!std::isfinite(t) || !std::isfinite(value))
        throw std::invalid_argument("TimeSeries::push: non-finite sample in '" + quantity_ + "'");
    if (!t_.empty() && !(t > t_.back()))
        throw std::invalid_argument("TimeSeries::push: times must increase strictly in '" + quantity_ + "'");
    t_.push_back(t);
    v_.push_back(value);
}

RateFit fit_decay_exponent(const TimeSeries& series, FitWindow window)
{
    if (!(window.t_lo > 0.0) || !(window.t_hi > window.t_lo))
        throw std::invalid_argument("fit_decay_exponent: window needs 0 < t_lo < t_hi");
    std::vector<double> x;
    std::vector<double> y;
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    const auto t = series.times();
    const auto v = series.values();
    for (std::size_t k = 0; k < series.size(); ++k) {
        if (t[k] < window.t_lo || t[k] > window.t_hi)
            continue;
        if (!(v[k] > 0.0))
            throw std::invalid_argument("fit_decay_exponent: nonpositive value " + std::to_string(v[k]) +
                                        " at t = " + std::to_string(t[k]) + " in '" + series.quantity() + "'");
        x.push_back(std::log(t[k]));
        y.push_back(std::log(v[k]));
        lo = std::min(lo, t[k]);
        hi = std::max(hi, t[k]);
    }
    if (x.size() < kMinFitSamples)
        throw std::invalid_argument("fit_decay_exponent: " + std::to_string(x.size()) +
                                    " samples in window, need at least 8");
    if (hi < 10.0 * lo * (1.0 - 1e-12))
        throw std::invalid_argument("fit_decay_exponent: window samples span less than one decade");

    const auto n = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        mx += x[k];
        my += y[k];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxx += (x[k] - mx) * (x[k] - mx);
        sxy += (x[k] - mx) * (y[k] - my);
    }
    RateFit fit;
    fit.exponent = sxy / sxx;
    fit.intercept = my - fit.exponent * mx;
    fit.t_lo = lo;
    fit.t_hi = hi;
    fit.samples = x.size();
    double rss = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double e = y[k] - (fit.intercept + fit.exponent * x[k]);
        rss += e * e;
    }
    fit.residual_norm = std::sqrt(rss);
    return fit;
}

double support_radius(const RadialProfile& profile, double threshold)
{
    return profile.support_radius(threshold);
}

double support_radius(const Field& field, double threshold)
{
    const Grid& g = *field.grid;
    std::vector<double> x(static_cast<std::size_t>(g.dim()));
    double r = 0.0;
    for (std::size_t f = 0; f < g.size(); ++f) {
        if (g.kind(f) == NodeKind::exterior || !(field.values[f] > threshold))
            continue;
        g.coordinates(f, x);
        double r2 = 0.0;
        for (double v : x)
            r2 += v * v;
        r = std::max(r, std::sqrt(r2));
    }
    return r;
}

// ---- Cauchy rescaling and Barenblatt fit -------------------------------------

SpaceTimeFn rescale_cauchy(SpaceTimeFn u, double lambda, const Homogeneity& h)
{
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw std::invalid_argument("rescale_cauchy: lambda must be positive");
    const double k = std::pow(lambda, 1.0 / (2.0 * h.h()));
    return [u = std::move(u), lambda, k](Point x, double t) {
        std::vector<double> y(x.begin(), x.end());
        for (double& v : y)
            v *= k;
        return k * u(y, lambda * t);
    };
}

RadialProfile rescale_cauchy(const RadialProfile& u, double lambda, const Homogeneity& h)
{
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw std::invalid_argument("rescale_cauchy: lambda must be positive");
    const double k = std::pow(lambda, 1.0 / (2.0 * h.h()));
    RadialBoundary outer = u.outer();
    outer.value *= k;
    RadialProfile out(u.r_max() / k, u.size(), outer, u.t() / lambda);
    for (std::size_t i = 0; i < u.size(); ++i)
        out.values()[i] = k * u[i];
    return out;
}

namespace {

struct RadialSample {
    double r;
    double u;
};

double sup_gap(const std::vector<RadialSample>& samples, const Barenblatt& b, double t)
{
    double g = 0.0;
    for (const auto& s : samples)
        g = std::max(g, std::abs(s.u - b.radial(s.r, t)));
    return g;
}

BarenblattFit fit_samples(const std::vector<RadialSample>& samples, double t, const Homogeneity& h)
{
    if (!(t > 0.0))
        throw std::invalid_argument("fit_barenblatt: snapshot time must be positive");
    double support = 0.0;
    for (const auto& s : samples) {
        if (s.u < -1e-10)
            throw std::invalid_argument("fit_barenblatt: snapshot has negative values");
        if (s.u > kSupportThreshold)
            support = std::max(support, s.r);
    }
    if (support == 0.0)
        throw std::invalid_argument("fit_barenblatt: empty snapshot");

    const double scale = std::pow(t, 1.0 / (2.0 * h.h()));
    const double rho = support / scale;
    auto gap = [&](double R) { return sup_gap(samples, Barenblatt(h, R), t); };

    // Coarse scan, then golden section inside the best bracket.
    constexpr int kScan = 64;
    const double lo = 0.5 * rho;
    const double hi = 2.0 * rho;
    int best = 0;
    double best_gap = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= kScan; ++k) {
        const double g = gap(lo + (hi - lo) * k / kScan);
        if (g < best_gap) {
            best_gap = g;
            best = k;
        }
    }
    double a = lo + (hi - lo) * std::max(0, best - 1) / kScan;
    double b = lo + (hi - lo) * std::min(kScan, best + 1) / kScan;
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double gc = gap(c);
    double gd = gap(d);
    while (b - a > 1e-12 * rho) {
        if (gc < gd) {
            b = d;
            d = c;
            gd = gc;
            c = b - invphi * (b - a);
            gc = gap(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + invphi * (b - a);
            gd = gap(d);
        }
    }
    BarenblattFit fit;
    fit.R_star = 0.5 * (a + b);
    fit.sup_gap = gap(fit.R_star);
    if (best_gap < fit.sup_gap) {
        fit.R_star = lo + (hi - lo) * best / kScan;
        fit.sup_gap = best_gap;
    }
    fit.relative_gap = scale * fit.sup_gap;
    fit.literal_gap = fit.sup_gap / scale;
    fit.t = t;
    return fit;
}

}  // namespace

BarenblattFit fit_barenblatt(const RadialProfile& u, const Homogeneity& h)
{
    std::vector<RadialSample> samples;
    samples.reserve(u.size());
    for (std::size_t i = 0; i < u.size(); ++i)
        samples.push_back({u.center(i), u[i]});
    return fit_samples(samples, u.t(), h);
}

BarenblattFit fit_barenblatt(const Field& u, const Homogeneity& h)
{
    const Grid& g = *u.grid;
    std::vector<RadialSample> samples;
    std::vector<double> x(static_cast<std::size_t>(g.dim()));
    for (std::size_t f = 0; f < g.size(); ++f) {
        if (g.kind(f) == NodeKind::exterior)
            continue;
        g.coordinates(f, x);
        double r2 = 0.0;
        for (double v : x)
            r2 += v * v;
        samples.push_back({std::sqrt(r2), u.values[f]});
    }
    return fit_samples(samples, u.t, h);
}

// ---- interpolation and Aleksandrov shells ---------------------------------

double interpolate(const Field& u, Point x)
{
    const Grid& g = *u.grid;
    const int d = g.dim();
    if (static_cast<int>(x.size()) != d)
        throw std::invalid_argument("interpolate: point dimension does not match the grid");
    Grid::Index base{0, 0, 0};
    std::array<double, Grid::kMaxDim> frac{};
    for (int a = 0; a < d; ++a) {
        const auto k = static_cast<std::size_t>(a);
        const double xi = (x[k] - g.lower(a)) / g.spacing(a);
        const double last = static_cast<double>(g.nodes(a) - 1);
        if (!(xi >= -1e-9) || !(xi <= last + 1e-9))
            throw std::out_of_range("interpolate: point outside the grid box");
        double b = std::floor(std::clamp(xi, 0.0, last));
        if (b >= last)
            b = last - 1.0;
        base[k] = static_cast<std::size_t>(b);
        frac[k] = std::clamp(xi - b, 0.0, 1.0);
    }
    double sum = 0.0;
    for (int c = 0; c < (1 << d); ++c) {
        Grid::Index idx = base;
        double w = 1.0;
        for (int a = 0; a < d; ++a) {
            const auto k = static_cast<std::size_t>(a);
            const int bit = (c >> a) & 1;
            idx[k] += static_cast<std::size_t>(bit);
            w *= bit ? frac[k] : 1.0 - frac[k];
        }
        if (w == 0.0)
            continue;
        const std::size_t f = g.flat(idx);
        if (g.kind(f) == NodeKind::exterior)
            throw std::out_of_range("interpolate: point touches an exterior node");
        sum += w * u.values[f];
    }
    return sum;
}

namespace {

std::vector<std::vector<double>> shell_directions(int d)
{
    std::vector<std::vector<double>> dirs;
    if (d == 1) {
        dirs = {{1.0}, {-1.0}};
    } else if (d == 2) {
        for (int k = 0; k < kShellDirections; ++k) {
            const double a = 2.0 * std::numbers::pi * k / kShellDirections;
            dirs.push_back({std::cos(a), std::sin(a)});
        }
    } else {
        // Fibonacci points on the sphere.
        const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
        for (int k = 0; k < kShellDirections; ++k) {
            const double z = 1.0 - (2.0 * k + 1.0) / kShellDirections;
            const double rr = std::sqrt(1.0 - z * z);
            dirs.push_back({rr * std::cos(golden * k), rr * std::sin(golden * k), z});
        }
    }
    return dirs;
}

void check_shells(double r, double R_data)
{
    if (!(R_data >= 0.0) || !(r > R_data))
        throw std::invalid_argument("aleksandrov_gap: need r > R_data >= 0");
}

}  // namespace

double aleksandrov_gap(const Field& u, double r, double R_data)
{
    check_shells(r, R_data);
    const auto dirs = shell_directions(u.grid->dim());
    double inner = std::numeric_limits<double>::infinity();
    double outer = -std::numeric_limits<double>::infinity();
    std::vector<double> x(dirs.front().size());
    for (const auto& e : dirs) {
        for (std::size_t k = 0; k < e.size(); ++k)
            x[k] = r * e[k];
        inner = std::min(inner, interpolate(u, x));
        for (std::size_t k = 0; k < e.size(); ++k)
            x[k] = (r + 2.0 * R_data) * e[k];
        outer = std::max(outer, interpolate(u, x));
    }
    return outer - inner;
}

double aleksandrov_gap(const RadialProfile& u, double r, double R_data)
{
    check_shells(r, R_data);
    if (r + 2.0 * R_data > u.r_max())
        throw std::out_of_range("aleksandrov_gap: outer shell beyond r_max");
    return u.interpolate(r + 2.0 * R_data) - u.interpolate(r);
}

// ---- Dirichlet rescaling ----------------------------------------------------

double dirichlet_time(double s, const Homogeneity& h)
{
    return std::exp((h.h() - 1.0) * s);
}

namespace {

double snapshot_time(const RadialProfile& p) { return p.t(); }
double snapshot_time(const Field& f) { return f.t; }

RadialProfile scaled(const RadialProfile& p, double factor, double new_time)
{
    RadialBoundary outer = p.outer();
    outer.value *= factor;
    RadialProfile out(p.r_max(), p.size(), outer, new_time);
    for (std::size_t i = 0; i < p.size(); ++i)
        out.values()[i] = factor * p[i];
    return out;
}

Field scaled(const Field& p, double factor, double new_time)
{
    Field out{p.grid, p.values, new_time};
    for (double& v : out.values)
        v *= factor;
    return out;
}

std::span<const double> values_of(const RadialProfile& p) { return p.values(); }
std::span<const double> values_of(const Field& f) { return f.values; }

bool active(const RadialProfile&, std::size_t) { return true; }
bool active(const Field& f, std::size_t i) { return f.grid->kind(i) != NodeKind::exterior; }

template <class Snapshot>
const Snapshot& find_snapshot(std::span<const Snapshot> run, double t)
{
    for (const auto& snap : run)
        if (std::abs(snapshot_time(snap) - t) <= 1e-9 * t)
            return snap;
    throw std::out_of_range("dirichlet_rescale: the run has no snapshot at t = " + std::to_string(t));
}

template <class Snapshot>
std::vector<Snapshot> rescale_run(std::span<const Snapshot> run, std::span<const double> s, const Homogeneity& h)
{
    const double c = std::pow(h.h() - 1.0, 1.0 / (h.h() - 1.0));
    std::vector<Snapshot> out;
    out.reserve(s.size());
    for (double sk : s) {
        const double t = dirichlet_time(sk, h);
        out.push_back(scaled(find_snapshot(run, t), c * std::exp(sk), sk));
    }
    return out;
}

template <class Snapshot>
GiantExtraction<Snapshot> extract(std::span<const Snapshot> run, const Homogeneity& h, double tolerance)
{
    if (run.empty())
        throw std::invalid_argument("extract_giant: empty run");
    const double t_last = snapshot_time(run.back());
    if (!(t_last > 1.0))
        throw std::invalid_argument("extract_giant: the run must extend past t = 1");
    const double s_last = std::log(t_last) / (h.h() - 1.0);
    const std::array<double, 2> s{s_last - 1.0, s_last};
    auto v = rescale_run(run, std::span<const double>(s), h);
    double gap = 0.0;
    const auto a = values_of(v[0]);
    const auto b = values_of(v[1]);
    for (std::size_t i = 0; i < a.size(); ++i)
        if (active(v[1], i))
            gap = std::max(gap, std::abs(b[i] - a[i]));
    const double inv = std::pow(h.h() - 1.0, -1.0 / (h.h() - 1.0));
    GiantExtraction<Snapshot> out{v[1], scaled(v[1], inv, s_last), s_last, gap, gap <= tolerance};
    return out;
}

template <class Snapshot>
BenilanCrandallReport bc_check(std::span<const Snapshot> run, const Homogeneity& h)
{
    const double a = 1.0 / (h.h() - 1.0);
    BenilanCrandallReport rep;
    rep.worst_violation = -std::numeric_limits<double>::infinity();
    rep.worst_monotonicity = -std::numeric_limits<double>::infinity();
    std::vector<const Snapshot*> snaps;
    for (const auto& s : run)
        if (snapshot_time(s) > 0.0)
            snaps.push_back(&s);
    for (std::size_t i = 0; i < snaps.size(); ++i) {
        const double t = snapshot_time(*snaps[i]);
        const auto ui = values_of(*snaps[i]);
        for (std::size_t j = i + 1; j < snaps.size(); ++j) {
            const double tj = snapshot_time(*snaps[j]);
            if (!(tj > t))
                continue;
            const double tau = tj - t;
            const double factor = 1.0 - std::pow(t / tj, a);
            const auto uj = values_of(*snaps[j]);
            if (uj.size() != ui.size())
                throw std::invalid_argument("benilan_crandall_check: snapshots differ in size");
            for (std::size_t k = 0; k < ui.size(); ++k) {
                if (!active(*snaps[i], k))
                    continue;
                const double v = -(factor * ui[k] + (uj[k] - ui[k]));
                if (v > rep.worst_violation) {
                    rep.worst_violation = v;
                    rep.t = t;
                    rep.tau = tau;
                }
            }
            ++rep.pairs;
            if (j == i + 1) {
                const double wi = std::pow(t, a);
                const double wj = std::pow(tj, a);
                for (std::size_t k = 0; k < ui.size(); ++k)
                    if (active(*snaps[i], k))
                        rep.worst_monotonicity = std::max(rep.worst_monotonicity, wi * ui[k] - wj * uj[k]);
            }
        }
    }
    if (rep.pairs == 0)
        throw std::invalid_argument("benilan_crandall_check: need two snapshots with t > 0");
    return rep;
}

}  // namespace

std::vector<RadialProfile> dirichlet_rescale(std::span<const RadialProfile> run, std::span<const double> s,
                                             const Homogeneity& h)
{
    return rescale_run(run, s, h);
}

std::vector<Field> dirichlet_rescale(std::span<const Field> run, std::span<const double> s, const Homogeneity& h)
{
    return rescale_run(run, s, h);
}

GiantExtraction<RadialProfile> extract_giant(std::span<const RadialProfile> run, const Homogeneity& h,
                                             double tolerance)
{
    return extract(run, h, tolerance);
}

GiantExtraction<Field> extract_giant(std::span<const Field> run, const Homogeneity& h, double tolerance)
{
    return extract(run, h, tolerance);
}

BenilanCrandallReport benilan_crandall_check(std::span<const RadialProfile> run, const Homogeneity& h)
{
    return bc_check(run, h);
}

BenilanCrandallReport benilan_crandall_check(std::span<const Field> run, const Homogeneity& h)
{
    return bc_check(run, h);
}

// ---- eigenvalue residual ----------------------------------------------------

Field mirror_to_field(const RadialProfile& profile)
{
    const std::size_t n = profile.size();
    const double edge = profile.center(n - 1);
    auto grid = std::make_shared<const Grid>(std::vector<double>{-edge}, std::vector<double>{edge},
                                             std::vector<std::size_t>{2 * n});
    Field f{grid, std::vector<double>(2 * n), profile.t()};
    for (std::size_t i = 0; i < n; ++i) {
        f.values[n + i] = profile[i];
        f.values[n - 1 - i] = profile[i];
    }
    return f;
}

EigenResidual eigen_residual(const Field& G, const Homogeneity& h, const EigenResidualOptions& options)
{
    const Grid& g = *G.grid;
    const int d = g.dim();
    const std::size_t n = g.size();
    EigenResidual out;
    out.residual.assign(n, 0.0);
    out.admitted.assign(n, 0);

    double sup_g = 0.0;
    std::array<double, Grid::kMaxDim> lo{};
    std::array<double, Grid::kMaxDim> hi{};
    lo.fill(std::numeric_limits<double>::infinity());
    hi.fill(-std::numeric_limits<double>::infinity());
    std::vector<double> x(static_cast<std::size_t>(d));
    for (std::size_t f = 0; f < n; ++f) {
        if (g.kind(f) == NodeKind::exterior)
            continue;
        sup_g = std::max(sup_g, std::abs(G.values[f]));
        g.coordinates(f, x);
        for (int a = 0; a < d; ++a) {
            const auto k = static_cast<std::size_t>(a);
            lo[k] = std::min(lo[k], x[k]);
            hi[k] = std::max(hi[k], x[k]);
        }
    }
    double diam2 = 0.0;
    for (int a = 0; a < d; ++a) {
        const auto k = static_cast<std::size_t>(a);
        diam2 += (hi[k] - lo[k]) * (hi[k] - lo[k]);
    }
    const double grad_floor = options.gradient_factor * sup_g / std::sqrt(diam2);

    auto offsets = [&](int r) {
        std::vector<std::ptrdiff_t> offs;
        std::vector<std::array<int, Grid::kMaxDim>> cells;
        const int side = 2 * r + 1;
        int count = 1;
        for (int a = 0; a < d; ++a)
            count *= side;
        for (int c = 0; c < count; ++c) {
            std::array<int, Grid::kMaxDim> o{0, 0, 0};
            int rem = c;
            for (int a = 0; a < d; ++a) {
                o[static_cast<std::size_t>(a)] = rem % side - r;
                rem /= side;
            }
            cells.push_back(o);
        }
        return cells;
    };
    auto shifted = [&](std::size_t f, const std::array<int, Grid::kMaxDim>& o, std::size_t& out_f) {
        Grid::Index idx = g.index(f);
        for (int a = 0; a < d; ++a) {
            const auto k = static_cast<std::size_t>(a);
            const auto v = static_cast<std::ptrdiff_t>(idx[k]) + o[k];
            if (v < 0 || v >= static_cast<std::ptrdiff_t>(g.nodes(a)))
                return false;
            idx[k] = static_cast<std::size_t>(v);
        }
        out_f = g.flat(idx);
        return true;
    };

    // Gradient norms at interior nodes.
    std::vector<double> grad(n, -1.0);
    std::vector<std::array<double, Grid::kMaxDim>> gvec(n);
    for (std::size_t f : g.interior_nodes()) {
        double s = 0.0;
        for (int a = 0; a < d; ++a) {
            const auto k = static_cast<std::size_t>(a);
            const std::size_t st = g.stride(a);
            gvec[f][k] = (G.values[f + st] - G.values[f - st]) / (2.0 * g.spacing(a));
            s += gvec[f][k] * gvec[f][k];
        }
        grad[f] = std::sqrt(s);
    }
    double sup_grad = 0.0;
    for (std::size_t f : g.interior_nodes())
        sup_grad = std::max(sup_grad, grad[f]);

    const auto ring1 = offsets(1);
    std::vector<char> near_critical(n, 0);
    if (options.critical_margin > 0) {
        const auto ring = offsets(options.critical_margin);
        for (std::size_t f : g.interior_nodes()) {
            bool grad_min = grad[f] <= options.critical_fraction * sup_grad;
            bool is_max = true;
            bool is_min = true;
            for (const auto& o : ring1) {
                std::size_t nb = 0;
                if (!shifted(f, o, nb) || g.kind(nb) == NodeKind::exterior)
                    continue;
                if (grad[nb] >= 0.0 && grad[nb] < grad[f])
                    grad_min = false;
                is_max = is_max && G.values[nb] <= G.values[f];
                is_min = is_min && G.values[nb] >= G.values[f];
            }
            if (!grad_min && !is_max && !is_min)
                continue;
            for (const auto& o : ring) {
                std::size_t nb = 0;
                if (shifted(f, o, nb))
                    near_critical[nb] = 1;
            }
        }
    }

    for (std::size_t f : g.interior_nodes()) {
        if (near_critical[f] || !(grad[f] > grad_floor))
            continue;
        bool clear = true;
        for (const auto& o : ring1) {
            std::size_t nb = 0;
            if (!shifted(f, o, nb) || g.kind(nb) != NodeKind::interior)
                clear = false;
        }
        if (!clear)
            continue;
        double quad = 0.0;
        for (int a = 0; a < d; ++a) {
            const auto i = static_cast<std::size_t>(a);
            const std::size_t si = g.stride(a);
            const double dii =
                ((G.values[f + si] + G.values[f - si]) - 2.0 * G.values[f]) / (g.spacing(a) * g.spacing(a));
            quad += dii * gvec[f][i] * gvec[f][i];
            for (int b = a + 1; b < d; ++b) {
                const auto j = static_cast<std::size_t>(b);
                const std::size_t sj = g.stride(b);
                const double pp = G.values[f + si + sj] + G.values[f - si - sj];
                const double pm = G.values[f + si - sj] + G.values[f - si + sj];
                const double dij = (pp - pm) / (4.0 * g.spacing(a) * g.spacing(b));
                quad += 2.0 * dij * gvec[f][i] * gvec[f][j];
            }
        }
        const double r = kernel::degenerate_value(quad, grad[f], h.h()) + G.values[f];
        out.residual[f] = r;
        out.admitted[f] = 1;
        ++out.admitted_count;
        out.sup = std::max(out.sup, std::abs(r));
    }
    return out;
}

EigenResidual eigen_residual(const RadialProfile& G, const Homogeneity& h, const EigenResidualOptions& options)
{
    return eigen_residual(mirror_to_field(G), h, options);
}

}  // namespace infheat
