#include "infheat/radial.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "infheat/error.hpp"

namespace infheat {

RadialProfile::RadialProfile(double r_max, std::size_t cells, RadialBoundary outer, double t)
    : r_max_(r_max), values_(cells, 0.0), outer_(outer), t_(t)
{
    if (!(r_max > 0.0) || !std::isfinite(r_max))
        throw std::invalid_argument("RadialProfile: r_max must be positive");
    if (cells < kMinCells)
        throw std::invalid_argument("RadialProfile: need at least 16 cells");
    if (!std::isfinite(outer.value) || !std::isfinite(t))
        throw std::invalid_argument("RadialProfile: boundary value and time must be finite");
}

RadialProfile RadialProfile::sample(double r_max, std::size_t cells, const std::function<double(double)>& f,
                                    RadialBoundary outer, double t)
{
    RadialProfile p(r_max, cells, outer, t);
    for (std::size_t i = 0; i < cells; ++i) {
        p.values_[i] = f(p.center(i));
        if (!std::isfinite(p.values_[i]))
            throw std::invalid_argument("RadialProfile::sample: non-finite value at cell " + std::to_string(i));
    }
    return p;
}

double RadialProfile::mass() const
{
    double m = 0.0;
    for (double v : values_)
        m += v;
    return m * dr();
}

double RadialProfile::max_value() const
{
    return *std::max_element(values_.begin(), values_.end());
}

double RadialProfile::min_value() const
{
    return *std::min_element(values_.begin(), values_.end());
}

double RadialProfile::support_radius(double threshold) const
{
    for (std::size_t i = values_.size(); i-- > 0;)
        if (values_[i] > threshold)
            return static_cast<double>(i + 1) * dr();
    return 0.0;
}

double RadialProfile::interpolate(double r) const
{
    r = std::abs(r);
    const double x = r / dr() - 0.5;
    if (x <= 0.0)
        return values_.front();
    const std::size_t n = values_.size();
    if (x >= static_cast<double>(n - 1)) {
        const double right = outer_.kind == OuterBoundary::dirichlet ? outer_.value : values_.back();
        const double f = std::min(1.0, (x - static_cast<double>(n - 1)) * 2.0);
        return (1.0 - f) * values_.back() + f * right;
    }
    const auto i = static_cast<std::size_t>(x);
    const double f = x - static_cast<double>(i);
    return (1.0 - f) * values_[i] + f * values_[i + 1];
}

namespace {

double abs_pow(double a, double e)
{
    if (e == 1.0) return a;
    if (e == 2.0) return a * a;
    if (e == 3.0) return a * a * a;
    if (e == 0.5) return std::sqrt(a);
    return std::pow(a, e);
}

struct FluxKernel {
    double inv_h;
    double exponent;  // h - 1
    bool even;

    double flux(double q) const
    {
        const double a = std::abs(q);
        if (even)
            return inv_h * abs_pow(a, exponent) * a;
        return inv_h * abs_pow(a, exponent) * q;
    }
    double diffusivity(double q) const { return abs_pow(std::abs(q), exponent); }
};

FluxKernel make_kernel(const Homogeneity& h)
{
    return {1.0 / h.h(), h.h() - 1.0, h.mutation() == Mutation::even_flux};
}

double max_diffusivity(std::span<const double> v, const RadialProfile& state, const FluxKernel& k)
{
    const double inv_dr = 1.0 / state.dr();
    double m = 0.0;
    for (std::size_t i = 1; i < v.size(); ++i)
        m = std::max(m, k.diffusivity((v[i] - v[i - 1]) * inv_dr));
    if (state.outer().kind == OuterBoundary::dirichlet)
        m = std::max(m, 2.0 * k.diffusivity(2.0 * (state.outer().value - v.back()) * inv_dr));
    return m;
}

// Advances v in place; `flux` is scratch of size n + 1.
void step_in_place(std::span<double> v, std::vector<double>& flux, const RadialProfile& state,
                   const FluxKernel& k, double dt, std::size_t step_index)
{
    const std::size_t n = v.size();
    const double inv_dr = 1.0 / state.dr();
    flux.assign(n + 1, 0.0);
    for (std::size_t i = 1; i < n; ++i)
        flux[i] = k.flux((v[i] - v[i - 1]) * inv_dr);
    if (state.outer().kind == OuterBoundary::dirichlet)
        flux[n] = k.flux(2.0 * (state.outer().value - v[n - 1]) * inv_dr);
    const double c = dt * inv_dr;
    bool finite = true;
    for (std::size_t i = 0; i < n; ++i) {
        v[i] += c * (flux[i + 1] - flux[i]);
        finite = finite && std::isfinite(v[i]);
    }
    if (!finite)
        throw NumericalAbort("radial solver produced a non-finite value", step_index);
}

}  // namespace

double cfl_dt(const RadialProfile& state, const Homogeneity& h, const RadialSettings& settings)
{
    const FluxKernel k = make_kernel(h);
    const double d = max_diffusivity(state.values(), state, k);
    return settings.theta * state.dr() * state.dr() / std::max(d, settings.floor);
}

RadialProfile radial_step(const RadialProfile& state, const Homogeneity& h, double dt, const RadialSettings& settings)
{
    if (!(dt >= 0.0) || !std::isfinite(dt))
        throw std::invalid_argument("radial_step: dt must be finite and >= 0");
    const double limit = cfl_dt(state, h, settings);
    if (dt > limit * (1.0 + 1e-12))
        throw std::invalid_argument("radial_step: dt = " + std::to_string(dt) + " exceeds the stability bound " +
                                    std::to_string(limit));
    RadialProfile next = state;
    std::vector<double> flux;
    step_in_place(next.values(), flux, state, make_kernel(h), dt, 0);
    next.set_time(state.t() + dt);
    return next;
}

RadialProfile radial_evolve(RadialProfile state, const Homogeneity& h, double t_end, const RadialEvolveOptions& options,
                            const RadialObserver& observer)
{
    if (!(t_end >= state.t()))
        throw std::invalid_argument("radial_evolve: t_end precedes the current time");
    std::vector<double> marks = options.observe_times;
    std::sort(marks.begin(), marks.end());
    auto next_mark = std::lower_bound(marks.begin(), marks.end(), state.t());
    while (next_mark != marks.end() && *next_mark == state.t()) {
        if (observer)
            observer(state);
        ++next_mark;
    }

    const FluxKernel k = make_kernel(h);
    const double dr2 = state.dr() * state.dr();
    std::vector<double> flux;
    std::size_t steps = 0;
    while (state.t() < t_end) {
        if (steps >= options.max_steps)
            throw NumericalAbort("radial_evolve: step budget exhausted at t = " + std::to_string(state.t()), steps);
        const double d = max_diffusivity(state.values(), state, k);
        double dt = options.settings.theta * dr2 / std::max(d, options.settings.floor);
        if (!(dt > 0.0) || state.t() + dt == state.t())
            throw NumericalAbort("radial_evolve: stable step collapsed to dt = " + std::to_string(dt) +
                                     " at t = " + std::to_string(state.t()),
                                 steps);
        double target = t_end;
        if (next_mark != marks.end() && *next_mark < target)
            target = *next_mark;
        bool lands = false;
        if (state.t() + dt >= target) {
            dt = target - state.t();
            lands = true;
        }
        step_in_place(state.values(), flux, state, k, dt, steps);
        state.set_time(lands ? target : state.t() + dt);
        ++steps;
        if (options.on_step)
            options.on_step(state, dt);
        while (next_mark != marks.end() && *next_mark <= state.t()) {
            if (observer)
                observer(state);
            ++next_mark;
        }
    }
    return state;
}

}  // namespace infheat
