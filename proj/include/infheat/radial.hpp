#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "infheat/homogeneity.hpp"

namespace infheat {

enum class OuterBoundary { dirichlet, zero_flux };

/// Condition at r = r_max. The origin always carries the symmetry condition.
struct RadialBoundary {
    OuterBoundary kind = OuterBoundary::dirichlet;
    double value = 0.0;
};

/// Cell-centred radial profile v_i ~ v((i + 1/2) dr, t) on [0, r_max].
///
/// For radial data the operator reduces to v_t = |v_r|^{h-1} v_rr =
/// (1/h)(|v_r|^{h-1} v_r)_r in any dimension: it only differentiates along the
/// gradient, so unlike the radial Laplacian there is no (d-1)/r term.
class RadialProfile {
public:
    static constexpr std::size_t kMinCells = 16;

    RadialProfile(double r_max, std::size_t cells, RadialBoundary outer = {}, double t = 0.0);

    /// Profile with v_i = f(r_i) at cell centres.
    static RadialProfile sample(double r_max, std::size_t cells, const std::function<double(double)>& f,
                                RadialBoundary outer = {}, double t = 0.0);

    double r_max() const noexcept { return r_max_; }
    std::size_t size() const noexcept { return values_.size(); }
    double dr() const noexcept { return r_max_ / static_cast<double>(values_.size()); }
    double center(std::size_t i) const noexcept { return (static_cast<double>(i) + 0.5) * dr(); }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }

    double t() const noexcept { return t_; }
    void set_time(double t) noexcept { t_ = t; }
    const RadialBoundary& outer() const noexcept { return outer_; }

    /// Sum of v_i dr.
    double mass() const;
    double max_value() const;
    double min_value() const;
    /// Outer face radius of the last cell with v > threshold; 0 if none.
    double support_radius(double threshold = 1e-12) const;
    /// Linear interpolation between cell centres (mirror at 0, boundary value at r_max).
    double interpolate(double r) const;

private:
    double r_max_;
    std::vector<double> values_;
    RadialBoundary outer_;
    double t_;
};

struct RadialSettings {
    double theta = 0.4;
    double floor = 1e-12;
};

/// theta dr^2 / max(face |q|^{h-1}, floor). A Dirichlet face sits half a cell
/// from its neighbour, so its diffusivity counts twice.
double cfl_dt(const RadialProfile& state, const Homogeneity& h, const RadialSettings& settings = {});

/// One explicit conservative Euler step
///   v_i += dt/dr (Phi_{i+1/2} - Phi_{i-1/2}),  Phi = (1/h)|q|^{h-1} q.
/// Throws std::invalid_argument if dt exceeds cfl_dt and NumericalAbort on NaN.
RadialProfile radial_step(const RadialProfile& state, const Homogeneity& h, double dt,
                          const RadialSettings& settings = {});

using RadialObserver = std::function<void(const RadialProfile&)>;

struct RadialEvolveOptions {
    RadialSettings settings;
    /// Times at which the observer is invoked; the step size is clipped to land on them.
    std::vector<double> observe_times;
    std::size_t max_steps = 2'000'000'000;
    /// Called after every step with the step size taken.
    std::function<void(const RadialProfile&, double dt)> on_step;
};

/// Repeats radial_step with dt = min(cfl_dt, time to the next observation, time left).
RadialProfile radial_evolve(RadialProfile state, const Homogeneity& h, double t_end,
                            const RadialEvolveOptions& options = {}, const RadialObserver& observer = {});

}  // namespace infheat
