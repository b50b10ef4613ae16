#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "infheat/grid.hpp"
#include "infheat/homogeneity.hpp"
#include "infheat/radial.hpp"

namespace infheat {

/// Samples (t_k, value_k) with strictly increasing times.
class TimeSeries {
public:
    TimeSeries() = default;
    TimeSeries(std::string quantity, std::string run_id = {});

    /// Throws std::invalid_argument unless t exceeds the last time and both are finite.
    void push(double t, double value);

    std::size_t size() const noexcept { return t_.size(); }
    bool empty() const noexcept { return t_.empty(); }
    std::span<const double> times() const noexcept { return t_; }
    std::span<const double> values() const noexcept { return v_; }
    const std::string& quantity() const noexcept { return quantity_; }
    const std::string& run_id() const noexcept { return run_id_; }

private:
    std::string quantity_;
    std::string run_id_;
    std::vector<double> t_;
    std::vector<double> v_;
};

struct FitWindow {
    double t_lo;
    double t_hi;
};

/// log(value) ~ intercept + exponent log(t) over the samples inside [t_lo, t_hi].
struct RateFit {
    double exponent = 0.0;
    double intercept = 0.0;
    double t_lo = 0.0;
    double t_hi = 0.0;
    double residual_norm = 0.0;
    std::size_t samples = 0;
};

inline constexpr std::size_t kMinFitSamples = 8;

/// Least-squares power-law fit. Throws std::invalid_argument when the window
/// holds fewer than 8 samples, spans less than a decade, or has a value <= 0.
RateFit fit_decay_exponent(const TimeSeries& series, FitWindow window);

inline constexpr double kSupportThreshold = 1e-10;

/// Largest |x| at which u > threshold; 0 for an empty support.
double support_radius(const RadialProfile& profile, double threshold = kSupportThreshold);
double support_radius(const Field& field, double threshold = kSupportThreshold);

/// Space-time function u(x, t).
using SpaceTimeFn = std::function<double(Point, double)>;

/// u_lambda(x, t) = lambda^{1/(2h)} u(lambda^{1/(2h)} x, lambda t).
SpaceTimeFn rescale_cauchy(SpaceTimeFn u, double lambda, const Homogeneity& h);
/// The same rescaling applied to a radial snapshot: values are multiplied by
/// lambda^{1/(2h)}, radii divided by it and the time divided by lambda.
RadialProfile rescale_cauchy(const RadialProfile& u, double lambda, const Homogeneity& h);

struct BarenblattFit {
    double R_star = 0.0;
    /// sup |u - B_{R_star}| at the snapshot time.
    double sup_gap = 0.0;
    /// t^{1/(2h)} sup |u - B|, the gap measured relative to the decay scale.
    double relative_gap = 0.0;
    /// t^{-1/(2h)} sup |u - B|.
    double literal_gap = 0.0;
    double t = 0.0;
};

/// Best sup-norm fit of B_R over R in [rho/2, 2 rho], rho = support t^{-1/(2h)}.
/// Throws std::invalid_argument for an empty or sign-changing snapshot.
BarenblattFit fit_barenblatt(const RadialProfile& u, const Homogeneity& h);
BarenblattFit fit_barenblatt(const Field& u, const Homogeneity& h);

inline constexpr int kShellDirections = 64;

/// max_{|x| = r + 2 R_data} u - min_{|x| = r} u over 64 directions per shell with
/// multilinear interpolation. Throws if a shell leaves the active grid or r <= R_data.
double aleksandrov_gap(const Field& u, double r, double R_data);
double aleksandrov_gap(const RadialProfile& u, double r, double R_data);

/// Multilinear interpolation of a grid field; throws std::out_of_range outside the active nodes.
double interpolate(const Field& u, Point x);

/// v(., s) = (h-1)^{1/(h-1)} e^s u(., e^{(h-1)s}).
/// Each snapshot's time must be e^{(h-1)s} for one of the requested s up to a
/// relative 1e-9; otherwise std::out_of_range names the missing time.
std::vector<RadialProfile> dirichlet_rescale(std::span<const RadialProfile> run, std::span<const double> s,
                                             const Homogeneity& h);
std::vector<Field> dirichlet_rescale(std::span<const Field> run, std::span<const double> s, const Homogeneity& h);

/// Time e^{(h-1)s} at which dirichlet_rescale samples the run.
double dirichlet_time(double s, const Homogeneity& h);

template <class Snapshot>
struct GiantExtraction {
    Snapshot G;
    Snapshot F;
    double s = 0.0;
    /// sup |v(s) - v(s - 1)|.
    double stabilization = 0.0;
    bool converged = false;
};

inline constexpr double kStabilizationTolerance = 1e-6;

/// G = v(., s_last) and F = (h-1)^{-1/(h-1)} G, from the last snapshot and the
/// one at s_last - 1, which must be present in the run.
GiantExtraction<RadialProfile> extract_giant(std::span<const RadialProfile> run, const Homogeneity& h,
                                             double tolerance = kStabilizationTolerance);
GiantExtraction<Field> extract_giant(std::span<const Field> run, const Homogeneity& h,
                                     double tolerance = kStabilizationTolerance);

struct EigenResidualOptions {
    /// Nodes with |DG| <= gradient_factor sup G / diam are excluded.
    double gradient_factor = 1e-6;
    /// Nodes within this many cells of a critical point of G are excluded.
    /// Discrete local extrema of G are critical, and so is a local minimum of
    /// |DG| below critical_fraction sup |DG|.
    int critical_margin = 6;
    double critical_fraction = 0.05;
};

struct EigenResidual {
    /// |DG|^{h-3} <D^2G DG, DG> + G at admitted nodes, 0 elsewhere.
    std::vector<double> residual;
    std::vector<char> admitted;
    std::size_t admitted_count = 0;
    double sup = 0.0;
};

/// Residual of -Delta G = G on interior nodes at least 2 cells from the mask boundary.
EigenResidual eigen_residual(const Field& G, const Homogeneity& h, const EigenResidualOptions& options = {});
/// Radial overload: the profile is mirrored onto the 1-D grid of cell centres.
EigenResidual eigen_residual(const RadialProfile& G, const Homogeneity& h, const EigenResidualOptions& options = {});

/// Cell centres +-(i + 1/2) dr of a radial profile as a 1-D field; the outermost centres are boundary nodes.
Field mirror_to_field(const RadialProfile& profile);

struct BenilanCrandallReport {
    /// max over sampled (x, t, tau) of -([1 - (t/(t+tau))^{1/(h-1)}] u(x,t) + u(x,t+tau) - u(x,t)),
    /// positive where u(x,t+tau) - u(x,t) >= -[1 - (t/(t+tau))^{1/(h-1)}] u(x,t) fails.
    double worst_violation = 0.0;
    double t = 0.0;
    double tau = 0.0;
    /// Largest decrease of t^{1/(h-1)} u(x, t) between consecutive snapshots.
    double worst_monotonicity = 0.0;
    std::size_t pairs = 0;
};

/// Times are measured from the run's initial time 0. Snapshots with t <= 0 are skipped.
BenilanCrandallReport benilan_crandall_check(std::span<const RadialProfile> run, const Homogeneity& h);
BenilanCrandallReport benilan_crandall_check(std::span<const Field> run, const Homogeneity& h);

}  // namespace infheat
