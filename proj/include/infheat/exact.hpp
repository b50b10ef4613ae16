#pragma once

#include <iosfwd>
#include <memory>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "infheat/homogeneity.hpp"

namespace infheat {

using Point = std::span<const double>;

/// Distance from a space-time point to the locus where a solution family fails
/// to be twice differentiable, with the name of the nearest such set.
struct SingularDistance {
    double distance;
    std::string_view set;
};

/// Source-type self-similar solution
///   B(x,t) = c_h t^{-1/(2h)} [R^{(h+1)/h} - t^{-(h+1)/(2h^2)} |x|^{(h+1)/h}]_+^{h/(h-1)}.
class Barenblatt {
public:
    Barenblatt(Homogeneity h, double R);

    double operator()(Point x, double t) const;
    double radial(double r, double t) const;
    /// Radius R t^{1/(2h)} of the positivity set.
    double support_radius(double t) const;
    /// The free boundary and the origin.
    SingularDistance singular_distance(Point x, double t) const;
    /// Earliest admissible time (exclusive).
    double time_lower_bound() const noexcept { return 0.0; }
    double time_upper_bound() const noexcept;

    const Homogeneity& homogeneity() const noexcept { return h_; }
    double R() const noexcept { return R_; }

private:
    Homogeneity h_;
    double R_;
};

double barenblatt_eval(const Barenblatt& b, Point x, double t);
double barenblatt_support_radius(const Barenblatt& b, double t);

/// Tabulated inverse of r(s) = kappa \int_0^s sin^alpha, giving the periodic
/// profile X(r) = cos(s(r)) of the separable decaying solution.
class GiantProfile {
public:
    static constexpr std::size_t kDefaultNodes = 2049;

    /// Throws std::invalid_argument for n_nodes < 64 and std::runtime_error if a
    /// quadrature panel fails to converge (message carries the achieved estimate).
    static std::shared_ptr<const GiantProfile> build(const Homogeneity& h, std::size_t n_nodes = kDefaultNodes);

    const Homogeneity& homogeneity() const noexcept { return h_; }
    /// Half period: r(pi).
    double Rbar() const noexcept { return rbar_; }
    /// Sum of quadrature error estimates over all table panels.
    double quadrature_error() const noexcept { return quad_error_; }

    /// Inverse map s(r) on [0, Rbar].
    double s_of_r(double r) const;
    /// r(s) on [0, pi].
    double r_of_s(double s) const;
    /// X extended to r >= 0 by reflection (2 Rbar periodic).
    double X(double r) const;
    /// X'(r), from X'(r) = -(1/kappa) sin^{1-alpha}(s(r)) on [0, Rbar] and the reflection.
    double Xprime(double r) const;

    std::span<const double> s_nodes() const noexcept { return s_; }
    std::span<const double> r_nodes() const noexcept { return r_; }
    std::size_t size() const noexcept { return s_.size(); }

    /// Table dump with header `s,r,X,Xprime`.
    void write_csv(std::ostream& out) const;

private:
    GiantProfile(const Homogeneity& h) : h_(h) {}

    double local_integral(double s_lo, double s_hi) const;

    Homogeneity h_;
    std::vector<double> s_;
    std::vector<double> r_;
    double rbar_ = 0.0;
    double quad_error_ = 0.0;
};

std::shared_ptr<const GiantProfile> build_giant_profile(const Homogeneity& h,
                                                        std::size_t n_nodes = GiantProfile::kDefaultNodes);
double giant_X_eval(const GiantProfile& profile, double r);

/// Flux form of the profile ODE at the interior table nodes, with Phi(q) the
/// radial flux (1/h)|q|^{h-1} q and X' taken analytically.
struct GiantFluxCheck {
    /// max |Phi(X')' + X/(h-1)|.
    double conservative_residual = 0.0;
    /// max |[|X'|^{h-1} X']' + X/(h-1)|, which is not small: the derivative equals -h X/(h-1).
    double literal_residual = 0.0;
    /// Range of [|X'|^{h-1} X']' / (-X/(h-1)) over nodes with |X| > 1e-3.
    double ratio_min = 0.0;
    double ratio_max = 0.0;
    std::size_t nodes = 0;
};

/// Derivatives from 5-point Fornberg weights on the nonuniform r-nodes; nodes
/// whose stencil reaches s = 0 or s = pi are skipped.
GiantFluxCheck giant_flux_identity(const GiantProfile& profile);

/// Weights w_k with f'(x0) ~ sum w_k f(x_k), exact for polynomials of degree < nodes.size().
std::vector<double> fornberg_first_derivative(double x0, std::span<const double> nodes);

/// Sign of the exponent in the amplitude prefactor (2 r0 / Rbar)^{+-(h+1)/(h-1)}.
/// Only `positive` yields a solution; `negative` is kept so the choice can be
/// demonstrated by residuals.
enum class GiantPrefactor { positive, negative };

/// Separable solution S(x,t) = X_{r0}(x) (t - t0)^{-1/(h-1)} with
/// X_{r0}(x) = (2 r0/Rbar)^{(h+1)/(h-1)} X(Rbar |x| / (2 r0)), vanishing on |x| = r0.
class FriendlyGiant {
public:
    FriendlyGiant(std::shared_ptr<const GiantProfile> profile, double r0, double t0,
                  GiantPrefactor prefactor = GiantPrefactor::positive);

    double operator()(Point x, double t) const;
    /// Time-independent spatial factor X_{r0}(|x|).
    double spatial(double r) const;
    double spatial_derivative(double r) const;
    /// Spheres |x| = 2 k r0, k = 0, 1, ...
    SingularDistance singular_distance(Point x, double t) const;
    double time_lower_bound() const noexcept { return t0_; }
    double time_upper_bound() const noexcept;

    const Homogeneity& homogeneity() const noexcept { return profile_->homogeneity(); }
    const GiantProfile& profile() const noexcept { return *profile_; }
    double r0() const noexcept { return r0_; }
    double t0() const noexcept { return t0_; }
    double amplitude() const noexcept { return amplitude_; }

private:
    std::shared_ptr<const GiantProfile> profile_;
    double r0_;
    double t0_;
    double amplitude_;
    double scale_;
};

double giant_eval(const FriendlyGiant& g, Point x, double t);

/// V(x,t) = c_h [|x| - r0]_+^{(h+1)/(h-1)} / (t0 - t)^{1/(h-1)}, defined for t < t0.
class BlowUp {
public:
    BlowUp(Homogeneity h, double r0, double t0);

    double operator()(Point x, double t) const;
    SingularDistance singular_distance(Point x, double t) const;
    double time_lower_bound() const noexcept;
    double time_upper_bound() const noexcept { return t0_; }

    const Homogeneity& homogeneity() const noexcept { return h_; }
    double r0() const noexcept { return r0_; }
    double t0() const noexcept { return t0_; }

private:
    Homogeneity h_;
    double r0_;
    double t0_;
};

double blowup_eval(const BlowUp& b, Point x, double t);

/// T(x,t) = (d_h/|c|) [c^2 t - c x.nu]_+^{h/(h-1)}, front on x.nu = c t.
class TravelingWave {
public:
    TravelingWave(Homogeneity h, std::vector<double> nu, double c);

    double operator()(Point x, double t) const;
    /// Signed distance x.nu - c t of x from the front.
    double front_offset(Point x, double t) const;
    SingularDistance singular_distance(Point x, double t) const;
    double time_lower_bound() const noexcept;
    double time_upper_bound() const noexcept;

    const Homogeneity& homogeneity() const noexcept { return h_; }
    std::span<const double> nu() const noexcept { return nu_; }
    double c() const noexcept { return c_; }

private:
    Homogeneity h_;
    std::vector<double> nu_;
    double c_;
};

double traveling_eval(const TravelingWave& w, Point x, double t);

using ExactSolution = std::variant<Barenblatt, FriendlyGiant, BlowUp, TravelingWave>;

double evaluate(const ExactSolution& u, Point x, double t);
SingularDistance singular_distance(const ExactSolution& u, Point x, double t);
const Homogeneity& homogeneity_of(const ExactSolution& u);
std::string_view family_name(const ExactSolution& u);

/// |u_t - |Du|^{h-3} <D^2u Du, Du>| from fourth-order central differences with
/// step `stencil_width` in every coordinate. Throws std::domain_error naming
/// the offending set when (x,t) is closer than 3 stencil widths to the
/// solution's singular locus or the stencil leaves the time domain.
double residual_at(const ExactSolution& u, Point x, double t, double stencil_width);

/// Step at which fourth-order truncation and rounding balance, eps^{1/6} scaled.
double default_stencil_width(double length_scale);

}  // namespace infheat
