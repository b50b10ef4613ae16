#include "infheat/exact.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>

#include "infheat/operator.hpp"
#include "infheat/quadrature.hpp"

namespace infheat {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

double norm(Point x)
{
    double s = 0.0;
    for (double v : x)
        s += v * v;
    return std::sqrt(s);
}

void require_finite_point(Point x, const char* who)
{
    for (double v : x)
        if (!std::isfinite(v))
            throw std::invalid_argument(std::string(who) + ": non-finite coordinate");
}

}  // namespace

// ---------------------------------------------------------------------------
// Barenblatt

Barenblatt::Barenblatt(Homogeneity h, double R) : h_(h), R_(R)
{
    if (!(R > 0.0) || !std::isfinite(R))
        throw std::invalid_argument("Barenblatt: R must be positive and finite");
}

double Barenblatt::radial(double r, double t) const
{
    if (!(t > 0.0))
        throw std::invalid_argument("Barenblatt: t must be > 0");
    const double h = h_.h();
    const double a = (h + 1.0) / h;
    const double bracket = std::pow(R_, a) - std::pow(t, -(h + 1.0) / (2.0 * h * h)) * std::pow(r, a);
    if (!(bracket > 0.0))
        return 0.0;
    return h_.c_h() * std::pow(t, -1.0 / (2.0 * h)) * std::pow(bracket, h / (h - 1.0));
}

double Barenblatt::operator()(Point x, double t) const
{
    require_finite_point(x, "Barenblatt");
    return radial(norm(x), t);
}

double Barenblatt::support_radius(double t) const
{
    if (!(t > 0.0))
        throw std::invalid_argument("Barenblatt: t must be > 0");
    return R_ * std::pow(t, 1.0 / (2.0 * h_.h()));
}

SingularDistance Barenblatt::singular_distance(Point x, double t) const
{
    const double r = norm(x);
    const double to_front = std::abs(r - support_radius(t));
    if (r <= to_front)
        return {r, "origin"};
    return {to_front, "free boundary |x| = R t^(1/(2h))"};
}

double Barenblatt::time_upper_bound() const noexcept
{
    return kInf;
}

double barenblatt_eval(const Barenblatt& b, Point x, double t)
{
    return b(x, t);
}

double barenblatt_support_radius(const Barenblatt& b, double t)
{
    return b.support_radius(t);
}

// ---------------------------------------------------------------------------
// Giant profile
//
// Nodes follow s = (pi/2)(1 + tanh(tau)) on a uniform tau grid, which is
// geometric toward both ends and roughly uniform in the middle. Only the left
// half s <= pi/2 is integrated; the right half is its mirror image, which also
// keeps sin(s) accurate near s = pi.

namespace {

constexpr double kTauExtent = 14.0;

}  // namespace

double GiantProfile::local_integral(double s_lo, double s_hi) const
{
    const double alpha = h_.alpha();
    auto integrand = [alpha](double s) { return std::pow(std::sin(s), alpha); };
    if (s_lo == 0.0) {
        const QuadratureResult q = integrate_adaptive(integrand, s_lo, s_hi, 1e-17, 1e-15, {true, false});
        return h_.kappa() * q.value;
    }
    return h_.kappa() * gauss_kronrod_15(integrand, s_lo, s_hi).value;
}

std::shared_ptr<const GiantProfile> GiantProfile::build(const Homogeneity& h, std::size_t n_nodes)
{
    if (n_nodes < 64)
        throw std::invalid_argument("GiantProfile: need at least 64 nodes");
    if (n_nodes % 2 == 0)
        ++n_nodes;  // keep s = pi/2 on a node

    std::shared_ptr<GiantProfile> p(new GiantProfile(h));
    const std::size_t mid = n_nodes / 2;
    p->s_.assign(n_nodes, 0.0);
    p->r_.assign(n_nodes, 0.0);

    const double dtau = kTauExtent / static_cast<double>(mid);
    for (std::size_t i = 1; i < mid; ++i) {
        const double tau = -kTauExtent + dtau * static_cast<double>(i);
        p->s_[i] = 0.5 * kPi * (1.0 + std::tanh(tau));
    }
    p->s_[mid] = 0.5 * kPi;

    const double alpha = h.alpha();
    auto integrand = [alpha](double s) { return std::pow(std::sin(s), alpha); };
    double error = 0.0;
    for (std::size_t i = 0; i < mid; ++i) {
        const bool singular_end = i == 0;
        const QuadratureResult q =
            integrate_adaptive(integrand, p->s_[i], p->s_[i + 1], 1e-17, 1e-15, {singular_end, false});
        if (!q.converged && q.error_estimate > 1e-14)
            throw std::runtime_error("GiantProfile: quadrature did not converge on panel " + std::to_string(i) +
                                     " (error estimate " + std::to_string(q.error_estimate) + ")");
        error += q.error_estimate;
        p->r_[i + 1] = p->r_[i] + h.kappa() * q.value;
    }
    p->rbar_ = 2.0 * p->r_[mid];
    p->quad_error_ = 2.0 * h.kappa() * error;

    for (std::size_t i = 0; i < mid; ++i) {
        p->s_[n_nodes - 1 - i] = kPi - p->s_[i];
        p->r_[n_nodes - 1 - i] = p->rbar_ - p->r_[i];
    }
    return p;
}

double GiantProfile::r_of_s(double s) const
{
    if (!(s >= 0.0 && s <= kPi))
        throw std::invalid_argument("GiantProfile::r_of_s: s outside [0, pi]");
    if (s > 0.5 * kPi)
        return rbar_ - r_of_s(kPi - s);
    const std::size_t mid = s_.size() / 2;
    auto it = std::upper_bound(s_.begin(), s_.begin() + static_cast<std::ptrdiff_t>(mid) + 1, s);
    const std::size_t i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - s_.begin()) - 1));
    return r_[i] + local_integral(s_[i], s);
}

namespace {

// s(r) for r in [0, Rbar/2], using the left half of the table.
double invert_left(const GiantProfile& p, std::span<const double> s, std::span<const double> r, double target,
                   double kappa, double alpha)
{
    const std::size_t mid = s.size() / 2;
    if (target <= 0.0)
        return 0.0;
    if (target >= r[mid])
        return s[mid];
    auto it = std::upper_bound(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(mid) + 1, target);
    const std::size_t i = static_cast<std::size_t>((it - r.begin()) - 1);
    if (i == 0) {
        // r ~ kappa s^{1+alpha}/(1+alpha); the next term is O(s^2) relative and
        // below rounding on the first panel.
        return std::pow((1.0 + alpha) * target / kappa, 1.0 / (1.0 + alpha));
    }
    double lo = s[i];
    double hi = s[i + 1];
    double x = lo + (hi - lo) * (target - r[i]) / (r[i + 1] - r[i]);
    auto integrand = [alpha](double v) { return std::pow(std::sin(v), alpha); };
    for (int iter = 0; iter < 60; ++iter) {
        const double f = r[i] + kappa * gauss_kronrod_15(integrand, s[i], x).value - target;
        if (f > 0.0)
            hi = x;
        else
            lo = x;
        const double step = f / (kappa * std::pow(std::sin(x), alpha));
        double next = x - step;
        if (!(next > lo && next < hi))
            next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= 4.0 * std::numeric_limits<double>::epsilon() * x) {
            x = next;
            break;
        }
        x = next;
        if (hi - lo <= 2.0 * std::numeric_limits<double>::epsilon() * x)
            break;
    }
    (void)p;
    return x;
}

}  // namespace

double GiantProfile::s_of_r(double r) const
{
    if (!(r >= 0.0 && r <= rbar_))
        throw std::invalid_argument("GiantProfile::s_of_r: r outside [0, Rbar]");
    if (r > 0.5 * rbar_)
        return kPi - invert_left(*this, s_, r_, rbar_ - r, h_.kappa(), h_.alpha());
    return invert_left(*this, s_, r_, r, h_.kappa(), h_.alpha());
}

double GiantProfile::X(double r) const
{
    if (!(r >= 0.0) || !std::isfinite(r))
        throw std::invalid_argument("GiantProfile::X: r must be finite and >= 0");
    double m = std::fmod(r, 2.0 * rbar_);
    if (m > rbar_)
        m = 2.0 * rbar_ - m;
    if (m <= 0.5 * rbar_)
        return std::cos(invert_left(*this, s_, r_, m, h_.kappa(), h_.alpha()));
    return -std::cos(invert_left(*this, s_, r_, rbar_ - m, h_.kappa(), h_.alpha()));
}

double GiantProfile::Xprime(double r) const
{
    if (!(r >= 0.0) || !std::isfinite(r))
        throw std::invalid_argument("GiantProfile::Xprime: r must be finite and >= 0");
    double m = std::fmod(r, 2.0 * rbar_);
    double sign = -1.0;
    if (m > rbar_) {
        m = 2.0 * rbar_ - m;
        sign = 1.0;
    }
    const double left = m <= 0.5 * rbar_ ? m : rbar_ - m;
    const double s = invert_left(*this, s_, r_, left, h_.kappa(), h_.alpha());
    return sign * std::pow(std::sin(s), 1.0 - h_.alpha()) / h_.kappa();
}

void GiantProfile::write_csv(std::ostream& out) const
{
    const std::size_t mid = s_.size() / 2;
    out << "s,r,X,Xprime\n";
    out << std::setprecision(17);
    for (std::size_t i = 0; i < s_.size(); ++i) {
        const bool right = i > mid;
        const double s_left = right ? s_[s_.size() - 1 - i] : s_[i];
        const double x = right ? -std::cos(s_left) : std::cos(s_left);
        const double xp = -std::pow(std::sin(s_left), 1.0 - h_.alpha()) / h_.kappa();
        out << s_[i] << ',' << r_[i] << ',' << x << ',' << xp << '\n';
    }
}

std::shared_ptr<const GiantProfile> build_giant_profile(const Homogeneity& h, std::size_t n_nodes)
{
    return GiantProfile::build(h, n_nodes);
}

double giant_X_eval(const GiantProfile& profile, double r)
{
    return profile.X(r);
}

std::vector<double> fornberg_first_derivative(double x0, std::span<const double> nodes)
{
    const std::size_t n = nodes.size();
    if (n < 2)
        throw std::invalid_argument("fornberg_first_derivative: need at least two nodes");
    // c[j][k]: weight of node j for the k-th derivative, k = 0, 1.
    std::vector<std::array<double, 2>> c(n, {0.0, 0.0});
    c[0][0] = 1.0;
    double c1 = 1.0;
    double c4 = nodes[0] - x0;
    for (std::size_t i = 1; i < n; ++i) {
        double c2 = 1.0;
        const double c5 = c4;
        c4 = nodes[i] - x0;
        for (std::size_t j = 0; j < i; ++j) {
            const double c3 = nodes[i] - nodes[j];
            if (c3 == 0.0)
                throw std::invalid_argument("fornberg_first_derivative: repeated node");
            c2 *= c3;
            if (j == i - 1) {
                c[i][1] = c1 * (c[i - 1][0] - c5 * c[i - 1][1]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            c[j][1] = (c4 * c[j][1] - c[j][0]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(n);
    for (std::size_t j = 0; j < n; ++j)
        w[j] = c[j][1];
    return w;
}

GiantFluxCheck giant_flux_identity(const GiantProfile& profile)
{
    const Homogeneity& H = profile.homogeneity();
    const double h = H.h();
    const double alpha = H.alpha();
    const double kappa = H.kappa();
    const auto s = profile.s_nodes();
    const auto r = profile.r_nodes();
    const std::size_t n = s.size();
    const std::size_t mid = n / 2;

    // Nodes past the midpoint are handled through the mirror r = Rbar - r_left,
    // which keeps differences of nearly equal radii exact.
    auto left_of = [&](std::size_t k) { return k > mid ? n - 1 - k : k; };
    auto coord = [&](std::size_t k, bool mirrored) { return mirrored ? -r[left_of(k)] : r[k]; };
    auto X = [&](std::size_t k) { return k > mid ? -std::cos(s[left_of(k)]) : std::cos(s[k]); };
    auto Xp = [&](std::size_t k) { return -std::pow(std::sin(s[left_of(k)]), 1.0 - alpha) / kappa; };

    GiantFluxCheck out;
    out.ratio_min = std::numeric_limits<double>::infinity();
    out.ratio_max = -std::numeric_limits<double>::infinity();
    constexpr std::size_t kHalf = 2;
    std::array<double, 2 * kHalf + 1> xs{};
    for (std::size_t i = kHalf + 1; i + kHalf + 1 < n; ++i) {
        const bool mirrored = i - kHalf > mid;
        for (std::size_t k = 0; k < xs.size(); ++k)
            xs[k] = coord(i - kHalf + k, mirrored);
        const auto w = fornberg_first_derivative(coord(i, mirrored), xs);
        double d_cons = 0.0;
        double d_lit = 0.0;
        for (std::size_t k = 0; k < xs.size(); ++k) {
            const double q = Xp(i - kHalf + k);
            d_cons += w[k] * kernel::odd_flux(q, H);
            d_lit += w[k] * std::pow(std::abs(q), h - 1.0) * q;
        }
        const double rhs = X(i) / (h - 1.0);
        out.conservative_residual = std::max(out.conservative_residual, std::abs(d_cons + rhs));
        out.literal_residual = std::max(out.literal_residual, std::abs(d_lit + rhs));
        if (std::abs(X(i)) > 1e-3) {
            const double ratio = d_lit / -rhs;
            out.ratio_min = std::min(out.ratio_min, ratio);
            out.ratio_max = std::max(out.ratio_max, ratio);
        }
        ++out.nodes;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Friendly giant

FriendlyGiant::FriendlyGiant(std::shared_ptr<const GiantProfile> profile, double r0, double t0,
                             GiantPrefactor prefactor)
    : profile_(std::move(profile)), r0_(r0), t0_(t0)
{
    if (!profile_)
        throw std::invalid_argument("FriendlyGiant: missing profile");
    if (!(r0 > 0.0) || !std::isfinite(r0) || !std::isfinite(t0))
        throw std::invalid_argument("FriendlyGiant: r0 must be positive, t0 finite");
    const double h = profile_->homogeneity().h();
    const double exponent = (h + 1.0) / (h - 1.0);
    const double ratio = 2.0 * r0 / profile_->Rbar();
    amplitude_ = std::pow(ratio, prefactor == GiantPrefactor::positive ? exponent : -exponent);
    scale_ = profile_->Rbar() / (2.0 * r0);
}

double FriendlyGiant::spatial(double r) const
{
    return amplitude_ * profile_->X(scale_ * r);
}

double FriendlyGiant::spatial_derivative(double r) const
{
    return amplitude_ * scale_ * profile_->Xprime(scale_ * r);
}

double FriendlyGiant::operator()(Point x, double t) const
{
    if (!(t > t0_))
        throw std::invalid_argument("FriendlyGiant: t must exceed t0");
    require_finite_point(x, "FriendlyGiant");
    const double h = profile_->homogeneity().h();
    return spatial(norm(x)) * std::pow(t - t0_, -1.0 / (h - 1.0));
}

SingularDistance FriendlyGiant::singular_distance(Point x, double) const
{
    const double r = norm(x);
    const double k = std::round(r / (2.0 * r0_));
    const double d = std::abs(r - 2.0 * k * r0_);
    if (k == 0.0)
        return {d, "origin"};
    return {d, "sphere |x| = 2k r0"};
}

double FriendlyGiant::time_upper_bound() const noexcept
{
    return kInf;
}

double giant_eval(const FriendlyGiant& g, Point x, double t)
{
    return g(x, t);
}

// ---------------------------------------------------------------------------
// Blow-up

BlowUp::BlowUp(Homogeneity h, double r0, double t0) : h_(h), r0_(r0), t0_(t0)
{
    if (!(r0 >= 0.0) || !std::isfinite(r0) || !std::isfinite(t0))
        throw std::invalid_argument("BlowUp: r0 must be >= 0, t0 finite");
}

double BlowUp::operator()(Point x, double t) const
{
    if (!(t < t0_))
        throw std::invalid_argument("BlowUp: t must be below the blow-up time t0");
    require_finite_point(x, "BlowUp");
    const double h = h_.h();
    const double gap = norm(x) - r0_;
    if (!(gap > 0.0))
        return 0.0;
    return h_.c_h() * std::pow(gap, (h + 1.0) / (h - 1.0)) / std::pow(t0_ - t, 1.0 / (h - 1.0));
}

SingularDistance BlowUp::singular_distance(Point x, double) const
{
    return {std::abs(norm(x) - r0_), r0_ == 0.0 ? "origin" : "sphere |x| = r0"};
}

double BlowUp::time_lower_bound() const noexcept
{
    return -kInf;
}

double blowup_eval(const BlowUp& b, Point x, double t)
{
    return b(x, t);
}

// ---------------------------------------------------------------------------
// Traveling wave

TravelingWave::TravelingWave(Homogeneity h, std::vector<double> nu, double c) : h_(h), nu_(std::move(nu)), c_(c)
{
    if (nu_.empty())
        throw std::invalid_argument("TravelingWave: empty direction");
    if (std::abs(norm(nu_) - 1.0) > 1e-14)
        throw std::invalid_argument("TravelingWave: nu must be a unit vector");
    if (!(c != 0.0) || !std::isfinite(c))
        throw std::invalid_argument("TravelingWave: speed c must be nonzero and finite");
}

double TravelingWave::front_offset(Point x, double t) const
{
    if (x.size() != nu_.size())
        throw std::invalid_argument("TravelingWave: dimension mismatch");
    double dot = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        dot += x[i] * nu_[i];
    return dot - c_ * t;
}

double TravelingWave::operator()(Point x, double t) const
{
    require_finite_point(x, "TravelingWave");
    const double h = h_.h();
    const double bracket = -c_ * front_offset(x, t);  // c^2 t - c x.nu
    if (!(bracket > 0.0))
        return 0.0;
    return h_.d_h() / std::abs(c_) * std::pow(bracket, h / (h - 1.0));
}

SingularDistance TravelingWave::singular_distance(Point x, double t) const
{
    return {std::abs(front_offset(x, t)), "front hyperplane x.nu = c t"};
}

double TravelingWave::time_lower_bound() const noexcept
{
    return -kInf;
}

double TravelingWave::time_upper_bound() const noexcept
{
    return kInf;
}

double traveling_eval(const TravelingWave& w, Point x, double t)
{
    return w(x, t);
}

// ---------------------------------------------------------------------------
// Variant helpers and residual

double evaluate(const ExactSolution& u, Point x, double t)
{
    return std::visit([&](const auto& f) { return f(x, t); }, u);
}

SingularDistance singular_distance(const ExactSolution& u, Point x, double t)
{
    return std::visit([&](const auto& f) { return f.singular_distance(x, t); }, u);
}

const Homogeneity& homogeneity_of(const ExactSolution& u)
{
    return std::visit([](const auto& f) -> const Homogeneity& { return f.homogeneity(); }, u);
}

std::string_view family_name(const ExactSolution& u)
{
    struct Names {
        std::string_view operator()(const Barenblatt&) const { return "barenblatt"; }
        std::string_view operator()(const FriendlyGiant&) const { return "giant"; }
        std::string_view operator()(const BlowUp&) const { return "blowup"; }
        std::string_view operator()(const TravelingWave&) const { return "wave"; }
    };
    return std::visit(Names{}, u);
}

double default_stencil_width(double length_scale)
{
    return length_scale * std::pow(std::numeric_limits<double>::epsilon(), 1.0 / 6.0);
}

namespace {

// Fourth-order central weights for the first derivative at offsets -2,-1,1,2.
constexpr int kOffsets[4] = {-2, -1, 1, 2};
constexpr double kFirst[4] = {1.0 / 12.0, -8.0 / 12.0, 8.0 / 12.0, -1.0 / 12.0};

template <class Family>
double residual_impl(const Family& u, Point x, double t, double k)
{
    if (!(k > 0.0) || !std::isfinite(k))
        throw std::invalid_argument("residual_at: stencil width must be positive");
    if (!(t - 2.0 * k > u.time_lower_bound()) || !(t + 2.0 * k < u.time_upper_bound()))
        throw std::domain_error("residual_at: time stencil leaves the solution's time domain");

    SingularDistance nearest{std::numeric_limits<double>::infinity(), ""};
    for (double tt : {t - 2.0 * k, t, t + 2.0 * k}) {
        const SingularDistance d = u.singular_distance(x, tt);
        if (d.distance < nearest.distance)
            nearest = d;
    }
    if (nearest.distance < 3.0 * k)
        throw std::domain_error("residual_at: point within 3 stencil widths of the singular set (" +
                                std::string(nearest.set) + ")");

    const std::size_t d = x.size();
    std::vector<double> y(x.begin(), x.end());
    auto at = [&](std::span<const double> p, double tt) { return u(p, tt); };

    double ut = 0.0;
    for (int a = 0; a < 4; ++a)
        ut += kFirst[a] * at(x, t + kOffsets[a] * k);
    ut /= k;

    const double u0 = at(x, t);
    Eigen::VectorXd grad(static_cast<Eigen::Index>(d));
    Eigen::MatrixXd hess(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i) {
        double vals[4];
        for (int a = 0; a < 4; ++a) {
            y[i] = x[i] + kOffsets[a] * k;
            vals[a] = at(y, t);
        }
        y[i] = x[i];
        double g = 0.0;
        for (int a = 0; a < 4; ++a)
            g += kFirst[a] * vals[a];
        grad(static_cast<Eigen::Index>(i)) = g / k;
        // -f(+2) + 16 f(+1) - 30 f(0) + 16 f(-1) - f(-2), over 12 k^2
        const double second = (-vals[3] + 16.0 * vals[2] - 30.0 * u0 + 16.0 * vals[1] - vals[0]) / (12.0 * k * k);
        hess(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = second;
    }
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i + 1; j < d; ++j) {
            double mixed = 0.0;
            for (int a = 0; a < 4; ++a) {
                for (int b = 0; b < 4; ++b) {
                    y[i] = x[i] + kOffsets[a] * k;
                    y[j] = x[j] + kOffsets[b] * k;
                    mixed += kFirst[a] * kFirst[b] * at(y, t);
                }
            }
            y[i] = x[i];
            y[j] = x[j];
            mixed /= k * k;
            hess(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = mixed;
            hess(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = mixed;
        }
    }
    const double op = kernel::degenerate_value(grad.dot(hess * grad), grad.norm(), u.homogeneity().h());
    return std::abs(ut - op);
}

}  // namespace

double residual_at(const ExactSolution& u, Point x, double t, double stencil_width)
{
    return std::visit([&](const auto& f) { return residual_impl(f, x, t, stencil_width); }, u);
}

}  // namespace infheat
