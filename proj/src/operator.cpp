#include "infheat/operator.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <stdexcept>
#include <string>

namespace infheat {

namespace {

bool all_finite(const Eigen::MatrixXd& m)
{
    return m.allFinite();
}

}  // namespace

SymmetricMatrix::SymmetricMatrix(Eigen::MatrixXd m) : m_(std::move(m))
{
    if (m_.rows() != m_.cols() || m_.rows() == 0)
        throw std::invalid_argument("SymmetricMatrix: matrix must be square and non-empty");
    if (!all_finite(m_))
        throw std::invalid_argument("SymmetricMatrix: non-finite entry");
    for (Eigen::Index i = 0; i < m_.rows(); ++i)
        for (Eigen::Index j = i + 1; j < m_.cols(); ++j)
            if (m_(i, j) != m_(j, i))
                throw std::invalid_argument("SymmetricMatrix: entries (" + std::to_string(i) + "," +
                                            std::to_string(j) + ") and transpose differ");
}

SymmetricMatrix SymmetricMatrix::identity(int d)
{
    return SymmetricMatrix(Eigen::MatrixXd::Identity(d, d));
}

SymmetricMatrix SymmetricMatrix::diagonal(std::span<const double> entries)
{
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(entries.size()),
                                              static_cast<Eigen::Index>(entries.size()));
    for (std::size_t i = 0; i < entries.size(); ++i)
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = entries[i];
    return SymmetricMatrix(std::move(m));
}

SymmetricMatrix SymmetricMatrix::symmetrized(const Eigen::MatrixXd& m)
{
    Eigen::MatrixXd s = 0.5 * (m + m.transpose());
    return SymmetricMatrix(std::move(s));
}

GradientVector::GradientVector(Eigen::VectorXd p) : p_(std::move(p))
{
    if (!p_.allFinite())
        throw std::invalid_argument("GradientVector: non-finite entry");
}

GradientVector::GradientVector(std::initializer_list<double> p)
    : GradientVector(Eigen::Map<const Eigen::VectorXd>(p.begin(), static_cast<Eigen::Index>(p.size())))
{
}

namespace kernel {

double degenerate_value(double quadratic_form, double p_norm, double h)
{
    if (!(p_norm > kSingularGradientNorm))
        return 0.0;
    if (h == 3.0)
        return quadratic_form;
    return std::pow(p_norm, h - 3.0) * quadratic_form;
}

double regularized_coefficient(double p_norm_sq, double delta, double h)
{
    if (h == 3.0)
        return 1.0;
    return std::pow(p_norm_sq + delta * delta, 0.5 * (h - 3.0));
}

double regularized_flux(double s, double delta, double h)
{
    const double a = std::abs(s);
    double v = 0.0;
    if (delta == 0.0) {
        v = std::pow(a, h) / h;
    } else if (h == 3.0) {
        v = a * a * a / 3.0;
    } else if ((h == 2.0 || h == 4.0) && a < 1e-2 * delta) {
        // series; the closed forms cancel badly here
        const double x = (a / delta) * (a / delta);
        const double lead = a * a * a / 3.0 * std::pow(delta, h - 3.0);
        v = h == 2.0 ? lead * (1.0 - 0.3 * x + 9.0 / 56.0 * x * x - 5.0 / 48.0 * x * x * x)
                     : lead * (1.0 + 0.3 * x - 3.0 / 56.0 * x * x + 1.0 / 48.0 * x * x * x);
    } else if (h == 2.0) {
        v = 0.5 * (a * std::hypot(a, delta) - delta * delta * std::asinh(a / delta));
    } else if (h == 4.0) {
        const double r = std::hypot(a, delta);
        v = (a * (2.0 * a * a + delta * delta) * r - std::pow(delta, 4) * std::asinh(a / delta)) / 8.0;
    } else {
        // fixed nodes, positive weights: increasing in a, like the exact integral
        using Rule = boost::math::quadrature::gauss<double, 20>;
        const double m = 0.5 * (h - 3.0);
        auto psi = [&](double t) { return std::pow(t * t + delta * delta, m) * t * t; };
        const double split = std::min(a, 4.0 * delta);
        v = Rule::integrate(psi, 0.0, split);
        if (a > split)
            v += Rule::integrate(psi, split, a);
    }
    return s < 0.0 ? -v : v;
}

double odd_flux(double q, const Homogeneity& h)
{
    const double a = std::abs(q);
    const double m = std::pow(a, h.h() - 1.0) / h.h();
    return h.mutation() == Mutation::even_flux ? m * a : m * q;
}

void check_regularization(double eps, double delta, double h)
{
    if (!std::isfinite(eps) || eps < 0.0)
        throw std::invalid_argument("regularization: eps must be finite and >= 0");
    if (!std::isfinite(delta) || delta < 0.0)
        throw std::invalid_argument("regularization: delta must be finite and >= 0");
    if (delta == 0.0 && h < 3.0)
        throw std::invalid_argument("regularization: delta = 0 requires h >= 3 (coefficient unbounded near p = 0)");
}

}  // namespace kernel

double eval_operator(const SymmetricMatrix& m, const GradientVector& p, const Homogeneity& h)
{
    if (m.dim() != p.dim())
        throw std::invalid_argument("eval_operator: dimension mismatch");
    const Eigen::VectorXd& v = p.vector();
    const double quad = v.dot(m.matrix() * v);
    return kernel::degenerate_value(quad, v.norm(), h.h());
}

SymmetricMatrix regularized_matrix(const GradientVector& p, double eps, double delta, const Homogeneity& h)
{
    kernel::check_regularization(eps, delta, h.h());
    const Eigen::VectorXd& v = p.vector();
    const double coef = kernel::regularized_coefficient(v.squaredNorm(), delta, h.h());
    Eigen::MatrixXd a = coef * (v * v.transpose());
    a.diagonal().array() += eps;
    return SymmetricMatrix::symmetrized(a);
}

double eval_regularized(const SymmetricMatrix& m, const GradientVector& p, double eps, double delta,
                        const Homogeneity& h)
{
    if (m.dim() != p.dim())
        throw std::invalid_argument("eval_regularized: dimension mismatch");
    kernel::check_regularization(eps, delta, h.h());
    const Eigen::VectorXd& v = p.vector();
    const double coef = kernel::regularized_coefficient(v.squaredNorm(), delta, h.h());
    return eps * m.matrix().trace() + coef * v.dot(m.matrix() * v);
}

SourceTerm::SourceTerm(SourceKind kind, double a, double bound) : kind_(kind), a_(a), bound_(bound)
{
    if (!std::isfinite(a) || !std::isfinite(bound) || bound < 0.0)
        throw std::invalid_argument("source term: coefficient and bound must be finite, bound >= 0");
    if (std::abs(a) > bound)
        throw std::invalid_argument("source term: |a| = " + std::to_string(std::abs(a)) +
                                    " exceeds the linear-growth bound M = " + std::to_string(bound));
}

SourceTerm SourceTerm::linear(double a, double bound)
{
    return {SourceKind::linear, a, bound};
}

SourceTerm SourceTerm::bounded_slope(double a, double bound)
{
    return {SourceKind::bounded_slope, a, bound};
}

double SourceTerm::operator()(double u) const
{
    switch (kind_) {
    case SourceKind::zero: return 0.0;
    case SourceKind::linear: return a_ * u;
    case SourceKind::bounded_slope: return a_ * std::sin(u);
    }
    return 0.0;
}

double source_term(double u, const SourceTerm& source)
{
    return source(u);
}

}  // namespace infheat
