#pragma once

#include <Eigen/Dense>

#include <span>

#include "infheat/homogeneity.hpp"

namespace infheat {

/// Real symmetric d x d matrix (the Hessian argument of the operator).
class SymmetricMatrix {
public:
    /// Throws if `m` is not square, not exactly symmetric, or has non-finite entries.
    explicit SymmetricMatrix(Eigen::MatrixXd m);

    static SymmetricMatrix identity(int d);
    static SymmetricMatrix diagonal(std::span<const double> entries);
    /// Symmetric part (m + m^T)/2 of an arbitrary square matrix.
    static SymmetricMatrix symmetrized(const Eigen::MatrixXd& m);

    int dim() const noexcept { return static_cast<int>(m_.rows()); }
    const Eigen::MatrixXd& matrix() const noexcept { return m_; }
    double operator()(int i, int j) const { return m_(i, j); }

private:
    Eigen::MatrixXd m_;
};

/// Gradient argument p of the operator.
class GradientVector {
public:
    /// Throws on non-finite entries.
    explicit GradientVector(Eigen::VectorXd p);
    GradientVector(std::initializer_list<double> p);

    int dim() const noexcept { return static_cast<int>(p_.size()); }
    const Eigen::VectorXd& vector() const noexcept { return p_; }
    double norm() const { return p_.norm(); }

private:
    Eigen::VectorXd p_;
};

/// Below this gradient norm |p|^{h-3}<Mp,p> is replaced by 0, which is within
/// the bound |M| |p|^{h-1} of the exact value.
inline constexpr double kSingularGradientNorm = 1e-300;

namespace kernel {

/// |p|^{h-3} <Mp,p> written in terms of |p| and the quadratic form <Mp,p>.
/// Returns 0 at (and numerically indistinguishable from) p = 0.
double degenerate_value(double quadratic_form, double p_norm, double h);

/// (|p|^2 + delta^2)^{(h-3)/2}; delta = 0 is only meaningful for h >= 3.
double regularized_coefficient(double p_norm_sq, double delta, double h);

/// Odd antiderivative of (s^2 + delta^2)^{(h-3)/2} s^2, so that
/// [F(b) - F(a)] / (b - a) is the regularized coefficient averaged over [a, b].
double regularized_flux(double s, double delta, double h);

/// Radial flux (1/h)|q|^{h-1} q; the even_flux mutation drops the sign of q.
double odd_flux(double q, const Homogeneity& h);

/// Throws unless eps >= 0, delta >= 0, and delta > 0 whenever h < 3.
void check_regularization(double eps, double delta, double h);

}  // namespace kernel

/// Value of the h-homogeneous infinity-Laplacian |p|^{h-3} <Mp,p>, extended by
/// 0 at p = 0. Throws std::invalid_argument on NaN input or dimension mismatch.
double eval_operator(const SymmetricMatrix& m, const GradientVector& p, const Homogeneity& h);

/// A(p) = eps I + (|p|^2 + delta^2)^{(h-3)/2} p (x) p.
SymmetricMatrix regularized_matrix(const GradientVector& p, double eps, double delta, const Homogeneity& h);

/// Frobenius contraction A(p) : M of the regularized matrix with M.
double eval_regularized(const SymmetricMatrix& m, const GradientVector& p, double eps, double delta,
                        const Homogeneity& h);

enum class SourceKind { zero, linear, bounded_slope };

/// Zero-order term H(u) with H(0) = 0 and |H(u)| <= bound |u|.
class SourceTerm {
public:
    SourceTerm() = default;

    static SourceTerm zero() { return {}; }
    /// H(u) = a u. Throws if |a| > bound.
    static SourceTerm linear(double a, double bound);
    /// H(u) = a sin(u). Throws if |a| > bound.
    static SourceTerm bounded_slope(double a, double bound);

    double operator()(double u) const;

    SourceKind kind() const noexcept { return kind_; }
    double coefficient() const noexcept { return a_; }
    /// The linear-growth constant M.
    double bound() const noexcept { return bound_; }
    bool is_zero() const noexcept { return kind_ == SourceKind::zero || a_ == 0.0; }

private:
    SourceTerm(SourceKind kind, double a, double bound);

    SourceKind kind_ = SourceKind::zero;
    double a_ = 0.0;
    double bound_ = 0.0;
};

/// H(u) for the given source.
double source_term(double u, const SourceTerm& source);

}  // namespace infheat
