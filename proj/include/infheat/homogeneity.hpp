#pragma once

#include <string_view>

namespace infheat {

/// Deliberate corruptions of closed-form ingredients. Only the verification
/// suite uses these, to show that the checks reject a wrong constant.
enum class Mutation {
    none,
    c_h_exponent,  ///< (1/2)^{+1/(h-1)} replaced by (1/2)^{-1/(h-1)} in c_h
    d_h_exponent,  ///< (h-1)^{+h/(h-1)} replaced by (h-1)^{-h/(h-1)} in d_h
    even_flux,     ///< radial flux |q|^{h-1} q replaced by |q|^h
};

Mutation parse_mutation(std::string_view name);
std::string_view to_string(Mutation m);

/// The homogeneity degree h > 1 of the operator and the constants derived
/// from it. Immutable once constructed.
class Homogeneity {
public:
    explicit Homogeneity(double h, Mutation mutation = Mutation::none);

    double h() const noexcept { return h_; }

    /// Barenblatt / blow-up amplitude (1/2)^{1/(h-1)} ((h-1)/(h+1))^{h/(h-1)}.
    double c_h() const noexcept { return c_h_; }
    /// Traveling-wave amplitude (h-1)^{h/(h-1)} / h.
    double d_h() const noexcept { return d_h_; }
    /// (h-1)/(h+1), the exponent of sin in the giant change of variables.
    double alpha() const noexcept { return alpha_; }
    /// kappa with kappa^{h+1} = 2 alpha.
    double kappa() const noexcept { return kappa_; }

    Mutation mutation() const noexcept { return mutation_; }

private:
    double h_;
    double c_h_;
    double d_h_;
    double alpha_;
    double kappa_;
    Mutation mutation_;
};

}  // namespace infheat
