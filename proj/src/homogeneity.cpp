#include "infheat/homogeneity.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace infheat {

Mutation parse_mutation(std::string_view name)
{
    if (name == "none") return Mutation::none;
    if (name == "c_h") return Mutation::c_h_exponent;
    if (name == "d_h") return Mutation::d_h_exponent;
    if (name == "flux") return Mutation::even_flux;
    throw std::invalid_argument("unknown mutation '" + std::string(name) + "' (expected none|c_h|d_h|flux)");
}

std::string_view to_string(Mutation m)
{
    switch (m) {
    case Mutation::none: return "none";
    case Mutation::c_h_exponent: return "c_h";
    case Mutation::d_h_exponent: return "d_h";
    case Mutation::even_flux: return "flux";
    }
    return "none";
}

Homogeneity::Homogeneity(double h, Mutation mutation) : h_(h), mutation_(mutation)
{
    if (!std::isfinite(h) || !(h > 1.0))
        throw std::invalid_argument("homogeneity h must be a finite number > 1, got " + std::to_string(h));

    const double c_sign = mutation == Mutation::c_h_exponent ? -1.0 : 1.0;
    const double d_sign = mutation == Mutation::d_h_exponent ? -1.0 : 1.0;

    c_h_ = std::pow(0.5, c_sign / (h - 1.0)) * std::pow((h - 1.0) / (h + 1.0), h / (h - 1.0));
    d_h_ = std::pow(h - 1.0, d_sign * h / (h - 1.0)) / h;
    alpha_ = (h - 1.0) / (h + 1.0);
    kappa_ = std::pow(2.0 * alpha_, 1.0 / (h + 1.0));
}

}  // namespace infheat
