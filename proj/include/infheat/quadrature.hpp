#pragma once

#include <functional>

namespace infheat {

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;
    int panels = 0;
    bool converged = false;
};

/// Which ends of the interval carry an integrable algebraic singularity.
/// Subdivision is graded toward a flagged end instead of bisecting.
struct EndpointGrading {
    bool left = false;
    bool right = false;
};

/// Adaptive 7/15-point Gauss-Kronrod quadrature. Panels are refined until the
/// accumulated |G7 - K15| estimate is below max(abs_tol, rel_tol |I|) or the
/// panel budget is exhausted (converged = false; the best value is returned).
QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                    double abs_tol = 1e-13, double rel_tol = 1e-14,
                                    EndpointGrading grading = {}, int max_panels = 4000);

/// A single K15 panel on [a, b] together with its |K15 - G7| difference.
QuadratureResult gauss_kronrod_15(const std::function<double(double)>& f, double a, double b);

}  // namespace infheat
