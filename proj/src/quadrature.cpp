#include "infheat/quadrature.hpp"

#include <cmath>
#include <queue>
#include <stdexcept>
#include <vector>

namespace infheat {

namespace {

// Abscissae and weights of the 15-point Kronrod extension of the 7-point Gauss rule.
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000,
};
constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
};
constexpr double kWg[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
};

struct Panel {
    double a, b, value, error;
    bool operator<(const Panel& o) const { return error < o.error; }
};

Panel eval_panel(const std::function<double(double)>& f, double a, double b)
{
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(center);
    double kronrod = fc * kWgk[7];
    double gauss = fc * kWg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = half * kXgk[j];
        const double sum = f(center - dx) + f(center + dx);
        kronrod += kWgk[j] * sum;
        if (j % 2 == 1)
            gauss += kWg[j / 2] * sum;
    }
    return {a, b, kronrod * half, std::abs((kronrod - gauss) * half)};
}

}  // namespace

QuadratureResult gauss_kronrod_15(const std::function<double(double)>& f, double a, double b)
{
    const Panel p = eval_panel(f, a, b);
    return {p.value, p.error, 1, true};
}

QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                    double abs_tol, double rel_tol, EndpointGrading grading, int max_panels)
{
    if (!(b >= a))
        throw std::invalid_argument("integrate_adaptive: require a <= b");
    if (a == b)
        return {0.0, 0.0, 0, true};

    // Panels adjacent to a singular end are split at 1/8 of their width so the
    // refinement is geometric toward the singularity.
    constexpr double kGradedSplit = 0.125;

    std::priority_queue<Panel> heap;
    Panel first = eval_panel(f, a, b);
    double total = first.value;
    double total_error = first.error;
    heap.push(first);
    int panels = 1;

    while (total_error > std::max(abs_tol, rel_tol * std::abs(total)) && panels < max_panels) {
        const Panel worst = heap.top();
        heap.pop();
        double split = 0.5 * (worst.a + worst.b);
        if (grading.left && worst.a == a)
            split = worst.a + kGradedSplit * (worst.b - worst.a);
        else if (grading.right && worst.b == b)
            split = worst.b - kGradedSplit * (worst.b - worst.a);
        if (!(split > worst.a && split < worst.b)) {
            // Interval no longer divisible in floating point; keep its contribution.
            heap.push({worst.a, worst.b, worst.value, 0.0});
            total_error -= worst.error;
            continue;
        }
        const Panel lhs = eval_panel(f, worst.a, split);
        const Panel rhs = eval_panel(f, split, worst.b);
        total += lhs.value + rhs.value - worst.value;
        total_error += lhs.error + rhs.error - worst.error;
        heap.push(lhs);
        heap.push(rhs);
        ++panels;
    }

    // Recompute the sum from the panels to shed the running-update rounding.
    double value = 0.0;
    double error = 0.0;
    std::vector<Panel> all;
    all.reserve(heap.size());
    while (!heap.empty()) {
        all.push_back(heap.top());
        heap.pop();
    }
    for (auto it = all.rbegin(); it != all.rend(); ++it) {
        value += it->value;
        error += it->error;
    }
    const bool converged = error <= std::max(abs_tol, rel_tol * std::abs(value));
    return {value, error, panels, converged};
}

}  // namespace infheat
