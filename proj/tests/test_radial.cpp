#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "infheat/asymptotics.hpp"
#include "infheat/error.hpp"
#include "infheat/exact.hpp"
#include "infheat/radial.hpp"
#include "support.hpp"

using namespace infheat;
using doctest::Approx;

namespace {

double sup_error(const RadialProfile& p, const std::function<double(double)>& ref) {
    double e = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) e = std::max(e, std::abs(p[i] - ref(p.center(i))));
    return e;
}

// random nonincreasing profile, zero near r_max
RadialProfile random_decreasing(testing::Rng& rng, std::size_t n) {
    RadialProfile p(1.0, n);
    double v = rng.uniform(0.5, 2.0);
    const std::size_t cut = n - 1 - rng.next() % (n / 2);
    for (std::size_t i = 0; i < n; ++i) {
        p.values()[i] = i >= cut ? 0.0 : v;
        v = std::max(0.0, v - rng.uniform(0.0, 0.2));
    }
    return p;
}

}  // namespace

TEST_CASE("constant profile is a fixed point") {
    Homogeneity h(3.0);
    for (auto outer : {RadialBoundary{OuterBoundary::zero_flux, 0.0}, RadialBoundary{OuterBoundary::dirichlet, 0.7}}) {
        auto p = RadialProfile::sample(2.0, 64, [](double) { return 0.7; }, outer);
        for (double dt : {1e-3, 1.0, 1e6}) {
            auto q = radial_step(p, h, dt);
            for (std::size_t i = 0; i < q.size(); ++i) CHECK(q[i] == 0.7);
            CHECK(q.t() == Approx(dt));
        }
    }
}

TEST_CASE("cfl_dt examples") {
    Homogeneity h3(3.0);
    RadialSettings s;
    RadialProfile zero(1.0, 32, {OuterBoundary::zero_flux, 0.0});
    CHECK(cfl_dt(zero, h3, s) == Approx(s.theta * zero.dr() * zero.dr() / s.floor));
    CHECK(std::isfinite(cfl_dt(zero, h3, s)));

    testing::Rng rng(21);
    for (int k = 0; k < 50; ++k) {
        // slopes at most 1 so every face has |q| <= 1
        auto p = RadialProfile::sample(1.0, 64, [&](double r) { return rng.uniform(0.5, 1.0) * (1.0 - r); },
                                       {OuterBoundary::zero_flux, 0.0});
        double worst = 0.0;
        for (std::size_t i = 0; i + 1 < p.size(); ++i) worst = std::max(worst, std::abs(p[i + 1] - p[i]) / p.dr());
        if (worst > 1.0) continue;
        CHECK(cfl_dt(p, h3) >= 0.4 * p.dr() * p.dr());
    }
}

TEST_CASE("radial_step rejects an unstable dt and non-finite values") {
    Homogeneity h(2.0);
    auto p = RadialProfile::sample(1.0, 32, [](double r) { return 1.0 - r * r; });
    CHECK_THROWS_AS(radial_step(p, h, 2.0 * cfl_dt(p, h)), std::invalid_argument);
    CHECK_THROWS_AS(radial_step(p, h, -1.0), std::invalid_argument);
    p.values()[5] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(radial_step(p, h, 1e-6), NumericalAbort);
}

TEST_CASE("radial_evolve to the current time is the identity") {
    Homogeneity h(3.0);
    auto p = RadialProfile::sample(1.0, 40, [](double r) { return std::cos(r); }, {}, 0.5);
    auto q = radial_evolve(p, h, 0.5);
    CHECK(std::equal(p.values().begin(), p.values().end(), q.values().begin()));
    CHECK_THROWS_AS(radial_evolve(p, h, 0.4), std::invalid_argument);
}

TEST_CASE("barenblatt slice evolves onto the exact solution") {
    Homogeneity h(3.0);
    Barenblatt b(h, 1.0);
    auto p = RadialProfile::sample(2.0, 800, [&](double r) { return b.radial(r, 1.0); }, {}, 1.0);
    auto q = radial_evolve(p, h, 2.0);
    CHECK(q.t() == Approx(2.0));
    CHECK(sup_error(q, [&](double r) { return b.radial(r, 2.0); }) <= 5e-3);
}

TEST_CASE("one step keeps random decreasing profiles decreasing") {
    testing::Rng rng(22);
    for (double hv : {1.5, 2.0, 3.0, 4.0}) {
        Homogeneity h(hv);
        for (int k = 0; k < 200; ++k) {
            auto p = random_decreasing(rng, 32);
            const double dt = cfl_dt(p, h) * rng.uniform(0.1, 1.0);
            auto q = radial_step(p, h, dt);
            for (std::size_t i = 0; i + 1 < q.size(); ++i) CHECK(q[i + 1] <= q[i]);
        }
    }
}

TEST_CASE("zero-flux runs conserve mass") {
    for (double hv : {2.0, 3.0}) {
        Homogeneity h(hv);
        auto p = RadialProfile::sample(
            3.0, 300, [](double r) { return std::max(0.0, 1.0 - r * r) * (1.0 + 0.3 * std::sin(5 * r)); },
            {OuterBoundary::zero_flux, 0.0});
        const double m0 = p.mass();
        auto q = radial_evolve(p, h, 0.5);
        CHECK(q.mass() == Approx(m0).epsilon(1e-12));
    }
}

TEST_CASE("comparison: ordered data stay ordered") {
    testing::Rng rng(24);
    for (double hv : {1.5, 2.0, 3.0}) {
        Homogeneity h(hv);
        for (int k = 0; k < 20; ++k) {
            const double a = rng.uniform(0.5, 1.5), bump = rng.uniform(0.0, 0.5), c = rng.uniform(0.1, 0.9);
            auto u = RadialProfile::sample(1.0, 64, [&](double r) { return a * std::max(0.0, 1.0 - r * r); });
            auto v = RadialProfile::sample(1.0, 64, [&](double r) {
                return a * std::max(0.0, 1.0 - r * r) + bump * std::max(0.0, 0.04 - (r - c) * (r - c));
            });
            for (int s = 0; s < 50; ++s) {
                const double dt = std::min(cfl_dt(u, h), cfl_dt(v, h));
                u = radial_step(u, h, dt);
                v = radial_step(v, h, dt);
            }
            for (std::size_t i = 0; i < u.size(); ++i) CHECK(u[i] <= v[i] + 1e-14);
        }
    }
}

TEST_CASE("support of a compact bump is tracked within two cells") {
    Homogeneity h(3.0);
    Barenblatt b(h, 1.0);
    auto p = RadialProfile::sample(3.0, 600, [&](double r) { return b.radial(r, 1.0); }, {}, 1.0);
    for (double t : {1.5, 2.0, 4.0}) {
        p = radial_evolve(p, h, t);
        CHECK(std::abs(p.support_radius(1e-10) - b.support_radius(t)) <= 2.0 * p.dr());
    }
}

TEST_CASE("giant data on its nodal ball decay at the rate -1/(h-1)") {
    for (double hv : {2.0, 3.0}) {
        Homogeneity h(hv);
        auto prof = build_giant_profile(h);
        FriendlyGiant g(prof, 1.0, 0.0);
        auto p = RadialProfile::sample(1.0, 200, [&](double r) { return g.spatial(r); }, {}, 1.0);
        RadialEvolveOptions opt;
        for (int k = 0; k <= 8; ++k) opt.observe_times.push_back(std::pow(10.0, k / 8.0));
        TimeSeries series("max");
        radial_evolve(p, h, 10.0, opt, [&](const RadialProfile& q) { series.push(q.t(), q.max_value()); });
        const auto fit = fit_decay_exponent(series, {1.0, 10.0});
        CHECK(std::abs(fit.exponent + 1.0 / (hv - 1.0)) <= 0.05);
    }
}

TEST_CASE("profile helpers") {
    auto p = RadialProfile::sample(1.0, 20, [](double r) { return r < 0.5 ? 1.0 - r : 0.0; });
    CHECK(p.dr() == Approx(0.05));
    CHECK(p.center(0) == Approx(0.025));
    CHECK(p.max_value() == Approx(0.975));
    CHECK(p.min_value() == 0.0);
    CHECK(p.support_radius() == Approx(0.5));
    CHECK(p.interpolate(0.0) == Approx(0.975));
    CHECK(p.interpolate(0.1) == Approx(0.9));
    CHECK(p.interpolate(1.0) == 0.0);
    CHECK_THROWS_AS(RadialProfile(1.0, 8), std::invalid_argument);
    CHECK_THROWS_AS(RadialProfile(-1.0, 32), std::invalid_argument);
}

TEST_CASE("a collapsed stable step aborts instead of stalling") {
    Homogeneity h(3.0);
    auto p = RadialProfile::sample(1.0, 32, [](double r) { return 1e300 * (1.0 - r * r); });
    CHECK_THROWS_AS(radial_evolve(p, h, 1.0), NumericalAbort);
}
