#include <doctest.h>

#include <cmath>
#include <memory>
#include <stdexcept>
#include <vector>

#include "infheat/asymptotics.hpp"
#include "infheat/exact.hpp"
#include "infheat/grid.hpp"
#include "infheat/radial.hpp"
#include "support.hpp"

using namespace infheat;
using doctest::Approx;

namespace {

TimeSeries power_series(double exponent, double t_lo, double t_hi, int n, double c = 1.0) {
    TimeSeries s("test");
    for (int k = 0; k < n; ++k) {
        const double t = t_lo * std::pow(t_hi / t_lo, static_cast<double>(k) / (n - 1));
        s.push(t, c * std::pow(t, exponent));
    }
    return s;
}

Field sampled_field(std::shared_ptr<const Grid> g, const std::function<double(Point)>& f, double t) {
    Field u{g, std::vector<double>(g->size(), 0.0), t};
    for (std::size_t k = 0; k < g->size(); ++k)
        if (g->kind(k) != NodeKind::exterior) u.values[k] = f(g->coordinates(k));
    return u;
}

// radial Dirichlet run on the unit ball from data at t0, snapshots at t = e^{(h-1)s}
std::vector<RadialProfile> ball_run(const Homogeneity& h, const std::function<double(double)>& u0, std::size_t cells,
                                    const std::vector<double>& s, double t0 = 0.0) {
    auto p = RadialProfile::sample(1.0, cells, u0, {OuterBoundary::dirichlet, 0.0}, t0);
    std::vector<RadialProfile> run;
    RadialEvolveOptions opt;
    for (double sk : s) opt.observe_times.push_back(dirichlet_time(sk, h));
    run.push_back(p);
    radial_evolve(p, h, opt.observe_times.back(), opt, [&](const RadialProfile& q) {
        if (q.t() > run.back().t()) run.push_back(q);
    });
    return run;
}

}  // namespace

TEST_CASE("TimeSeries rejects unordered or non-finite samples") {
    TimeSeries s("max", "run");
    s.push(1.0, 2.0);
    CHECK_THROWS_AS(s.push(1.0, 3.0), std::invalid_argument);
    CHECK_THROWS_AS(s.push(0.5, 3.0), std::invalid_argument);
    CHECK_THROWS_AS(s.push(2.0, NAN), std::invalid_argument);
    CHECK_THROWS_AS(s.push(INFINITY, 1.0), std::invalid_argument);
    CHECK(s.size() == 1);
    CHECK(s.quantity() == "max");
    CHECK(s.run_id() == "run");
}

TEST_CASE("fit_decay_exponent recovers exact power laws") {
    CHECK(fit_decay_exponent(power_series(-1.0 / 6.0, 1.0, 1000.0, 20), {1.0, 1000.0}).exponent ==
          Approx(-1.0 / 6.0).epsilon(1e-12));
    testing::Rng rng(31);
    for (int k = 0; k < 50; ++k) {
        const double e = rng.uniform(-3.0, 1.0), c = rng.uniform(0.1, 10.0);
        const auto fit = fit_decay_exponent(power_series(e, 0.5, 5000.0, 40, c), {1.0, 2000.0});
        CHECK(std::abs(fit.exponent - e) <= 1e-12);
        CHECK(std::exp(fit.intercept) == Approx(c).epsilon(1e-10));
        CHECK(fit.residual_norm <= 1e-10);
        CHECK(fit.samples >= kMinFitSamples);
    }
}

TEST_CASE("fit_decay_exponent rejects poor windows") {
    auto s = power_series(-0.5, 1.0, 100.0, 30);
    CHECK_THROWS_AS(fit_decay_exponent(s, {1.0, 5.0}), std::invalid_argument);
    CHECK_THROWS_AS(fit_decay_exponent(power_series(-0.5, 1.0, 100.0, 7), {1.0, 100.0}), std::invalid_argument);
    TimeSeries bad("x");
    for (int k = 0; k < 20; ++k) bad.push(std::pow(10.0, k / 10.0), k == 7 ? 0.0 : 1.0);
    CHECK_THROWS_AS(fit_decay_exponent(bad, {1.0, 100.0}), std::invalid_argument);
}

TEST_CASE("support_radius") {
    CHECK(support_radius(RadialProfile(1.0, 32)) == 0.0);
    auto g = std::make_shared<const Grid>(std::vector<double>{-1.0, -1.0}, std::vector<double>{1.0, 1.0},
                                          std::vector<std::size_t>{21, 21});
    CHECK(support_radius(sampled_field(g, [](Point) { return 0.0; }, 1.0)) == 0.0);

    Homogeneity h(3.0);
    Barenblatt b(h, 1.0);
    const double dr = 1e-3;
    auto p = RadialProfile::sample(1.5, 1500, [&](double r) { return b.radial(r, 1.0); }, {}, 1.0);
    CHECK(p.dr() == Approx(dr));
    CHECK(std::abs(support_radius(p) - 1.0) <= 2.0 * dr);

    auto q = sampled_field(g, [](Point x) { return std::max(0.0, 0.5 - std::hypot(x[0], x[1])); }, 1.0);
    CHECK(std::abs(support_radius(q) - 0.5) <= g->spacing(0) * std::sqrt(2.0));
}

TEST_CASE("rescale_cauchy: identity, invariance of the Barenblatt and the group law") {
    for (double hv : {1.5, 2.0, 3.0}) {
        Homogeneity h(hv);
        Barenblatt b(h, 0.8);
        SpaceTimeFn B = [&](Point x, double t) { return b(x, t); };
        SpaceTimeFn f = [](Point x, double t) { return std::sin(x[0]) + std::cos(2.0 * x[1]) * (1.0 + t * t); };
        testing::Rng rng(32);
        for (int k = 0; k < 100; ++k) {
            const std::vector<double> x{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
            const double t = rng.uniform(0.1, 5.0);
            const double lam = std::exp(rng.uniform(-3.0, 3.0)), mu = std::exp(rng.uniform(-3.0, 3.0));
            CHECK(rescale_cauchy(f, 1.0, h)(x, t) == f(x, t));
            CHECK(std::abs(rescale_cauchy(B, lam, h)(x, t) - B(x, t)) <= 1e-10);
            const double two = rescale_cauchy(rescale_cauchy(f, lam, h), mu, h)(x, t);
            const double one = rescale_cauchy(f, lam * mu, h)(x, t);
            CHECK(std::abs(two - one) <= 1e-12 * std::max(1.0, std::abs(one)));
        }
    }
}

TEST_CASE("rescale_cauchy on a radial snapshot") {
    Homogeneity h(3.0);
    Barenblatt b(h, 1.0);
    auto p = RadialProfile::sample(3.0, 300, [&](double r) { return b.radial(r, 4.0); }, {}, 4.0);
    const double lam = 2.0;
    auto q = rescale_cauchy(p, lam, h);
    CHECK(q.t() == Approx(2.0));
    CHECK(q.r_max() == Approx(3.0 / std::pow(lam, 1.0 / 6.0)));
    for (std::size_t i = 0; i < q.size(); ++i) CHECK(std::abs(q[i] - b.radial(q.center(i), 2.0)) <= 1e-10);
    auto same = rescale_cauchy(p, 1.0, h);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(same[i] == p[i]);
}

TEST_CASE("fit_barenblatt finds the Barenblatt it was given") {
    for (double hv : {2.0, 3.0}) {
        Homogeneity h(hv);
        Barenblatt b(h, 1.0);
        const double t = 100.0;
        auto p = RadialProfile::sample(1.5 * b.support_radius(t), 2000, [&](double r) { return b.radial(r, t); }, {},
                                       t);
        const auto fit = fit_barenblatt(p, h);
        CHECK(std::abs(fit.R_star - 1.0) <= 1e-3);
        CHECK(fit.sup_gap <= 1e-10);
        CHECK(fit.relative_gap == Approx(fit.sup_gap * std::pow(t, 1.0 / (2.0 * hv))));
        CHECK(fit.literal_gap == Approx(fit.sup_gap / std::pow(t, 1.0 / (2.0 * hv))));
    }
    Homogeneity h(3.0);
    CHECK_THROWS_AS(fit_barenblatt(RadialProfile(1.0, 32, {}, 1.0), h), std::invalid_argument);
    auto neg = RadialProfile::sample(1.0, 32, [](double r) { return 0.5 - r; }, {}, 1.0);
    CHECK_THROWS_AS(fit_barenblatt(neg, h), std::invalid_argument);
}

TEST_CASE("fit_barenblatt on a grid snapshot") {
    Homogeneity h(3.0);
    Barenblatt b(h, 0.7);
    auto g = std::make_shared<const Grid>(std::vector<double>{-1.5, -1.5}, std::vector<double>{1.5, 1.5},
                                          std::vector<std::size_t>{61, 61});
    auto u = sampled_field(g, [&](Point x) { return b(x, 2.0); }, 2.0);
    const auto fit = fit_barenblatt(u, h);
    CHECK(std::abs(fit.R_star - 0.7) <= 1e-3);
    CHECK(fit.sup_gap <= 1e-10);
}

TEST_CASE("aleksandrov_gap on radial nonincreasing data") {
    testing::Rng rng(33);
    for (int k = 0; k < 20; ++k) {
        // random nonincreasing profile
        std::vector<double> knots(11);
        double v = 1.0;
        for (auto& x : knots) {
            x = v;
            v = std::max(0.0, v - rng.uniform(0.0, 0.2));
        }
        auto f = [&](double r) {
            const double s = std::min(r / 3.0, 1.0) * 10.0;
            const auto i = std::min<std::size_t>(static_cast<std::size_t>(s), 9);
            return knots[i] + (knots[i + 1] - knots[i]) * (s - static_cast<double>(i));
        };
        auto p = RadialProfile::sample(3.0, 300, f, {}, 1.0);
        CHECK(aleksandrov_gap(p, 0.8, 0.5) <= 1e-12);
    }
    Homogeneity h(3.0);
    Barenblatt b(h, 1.0);
    auto g = std::make_shared<const Grid>(std::vector<double>{-3.0, -3.0}, std::vector<double>{3.0, 3.0},
                                          std::vector<std::size_t>{121, 121});
    auto u = sampled_field(g, [&](Point x) { return b(x, 1.5); }, 1.5);
    for (double r : {0.3, 0.6, 1.0}) CHECK(aleksandrov_gap(u, r, 0.25) <= 1e-10);
    CHECK_THROWS(aleksandrov_gap(u, 0.2, 0.25));
    CHECK_THROWS(aleksandrov_gap(u, 2.7, 0.25));
}

TEST_CASE("interpolate reproduces bilinear data and rejects outside points") {
    auto g = std::make_shared<const Grid>(std::vector<double>{0.0, 0.0}, std::vector<double>{1.0, 2.0},
                                          std::vector<std::size_t>{11, 21});
    auto u = sampled_field(g, [](Point x) { return 1.0 + 2.0 * x[0] - x[1] + 0.5 * x[0] * x[1]; }, 0.0);
    testing::Rng rng(34);
    for (int k = 0; k < 100; ++k) {
        const std::vector<double> x{rng.uniform(0.0, 1.0), rng.uniform(0.0, 2.0)};
        CHECK(interpolate(u, x) == Approx(1.0 + 2.0 * x[0] - x[1] + 0.5 * x[0] * x[1]).epsilon(1e-12));
    }
    CHECK_THROWS_AS(interpolate(u, std::vector<double>{1.5, 0.5}), std::out_of_range);
}

TEST_CASE("dirichlet_rescale") {
    Homogeneity h(2.0);
    auto u1 = RadialProfile::sample(1.0, 64, [](double r) { return 1.0 - r * r; }, {}, 1.0);
    std::vector<RadialProfile> run{u1};
    const std::vector<double> s0{0.0};
    auto v = dirichlet_rescale(std::span<const RadialProfile>(run), s0, h);
    REQUIRE(v.size() == 1);
    for (std::size_t i = 0; i < u1.size(); ++i) CHECK(v[0][i] == Approx(u1[i]));

    Homogeneity h3(3.0);
    v = dirichlet_rescale(std::span<const RadialProfile>(run), s0, h3);
    for (std::size_t i = 0; i < u1.size(); ++i) CHECK(v[0][i] == Approx(std::sqrt(2.0) * u1[i]));

    const std::vector<double> s1{1.0};
    CHECK_THROWS_AS(dirichlet_rescale(std::span<const RadialProfile>(run), s1, h), std::out_of_range);
    CHECK(dirichlet_time(1.5, h3) == Approx(std::exp(3.0)));
}

TEST_CASE("giant data: v is constant in s") {
    Homogeneity h(2.0);
    FriendlyGiant g(build_giant_profile(h), 1.0, 0.0);
    std::vector<double> s;
    for (int k = 0; k <= 6; ++k) s.push_back(0.5 * k);
    // the separable solution equals its spatial factor at t = 1
    auto run = ball_run(h, [&](double r) { return g.spatial(r); }, 400, s, 1.0);
    auto v = dirichlet_rescale(std::span<const RadialProfile>(run), s, h);
    double worst = 0.0;
    for (const auto& vk : v)
        for (std::size_t i = 0; i < vk.size(); ++i) worst = std::max(worst, std::abs(vk[i] - v[0][i]));
    MESSAGE("sup_s |v(s) - v(0)| = " << worst);
    CHECK(worst <= 1e-3);
}

TEST_CASE("generic data: v is nondecreasing in s") {
    Homogeneity h(2.0);
    std::vector<double> s;
    for (int k = 0; k <= 12; ++k) s.push_back(0.25 * k);
    auto run = ball_run(h, [](double r) { return (1.0 - r * r) * (1.0 + 0.5 * std::cos(6.0 * r)); }, 200, s);
    auto v = dirichlet_rescale(std::span<const RadialProfile>(run), s, h);
    double worst = 0.0;
    for (std::size_t k = 1; k < v.size(); ++k)
        for (std::size_t i = 0; i < v[k].size(); ++i) worst = std::max(worst, v[k - 1][i] - v[k][i]);
    CHECK(worst <= 1e-8);
}

TEST_CASE("extract_giant") {
    SUBCASE("zero data is a fixed point") {
        Homogeneity h(3.0);
        std::vector<RadialProfile> run;
        for (double s : {0.0, 1.0, 2.0}) run.emplace_back(1.0, 32, RadialBoundary{}, dirichlet_time(s, h));
        const auto e = extract_giant(std::span<const RadialProfile>(run), h);
        CHECK(e.converged);
        CHECK(e.stabilization == 0.0);
        CHECK(e.s == Approx(2.0));
        for (std::size_t i = 0; i < e.G.size(); ++i) {
            CHECK(e.G[i] == 0.0);
            CHECK(e.F[i] == 0.0);
        }
    }
    SUBCASE("two positive data reach the same limit, which solves the eigenvalue problem") {
        Homogeneity h(2.0);
        std::vector<double> s;
        for (int k = 0; k <= 14; ++k) s.push_back(k);
        std::vector<GiantExtraction<RadialProfile>> limits;
        for (auto u1 : {std::function<double(double)>([](double r) { return 1.0 - r * r; }),
                        std::function<double(double)>([](double r) { return 3.0 * std::cos(0.5 * M_PI * r); })}) {
            auto run = ball_run(h, u1, 200, s);
            limits.push_back(extract_giant(std::span<const RadialProfile>(run), h));
        }
        double gap = 0.0;
        for (std::size_t i = 0; i < limits[0].G.size(); ++i)
            gap = std::max(gap, std::abs(limits[0].G[i] - limits[1].G[i]));
        MESSAGE("limit gap " << gap << ", stabilization " << limits[0].stabilization << " "
                             << limits[1].stabilization);
        CHECK(gap <= 1e-2);
        const auto& G = limits[0].G;
        CHECK(G.outer().kind == OuterBoundary::dirichlet);
        CHECK(G.outer().value == 0.0);
        for (std::size_t i = 0; i < G.size(); ++i)
            if (G.center(i) <= 0.9) CHECK(G[i] > 0.0);
        for (std::size_t i = 0; i < G.size(); ++i) CHECK(limits[0].F[i] == Approx(G[i]));  // (h-1)^{-1} = 1
        CHECK(eigen_residual(G, h).sup <= 1e-2);
    }
}

TEST_CASE("eigen_residual") {
    Homogeneity h(3.0);
    SUBCASE("zero profile") {
        const auto r = eigen_residual(RadialProfile(1.0, 64), h);
        for (double v : r.residual) CHECK(v == 0.0);
        CHECK(r.sup == 0.0);
    }
    SUBCASE("the exact giant profile") {
        FriendlyGiant g(build_giant_profile(h), 1.0, 0.0);
        const double c = std::sqrt(2.0);  // (h-1)^{1/(h-1)}
        auto G = RadialProfile::sample(1.0, 513, [&](double r) { return c * g.spatial(r); });
        const auto r = eigen_residual(G, h);
        MESSAGE("admitted " << r.admitted_count << " of " << r.residual.size() << ", sup " << r.sup);
        CHECK(r.admitted_count > r.residual.size() / 2);
        CHECK(r.sup <= 1e-3);
        // a wrong eigenvalue shows up
        auto G2 = RadialProfile::sample(1.0, 513, [&](double r) { return 2.0 * c * g.spatial(r); });
        CHECK(eigen_residual(G2, h).sup > 1e-2);
    }
}

TEST_CASE("mirror_to_field") {
    auto p = RadialProfile::sample(1.0, 20, [](double r) { return 1.0 - r; });
    const Field f = mirror_to_field(p);
    REQUIRE(f.values.size() == 40);
    for (std::size_t i = 0; i < 20; ++i) {
        CHECK(f.values[20 + i] == p[i]);
        CHECK(f.values[19 - i] == p[i]);
    }
    CHECK(f.grid->kind(0) == NodeKind::boundary);
    CHECK(f.grid->kind(39) == NodeKind::boundary);
}

TEST_CASE("benilan_crandall_check on exact solutions") {
    for (double hv : {1.5, 2.0, 3.0}) {
        Homogeneity h(hv);
        Barenblatt b(h, 1.0);
        std::vector<RadialProfile> run;
        for (double t : {1.0, 1.5, 2.0, 4.0, 8.0})
            run.push_back(RadialProfile::sample(3.0, 300, [&](double r) { return b.radial(r, t); }, {}, t));
        const auto rep = benilan_crandall_check(std::span<const RadialProfile>(run), h);
        CHECK(rep.pairs == 10);
        CHECK(rep.worst_violation <= 1e-12);

        // the separable solution with t0 = 0 is the equality case
        FriendlyGiant g(build_giant_profile(h), 1.0, 0.0);
        run.clear();
        for (double t : {1.0, 2.0, 3.0, 10.0})
            run.push_back(RadialProfile::sample(1.0, 100, [&](double r) { return g(std::vector<double>{r}, t); },
                                                {}, t));
        const auto eq = benilan_crandall_check(std::span<const RadialProfile>(run), h);
        CHECK(std::abs(eq.worst_violation) <= 1e-12);
        CHECK(std::abs(eq.worst_monotonicity) <= 1e-12);
    }
    std::vector<RadialProfile> one{RadialProfile(1.0, 32, {}, 1.0)};
    CHECK_THROWS_AS(benilan_crandall_check(std::span<const RadialProfile>(one), Homogeneity(2.0)),
                    std::invalid_argument);
}

TEST_CASE("benilan_crandall_check on a numerical Dirichlet run") {
    Homogeneity h(2.0);
    std::vector<double> s;
    for (int k = 0; k <= 8; ++k) s.push_back(0.25 * k);
    auto run = ball_run(h, [](double r) { return std::max(0.0, 0.6 - r) * (1.0 + r); }, 200, s);
    const auto rep = benilan_crandall_check(std::span<const RadialProfile>(run), h);
    CHECK(rep.worst_violation <= 1e-6);
    CHECK(rep.worst_monotonicity <= 1e-8);
}
