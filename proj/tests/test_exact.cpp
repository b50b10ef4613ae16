#include <doctest.h>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "infheat/exact.hpp"
#include "infheat/quadrature.hpp"
#include "support.hpp"

using namespace infheat;
using doctest::Approx;

namespace {

std::vector<double> pt(std::initializer_list<double> v) { return std::vector<double>(v); }

// kappa * int_0^s sin^alpha, by boost's tanh-sinh rule
double r_oracle(const Homogeneity& h, double s) {
    if (s == 0.0) return 0.0;
    boost::math::quadrature::tanh_sinh<double> ts;
    const double a = h.alpha();
    return h.kappa() * ts.integrate([a](double x) { return std::pow(std::sin(x), a); }, 0.0, s);
}

double rbar_closed(const Homogeneity& h) {
    const double a = h.alpha();
    return h.kappa() * std::sqrt(M_PI) * boost::math::tgamma((a + 1.0) / 2.0) / boost::math::tgamma(a / 2.0 + 1.0);
}

}  // namespace

TEST_CASE("barenblatt examples") {
    Barenblatt b3(Homogeneity(3.0), 1.0);
    CHECK(barenblatt_eval(b3, pt({0.0}), 1.0) == Approx(0.25).epsilon(1e-15));
    CHECK(barenblatt_eval(b3, pt({2.0, 0.0}), 1.0) == 0.0);
    CHECK(barenblatt_eval(b3, pt({0.0, 0.0, 2.0}), 1.0) == 0.0);
    Barenblatt b2(Homogeneity(2.0), 1.0);
    CHECK(barenblatt_eval(b2, pt({0.0}), 1.0) == Approx(1.0 / 18.0).epsilon(1e-15));

    CHECK(barenblatt_support_radius(b3, 1.0) == Approx(1.0));
    CHECK(barenblatt_support_radius(b3, 16.0) == Approx(1.587401).epsilon(1e-6));
    CHECK(barenblatt_support_radius(Barenblatt(Homogeneity(2.0), 2.0), 1.0) == Approx(2.0));
    CHECK_THROWS_AS(barenblatt_eval(b3, pt({0.0}), 0.0), std::invalid_argument);
    CHECK_THROWS_AS(Barenblatt(Homogeneity(3.0), -1.0), std::invalid_argument);
}

TEST_CASE("barenblatt against the closed form and its support") {
    testing::Rng rng(11);
    for (int k = 0; k < 300; ++k) {
        const double h = rng.uniform(1.2, 5.0), R = rng.uniform(0.3, 3.0), t = rng.uniform(0.1, 50.0);
        const double x = rng.uniform(-3.0, 3.0) * R * std::pow(t, 1 / (2 * h));
        Homogeneity hh(h);
        Barenblatt b(hh, R);
        const double br =
            std::pow(R, (h + 1) / h) - std::pow(t, -(h + 1) / (2 * h * h)) * std::pow(std::abs(x), (h + 1) / h);
        const double ref = br > 0 ? hh.c_h() * std::pow(t, -1 / (2 * h)) * std::pow(br, h / (h - 1)) : 0.0;
        const double v = barenblatt_eval(b, pt({x}), t);
        CHECK(v == Approx(ref).epsilon(1e-12).scale(1e-300));
        CHECK(v >= 0.0);
        if (std::abs(x) > b.support_radius(t)) CHECK(v == 0.0);
    }
}

TEST_CASE("barenblatt is invariant under the cauchy rescaling") {
    testing::Rng rng(12);
    for (int k = 0; k < 200; ++k) {
        const double h = rng.uniform(1.2, 5.0);
        Barenblatt b(Homogeneity(h), rng.uniform(0.5, 2.0));
        const double lam = std::pow(10.0, rng.uniform(-3.0, 3.0));
        const double t = rng.uniform(0.2, 5.0);
        const double x = rng.uniform(-1.5, 1.5) * b.support_radius(t);
        const double s = std::pow(lam, 1.0 / (2.0 * h));
        const double lhs = s * b.radial(s * std::abs(x), lam * t);
        CHECK(lhs == Approx(b.radial(std::abs(x), t)).epsilon(1e-10).scale(1e-10));
    }
}

TEST_CASE("giant profile constants") {
    Homogeneity h3(3.0), h2(2.0);
    auto p3 = build_giant_profile(h3);
    auto p2 = build_giant_profile(h2);
    CHECK(p3->Rbar() == Approx(2.396280).epsilon(1e-6));
    CHECK(h2.kappa() == Approx(0.873580).epsilon(1e-6));
    for (double h : {1.3, 2.0, 3.0, 4.5}) {
        Homogeneity hh(h);
        auto p = build_giant_profile(hh);
        CHECK(p->Rbar() == Approx(rbar_closed(hh)).epsilon(1e-12));
        CHECK(p->Rbar() == Approx(r_oracle(hh, M_PI)).epsilon(1e-12));
        CHECK(p->r_of_s(M_PI / 2) == Approx(p->Rbar() / 2).epsilon(1e-14));
    }
    CHECK_THROWS_AS(build_giant_profile(h3, 32), std::invalid_argument);
}

TEST_CASE("giant profile inverse map against an independent quadrature") {
    testing::Rng rng(13);
    for (double h : {1.5, 2.0, 3.0, 4.0}) {
        Homogeneity hh(h);
        auto p = build_giant_profile(hh);
        for (int k = 0; k < 40; ++k) {
            const double s = rng.uniform(0.0, M_PI);
            const double r = r_oracle(hh, s);
            CHECK(p->r_of_s(s) == Approx(r).epsilon(1e-12).scale(1e-12));
            CHECK(p->s_of_r(r) == Approx(s).epsilon(1e-10).scale(1e-10));
            CHECK(giant_X_eval(*p, r) == Approx(std::cos(s)).epsilon(1e-10).scale(1e-10));
        }
    }
}

TEST_CASE("giant X endpoints, period and reflection") {
    auto p = build_giant_profile(Homogeneity(3.0));
    const double R = p->Rbar();
    CHECK(giant_X_eval(*p, 0.0) == Approx(1.0));
    CHECK(giant_X_eval(*p, R) == Approx(-1.0));
    CHECK(giant_X_eval(*p, 2 * R) == Approx(1.0));
    CHECK(giant_X_eval(*p, R / 2) == Approx(0.0).scale(1.0));
    testing::Rng rng(14);
    for (int k = 0; k < 100; ++k) {
        const double r = rng.uniform(0.0, 2 * R);
        CHECK(p->X(r + 2 * R) == Approx(p->X(r)).epsilon(1e-12).scale(1e-12));
        CHECK(p->X(2 * R - r) == Approx(p->X(r)).epsilon(1e-12).scale(1e-12));
        const double e = 1e-6;
        if (std::fmod(r, R) > 1e-2 && std::fmod(r, R) < R - 1e-2) {
            CHECK(p->Xprime(r) == Approx((p->X(r + e) - p->X(r - e)) / (2 * e)).epsilon(1e-6).scale(1e-6));
        }
    }
    CHECK_THROWS_AS(p->X(-1.0), std::invalid_argument);
}

TEST_CASE("giant flux identity in conservative form") {
    for (double h : {1.5, 2.0, 3.0, 4.0}) {
        auto p = build_giant_profile(Homogeneity(h));
        const auto f = giant_flux_identity(*p);
        CHECK(f.nodes > 100);
        CHECK(f.conservative_residual <= 1e-6);
        CHECK(f.ratio_min == Approx(h).epsilon(1e-5));
        CHECK(f.ratio_max == Approx(h).epsilon(1e-5));
    }
}

TEST_CASE("fornberg weights are exact on polynomials") {
    testing::Rng rng(15);
    for (int k = 0; k < 50; ++k) {
        std::vector<double> nodes;
        double x = rng.uniform(-1.0, 1.0);
        for (int i = 0; i < 5; ++i) nodes.push_back(x += rng.uniform(0.05, 0.5));
        const double x0 = rng.uniform(nodes.front(), nodes.back());
        const auto w = fornberg_first_derivative(x0, nodes);
        for (int deg = 0; deg < 5; ++deg) {
            double s = 0.0;
            for (std::size_t i = 0; i < nodes.size(); ++i) s += w[i] * std::pow(nodes[i], deg);
            const double exact = deg == 0 ? 0.0 : deg * std::pow(x0, deg - 1);
            CHECK(std::abs(s - exact) <= 1e-9 * (1.0 + std::abs(exact)));
        }
    }
    CHECK_THROWS_AS(fornberg_first_derivative(0.0, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("friendly giant examples") {
    Homogeneity h3(3.0);
    auto p = build_giant_profile(h3);
    FriendlyGiant g(p, p->Rbar() / 2, 0.0);
    CHECK(giant_eval(g, pt({0.0}), 1.0) == Approx(1.0).epsilon(1e-14));
    CHECK(giant_eval(g, pt({0.0, 0.0}), 2.0) == Approx(0.707107).epsilon(1e-6));
    CHECK(giant_eval(g, pt({g.r0()}), 1.7) == Approx(0.0).scale(1.0));

    testing::Rng rng(16);
    for (int k = 0; k < 50; ++k) {
        const double h = rng.uniform(1.2, 5.0);
        auto pp = build_giant_profile(Homogeneity(h), 257);
        FriendlyGiant gg(pp, rng.uniform(0.2, 3.0), rng.uniform(-1.0, 1.0));
        const double t = gg.t0() + rng.uniform(0.1, 3.0);
        const double ang = rng.uniform(0.0, 2 * M_PI);
        CHECK(gg(pt({gg.r0() * std::cos(ang), gg.r0() * std::sin(ang)}), t) == Approx(0.0).scale(1.0));
        CHECK(gg(pt({0.0}), t) > 0.0);
    }
    CHECK_THROWS_AS(giant_eval(g, pt({0.0}), 0.0), std::invalid_argument);
}

TEST_CASE("blowup examples") {
    BlowUp b(Homogeneity(3.0), 0.0, 1.0);
    CHECK(blowup_eval(b, pt({1.0}), 0.0) == Approx(0.25));
    CHECK(blowup_eval(b, pt({0.0, 1.0}), 0.75) == Approx(0.5));
    BlowUp c(Homogeneity(2.0), 1.0, 2.0);
    CHECK(blowup_eval(c, pt({0.5}), 0.0) == 0.0);
    CHECK(blowup_eval(c, pt({1.0}), 1.0) == 0.0);
    CHECK_THROWS_AS(blowup_eval(b, pt({1.0}), 1.0), std::invalid_argument);
}

TEST_CASE("traveling wave examples") {
    TravelingWave w2(Homogeneity(2.0), {1.0}, 1.0);
    CHECK(traveling_eval(w2, pt({0.0}), 1.0) == Approx(0.5));
    CHECK(traveling_eval(w2, pt({1.0}), 1.0) == 0.0);
    TravelingWave w3(Homogeneity(3.0), {0.0, 1.0}, 2.0);
    CHECK(traveling_eval(w3, pt({5.0, 0.0}), 1.0) == Approx(3.771236).epsilon(1e-6));
    CHECK(traveling_eval(w3, pt({0.0, 2.0}), 1.0) == 0.0);
    CHECK(w3.front_offset(pt({0.0, 2.5}), 1.0) == Approx(0.5));
    CHECK_THROWS_AS(TravelingWave(Homogeneity(2.0), {1.0, 1.0}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(TravelingWave(Homogeneity(2.0), {1.0}, 0.0), std::invalid_argument);
}

TEST_CASE("residual_at examples") {
    Homogeneity h3(3.0);
    CHECK(residual_at(Barenblatt(h3, 1.0), pt({0.4, 0.2}), 1.0, 1e-3) <= 1e-6);
    CHECK(residual_at(TravelingWave(h3, {1.0}, 1.0), pt({-0.5}), 1.0, 1e-3) <= 1e-6);
    auto p = build_giant_profile(h3);
    CHECK(residual_at(FriendlyGiant(p, 1.0, 0.0), pt({0.3, 0.4}), 1.5, 1e-3) <= 1e-6);
    CHECK(residual_at(BlowUp(h3, 0.5, 2.0), pt({1.5, 0.0, 0.0}), 1.0, 1e-3) <= 1e-6);
}

TEST_CASE("residual_at rejects points near the singular set") {
    Homogeneity h3(3.0);
    Barenblatt b(h3, 1.0);
    CHECK_THROWS_AS(residual_at(b, pt({1.0}), 1.0, 1e-3), std::domain_error);
    CHECK_THROWS_AS(residual_at(b, pt({0.0, 0.0}), 1.0, 1e-3), std::domain_error);
    try {
        residual_at(b, pt({1.0}), 1.0, 1e-3);
    } catch (const std::domain_error& e) {
        CHECK(std::string(e.what()).find(std::string(b.singular_distance(pt({1.0}), 1.0).set)) != std::string::npos);
    }
    CHECK_THROWS_AS(residual_at(TravelingWave(h3, {1.0}, 1.0), pt({1.0}), 1.0, 1e-3), std::domain_error);
    CHECK_THROWS_AS(residual_at(b, pt({0.3}), 1e-4, 1e-3), std::domain_error);
}

TEST_CASE("negative prefactor exponent is not a solution") {
    Homogeneity h3(3.0);
    auto p = build_giant_profile(h3);
    const std::vector<double> x = pt({0.2, 0.1});
    for (double r0 : {0.5, 2.0}) {
        const double good = residual_at(FriendlyGiant(p, r0, 0.0), x, 1.5, 1e-3);
        const double bad = residual_at(FriendlyGiant(p, r0, 0.0, GiantPrefactor::negative), x, 1.5, 1e-3);
        CHECK(good <= 1e-6);
        CHECK(bad >= 1e-2);
    }
    // the two prefactors agree at r0 = Rbar/2
    CHECK(residual_at(FriendlyGiant(p, p->Rbar() / 2, 0.0, GiantPrefactor::negative), x, 1.5, 1e-3) <= 1e-6);
}

TEST_CASE("giant profile csv dump") {
    auto p = build_giant_profile(Homogeneity(3.0), 65);
    std::ostringstream out;
    p->write_csv(out);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "s,r,X,Xprime");
    std::size_t rows = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == p->size());
}

TEST_CASE("adaptive quadrature handles endpoint singularities") {
    const auto r = integrate_adaptive([](double x) { return std::pow(x, -0.5); }, 0.0, 1.0, 1e-13, 1e-14, {true, false});
    CHECK(r.converged);
    CHECK(r.value == Approx(2.0).epsilon(1e-11));
    const auto s = integrate_adaptive([](double x) { return std::sqrt(std::sin(x)); }, 0.0, M_PI, 1e-13, 1e-14,
                                      {true, true});
    CHECK(s.value == Approx(2.396280469471184).epsilon(1e-12));
}
