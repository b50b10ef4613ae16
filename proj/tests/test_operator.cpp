#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "infheat/homogeneity.hpp"
#include "infheat/operator.hpp"
#include "support.hpp"

using namespace infheat;
using doctest::Approx;

namespace {

SymmetricMatrix random_symmetric(testing::Rng& rng, int d) {
    Eigen::MatrixXd a(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) a(i, j) = rng.normal();
    return SymmetricMatrix::symmetrized(a);
}

GradientVector random_gradient(testing::Rng& rng, int d, double scale = 1.0) {
    Eigen::VectorXd p(d);
    for (int i = 0; i < d; ++i) p(i) = scale * rng.normal();
    return GradientVector(p);
}

// plain loops, no Eigen products
double by_hand(const SymmetricMatrix& m, const GradientVector& p, double h) {
    const int d = p.dim();
    double q = 0.0, n2 = 0.0;
    for (int i = 0; i < d; ++i) {
        n2 += p.vector()(i) * p.vector()(i);
        for (int j = 0; j < d; ++j) q += m(i, j) * p.vector()(i) * p.vector()(j);
    }
    return n2 == 0.0 ? 0.0 : std::pow(n2, (h - 3.0) / 2.0) * q;
}

}  // namespace

TEST_CASE("homogeneity constants") {
    Homogeneity h3(3.0), h2(2.0);
    CHECK(h3.c_h() == Approx(0.25).epsilon(1e-15));
    CHECK(h2.c_h() == Approx(1.0 / 18.0).epsilon(1e-15));
    CHECK(h2.d_h() == Approx(0.5).epsilon(1e-15));
    CHECK(h3.d_h() == Approx(std::pow(2.0, 1.5) / 3.0).epsilon(1e-15));
    CHECK(h3.alpha() == Approx(0.5));
    CHECK(h3.kappa() == Approx(1.0).epsilon(1e-15));
    CHECK(h2.kappa() == Approx(0.873580).epsilon(1e-6));

    for (double h : {1.1, 1.5, 2.0, 2.5, 3.0, 4.0, 7.0}) {
        Homogeneity hh(h);
        CHECK(std::pow(hh.kappa(), h + 1.0) == Approx(2.0 * hh.alpha()).epsilon(1e-14));
        CHECK(hh.c_h() ==
              Approx(std::pow(0.5, 1.0 / (h - 1.0)) * std::pow((h - 1.0) / (h + 1.0), h / (h - 1.0))).epsilon(1e-14));
    }
}

TEST_CASE("homogeneity rejects h <= 1") {
    CHECK_THROWS_AS(Homogeneity{1.0}, std::invalid_argument);
    CHECK_THROWS_AS(Homogeneity{0.5}, std::invalid_argument);
    CHECK_THROWS_AS(Homogeneity{std::nan("")}, std::invalid_argument);
    CHECK_THROWS_AS(Homogeneity{INFINITY}, std::invalid_argument);
}

TEST_CASE("mutations change only their constant") {
    Homogeneity good(3.0), bad_c(3.0, Mutation::c_h_exponent), bad_d(3.0, Mutation::d_h_exponent);
    CHECK(bad_c.c_h() != Approx(good.c_h()));
    CHECK(bad_c.d_h() == good.d_h());
    CHECK(bad_d.d_h() != Approx(good.d_h()));
    CHECK(bad_d.c_h() == good.c_h());
    CHECK(parse_mutation("none") == Mutation::none);
    CHECK(parse_mutation("c_h") == Mutation::c_h_exponent);
    CHECK(parse_mutation(to_string(Mutation::even_flux)) == Mutation::even_flux);
    CHECK_THROWS_AS(parse_mutation("bogus"), std::invalid_argument);
}

TEST_CASE("eval_operator examples") {
    CHECK(eval_operator(SymmetricMatrix::identity(2), GradientVector{1.0, 0.0}, Homogeneity(3.0)) == Approx(1.0));
    const double diag[] = {1.0, 2.0};
    CHECK(eval_operator(SymmetricMatrix::diagonal(diag), GradientVector{3.0, 4.0}, Homogeneity(2.0)) ==
          Approx(8.2).epsilon(1e-14));
    testing::Rng rng(1);
    for (double h : {1.2, 2.0, 3.0, 5.0}) {
        CHECK(eval_operator(random_symmetric(rng, 3), GradientVector{0.0, 0.0, 0.0}, Homogeneity(h)) == 0.0);
    }
}

TEST_CASE("eval_operator input validation") {
    Eigen::MatrixXd ns(2, 2);
    ns << 1.0, 2.0, 3.0, 4.0;
    CHECK_THROWS_AS(SymmetricMatrix{ns}, std::invalid_argument);
    CHECK_THROWS_AS((GradientVector{std::nan(""), 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(eval_operator(SymmetricMatrix::identity(3), GradientVector{1.0, 0.0}, Homogeneity(3.0)),
                    std::invalid_argument);
}

TEST_CASE("eval_operator agrees with a loop evaluation on random samples") {
    testing::Rng rng(2);
    for (int k = 0; k < 500; ++k) {
        const int d = 1 + static_cast<int>(rng.next() % 3);
        const double h = rng.uniform(1.05, 6.0);
        auto m = random_symmetric(rng, d);
        auto p = random_gradient(rng, d, std::pow(10.0, rng.uniform(-3.0, 2.0)));
        const double ref = by_hand(m, p, h);
        CHECK(eval_operator(m, p, Homogeneity(h)) == Approx(ref).epsilon(1e-12).scale(1e-300));
    }
}

TEST_CASE("eval_operator scaling and rotation") {
    testing::Rng rng(3);
    for (int k = 0; k < 200; ++k) {
        const double h = rng.uniform(1.1, 5.0);
        Homogeneity hh(h);
        auto m = random_symmetric(rng, 2);
        auto p = random_gradient(rng, 2);
        const double base = eval_operator(m, p, hh);
        const double lam = rng.uniform(0.1, 10.0);

        // degree h-1 in p, degree 1 in M
        GradientVector lp(Eigen::VectorXd(lam * p.vector()));
        CHECK(eval_operator(m, lp, hh) == Approx(std::pow(lam, h - 1.0) * base).epsilon(1e-11).scale(1e-12));
        CHECK(eval_operator(SymmetricMatrix(Eigen::MatrixXd(lam * m.matrix())), p, hh) ==
              Approx(lam * base).epsilon(1e-12).scale(1e-12));

        const double a = rng.uniform(0.0, 2.0 * M_PI);
        Eigen::Matrix2d q;
        q << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
        Eigen::MatrixXd qm = q * m.matrix() * q.transpose();
        auto rotated = SymmetricMatrix::symmetrized(qm);
        GradientVector rp(Eigen::VectorXd(q * p.vector()));
        CHECK(eval_operator(rotated, rp, hh) == Approx(base).epsilon(1e-10).scale(1e-10));
    }
}

TEST_CASE("continuity at the singular gradient for h < 3") {
    testing::Rng rng(4);
    for (double h : {1.2, 1.5, 2.0, 2.5, 2.9}) {
        Homogeneity hh(h);
        auto m = random_symmetric(rng, 3);
        const double mnorm = m.matrix().operatorNorm();
        auto dir = random_gradient(rng, 3);
        double prev = INFINITY;
        for (int k = 1; k <= 12; ++k) {
            const double r = std::pow(10.0, -k);
            GradientVector p(Eigen::VectorXd(dir.vector().normalized() * r));
            const double v = std::abs(eval_operator(m, p, hh));
            CHECK(v <= mnorm * std::pow(r, h - 1.0) * (1.0 + 1e-12));
            CHECK(v <= prev);
            prev = v;
        }
    }
}

TEST_CASE("regularized_matrix examples") {
    auto a = regularized_matrix(GradientVector{0.0, 0.0}, 0.1, 1.0, Homogeneity(3.0));
    CHECK((a.matrix() - 0.1 * Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-15);

    auto b = regularized_matrix(GradientVector{1.0, 0.0}, 0.0, 0.0, Homogeneity(3.0));
    Eigen::MatrixXd eb(2, 2);
    eb << 1.0, 0.0, 0.0, 0.0;
    CHECK((b.matrix() - eb).norm() < 1e-15);

    auto c = regularized_matrix(GradientVector{0.0, 2.0}, 1.0, 1.0, Homogeneity(2.0));
    Eigen::MatrixXd ec = Eigen::MatrixXd::Identity(2, 2);
    ec(1, 1) += 4.0 / std::sqrt(5.0);
    CHECK((c.matrix() - ec).norm() < 1e-14);
}

TEST_CASE("regularized_matrix rejects delta = 0 below h = 3") {
    CHECK_THROWS_AS(regularized_matrix(GradientVector{1.0, 0.0}, 0.0, 0.0, Homogeneity(2.0)), std::invalid_argument);
    CHECK_THROWS_AS(regularized_matrix(GradientVector{1.0, 0.0}, -1.0, 1.0, Homogeneity(3.0)), std::invalid_argument);
    CHECK_NOTHROW(regularized_matrix(GradientVector{1.0, 0.0}, 0.0, 0.0, Homogeneity(3.5)));
}

TEST_CASE("regularized_matrix is positive semidefinite") {
    testing::Rng rng(5);
    for (int k = 0; k < 200; ++k) {
        const double h = rng.uniform(1.1, 5.0);
        const double eps = rng.uniform() < 0.5 ? 0.0 : rng.uniform(0.0, 1.0);
        const double delta = rng.uniform(1e-3, 1.0);
        auto a = regularized_matrix(random_gradient(rng, 3), eps, delta, Homogeneity(h));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a.matrix());
        CHECK(es.eigenvalues().minCoeff() >= -1e-12);
        if (eps > 0.0) CHECK(es.eigenvalues().minCoeff() >= eps * (1.0 - 1e-12));
    }
}

TEST_CASE("eval_regularized examples") {
    CHECK(eval_regularized(SymmetricMatrix::identity(2), GradientVector{1.0, 0.0}, 0.0, 0.0, Homogeneity(3.0)) ==
          Approx(1.0));
    CHECK(eval_regularized(SymmetricMatrix::identity(2), GradientVector{0.0, 0.0}, 0.5, 1.0, Homogeneity(2.0)) ==
          Approx(1.0));
    const double diag[] = {2.0, -2.0};
    CHECK(eval_regularized(SymmetricMatrix::diagonal(diag), GradientVector{1.0, 1.0}, 0.0, 0.0, Homogeneity(3.0)) ==
          Approx(0.0).scale(1.0));
}

TEST_CASE("eval_regularized matches its closed form and converges") {
    testing::Rng rng(6);
    for (int k = 0; k < 100; ++k) {
        const double h = rng.uniform(1.2, 5.0);
        Homogeneity hh(h);
        auto m = random_symmetric(rng, 2);
        auto p = random_gradient(rng, 2);
        if (p.norm() < 0.2) continue;
        const double eps = rng.uniform(0.0, 0.5), delta = rng.uniform(0.01, 0.5);
        const double q = p.vector().dot(m.matrix() * p.vector());
        const double closed = eps * m.matrix().trace() + std::pow(p.norm() * p.norm() + delta * delta, (h - 3) / 2) * q;
        CHECK(eval_regularized(m, p, eps, delta, hh) == Approx(closed).epsilon(1e-12).scale(1e-12));

        const double exact = eval_operator(m, p, hh);
        double prev = INFINITY;
        for (double s : {1e-1, 1e-2, 1e-3, 1e-4, 1e-6}) {
            const double gap = std::abs(eval_regularized(m, p, s, s, hh) - exact);
            CHECK(gap <= prev * (1.0 + 1e-12) + 1e-15);
            prev = gap;
        }
        CHECK(prev < 1e-4);
    }
}

TEST_CASE("regularized_flux is an odd monotone antiderivative") {
    for (double h : {1.5, 2.0, 2.5, 3.0, 4.0, 5.5}) {
        for (double delta : {0.0, 1e-3, 0.3}) {
            if (delta == 0.0 && h < 3.0) continue;
            double prev = -INFINITY;
            for (int i = -200; i <= 200; ++i) {
                const double s = 0.02 * i;
                const double f = kernel::regularized_flux(s, delta, h);
                CHECK(f == Approx(-kernel::regularized_flux(-s, delta, h)).epsilon(1e-14).scale(1e-300));
                CHECK(f >= prev);
                prev = f;
                if (std::abs(s) > 0.05) {
                    const double e = 1e-5;
                    const double deriv =
                        (kernel::regularized_flux(s + e, delta, h) - kernel::regularized_flux(s - e, delta, h)) /
                        (2 * e);
                    const double integrand = std::pow(s * s + delta * delta, (h - 3) / 2) * s * s;
                    CHECK(deriv == Approx(integrand).epsilon(5e-5));
                }
            }
        }
    }
}

TEST_CASE("source_term examples and bound") {
    CHECK(source_term(0.0, SourceTerm::zero()) == 0.0);
    CHECK(source_term(0.0, SourceTerm::linear(0.5, 1.0)) == 0.0);
    CHECK(source_term(0.0, SourceTerm::bounded_slope(1.0, 1.0)) == 0.0);
    CHECK(source_term(2.0, SourceTerm::linear(0.5, 0.5)) == Approx(1.0));
    CHECK(source_term(M_PI, SourceTerm::bounded_slope(1.0, 1.0)) == Approx(0.0).scale(1.0));
    CHECK_THROWS_AS(SourceTerm::linear(2.0, 1.0), std::invalid_argument);

    testing::Rng rng(7);
    for (int k = 0; k < 300; ++k) {
        const double bound = rng.uniform(0.0, 3.0);
        const double a = rng.uniform(-bound, bound);
        const double u = 10.0 * rng.normal();
        for (auto s : {SourceTerm::linear(a, bound), SourceTerm::bounded_slope(a, bound)})
            CHECK(std::abs(source_term(u, s)) <= bound * std::abs(u) * (1 + 1e-15));
    }
}
