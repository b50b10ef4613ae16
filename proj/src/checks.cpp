#include "infheat/checks.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

#include "infheat/asymptotics.hpp"
#include "infheat/exact.hpp"
#include "infheat/grid.hpp"
#include "infheat/operator.hpp"
#include "infheat/radial.hpp"

namespace infheat {

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::array kAllH{1.5, 2.0, 3.0, 4.0};
constexpr std::array kRunH{2.0, 3.0};

std::string sci(double v, int digits = 3)
{
    std::ostringstream s;
    s << std::scientific << std::setprecision(digits) << v;
    return s.str();
}

std::string fixed(double v, int digits = 4)
{
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
}

std::string hname(double h)
{
    std::ostringstream s;
    s << "h=" << h;
    return s.str();
}

// splitmix-seeded xorshift; platform independent, unlike the std distributions
class Sampler {
public:
    explicit Sampler(std::uint64_t seed) : state_(seed ^ 0x9e3779b97f4a7c15ULL)
    {
        for (int i = 0; i < 4; ++i)
            next();
    }

    std::uint64_t next()
    {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    double uniform(double a = 0.0, double b = 1.0)
    {
        const double u = static_cast<double>(next() >> 11) * 0x1.0p-53;
        return a + (b - a) * u;
    }

    double normal()
    {
        double u = uniform();
        while (u <= 0.0)
            u = uniform();
        return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * uniform());
    }

    std::vector<double> direction(int d)
    {
        std::vector<double> v(static_cast<std::size_t>(d));
        double n = 0.0;
        while (n < 1e-8) {
            n = 0.0;
            for (double& x : v) {
                x = normal();
                n += x * x;
            }
            n = std::sqrt(n);
        }
        for (double& x : v)
            x /= n;
        return v;
    }

private:
    std::uint64_t state_;
};

std::uint64_t mix(std::uint64_t seed, std::string_view tag)
{
    std::uint64_t h = 1469598103934665603ULL;
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return seed ^ h;
}

double bump(double r, double a)
{
    const double y = r / a;
    return std::abs(y) < 1.0 ? (1.0 - y * y) * (1.0 - y * y) : 0.0;
}

struct CauchyRun {
    std::vector<RadialProfile> snapshots;
    TimeSeries max{"max|u|"};
    TimeSeries support{"support radius"};
    double seconds = 0.0;
};

struct DirichletRun {
    std::vector<RadialProfile> snapshots;
    TimeSeries max{"max|u|"};
    std::optional<GiantExtraction<RadialProfile>> giant;
    double seconds = 0.0;
};

class Context {
public:
    explicit Context(const CheckOptions& o) : opt(o) {}

    const CheckOptions& opt;

    Homogeneity homogeneity(double h) const { return Homogeneity(h, opt.mutation); }

    void note(const std::string& line) const
    {
        if (opt.log)
            *opt.log << "    " << line << '\n' << std::flush;
    }

    const std::shared_ptr<const GiantProfile>& profile(double h)
    {
        auto it = profiles_.find(h);
        if (it == profiles_.end())
            it = profiles_.emplace(h, build_giant_profile(homogeneity(h))).first;
        return it->second;
    }

    const CauchyRun& cauchy(double h);
    const DirichletRun& dirichlet(double h, int data);

private:
    std::map<double, std::shared_ptr<const GiantProfile>> profiles_;
    std::map<double, CauchyRun> cauchy_;
    std::map<std::pair<double, int>, DirichletRun> dirichlet_;
};

// Compactly supported bump of radius 0.5 with zero-flux outer boundary; the
// outer radius keeps the support (~ t^{1/(2h)}) inside the domain up to t = 1000.
const CauchyRun& Context::cauchy(double h)
{
    if (auto it = cauchy_.find(h); it != cauchy_.end())
        return it->second;
    const auto t0 = Clock::now();
    const Homogeneity H = homogeneity(h);
    const double r_max = h == 2.0 ? 12.0 : 5.0;
    const std::size_t n = h == 2.0 ? 1200 : 1000;
    auto p = RadialProfile::sample(r_max, n, [](double r) { return bump(r, 0.5); },
                                   {OuterBoundary::zero_flux, 0.0}, 0.0);
    CauchyRun run;
    RadialEvolveOptions o;
    for (int k = 0; k <= 24; ++k)
        o.observe_times.push_back(std::pow(10.0, 1.0 + k / 12.0));
    radial_evolve(p, H, 1000.0, o, [&](const RadialProfile& q) {
        run.snapshots.push_back(q);
        run.max.push(q.t(), q.max_value());
        run.support.push(q.t(), support_radius(q));
    });
    run.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    note("cauchy run " + hname(h) + ": " + fixed(run.seconds, 1) + " s");
    return cauchy_.emplace(h, std::move(run)).first->second;
}

// Unit ball, zero lateral data, evolved to T = 1e6 with snapshots at
// 10^{k/4}, 10^{1 + k/8} and the pair T e^{-(h-1)}, T used by the extraction.
const DirichletRun& Context::dirichlet(double h, int data)
{
    const auto key = std::make_pair(h, data);
    if (auto it = dirichlet_.find(key); it != dirichlet_.end())
        return it->second;
    const auto t0 = Clock::now();
    const Homogeneity H = homogeneity(h);
    constexpr double T = 1e6;
    constexpr std::size_t n = 200;
    std::function<double(double)> u0;
    if (data == 0)
        u0 = [](double r) { return 1.0 - r * r; };
    else
        u0 = [](double r) {
            const double c = std::cos(0.5 * std::numbers::pi * r);
            return 3.0 * c * c * (1.0 + r);
        };
    auto p = RadialProfile::sample(1.0, n, u0, {OuterBoundary::dirichlet, 0.0}, 0.0);

    std::vector<double> obs;
    for (int k = 0; k <= 16; ++k)
        obs.push_back(std::pow(10.0, 1.0 + k / 8.0));
    for (int k = 1;; ++k) {
        const double t = std::pow(10.0, k / 4.0);
        if (t >= T)
            break;
        obs.push_back(t);
    }
    const double s_last = std::log(T) / (h - 1.0);
    obs.push_back(dirichlet_time(s_last - 1.0, H));
    obs.push_back(T);
    std::sort(obs.begin(), obs.end());
    obs.erase(std::unique(obs.begin(), obs.end()), obs.end());

    DirichletRun run;
    RadialEvolveOptions o;
    o.observe_times = obs;
    radial_evolve(p, H, T, o, [&](const RadialProfile& q) {
        run.snapshots.push_back(q);
        run.max.push(q.t(), q.max_value());
    });
    try {
        run.giant = extract_giant(std::span<const RadialProfile>(run.snapshots), H, opt.tol.stabilization);
    } catch (const std::exception& e) {
        note(std::string("giant extraction failed: ") + e.what());
    }
    run.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    note("dirichlet run " + hname(h) + " data " + std::to_string(data) + ": " + fixed(run.seconds, 1) + " s");
    return dirichlet_.emplace(key, std::move(run)).first->second;
}

// ---------------------------------------------------------------------------
// acceptance 1: exact-solution residuals

struct FamilySample {
    ExactSolution u;
    std::vector<double> x;
    double t;
    /// Length scale of the sample; the smooth region keeps 0.1 of it from the singular set.
    double scale;
};

using FamilyDraw = std::function<FamilySample(Sampler&, int d)>;

std::vector<double> scaled(std::vector<double> dir, double r)
{
    for (double& v : dir)
        v *= r;
    return dir;
}

CheckGroup acceptance_1(Context& ctx)
{
    CheckGroup g{"acceptance-1", "Exact-solution residuals", {}, 0.0};
    const double step = 1e-3;
    for (double h : kAllH) {
        const Homogeneity H = ctx.homogeneity(h);
        const auto profile = ctx.profile(h);
        const std::vector<std::pair<std::string, FamilyDraw>> families{
            {"barenblatt",
             [&](Sampler& s, int d) {
                 Barenblatt b(H, s.uniform(0.5, 1.5));
                 const double t = s.uniform(0.5, 2.0);
                 const double r = s.uniform(0.0, 1.2 * b.support_radius(t));
                 return FamilySample{b, scaled(s.direction(d), r), t, b.support_radius(t)};
             }},
            {"giant",
             [&](Sampler& s, int d) {
                 const double r0 = s.uniform(0.5, 1.5);
                 FriendlyGiant G(profile, r0, s.uniform(-1.0, 0.0));
                 return FamilySample{G, scaled(s.direction(d), s.uniform(0.0, 3.0 * r0)), s.uniform(0.5, 2.0), r0};
             }},
            {"blowup",
             [&](Sampler& s, int d) {
                 const double r0 = s.uniform(0.2, 1.0);
                 const double t0 = s.uniform(1.0, 2.0);
                 BlowUp b(H, r0, t0);
                 return FamilySample{b, scaled(s.direction(d), s.uniform(0.0, r0 + 1.0)), s.uniform(0.0, t0 - 0.5), r0};
             }},
            {"wave",
             [&](Sampler& s, int d) {
                 const double c = (s.uniform() < 0.5 ? -1.0 : 1.0) * s.uniform(0.5, 2.0);
                 TravelingWave w(H, s.direction(d), c);
                 std::vector<double> x(static_cast<std::size_t>(d));
                 for (double& v : x)
                     v = s.uniform(-2.0, 2.0);
                 return FamilySample{w, x, s.uniform(0.5, 2.0), 1.0};
             }},
        };
        for (const auto& [name, draw] : families) {
            Sampler s(mix(ctx.opt.seed, "residual/" + name + "/" + hname(h)));
            double worst = 0.0;
            int taken = 0;
            int rejected = 0;
            while (taken < 100) {
                const int d = 1 + taken % 3;
                FamilySample smp = draw(s, d);
                try {
                    if (singular_distance(smp.u, smp.x, smp.t).distance < 0.1 * smp.scale)
                        throw std::domain_error("near the singular set");
                    worst = std::max(worst, residual_at(smp.u, smp.x, smp.t, step));
                    ++taken;
                } catch (const std::domain_error&) {
                    if (++rejected > 100000)
                        throw std::runtime_error("acceptance-1: cannot find smooth points for " + name);
                }
            }
            g.checks.push_back(make_check(name + " " + hname(h), worst, Relation::at_most, ctx.opt.tol.residual, 0.0,
                                          "100 points, " + std::to_string(rejected) + " near singular sets redrawn"));
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// acceptance 2: giant flux identity

CheckGroup acceptance_2(Context& ctx)
{
    CheckGroup g{"acceptance-2", "Giant ODE flux identity", {}, 0.0};
    for (double h : kAllH) {
        const GiantFluxCheck c = giant_flux_identity(*ctx.profile(h));
        g.checks.push_back(make_check("(1/h)[|X'|^{h-1}X']' + X/(h-1) " + hname(h), c.conservative_residual,
                                      Relation::at_most, ctx.opt.tol.giant_identity, 0.0,
                                      std::to_string(c.nodes) + " nodes; un-normalized residual " +
                                          sci(c.literal_residual) + ", derivative ratio to -X/(h-1) in [" +
                                          fixed(c.ratio_min, 9) + ", " + fixed(c.ratio_max, 9) + "]"));
    }
    return g;
}

// ---------------------------------------------------------------------------
// acceptance 3: operator algebra

Eigen::MatrixXd random_symmetric(Sampler& s, int d)
{
    Eigen::MatrixXd m(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j)
            m(i, j) = m(j, i) = s.uniform(-1.0, 1.0);
    return m;
}

Eigen::VectorXd random_vector(Sampler& s, int d, double norm)
{
    const auto dir = s.direction(d);
    Eigen::VectorXd v(d);
    for (int i = 0; i < d; ++i)
        v(i) = norm * dir[static_cast<std::size_t>(i)];
    return v;
}

CheckGroup acceptance_3(Context& ctx)
{
    CheckGroup g{"acceptance-3", "Operator algebra", {}, 0.0};
    Sampler s(mix(ctx.opt.seed, "operator"));
    constexpr int kInstances = 10000;
    double hom = 0.0;
    double rot = 0.0;
    double lin = 0.0;
    double cont = 0.0;
    int odd_failures = 0;
    int zero_failures = 0;
    for (int i = 0; i < kInstances; ++i) {
        const int d = 1 + i % 3;
        const Homogeneity H(kAllH[static_cast<std::size_t>((i / 3) % 4)]);
        const double hv = H.h();
        const Eigen::MatrixXd m = random_symmetric(s, d);
        const double mnorm = m.norm();
        const SymmetricMatrix M(m);
        const double pn = std::pow(10.0, s.uniform(-2.0, 2.0));
        const Eigen::VectorXd pv = random_vector(s, d, pn);
        const GradientVector p(pv);
        const double f = eval_operator(M, p, H);
        const double scale = mnorm * std::pow(pn, hv - 1.0);

        const double sc = std::pow(10.0, s.uniform(-1.0, 1.0));
        const double fs = eval_operator(M, GradientVector(Eigen::VectorXd(sc * pv)), H);
        hom = std::max(hom, std::abs(fs - std::pow(sc, hv - 1.0) * f) / (std::pow(sc, hv - 1.0) * scale));

        Eigen::MatrixXd a(d, d);
        for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c)
                a(r, c) = s.normal();
        const Eigen::MatrixXd O = Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ();
        const double fr = eval_operator(SymmetricMatrix::symmetrized(O * m * O.transpose()),
                                        GradientVector(Eigen::VectorXd(O * pv)), H);
        rot = std::max(rot, std::abs(fr - f) / scale);

        const Eigen::MatrixXd m2 = random_symmetric(s, d);
        const double ca = s.uniform(-2.0, 2.0);
        const double cb = s.uniform(-2.0, 2.0);
        const double fl = eval_operator(SymmetricMatrix::symmetrized(ca * m + cb * m2), p, H);
        const double f2 = eval_operator(SymmetricMatrix(m2), p, H);
        const double lscale = (std::abs(ca) * mnorm + std::abs(cb) * m2.norm()) * std::pow(pn, hv - 1.0);
        lin = std::max(lin, std::abs(fl - (ca * f + cb * f2)) / lscale);

        if (eval_operator(SymmetricMatrix(Eigen::MatrixXd(-m)), GradientVector(Eigen::VectorXd(-pv)), H) != -f)
            ++odd_failures;

        // |F(M, p)| <= |M| |p|^{h-1} as |p| = 10^{-k} -> 0
        const int k = 1 + i % 12;
        const double small = std::pow(10.0, -k);
        const double fsmall = eval_operator(M, GradientVector(Eigen::VectorXd(random_vector(s, d, small))), H);
        const double bound = mnorm * std::pow(small, hv - 1.0);
        cont = std::max(cont, std::max(0.0, std::abs(fsmall) - bound) / bound);
        if (eval_operator(M, GradientVector(Eigen::VectorXd::Zero(d)), H) != 0.0)
            ++zero_failures;
    }
    const double tol = ctx.opt.tol.operator_relative;
    const std::string n = std::to_string(kInstances) + " instances";
    g.checks.push_back(make_check("homogeneity F(M,sp) = s^{h-1} F(M,p)", hom, Relation::at_most, tol, 0.0, n));
    g.checks.push_back(make_check("rotation F(OMO^T,Op) = F(M,p)", rot, Relation::at_most, tol, 0.0, n));
    g.checks.push_back(make_check("linearity in M", lin, Relation::at_most, tol, 0.0, n));
    g.checks.push_back(make_check("continuity |F| <= |M||p|^{h-1}, |p| = 1e-1..1e-12", cont, Relation::at_most, tol,
                                  0.0, n));
    g.checks.push_back(make_check("F(M,0) = 0", zero_failures, Relation::at_most, 0.0, 0.0, n));
    g.checks.push_back(make_check("F(-M,-p) = -F(M,p) exactly", odd_failures, Relation::at_most, 0.0, 0.0, n));
    return g;
}

// ---------------------------------------------------------------------------
// acceptance 4: radial solver against Barenblatt

double radial_barenblatt_error(const Homogeneity& H, std::size_t n)
{
    const Barenblatt B(H, 1.0);
    auto p = RadialProfile::sample(2.0, n, [&](double r) { return B.radial(r, 1.0); },
                                   {OuterBoundary::dirichlet, 0.0}, 1.0);
    const RadialProfile q = radial_evolve(p, H, 2.0);
    double err = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i)
        err = std::max(err, std::abs(q[i] - B.radial(q.center(i), 2.0)));
    return err;
}

CheckGroup acceptance_4(Context& ctx)
{
    CheckGroup g{"acceptance-4", "Radial solver vs Barenblatt", {}, 0.0};
    const Homogeneity H = ctx.homogeneity(3.0);
    std::map<std::size_t, double> err;
    std::string detail;
    for (std::size_t n : {200u, 400u, 800u, 1600u}) {
        err[n] = radial_barenblatt_error(H, n);
        detail += (detail.empty() ? "" : ", ") + std::string("n=") + std::to_string(n) + " " + sci(err[n]);
        ctx.note("radial barenblatt n=" + std::to_string(n) + " error " + sci(err[n]));
    }
    g.checks.push_back(make_check("max-norm error h=3 n=800, t 1->2", err[800], Relation::at_most,
                                  ctx.opt.tol.radial_error, 0.0, detail));
    const double order = std::log(err[200] / err[1600]) / std::log(8.0);
    g.checks.push_back(
        make_check("refinement order n=200..1600", order, Relation::at_least, ctx.opt.tol.refinement_order, 0.0, detail));
    return g;
}

// ---------------------------------------------------------------------------
// acceptance 5: Cauchy decay and support growth

CheckGroup acceptance_5(Context& ctx)
{
    CheckGroup g{"acceptance-5", "Cauchy decay rate", {}, 0.0};
    const FitWindow w{ctx.opt.tol.fit_t_lo, ctx.opt.tol.fit_t_hi};
    for (double h : kRunH) {
        const CauchyRun& run = ctx.cauchy(h);
        const RateFit decay = fit_decay_exponent(run.max, w);
        const RateFit support = fit_decay_exponent(run.support, w);
        g.checks.push_back(make_check("max|u| exponent " + hname(h), decay.exponent, Relation::within,
                                      ctx.opt.tol.exponent, -1.0 / (2.0 * h),
                                      std::to_string(decay.samples) + " samples, log residual " +
                                          sci(decay.residual_norm)));
        g.checks.push_back(make_check("support exponent " + hname(h), support.exponent, Relation::within,
                                      ctx.opt.tol.exponent, 1.0 / (2.0 * h),
                                      "support at t=1000: " + fixed(run.support.values().back(), 3)));
    }
    return g;
}

// ---------------------------------------------------------------------------
// acceptance 6: Barenblatt attraction from two bumps

CheckGroup acceptance_6(Context& ctx)
{
    CheckGroup g{"acceptance-6", "Barenblatt attraction", {}, 0.0};
    const Homogeneity H = ctx.homogeneity(3.0);
    auto p = RadialProfile::sample(12.0, 800, [](double r) { return bump(r, 0.5) + 0.6 * bump(r - 3.0, 0.5); },
                                   {OuterBoundary::zero_flux, 0.0}, 0.0);
    std::vector<BarenblattFit> fits;
    RadialEvolveOptions o;
    o.observe_times = {10.0, 100.0, 1000.0};
    radial_evolve(p, H, 1000.0, o, [&](const RadialProfile& q) { fits.push_back(fit_barenblatt(q, H)); });
    std::string detail;
    for (const auto& f : fits)
        detail += (detail.empty() ? "" : "; ") + std::string("t=") + fixed(f.t, 0) + " R*=" + fixed(f.R_star, 4) +
                  " relative " + sci(f.relative_gap) + " (t^{-1/(2h)} form " + sci(f.literal_gap) + ")";
    double worst_ratio = 0.0;
    for (std::size_t k = 1; k < fits.size(); ++k)
        worst_ratio = std::max(worst_ratio, fits[k].relative_gap / fits[k - 1].relative_gap);
    auto c = make_check("largest ratio of consecutive relative gaps, t = 10, 100, 1000", worst_ratio,
                        Relation::at_most, 1.0, 0.0, detail);
    c.passed = fits.size() == 3 && worst_ratio < 1.0;
    g.checks.push_back(c);
    return g;
}

// ---------------------------------------------------------------------------
// acceptance 7: Dirichlet decay and the giant

double scaled_giant_gap(Context& ctx, double h, const RadialProfile& G)
{
    const FriendlyGiant giant(ctx.profile(h), 1.0, 0.0);
    const double c = std::pow(h - 1.0, 1.0 / (h - 1.0));
    double gap = 0.0;
    for (std::size_t i = 0; i < G.size(); ++i)
        gap = std::max(gap, std::abs(G[i] - c * giant.spatial(G.center(i))));
    return gap;
}

CheckGroup acceptance_7(Context& ctx)
{
    CheckGroup g{"acceptance-7", "Dirichlet decay and giant", {}, 0.0};
    const FitWindow w{ctx.opt.tol.fit_t_lo, ctx.opt.tol.fit_t_hi};
    for (double h : kRunH) {
        for (int data = 0; data < 2; ++data) {
            const DirichletRun& run = ctx.dirichlet(h, data);
            const std::string tag = hname(h) + " data " + std::to_string(data);
            const RateFit fit = fit_decay_exponent(run.max, w);
            g.checks.push_back(make_check("max|u| exponent " + tag, fit.exponent, Relation::within,
                                          ctx.opt.tol.exponent, -1.0 / (h - 1.0),
                                          std::to_string(fit.samples) + " samples"));
            if (!run.giant) {
                g.checks.push_back(make_check("giant extraction " + tag, 1.0, Relation::at_most, 0.0, 0.0,
                                              "snapshots missing"));
                continue;
            }
            g.checks.push_back(make_check("sup|G - (h-1)^{1/(h-1)} X_{r0}| " + tag,
                                          scaled_giant_gap(ctx, h, run.giant->G), Relation::at_most,
                                          ctx.opt.tol.giant_gap, 0.0,
                                          "s = " + fixed(run.giant->s, 3) + ", sup|v(s) - v(s-1)| = " +
                                              sci(run.giant->stabilization) +
                                              (run.giant->converged ? " (converged)" : " (not yet below tolerance)")));
        }
        const DirichletRun& a = ctx.dirichlet(h, 0);
        const DirichletRun& b = ctx.dirichlet(h, 1);
        if (a.giant && b.giant) {
            double gap = 0.0;
            for (std::size_t i = 0; i < a.giant->G.size(); ++i)
                gap = std::max(gap, std::abs(a.giant->G[i] - b.giant->G[i]));
            g.checks.push_back(make_check("two data give one G " + hname(h), gap, Relation::at_most,
                                          ctx.opt.tol.giant_uniqueness));
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// acceptance 8: eigenvalue residual

CheckGroup acceptance_8(Context& ctx)
{
    CheckGroup g{"acceptance-8", "Eigenvalue residual", {}, 0.0};
    constexpr std::size_t kNodes = 513;
    auto line = std::make_shared<const Grid>(std::vector<double>{-1.0}, std::vector<double>{1.0},
                                             std::vector<std::size_t>{kNodes});
    for (double h : kAllH) {
        const FriendlyGiant giant(ctx.profile(h), 1.0, 0.0);
        const double c = std::pow(h - 1.0, 1.0 / (h - 1.0));
        Field f{line, std::vector<double>(kNodes), 0.0};
        for (std::size_t i = 0; i < kNodes; ++i)
            f.values[i] = c * giant.spatial(std::abs(line->coordinates(i)[0]));
        const EigenResidual er = eigen_residual(f, ctx.homogeneity(h));
        g.checks.push_back(make_check("exact profile, 513 nodes " + hname(h), er.sup, Relation::at_most,
                                      ctx.opt.tol.eigen_exact, 0.0,
                                      std::to_string(er.admitted_count) + " nodes admitted"));
    }
    for (double h : kRunH)
        for (int data = 0; data < 2; ++data) {
            const DirichletRun& run = ctx.dirichlet(h, data);
            const std::string tag = hname(h) + " data " + std::to_string(data);
            if (!run.giant) {
                g.checks.push_back(make_check("extracted profile " + tag, 1.0, Relation::at_most, 0.0, 0.0,
                                              "no extracted profile"));
                continue;
            }
            const EigenResidual er = eigen_residual(run.giant->G, ctx.homogeneity(h));
            g.checks.push_back(make_check("extracted profile " + tag, er.sup, Relation::at_most,
                                          ctx.opt.tol.eigen_extracted, 0.0,
                                          std::to_string(er.admitted_count) + " nodes admitted"));
        }
    return g;
}

// ---------------------------------------------------------------------------
// acceptance 9: Benilan-Crandall and monotonicity

CheckGroup acceptance_9(Context& ctx)
{
    CheckGroup g{"acceptance-9", "Benilan-Crandall and monotonicity", {}, 0.0};
    for (double h : kRunH) {
        const auto r = benilan_crandall_check(std::span<const RadialProfile>(ctx.cauchy(h).snapshots),
                                              ctx.homogeneity(h));
        g.checks.push_back(make_check("Cauchy run " + hname(h), r.worst_violation, Relation::at_most,
                                      ctx.opt.tol.bc_violation, 0.0, std::to_string(r.pairs) + " (t, tau) pairs"));
    }
    for (double h : kRunH)
        for (int data = 0; data < 2; ++data) {
            const auto r = benilan_crandall_check(std::span<const RadialProfile>(ctx.dirichlet(h, data).snapshots),
                                                  ctx.homogeneity(h));
            const std::string tag = hname(h) + " data " + std::to_string(data);
            g.checks.push_back(make_check("Dirichlet run " + tag, r.worst_violation, Relation::at_most,
                                          ctx.opt.tol.bc_violation, 0.0, std::to_string(r.pairs) + " (t, tau) pairs"));
            g.checks.push_back(make_check("t^{1/(h-1)} u nondecreasing, " + tag, r.worst_monotonicity,
                                          Relation::at_most, ctx.opt.tol.bc_monotonicity));
        }
    return g;
}

// ---------------------------------------------------------------------------
// acceptance 10: grid solver

double front_position(const Field& f, double level)
{
    const Grid& g = *f.grid;
    const std::size_t j = g.nodes(1) / 2;
    double pos = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < g.nodes(0); ++i) {
        const double a = f.values[g.flat({i, j, 0})];
        const double b = f.values[g.flat({i + 1, j, 0})];
        if (a > level && b <= level)
            pos = g.coordinates(g.flat({i, j, 0}))[0] + (a - level) / (a - b) * g.spacing(0);
    }
    return pos;
}

// Two runs on the unit disc from ordered data, with a shared step size.
void ordering_checks(Context& ctx, CheckGroup& g)
{
    auto disc = std::make_shared<const Grid>(std::vector<double>{-1.0, -1.0}, std::vector<double>{1.0, 1.0},
                                             std::vector<std::size_t>{65, 65},
                                             [](Point x) { return x[0] * x[0] + x[1] * x[1] < 1.0; });
    auto u0 = [](Point x) {
        const double r2 = x[0] * x[0] + x[1] * x[1];
        return std::max(0.0, 1.0 - r2) * (1.2 + 0.5 * std::sin(3.0 * x[0] + 0.4) * std::cos(2.0 * x[1]));
    };
    auto v0 = [&](Point x) {
        const double r2 = x[0] * x[0] + x[1] * x[1];
        return u0(x) + 0.2 * std::max(0.0, 0.25 - r2 - 0.1 * x[0]);
    };
    const GridProblem P{disc, [&](Point x, double t) { return t == 0.0 ? u0(x) : 0.0; }};
    const GridProblem Q{disc, [&](Point x, double t) { return t == 0.0 ? v0(x) : 0.0; }};
    double ordering = 0.0;
    double excess = 0.0;
    double negative = 0.0;
    std::string detail;
    for (double h : kRunH) {
        SchemeParams p(ctx.homogeneity(h));
        p.delta = 1e-3;
        p.workers = ctx.opt.workers;
        Field u = initial_field(P, 0.0);
        Field v = initial_field(Q, 0.0);
        const double bu = u.max_abs();
        const double bv = v.max_abs();
        constexpr double t_end = 0.1;
        std::size_t steps = 0;
        while (u.t < t_end) {
            const double dt = std::min({grid_cfl_dt(u, p), grid_cfl_dt(v, p), t_end - u.t});
            u = grid_step(u, P, p, dt);
            v = grid_step(v, Q, p, dt);
            ++steps;
            for (std::size_t k = 0; k < u.values.size(); ++k)
                ordering = std::max(ordering, u.values[k] - v.values[k]);
            excess = std::max({excess, u.max_abs() - bu, v.max_abs() - bv});
            negative = std::max({negative, -u.min_active(), -v.min_active()});
        }
        detail += (detail.empty() ? "" : ", ") + hname(h) + " " + std::to_string(steps) + " steps";
    }
    detail = "disc 65x65, aligned, delta 1e-3, t 0->0.1: " + detail;
    g.checks.push_back(make_check("ordering max(u - v)", ordering, Relation::at_most, ctx.opt.tol.ordering, 0.0, detail));
    g.checks.push_back(make_check("maximum bound max|u| - max|u0|", std::max(0.0, excess), Relation::at_most,
                                  ctx.opt.tol.maximum_principle, 0.0, detail));
    g.checks.push_back(make_check("sign preservation -min u", std::max(0.0, negative), Relation::at_most,
                                  ctx.opt.tol.maximum_principle, 0.0, detail));
}

CheckGroup grid_properties(Context& ctx)
{
    CheckGroup g{"grid-properties", "Grid ordering, maximum bound and sign", {}, 0.0};
    ordering_checks(ctx, g);
    return g;
}

CheckGroup acceptance_10(Context& ctx)
{
    CheckGroup g{"acceptance-10", "2-D grid solver", {}, 0.0};
    {
        // Box shifted by half a cell so the origin is not a node.
        const Homogeneity H = ctx.homogeneity(3.0);
        const Barenblatt B(H, 1.0);
        constexpr std::size_t n = 129;
        constexpr double L = 1.5;
        const double dx = 2.0 * L / (n - 1);
        auto box = std::make_shared<const Grid>(std::vector<double>{-L + dx / 2, -L + dx / 2},
                                                std::vector<double>{L + dx / 2, L + dx / 2},
                                                std::vector<std::size_t>{n, n});
        const GridProblem P{box, [&](Point x, double t) { return B(x, t); }};
        SchemeParams p(H);
        p.delta = 1e-3;
        p.workers = ctx.opt.workers;
        Field f = initial_field(P, 1.0);
        const double bound = f.max_abs();
        double excess = 0.0;
        GridEvolveOptions o;
        o.on_step = [&](const Field& u, double) { excess = std::max(excess, u.max_abs() - bound); };
        f = grid_evolve(f, P, p, 2.0, o);
        double err = 0.0;
        for (std::size_t k = 0; k < box->size(); ++k)
            err = std::max(err, std::abs(f.values[k] - B(box->coordinates(k), 2.0)));
        g.checks.push_back(make_check("Barenblatt h=3, 129x129, t 1->2, max-norm error", err, Relation::at_most,
                                      ctx.opt.tol.grid_error));
        g.checks.push_back(make_check("maximum bound on the Barenblatt run", std::max(0.0, excess), Relation::at_most,
                                      ctx.opt.tol.maximum_principle));
    }
    {
        const Homogeneity H = ctx.homogeneity(2.0);
        const TravelingWave W(H, {1.0, 0.0}, 1.0);
        auto box = std::make_shared<const Grid>(std::vector<double>{-1.0, -0.5}, std::vector<double>{3.0, 0.5},
                                                std::vector<std::size_t>{129, 33});
        const GridProblem P{box, [&](Point x, double t) { return W(x, t); }};
        SchemeParams p(H);
        p.delta = 1e-3;
        p.workers = ctx.opt.workers;
        Field f = initial_field(P, 0.5);
        const double x0 = front_position(f, 1e-6);
        f = grid_evolve(f, P, p, 1.5);
        const double x1 = front_position(f, 1e-6);
        const double dx = box->spacing(0);
        g.checks.push_back(make_check("wave h=2 front speed error over unit time", std::abs((x1 - x0) - W.c()),
                                      Relation::at_most, ctx.opt.tol.front_speed_cells * dx, 0.0,
                                      "front " + fixed(x0, 4) + " -> " + fixed(x1, 4) + ", dx " + fixed(dx, 4)));
    }
    ordering_checks(ctx, g);
    return g;
}

// ---------------------------------------------------------------------------
// acceptance 11: mutations

CheckGroup run_group_in(std::string_view id, Context& ctx);

CheckGroup acceptance_11(Context& ctx)
{
    CheckGroup g{"acceptance-11", "Mutation sensitivity", {}, 0.0};
    for (Mutation m : {Mutation::c_h_exponent, Mutation::d_h_exponent, Mutation::even_flux}) {
        CheckOptions o = ctx.opt;
        o.mutation = m;
        o.log = nullptr;
        Context mutated(o);
        int failed = 0;
        std::string detail;
        for (std::string_view id : {"acceptance-1", "acceptance-2", "acceptance-4"}) {
            const CheckGroup r = run_group_in(id, mutated);
            if (r.passed())
                continue;
            ++failed;
            for (const auto& c : r.checks)
                if (!c.passed) {
                    detail = std::string(id) + " fails: " + c.name + " = " + sci(c.measured);
                    break;
                }
            break;
        }
        g.checks.push_back(make_check(std::string("mutation ") + std::string(to_string(m)) + " trips 1, 2 or 4",
                                      failed, Relation::at_least, 1.0, 0.0, detail.empty() ? "undetected" : detail));
    }
    return g;
}

// ---------------------------------------------------------------------------
// smaller property groups

CheckGroup operator_examples(Context&)
{
    CheckGroup g{"operator-examples", "Operator worked examples", {}, 0.0};
    const Homogeneity h2(2.0);
    const Homogeneity h3(3.0);
    auto near = [&](std::string name, double got, double want) {
        g.checks.push_back(make_check(std::move(name), got, Relation::within, 1e-14 * std::max(1.0, std::abs(want)), want));
    };
    near("F(I, (1,0)), h=3", eval_operator(SymmetricMatrix::identity(2), {1.0, 0.0}, h3), 1.0);
    near("F(diag(1,2), (3,4)), h=2", eval_operator(SymmetricMatrix::diagonal(std::vector<double>{1.0, 2.0}), {3.0, 4.0}, h2),
         8.2);
    near("F(M, 0), h=2", eval_operator(SymmetricMatrix::diagonal(std::vector<double>{5.0, -3.0}), {0.0, 0.0}, h2), 0.0);
    near("A(I):I, p=0, eps 0.5, delta 1, h=2",
         eval_regularized(SymmetricMatrix::identity(2), {0.0, 0.0}, 0.5, 1.0, h2), 1.0);
    near("A((1,1)):diag(2,-2), h=3",
         eval_regularized(SymmetricMatrix::diagonal(std::vector<double>{2.0, -2.0}), {1.0, 1.0}, 0.0, 0.0, h3), 0.0);
    const auto A = regularized_matrix({0.0, 2.0}, 1.0, 1.0, h2).matrix();
    near("A((0,2)) entry (1,1), eps 1, delta 1, h=2", A(1, 1), 1.0 + 4.0 / std::sqrt(5.0));
    near("linear(0.5) at u = 2", SourceTerm::linear(0.5, 1.0)(2.0), 1.0);
    near("bounded_slope(1) at u = pi", SourceTerm::bounded_slope(1.0, 1.0)(std::numbers::pi), 0.0);
    return g;
}

CheckGroup operator_regularization(Context& ctx)
{
    CheckGroup g{"operator-regularization", "Regularization consistency", {}, 0.0};
    Sampler s(mix(ctx.opt.seed, "regularization"));
    double worst_last = 0.0;
    int increases = 0;
    for (int i = 0; i < 200; ++i) {
        const int d = 1 + i % 3;
        const Homogeneity H(kAllH[static_cast<std::size_t>(i % 4)]);
        const SymmetricMatrix M(random_symmetric(s, d));
        const GradientVector p(random_vector(s, d, s.uniform(0.5, 2.0)));
        const double exact = eval_operator(M, p, H);
        const double scale = M.matrix().norm() * std::pow(p.norm(), H.h() - 1.0);
        double prev = std::numeric_limits<double>::infinity();
        double gap = 0.0;
        for (int k = 1; k <= 8; ++k) {
            const double e = std::pow(10.0, -k);
            gap = std::abs(eval_regularized(M, p, e, e, H) - exact) / scale;
            if (gap > prev * (1.0 + 1e-9) + 1e-15)
                ++increases;
            prev = gap;
        }
        worst_last = std::max(worst_last, gap);
    }
    g.checks.push_back(make_check("relative gap at eps = delta = 1e-8", worst_last, Relation::at_most, 1e-6, 0.0,
                                  "200 samples with |p| in [0.5, 2]"));
    g.checks.push_back(make_check("gap increases along eps = delta = 10^{-k}", increases, Relation::at_most, 0.0));
    return g;
}

CheckGroup exact_constants(Context& ctx)
{
    CheckGroup g{"exact-constants", "Closed-form constants", {}, 0.0};
    for (double h : kAllH) {
        const Homogeneity H = ctx.homogeneity(h);
        const double a = H.alpha();
        const double closed = H.kappa() * std::sqrt(std::numbers::pi) * std::tgamma(0.5 * (a + 1.0)) /
                              std::tgamma(0.5 * a + 1.0);
        g.checks.push_back(make_check("Rbar vs Gamma-function form " + hname(h),
                                      std::abs(ctx.profile(h)->Rbar() - closed) / closed, Relation::at_most, 1e-10));
        g.checks.push_back(make_check("kappa^{h+1} = 2 alpha " + hname(h),
                                      std::abs(std::pow(H.kappa(), h + 1.0) - 2.0 * a) / (2.0 * a), Relation::at_most,
                                      1e-14));
    }
    const Barenblatt B(ctx.homogeneity(3.0), 1.0);
    g.checks.push_back(make_check("Barenblatt h=3 R=1 centre value at t=1", B.radial(0.0, 1.0), Relation::within,
                                  1e-15, 0.25));
    return g;
}

CheckGroup radial_conservation(Context& ctx)
{
    CheckGroup g{"radial-conservation", "Radial mass conservation", {}, 0.0};
    for (double h : kRunH) {
        const Homogeneity H = ctx.homogeneity(h);
        auto p = RadialProfile::sample(3.0, 400, [](double r) { return bump(r, 1.0); },
                                       {OuterBoundary::zero_flux, 0.0}, 0.0);
        const double m0 = p.mass();
        const RadialProfile q = radial_evolve(p, H, 1.0);
        g.checks.push_back(make_check("mass drift per unit time, zero flux, n=400 " + hname(h),
                                      std::abs(q.mass() - m0), Relation::at_most, 1e-10, 0.0,
                                      "mass " + fixed(m0, 12)));
    }
    return g;
}

CheckGroup radial_monotone(Context& ctx)
{
    CheckGroup g{"radial-monotone", "Radial monotonicity preservation", {}, 0.0};
    Sampler s(mix(ctx.opt.seed, "monotone"));
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const Homogeneity H = ctx.homogeneity(kAllH[static_cast<std::size_t>(trial % 4)]);
        RadialProfile p(1.0, 32, {OuterBoundary::dirichlet, 0.0}, 0.0);
        auto v = p.values();
        double level = 0.0;
        for (std::size_t i = v.size(); i-- > 0;) {
            level += s.uniform(0.0, 0.1);
            v[i] = level;
        }
        const RadialProfile q = radial_step(p, H, cfl_dt(p, H));
        for (std::size_t i = 0; i + 1 < q.size(); ++i)
            worst = std::max(worst, q[i + 1] - q[i]);
    }
    g.checks.push_back(make_check("largest increase after one step, 200 decreasing profiles, n=32", worst,
                                  Relation::at_most, 0.0));
    return g;
}

using GroupFn = CheckGroup (*)(Context&);

const std::vector<std::pair<std::string, GroupFn>>& registry()
{
    static const std::vector<std::pair<std::string, GroupFn>> r{
        {"acceptance-1", acceptance_1},
        {"acceptance-2", acceptance_2},
        {"acceptance-3", acceptance_3},
        {"acceptance-4", acceptance_4},
        {"acceptance-5", acceptance_5},
        {"acceptance-6", acceptance_6},
        {"acceptance-7", acceptance_7},
        {"acceptance-8", acceptance_8},
        {"acceptance-9", acceptance_9},
        {"acceptance-10", acceptance_10},
        {"acceptance-11", acceptance_11},
        {"operator-examples", operator_examples},
        {"operator-regularization", operator_regularization},
        {"exact-constants", exact_constants},
        {"radial-conservation", radial_conservation},
        {"radial-monotone", radial_monotone},
        {"grid-properties", grid_properties},
    };
    return r;
}

const std::map<std::string, std::vector<std::string>, std::less<>>& suites()
{
    static const std::map<std::string, std::vector<std::string>, std::less<>> s = [] {
        std::map<std::string, std::vector<std::string>, std::less<>> m{
            {"operator", {"operator-examples", "acceptance-3", "operator-regularization"}},
            {"exact", {"exact-constants", "acceptance-1", "acceptance-2"}},
            {"radial", {"acceptance-4", "radial-conservation", "radial-monotone"}},
            {"grid", {"acceptance-10"}},
            {"asymptotics", {"acceptance-5", "acceptance-6", "acceptance-7", "acceptance-8", "acceptance-9"}},
            {"mutation", {"acceptance-11"}},
            {"default",
             {"operator-examples", "acceptance-3", "exact-constants", "acceptance-1", "acceptance-2",
              "radial-conservation", "radial-monotone", "grid-properties"}},
            {"acceptance", {}},
        };
        for (int i = 1; i <= kAcceptanceCriteria; ++i)
            m["acceptance"].push_back("acceptance-" + std::to_string(i));
        for (const auto& [id, fn] : registry())
            m.emplace(id, std::vector<std::string>{id});
        return m;
    }();
    return s;
}

CheckGroup run_group_in(std::string_view id, Context& ctx)
{
    for (const auto& [name, fn] : registry()) {
        if (name != id)
            continue;
        const auto t0 = Clock::now();
        CheckGroup g = fn(ctx);
        g.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
        return g;
    }
    throw std::invalid_argument("unknown check group '" + std::string(id) + "'");
}

std::string_view relation_symbol(Relation r)
{
    switch (r) {
    case Relation::at_most:
        return "<=";
    case Relation::at_least:
        return ">=";
    case Relation::within:
        return "within";
    }
    return "?";
}

}  // namespace

CheckResult make_check(std::string name, double measured, Relation relation, double bound, double reference,
                       std::string detail)
{
    CheckResult c{std::move(name), measured, reference, bound, relation, false, std::move(detail)};
    switch (relation) {
    case Relation::at_most:
        c.passed = measured <= bound;
        break;
    case Relation::at_least:
        c.passed = measured >= bound;
        break;
    case Relation::within:
        c.passed = std::abs(measured - reference) <= bound;
        break;
    }
    // NaN compares false everywhere, so it fails
    return c;
}

bool CheckGroup::passed() const
{
    return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

bool SuiteResult::passed() const
{
    return !groups.empty() && std::all_of(groups.begin(), groups.end(), [](const CheckGroup& g) { return g.passed(); });
}

const std::vector<std::string>& check_group_ids()
{
    static const std::vector<std::string> ids = [] {
        std::vector<std::string> v;
        for (const auto& [id, fn] : registry())
            v.push_back(id);
        return v;
    }();
    return ids;
}

const std::vector<std::string>& suite_names()
{
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v{"default", "operator", "exact", "radial", "grid", "asymptotics", "mutation", "acceptance"};
        for (const auto& id : check_group_ids())
            v.push_back(id);
        return v;
    }();
    return names;
}

std::string format_check(const CheckResult& c)
{
    std::ostringstream s;
    s << (c.passed ? "[PASS] " : "[FAIL] ") << c.name << ": " << sci(c.measured, 4) << ' ' << relation_symbol(c.relation)
      << ' ' << sci(c.bound, 2);
    if (c.relation == Relation::within)
        s << " of " << sci(c.reference, 4);
    if (!c.detail.empty())
        s << " (" << c.detail << ')';
    return s.str();
}

CheckGroup run_group(std::string_view id, const CheckOptions& options)
{
    Context ctx(options);
    return run_group_in(id, ctx);
}

SuiteResult run_suite(std::string_view suite, const CheckOptions& options)
{
    const auto it = suites().find(suite);
    if (it == suites().end())
        throw std::invalid_argument("unknown suite '" + std::string(suite) + "'");
    Context ctx(options);
    SuiteResult result{std::string(suite), options.mutation, {}, 0.0};
    const auto t0 = Clock::now();
    for (const auto& id : it->second) {
        if (options.log)
            *options.log << "== " << id << '\n' << std::flush;
        CheckGroup g = run_group_in(id, ctx);
        if (options.log) {
            for (const auto& c : g.checks)
                *options.log << "  " << format_check(c) << '\n';
            *options.log << "  -> " << (g.passed() ? "PASS" : "FAIL") << " (" << fixed(g.seconds, 1) << " s)\n"
                         << std::flush;
        }
        result.groups.push_back(std::move(g));
    }
    result.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return result;
}

nlohmann::json to_json(const CheckGroup& group)
{
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : group.checks) {
        nlohmann::json j{{"name", c.name},
                         {"measured", c.measured},
                         {"relation", relation_symbol(c.relation)},
                         {"bound", c.bound},
                         {"passed", c.passed}};
        if (c.relation == Relation::within)
            j["reference"] = c.reference;
        if (!c.detail.empty())
            j["detail"] = c.detail;
        checks.push_back(std::move(j));
    }
    return {{"id", group.id},
            {"title", group.title},
            {"passed", group.passed()},
            {"seconds", group.seconds},
            {"checks", std::move(checks)}};
}

nlohmann::json to_json(const SuiteResult& result)
{
    nlohmann::json groups = nlohmann::json::array();
    for (const auto& g : result.groups)
        groups.push_back(to_json(g));
    return {{"suite", result.suite},
            {"mutation", to_string(result.mutation)},
            {"passed", result.passed()},
            {"seconds", result.seconds},
            {"groups", std::move(groups)}};
}

}  // namespace infheat
