#include "doctest.h"

#include "forge/expression.hpp"
#include "forge/generators.hpp"
#include "test_support.hpp"

#include <cmath>

using namespace forge;
using namespace forge::test;
namespace bm = boost::multiprecision;

namespace {

// Midpoint sum with Kahan compensation; the brute-force side of the
// quadrature checks.
template <class F>
double midpoint(F f, double a, double b, long panels) {
    const double h = (b - a) / panels;
    long double s = 0, comp = 0;
    for (long k = 0; k < panels; ++k) {
        long double y = f(a + (k + 0.5) * h) - comp;
        long double t = s + y;
        comp = (t - s) - y;
        s = t;
    }
    return double(s * h);
}

double sech(double x) { return 1 / std::cosh(x); }

}  // namespace

TEST_CASE("sine-Gordon kink: q** = sin q with exact derivatives") {
    ScalarField q = sine_gordon_field(1, ScalarField::coordinate(Axis::v));
    ScalarField qvv = *(*q.exact_partial(Axis::v)).exact_partial(Axis::v);
    real worst = 0;
    for (int k = 0; k <= 1000; ++k) {
        ChartPoint p = at(0, 0, -5 + 0.01 * k);
        worst = std::max(worst, bm::abs(qvv(p) - bm::sin(q(p))));
        CHECK(d(bm::abs(sine_gordon_ddq(p.v, 1) - bm::sin(sine_gordon_q(p.v, 1)))) <= 1e-30);
    }
    CHECK(d(worst) <= 1e-12);
    // the user expression is the same field
    ScalarField u = parse_field("4*atan(exp(v))");
    CHECK(d(bm::abs(u(at(0, 0, 0.37)) - q(at(0, 0, 0.37)))) <= 1e-32);
}

TEST_CASE("KdV travelling wave: exact and fd residuals") {
    KdvTravel k = kdv_travelling(1, real(0.5), 1);
    CHECK(d(k.A) == 2);
    ScalarField eta = kdv_travelling_field(k);
    ChartPoint p = at(0.3, -0.1, 0.4);
    CHECK(d(bm::abs(kdv_soliton_residual(eta, p, 1))) <= 1e-28);
    FdConfig cfg;
    cfg.policy = DerivPolicy::fd_only;
    cfg.h.fill(real(1e-3));
    real r1 = bm::abs(kdv_soliton_residual(eta, p, 1, cfg));
    cfg.h.fill(real(1e-3) / 16);
    real r16 = bm::abs(kdv_soliton_residual(eta, p, 1, cfg));
    CHECK(d(r1) <= 1e-6);
    CHECK(d(r16) < d(r1) / 1000);
}

TEST_CASE("Poisson solver recovers a harmonic function") {
    GridSpec g;
    g.x2 = {0, 1, 65};
    g.x3 = {0, 1, 65};
    ScalarField exact = parse_field("x2^2 - x3^2 + x2*x3");
    PoissonReport rep;
    ScalarField psi = solve_psi_poisson(0, g, exact, {}, &rep);
    CHECK(d(rep.residual) <= 1e-12);
    real worst = 0;
    for (int i = 1; i < 64; ++i)
        for (int j = 1; j < 64; ++j) {
            ChartPoint p = at(i / 64.0, j / 64.0, 0);
            worst = std::max(worst, bm::abs(psi(p) - exact(p)));
        }
    CHECK(d(worst) <= 1e-6);
    CHECK(d(bm::abs(psi(at(0.3137, 0.771, 0)) - exact(at(0.3137, 0.771, 0)))) <= 1e-6);
    CHECK_THROWS_AS(psi(at(1.5, 0.5, 0)), Error);
}

TEST_CASE("Liouville potential solves its equation") {
    FdConfig cfg;
    for (auto [c, k] : {std::pair{0.5, 1}, std::pair{-0.5, 2}, std::pair{-1.0, 1}}) {
        ScalarField psi = liouville_psi(c, k, 0, -1);
        ScalarField lap = partial2_field(psi, Axis::x2, cfg) + partial2_field(psi, Axis::x3, cfg);
        ChartPoint p = at(0.3, 0.4, 0);
        CHECK(d(bm::abs(lap(p) - real(c) * bm::exp(k * psi(p)))) <= 1e-25);
    }
}

TEST_CASE("string pipeline passes the reduced suite") {
    SolitonChoice q;
    q.a2 = real(0.3);
    q.a3 = real(-0.2);
    ScalarField psi = liouville_psi(0.5, 1, 0, -1);
    GridSpec g = box(1.5, 2, 0, 0.5, 0.5, 1.5);
    StringOptions so;
    so.p_lo = real(0.4);
    so.probes = {at(1.5, 0, 0.5), at(2, 0.5, 1.5)};
    AnsatzMetric m = solitonic_string_metric(q, PpWaveChoice{}, 1, psi, real(0.1), {real(0.2), real(0.1)},
                                             {ScalarField::coordinate(Axis::x2), ScalarField(1)}, so);
    CHECK(d(m.lambda) == -0.25);
    CHECK(d(max_reduced(m, g)) <= 1e-25);
    CHECK_THROWS_AS(solitonic_string_metric(q, PpWaveChoice{}, 0, psi, 0, {0, 0}, {0, 0}, so), Error);
}

TEST_CASE("vacuum solitonic metric: reduced, LC and curl guard") {
    ScalarField b = parse_field("x2^2 - x3^2");
    GridSpec g = box(1.5, 2, 0, 0.5, 0.5, 1.5);
    AnsatzMetric m =
        vacuum_solitonic_metric(b, SolitonChoice{}, PpWaveChoice{}, 2, parse_field("x2*x3"), parse_field("x2^2/2"), g);
    CHECK(d(max_reduced(m, g)) <= 1e-25);
    ResidualEngine eng(m, FdConfig::from_grid(g, DerivPolicy::prefer_exact), LcOptions{0, 1, 1});
    for (const auto& p : g.points()) {
        EvalCache c;
        LCResiduals r = eng.lc(p, c);
        CHECK(d(bm::abs(r.c3)) <= 1e-10);
        CHECK(d(bm::abs(r.c4)) <= 1e-10);
    }
    CHECK_THROWS_AS(vacuum_solitonic_metric(b, SolitonChoice{}, PpWaveChoice{}, 2, parse_field("x3"), 0, g), Error);
}

TEST_CASE("stationary deformation of the aux1 chart") {
    SchwarzschildParams sp;
    GridSpec g = box(0.5, 2, 0.8, 1.4, 0.5, 1.5);
    AnsatzMetric m = stationary_deformation(sp, parse_field("(1 + x3^2/10)*exp(v/3)"), 2, 0, 0, 0);
    CHECK(d(max_reduced(m, g)) <= 1e-25);
    CHECK_THROWS_AS(stationary_deformation(sp, parse_field("1 + x3^2"), 2, 0, 0, 0), Error);
    AnsatzMetric pm = polarized_aux1(sp, 1, parse_field("1 + 0.01*v"), real(0.1));
    CHECK(pm.status == "unverified");
}

TEST_CASE("rotoid horizon: eps = 0 and the closed root") {
    SchwarzschildParams sp;
    RotoidParams rp;
    RotoidHorizon h0 = rotoid_horizon(sp, rp, real(0.7));
    CHECK(d(bm::abs(h0.r_root - 2)) <= 1e-12);
    sp.eps = real(1e-3);
    for (double phi : {0.0, 1.0, 2.5, 4.0}) {
        RotoidHorizon h = rotoid_horizon(sp, rp, real(phi));
        double want = 2 / (1 + 1e-3 * std::sin(phi) / 4);
        CHECK(std::abs(d(h.r_root) - want) <= 1e-14);
        CHECK_FALSE(h.warn_large_eps);
    }
    sp.eps = real(0.2);
    CHECK(rotoid_horizon(sp, rp, real(1)).warn_large_eps);
}

TEST_CASE("small-eps polarizations with matched chains") {
    ScalarField ratio = parse_field("2 + x2");
    ScalarField q51 = parse_field("x3*v"), q52 = parse_field("v^2");
    SmallEpsChain ch = match_q4(q51, q52, ratio);
    GridSpec g = box(0.1, 1, 0.1, 1, 0.1, 1);
    SmallEpsResult r = small_eps_polarizations(ch, real(1e-2), ratio, g.points());
    for (const auto& p : random_points(g, 20)) {
        CHECK(d(bm::abs(r.match0(p))) <= 1e-30);
        CHECK(d(bm::abs(r.match1(p))) <= 1e-30);
    }
    SmallEpsChain flat{1, 0, 0, 0};
    CHECK(small_eps_polarizations(flat, real(1e-2), ratio, g.points()).schwarzschild_limit);
}

TEST_CASE("extra-dimension metric and its quadratures") {
    ExtraDimSpec e;
    e.f = parse_field("2 + sech(v)^2");
    e.n_k2 = {ScalarField(1), ScalarField::coordinate(Axis::x2)};
    e.v_lo = real(0.5);
    e.probes = {at(0.1, 0.1, 0.5), at(0.4, 0.4, 1.5)};
    const real lambda = real(-0.5);
    ExtraDimParts parts = extradim_parts(e, liouville_psi(lambda, 2), lambda);
    GridSpec g = box(0.1, 0.4, 0.1, 0.4, 0.5, 1.5);
    CHECK(d(max_reduced(parts.metric, g)) <= 1e-25);

    auto f = [](double v) { return 2 + sech(v) * sech(v); };
    auto fv = [](double v) { return -2 * sech(v) * sech(v) * std::tanh(v); };
    const long panels = 1000000;
    for (double v : {0.9, 1.5}) {
        double I = midpoint([&](double s) { return fv(s) * f(s); }, 0.5, v, panels);
        double varsigma = 1 / (1 - I);  // S0 = 1, K = 2 eps4 lambda h0^2 = -1
        CHECK(std::abs(d(parts.integral(at(0.2, 0.2, v))) - I) <= 1e-7);
        CHECK(std::abs(d(parts.varsigma(at(0.2, 0.2, v))) - varsigma) <= 1e-7);
        double In = midpoint(
            [&](double s) {
                double Is = (f(s) * f(s) - f(0.5) * f(0.5)) / 2;
                return fv(s) * fv(s) / (1 - Is) / std::pow(f(s), 3);
            },
            0.5, v, panels);
        CHECK(std::abs(d(parts.n_integral(at(0.2, 0.2, v))) - In) <= 1e-7);
    }
    // sourceless limit: constant varsigma, w = 0
    ExtraDimParts lit = extradim_parts(
        [&] {
            ExtraDimSpec s = e;
            s.literal = true;
            s.lambda_H = 0;
            return s;
        }(),
        0, 0);
    CHECK(lit.metric.nconn.w2.is_zero());
}
