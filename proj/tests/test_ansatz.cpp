#include "doctest.h"

#include "forge/ansatz.hpp"
#include "forge/expression.hpp"
#include "test_support.hpp"

#include <cmath>

using namespace forge;
using namespace forge::test;
namespace bm = boost::multiprecision;

namespace {

// int sqrt(1 - 2mu/r) dr in closed form.
double xi_closed(double mu, double r) {
    double s = std::sqrt(r * r - 2 * mu * r);
    return s - mu * std::log(r - mu + s);
}

}  // namespace

TEST_CASE("aux1 coefficients reproduce the literal table") {
    SchwarzschildParams sp;
    AnsatzMetric m = build_primary(PrimaryKind::aux1, sp);
    SchwarzschildFields sf = schwarzschild_fields(sp);
    GridSpec g = box(-0.25, 2, 0.4, 2.5, 0, 6);
    for (const auto& p : random_points(g, 100)) {
        real r = sf.r(p);
        CHECK(d(m.g2(p)) == -1);
        CHECK(d(bm::abs(m.g3(p) + r * r)) <= 1e-25);
        CHECK(d(bm::abs(m.h4(p) + r * r * bm::sin(p.x3) * bm::sin(p.x3))) <= 1e-25);
        CHECK(d(bm::abs(m.h5(p) - (1 - 2 / r))) <= 1e-25);
    }
}

TEST_CASE("tortoise-like chart against its closed form") {
    const double mu = 1, r0 = 3;
    for (double r : {2.5, 3.0, 4.2, 7.9}) {
        ChartValues cv = schwarzschild_chart(mu, 0, r, r0);
        CHECK(std::abs(d(cv.xi) - (xi_closed(mu, r) - xi_closed(mu, r0))) <= 1e-9);
        CHECK(std::abs(d(cv.varpi2) - (1 - 2 * mu / r)) <= 1e-15);
    }
}

TEST_CASE("chart patch touching the horizon is rejected") {
    SchwarzschildParams sp;
    sp.r_min = 1.5;
    CHECK_THROWS_AS(build_primary(PrimaryKind::aux1, sp), Error);
    try {
        build_primary(PrimaryKind::aux1, sp);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::horizon_domain);
    }
}

TEST_CASE("pp-wave primary: h4 h5 = -1/4 and harmonic builtins") {
    AnsatzMetric m = build_primary(PrimaryKind::aux5, PpWaveChoice{});
    GridSpec g = box(1.2, 2, 0.1, 0.9, 0.3, 2.8);
    for (const auto& p : random_points(g, 50)) CHECK(d(bm::abs(m.h4(p) * m.h5(p) + real(0.25))) <= 1e-30);

    FdConfig cfg;
    for (PpWaveKind k : {PpWaveKind::plane_monochromatic, PpWaveKind::wave_packet}) {
        PpWaveChoice w;
        w.kind = k;
        ScalarField kap = pp_kappa(w);
        ScalarField lap = partial2_field(kap, Axis::x2, cfg) + partial2_field(kap, Axis::x3, cfg);
        real worst = 0;
        for (const auto& p : random_points(box(0.5, 2, 0.5, 2, -0.9, 0.9), 1000, 11))
            worst = std::max(worst, bm::abs(lap(p)));
        CHECK(d(worst) <= 1e-10);
    }
    ScalarField bad = parse_field("x2^2 * sin(v)");
    CHECK_THROWS_AS(check_harmonic(bad, box(1, 2, 1, 2, 0, 1), real(1e-10)), Error);
}
