#include "doctest.h"

#include "forge/dcalculus.hpp"
#include "forge/expression.hpp"
#include "test_support.hpp"

using namespace forge;
using namespace forge::test;
namespace bm = boost::multiprecision;

TEST_CASE("h-sector curvature of a conformally flat metric") {
    // g2 = g3 = -e^psi  =>  R = e^{-psi} (psi_22 + psi_33) / 2
    AnsatzMetric m;
    ScalarField psi = parse_field("x2^2*x3 + sin(x3)");
    m.g2 = m.g3 = -exp(psi);
    m.h4 = -1;
    m.h5 = parse_field("exp(2*v)");
    GridSpec g = box(0.2, 1, 0.2, 1, 0, 1);
    ResidualEngine eng(m, FdConfig::from_grid(g, DerivPolicy::prefer_exact));
    for (const auto& p : random_points(g, 20)) {
        EvalCache c;
        real lap = 2 * p.x3 - bm::sin(p.x3);
        real want = bm::exp(-psi(p)) * lap / 2;
        CHECK(d(bm::abs(eng.curvature_h(p, c) - want)) <= 1e-28);
    }
}

TEST_CASE("v-sector curvature closed forms") {
    AnsatzMetric m;
    m.h4 = -1;
    m.h5 = parse_field("exp(2*v)");
    GridSpec g = box(0.2, 1, 0.2, 1, 0.5, 1.5);
    ResidualEngine e1(m, FdConfig::from_grid(g, DerivPolicy::prefer_exact));
    EvalCache c;
    CHECK(d(bm::abs(e1.curvature_v(at(0.5, 0.5, 0.7), c) - 1)) <= 1e-30);

    m.h4 = ScalarField::coordinate(Axis::v);
    m.h5 = parse_field("v^2");
    ResidualEngine e2(m, FdConfig::from_grid(g, DerivPolicy::prefer_exact));
    real v = real(0.9);
    EvalCache c2;
    CHECK(d(bm::abs(e2.curvature_v(at(0.5, 0.5, 0.9), c2) - 1 / (2 * v * v * v))) <= 1e-30);
}

TEST_CASE("fd-only residuals converge to the exact ones") {
    AnsatzMetric m;
    m.g2 = m.g3 = parse_field("-exp(x2*x3)");
    m.h4 = parse_field("-(1 + x2^2)*exp(v)");
    m.h5 = parse_field("cosh(v)^2 + x3");
    m.nconn.w2 = parse_field("x3*v");
    m.nconn.n3 = parse_field("sin(v)*x2");
    GridSpec g = box(0.5, 1, 0.5, 1, 0.5, 1);
    ChartPoint p = at(0.7, 0.8, 0.75);
    ReducedResiduals ex = reduced_residuals(m, p, FdConfig::from_grid(g, DerivPolicy::prefer_exact));
    g.h.fill(real(1e-3));
    ReducedResiduals fd = reduced_residuals(m, p, FdConfig::from_grid(g, DerivPolicy::fd_only));
    CHECK(d(bm::abs(ex.r_h - fd.r_h)) <= 1e-9);
    CHECK(d(bm::abs(ex.r_v - fd.r_v)) <= 1e-9);
    CHECK(d(bm::abs(ex.r_w2 - fd.r_w2)) <= 1e-9);
    CHECK(d(bm::abs(ex.r_n3 - fd.r_n3)) <= 1e-9);
}

TEST_CASE("degenerate v-metric and holonomic frames") {
    AnsatzMetric m;
    m.h4 = -1;
    m.h5 = 2;
    GridSpec g = box(0, 1, 0, 1, 0, 1);
    CHECK_THROWS_AS(reduced_residuals(m, at(0.5, 0.5, 0.5), FdConfig::from_grid(g, DerivPolicy::prefer_exact)),
                    Error);
    m.h5 = parse_field("exp(v)");
    AnholonomyCoeffs a = anholonomy(m, at(0.5, 0.5, 0.5), FdConfig::from_grid(g, DerivPolicy::prefer_exact));
    CHECK(a.holonomic(real(0)));
    m.nconn.w2 = parse_field("x3");
    a = anholonomy(m, at(0.5, 0.5, 0.5), FdConfig::from_grid(g, DerivPolicy::prefer_exact));
    CHECK_FALSE(a.holonomic(real(1e-12)));
    CHECK(d(a.omega_ij_a.at({2, 3, 4})) == doctest::Approx(1));
}

TEST_CASE("LC curl conditions") {
    AnsatzMetric m;
    m.h4 = -1;
    m.h5 = parse_field("exp(v)");
    m.nconn.n2 = parse_field("x2*x3");
    m.nconn.n3 = parse_field("x2^2/2");
    GridSpec g = box(0, 1, 0, 1, 0, 1);
    LCResiduals r = lc_residuals(m, at(0.3, 0.4, 0.5), 0, 1, 1, FdConfig::from_grid(g, DerivPolicy::prefer_exact));
    CHECK(d(bm::abs(r.c4)) <= 1e-30);
    m.nconn.n2 = parse_field("x3^2");
    r = lc_residuals(m, at(0.3, 0.4, 0.5), 0, 1, 1, FdConfig::from_grid(g, DerivPolicy::prefer_exact));
    CHECK(d(r.c4) == doctest::Approx(2 * 0.4 - 0.3));
}
