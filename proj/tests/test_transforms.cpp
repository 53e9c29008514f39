#include "doctest.h"

#include "forge/expression.hpp"
#include "forge/generators.hpp"
#include "forge/transforms.hpp"
#include "test_support.hpp"

using namespace forge;
using namespace forge::test;
namespace bm = boost::multiprecision;

namespace {

AnsatzMetric vacuum(const GridSpec& g) {
    return vacuum_solitonic_metric(parse_field("x2^2 - x3^2"), SolitonChoice{}, PpWaveChoice{}, 2,
                                   parse_field("x2*x3"), parse_field("x2^2/2"), g);
}

PolarizationSet ehlers(double theta) {
    ParseOptions o;
    o.allow_seeds = true;
    o.constants["theta"] = real(theta);
    PolarizationSet p;
    p.label = "ehlers";
    p.theta = real(theta);
    p.eta5 = parse_field("1/(cos(theta)^2 + h5^2*sin(theta)^2)", o);
    return p;
}

PolarizationSet doubling() {
    PolarizationSet p;
    p.label = "x2";
    p.eta5 = 2;
    return p;
}

}  // namespace

TEST_CASE("identity polarization leaves every slot unchanged") {
    GridSpec g = box(1.5, 2, 0, 0.5, 0.5, 1.5);
    AnsatzMetric m = vacuum(g);
    AnsatzMetric id = apply_polarizations(m, PolarizationSet::identity());
    CHECK(id.status == "unverified");
    for (const auto& p : random_points(g, 100)) {
        CHECK(id.g2(p) == m.g2(p));
        CHECK(id.h4(p) == m.h4(p));
        CHECK(id.h5(p) == m.h5(p));
        CHECK(id.nconn.w2(p) == m.nconn.w2(p));
        CHECK(id.nconn.n3(p) == m.nconn.n3(p));
    }
}

TEST_CASE("conformal round trip") {
    GridSpec g = box(1.5, 2, 0, 0.5, 0.5, 1.5);
    AnsatzMetric m = vacuum(g);
    ScalarField eta2 = parse_field("1 + x2*x3");
    PolarizationSet up;
    up.eta2 = up.eta3 = up.eta4 = up.eta5 = eta2;
    AnsatzMetric back = conformal_renormalize(apply_polarizations(m, up), eta2);
    for (const auto& p : random_points(g, 100)) {
        CHECK(d(bm::abs(back.g3(p) - m.g3(p))) <= 1e-12);
        CHECK(d(bm::abs(back.h4(p) / m.h4(p) - 1)) <= 1e-12);
        CHECK(d(bm::abs(back.h5(p) / m.h5(p) - 1)) <= 1e-12);
    }
    CHECK(back.history.size() == 2);
    CHECK_THROWS_AS(conformal_renormalize(m, 0), Error);
    PolarizationSet zero;
    zero.eta4 = 0;
    CHECK_THROWS_AS(apply_polarizations(m, zero), Error);
}

TEST_CASE("two-parameter composition: order matters and composing is applying") {
    GridSpec g = box(1.5, 2, 0, 0.5, 0.5, 1.5);
    AnsatzMetric m = vacuum(g);
    PolarizationSet a = ehlers(0.3), b = doubling();
    AnsatzMetric ab = apply_polarizations(apply_polarizations(m, a), b);
    AnsatzMetric ba = apply_polarizations(apply_polarizations(m, b), a);
    AnsatzMetric c = apply_polarizations(m, compose_two_parameter(a, b));
    ChartPoint p = at(1.7, 0.2, 0.9);
    CHECK(d(bm::abs(ab.h5(p) - ba.h5(p))) > 1e-3);
    CHECK(d(bm::abs(ab.h5(p) - c.h5(p))) <= 1e-30);
    CHECK(compose_two_parameter(a, b).order == std::vector<std::string>{"ehlers", "x2"});
}

TEST_CASE("checker sees a small eta4 perturbation") {
    GridSpec g = box(1.5, 2, 0, 0.5, 0.5, 1.5);
    AnsatzMetric m = vacuum(g);
    real envelope = max_reduced(m, g, DerivPolicy::fd_only);
    PolarizationSet kick;
    kick.eta4 = parse_field("1 + 1e-3*v");
    AnsatzMetric k = apply_polarizations(m, kick);
    ResidualEngine eng(k, FdConfig::from_grid(g, DerivPolicy::fd_only));
    real rv = 0;
    for (const auto& p : g.points()) {
        EvalCache c;
        rv = std::max(rv, bm::abs(eng.reduced(p, c).r_v));
    }
    CHECK(d(envelope) <= 1e-8);
    CHECK(rv > 10 * envelope);
}
