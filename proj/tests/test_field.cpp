#include "doctest.h"

#include "forge/dcalculus.hpp"
#include "forge/expression.hpp"
#include "forge/quadrature.hpp"

#include <cmath>
#include <random>

using namespace forge;
namespace bm = boost::multiprecision;

namespace {

ChartPoint at(double x2, double x3, double v, double chi = 0) {
    ChartPoint p;
    p.x2 = x2;
    p.x3 = x3;
    p.v = v;
    p.chi = chi;
    return p;
}

}  // namespace

TEST_CASE("symbolic partials agree with closed forms") {
    ScalarField x = ScalarField::coordinate(Axis::x2), y = ScalarField::coordinate(Axis::x3);
    ScalarField f = x * x - y * y;
    CHECK(double((*f.exact_partial(Axis::x2))(at(1, 2, 0))) == doctest::Approx(2));
    CHECK(double((*f.exact_partial(Axis::x3))(at(1, 2, 0))) == doctest::Approx(-4));
    CHECK(f.exact_partial(Axis::v)->is_zero());

    ScalarField v = ScalarField::coordinate(Axis::v);
    ScalarField g = atan(exp(v)) * sech(v) + pow(abs(v) + 2, ScalarField(1.5)) + tan(v) / cosh(v);
    auto dg = *g.exact_partial(Axis::v);
    FdConfig cfg;
    cfg.policy = DerivPolicy::fd_only;
    real fd = partial_field(g, Axis::v, cfg)(at(0, 0, 0.3));
    CHECK(double(bm::abs(fd - dg(at(0, 0, 0.3)))) < 1e-11);
}

TEST_CASE("evaluation is bit-identical across repeats and caches") {
    ScalarField f = parse_field("4*atan(exp(v)) + sin(x2)*x3^3 - log(2+x2)");
    ChartPoint p = at(0.7, -0.2, 1.1);
    real a = f(p);
    EvalCache c;
    real b = f.eval(p, c), d = f.eval(p, c);
    CHECK(a == b);
    CHECK(b == d);
}

TEST_CASE("parser grammar, aliases and errors") {
    ParseOptions o;
    o.aliases["p"] = Axis::v;
    o.constants["theta"] = real(0.5);
    ScalarField f = parse_field("-2^2 + p*theta + pow(x2, 3) - sech(0) + ln(e)", o);
    CHECK(double(f(at(2, 0, 4))) == doctest::Approx(-4 + 2 + 8 - 1 + 1));
    CHECK_THROWS_AS(parse_field("2 + * 3"), Error);
    try {
        parse_field("sin(x2) + foo");
        FAIL("expected unknown identifier");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::unknown_identifier);
        CHECK(std::string(e.what()).find("column 11") != std::string::npos);
    }
    try {
        parse_field("(x2 + 1");
        FAIL("expected parse error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::parse);
    }
    ScalarField s = parse_field("h5 * 2", ParseOptions{{}, {}, true});
    CHECK(s.has_seeds());
    CHECK_THROWS_AS(s(at(0, 0, 0)), Error);
}

TEST_CASE("fd first derivative of sin at 0") {
    FdConfig cfg;
    cfg.policy = DerivPolicy::fd_only;
    ScalarField s = sin(ScalarField::coordinate(Axis::v));
    real d = partial(s, at(0, 0, 0), Axis::v, 1, cfg);
    real h = cfg.h[int(Axis::v)];
    CHECK(double(bm::abs(d - 1)) <= double(h * h * h * h));
}

TEST_CASE("fd convergence order on exp(v)") {
    ScalarField e = exp(ScalarField::coordinate(Axis::v));
    real exact = bm::exp(real(0.3));
    for (int order : {2, 4}) {
        FdConfig cfg;
        cfg.policy = DerivPolicy::fd_only;
        cfg.order = order;
        double prev = 0;
        for (double h : {4e-3, 2e-3, 1e-3}) {
            cfg.h.fill(real(h));
            double err = double(bm::abs(partial(e, at(0, 0, 0.3), Axis::v, 1, cfg) - exact));
            double err2 = double(bm::abs(partial(e, at(0, 0, 0.3), Axis::v, 2, cfg) - exact));
            if (prev > 0) {
                double ratio = prev / err;
                CHECK(std::log2(ratio) == doctest::Approx(order).epsilon(0.125));
                if (order == 4) CHECK(ratio >= 14);
            }
            prev = err;
            CHECK(err2 < 1e-4);
        }
    }
}

TEST_CASE("stencils refuse to leave the domain") {
    GridSpec g;
    FdConfig cfg = FdConfig::from_grid(g, DerivPolicy::fd_only, 1);
    ScalarField f = sin(ScalarField::coordinate(Axis::v));
    CHECK_NOTHROW(partial(f, at(1.5, 1.5, 1.0), Axis::v, 1, cfg));
    try {
        partial(f, at(1.5, 1.5, 1.5 + 1e-6), Axis::v, 1, cfg);
        FAIL("expected stencil error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::stencil_out_of_domain);
    }
}

TEST_CASE("adaptive Simpson against closed form and budget") {
    real q = adaptive_simpson([](const real& t) { return bm::exp(t); }, 0, 1);
    CHECK(double(bm::abs(q - (bm::exp(real(1)) - 1))) < 1e-10);
    SimpsonOptions tight;
    tight.abs_tol = real(1e-30);
    tight.max_evals = 100;
    CHECK_THROWS_AS(adaptive_simpson([](const real& t) { return bm::sqrt(t); }, 0, 1, tight), Error);
}

TEST_CASE("running integral: closed forms, exact partial and monotonicity") {
    RunningIntegralSpec one;
    one.integrand = 1;
    one.lower = real(0.25);
    ScalarField q1 = running_integral(one);
    CHECK(double(q1(at(0, 0, 1.5))) == doctest::Approx(1.25));

    ScalarField x = ScalarField::coordinate(Axis::x2), v = ScalarField::coordinate(Axis::v);
    RunningIntegralSpec s;
    s.integrand = x * x * cos(v) + 1;
    s.lower = 0;
    s.probes = {at(1, 0, 2), at(2, 0, 2)};
    ScalarField q = running_integral(s);
    ChartPoint p = at(1.5, 0, 1.2);
    CHECK(double(bm::abs(q(p) - (real(2.25) * bm::sin(real(1.2)) + real(1.2)))) < 1e-25);
    auto qx = *q.exact_partial(Axis::x2);
    CHECK(double(bm::abs(qx(p) - 3 * bm::sin(real(1.2)))) < 1e-25);
    real prev = -1;
    for (int k = 0; k <= 40; ++k) {
        real val = q(at(1.5, 0, 0.05 * k));
        CHECK(val >= prev);
        prev = val;
    }
}

TEST_CASE("fix_axis and seed substitution") {
    ScalarField f = parse_field("x2 * chi + v");
    ScalarField g = fix_axis(f, Axis::chi, real(2));
    CHECK(!g.depends_on(Axis::chi));
    CHECK(double(g(at(3, 0, 1, 7))) == doctest::Approx(7));
    CHECK(double((*g.exact_partial(Axis::x2))(at(3, 0, 1))) == doctest::Approx(2));

    ScalarField s = parse_field("1/(1 + h5^2)", ParseOptions{{}, {}, true});
    std::array<std::optional<ScalarField>, kSeeds> with;
    with[int(Seed::h5)] = parse_field("2*v");
    ScalarField t = substitute_seeds(s, with);
    CHECK(!t.has_seeds());
    CHECK(double(t(at(0, 0, 1))) == doctest::Approx(0.2));
}
