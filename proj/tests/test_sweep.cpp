#include "doctest.h"

#include "forge/expression.hpp"
#include "forge/generators.hpp"
#include "forge/sweep.hpp"
#include "test_support.hpp"

using namespace forge;
using namespace forge::test;

TEST_CASE("parallel sweep equals the serial reference bit for bit") {
    GridSpec g = box(1.5, 2, 0, 0.5, 0.5, 1.5, 7);
    AnsatzMetric m = vacuum_solitonic_metric(parse_field("x2^2 - x3^2"), SolitonChoice{}, PpWaveChoice{}, 2,
                                             parse_field("x2*x3"), parse_field("x2^2/2"), g);
    ResidualEngine eng(m, FdConfig::from_grid(g, DerivPolicy::fd_only));
    auto fn = [&](const ChartPoint& p, EvalCache& c) { return eng.reduced(p, c).max_abs(); };
    auto par = sweep<real>(g.points(), fn, SweepMode::parallel);
    auto ser = sweep<real>(g.points(), fn, SweepMode::serial);
    REQUIRE(par.size() == ser.size());
    for (std::size_t i = 0; i < par.size(); ++i) CHECK(par[i] == ser[i]);
}

TEST_CASE("the lowest failing index is the one reported") {
    GridSpec g = box(0, 1, 0, 1, 0, 1);
    auto pts = g.points();
    auto fn = [&](const ChartPoint& p, EvalCache&) -> int {
        if (p.v > 0.4) throw Error(Errc::invalid_argument, "v=" + format17(p.v));
        return 0;
    };
    try {
        sweep<int>(pts, fn);
        FAIL("expected a throw");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("v=0.5") != std::string::npos);
    }
    CHECK(sweep_threads() >= 1);
}
