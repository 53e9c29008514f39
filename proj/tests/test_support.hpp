#pragma once

#include "forge/dcalculus.hpp"

#include <boost/multiprecision/float128.hpp>

#include <random>

namespace forge::test {

inline ChartPoint at(double x2, double x3, double v, double chi = 0) {
    ChartPoint p;
    p.x2 = x2;
    p.x3 = x3;
    p.v = v;
    p.chi = chi;
    return p;
}

inline GridSpec box(double x2lo, double x2hi, double x3lo, double x3hi, double vlo, double vhi, int n = 5) {
    GridSpec g;
    g.x2 = {x2lo, x2hi, n};
    g.x3 = {x3lo, x3hi, n};
    g.v = {vlo, vhi, n};
    return g;
}

inline std::vector<ChartPoint> random_points(const GridSpec& g, int n, unsigned seed = 7) {
    std::mt19937_64 rng(seed);
    auto u = [&](const AxisRange& r) {
        std::uniform_real_distribution<double> d(r.lo.convert_to<double>(), r.hi.convert_to<double>());
        return r.count > 1 ? d(rng) : r.lo.convert_to<double>();
    };
    std::vector<ChartPoint> out;
    for (int k = 0; k < n; ++k) out.push_back(at(u(g.x2), u(g.x3), u(g.v), u(g.chi)));
    return out;
}

inline double d(const real& x) { return x.convert_to<double>(); }

inline real max_reduced(const AnsatzMetric& m, const GridSpec& g, DerivPolicy pol = DerivPolicy::prefer_exact) {
    ResidualEngine eng(m, FdConfig::from_grid(g, pol));
    real worst = 0;
    for (const auto& p : g.points()) {
        EvalCache c;
        worst = std::max(worst, eng.reduced(p, c).max_abs());
    }
    return worst;
}

}  // namespace forge::test
