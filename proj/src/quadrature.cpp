#include "forge/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/roots.hpp>

#include <cmath>

namespace forge {

namespace bm = boost::multiprecision;

namespace {

struct SimpsonState {
    const RealFn& f;
    long evals = 0;
    long max_evals;
    bool exhausted = false;
};

real simpson_step(SimpsonState& st, const real& a, const real& fa, const real& b, const real& fb,
                  const real& m, const real& fm, const real& whole, const real& tol, int depth) {
    real lm = (a + m) / 2, rm = (m + b) / 2;
    real flm = st.f(lm), frm = st.f(rm);
    st.evals += 2;
    real left = (m - a) / 6 * (fa + 4 * flm + fm);
    real right = (b - m) / 6 * (fm + 4 * frm + fb);
    real delta = left + right - whole;
    if (depth <= 0 || st.evals > st.max_evals) {
        if (bm::abs(delta) > 15 * tol) st.exhausted = true;
        return left + right + delta / 15;
    }
    if (bm::abs(delta) <= 15 * tol) return left + right + delta / 15;
    return simpson_step(st, a, fa, m, fm, lm, flm, left, tol / 2, depth - 1) +
           simpson_step(st, m, fm, b, fb, rm, frm, right, tol / 2, depth - 1);
}

}  // namespace

real adaptive_simpson(const RealFn& f, const real& a, const real& b, const SimpsonOptions& opt) {
    if (a == b) return 0;
    SimpsonState st{f, 0, opt.max_evals};
    // Seed with four panels so symmetric integrands cannot fool the first test.
    const int seeds = 4;
    real total = 0;
    for (int k = 0; k < seeds; ++k) {
        real lo = a + (b - a) * k / seeds, hi = a + (b - a) * (k + 1) / seeds, m = (lo + hi) / 2;
        real flo = f(lo), fhi = f(hi), fm = f(m);
        st.evals += 3;
        real whole = (hi - lo) / 6 * (flo + 4 * fm + fhi);
        total += simpson_step(st, lo, flo, hi, fhi, m, fm, whole, opt.abs_tol / seeds, opt.max_depth);
    }
    if (st.exhausted)
        throw Error(Errc::nonconvergence, "adaptive Simpson missed abs tol " + format17(opt.abs_tol) +
                                              " after " + std::to_string(st.evals) + " evaluations");
    return total;
}

real gauss_legendre(const RealFn& f, const real& a, const real& b, int panels) {
    using rule = boost::math::quadrature::gauss<real, 20>;
    real sum = 0;
    for (int k = 0; k < panels; ++k) {
        real lo = a + (b - a) * k / panels;
        real hi = a + (b - a) * (k + 1) / panels;
        sum += rule::integrate(f, lo, hi);
    }
    return sum;
}

namespace {

ScalarField make_running(const ScalarField& integrand, Axis axis, const real& lower, int panels,
                         const std::string& name) {
    OpaqueSpec s;
    s.name = name;
    s.deps = integrand.deps() | axis_bit(axis);
    s.eval = [integrand, axis, lower, panels](const ChartPoint& p, EvalCache&) {
        EvalCache local;
        ChartPoint q = p;
        return gauss_legendre(
            [&](const real& t) {
                q.at(axis) = t;
                return integrand.eval(q, local);
            },
            lower, p.at(axis), panels);
    };
    s.partial = [integrand, axis, lower, panels, name](Axis b) -> std::optional<ScalarField> {
        if (b == axis) return integrand;
        if (!integrand.depends_on(b)) return ScalarField(0);
        auto d = integrand.exact_partial(b);
        if (!d) return std::nullopt;
        return make_running(*d, axis, lower, panels, "d" + std::string(axis_name(b)) + "(" + name + ")");
    };
    return ScalarField::opaque(std::move(s));
}

}  // namespace

ScalarField running_integral(const RunningIntegralSpec& spec) {
    if (auto c = spec.integrand.constant_value()) {
        // Closed form; also covers the identically-zero short circuit.
        return ScalarField(*c) * (ScalarField::coordinate(spec.axis) - ScalarField(spec.lower));
    }
    int panels = 1;
    if (!spec.probes.empty()) {
        auto value_at = [&](const ChartPoint& p, int m) {
            ChartPoint q = p;
            EvalCache cache;
            return gauss_legendre(
                [&](const real& t) {
                    q.at(spec.axis) = t;
                    return spec.integrand.eval(q, cache);
                },
                spec.lower, p.at(spec.axis), m);
        };
        for (;;) {
            bool settled = true;
            for (const auto& p : spec.probes) {
                real a = value_at(p, panels), b = value_at(p, 2 * panels);
                if (bm::abs(a - b) > spec.panel_tol * (1 + bm::abs(b))) {
                    settled = false;
                    break;
                }
            }
            if (settled) break;
            panels *= 2;
            if (panels > spec.max_panels)
                throw Error(Errc::nonconvergence, "running integral '" + spec.name +
                                                      "' did not settle within " +
                                                      std::to_string(spec.max_panels) + " panels");
        }
        for (const auto& p : spec.probes) {
            ChartPoint q = p;
            SimpsonOptions opt;
            opt.abs_tol = spec.simpson_tol;
            real ref = adaptive_simpson(
                [&](const real& t) {
                    q.at(spec.axis) = t;
                    return spec.integrand(q);
                },
                spec.lower, p.at(spec.axis), opt);
            real gl = value_at(p, panels);
            if (bm::abs(gl - ref) > 100 * spec.simpson_tol)
                throw Error(Errc::nonconvergence, "running integral '" + spec.name +
                                                      "' disagrees with adaptive Simpson by " +
                                                      format17(bm::abs(gl - ref)));
        }
    }
    return make_running(spec.integrand, spec.axis, spec.lower, panels, spec.name);
}

real find_root(const RealFn& f, const real& a, const real& b, const real& tol) {
    real fa = f(a), fb = f(b);
    if (fa == 0) return a;
    if (fb == 0) return b;
    if ((fa > 0) == (fb > 0))
        throw Error(Errc::no_root, "no sign change on [" + format17(a) + ", " + format17(b) + "]");
    boost::uintmax_t iters = 200;
    auto stop = [&](const real& lo, const real& hi) { return bm::abs(hi - lo) <= tol; };
    auto r = boost::math::tools::toms748_solve(f, a, b, fa, fb, stop, iters);
    return (r.first + r.second) / 2;
}

}  // namespace forge
