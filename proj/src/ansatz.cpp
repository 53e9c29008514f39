#include "forge/ansatz.hpp"

#include "forge/quadrature.hpp"

#include <limits>

namespace forge {

namespace bm = boost::multiprecision;

const char* role_name(Role r) {
    switch (r) {
        case Role::extra: return "extra";
        case Role::radial_like: return "radial-like";
        case Role::angular: return "angular";
        case Role::time: return "time";
        case Role::wave_phase: return "wave-phase";
        case Role::transverse: return "transverse";
        case Role::flow_only: return "flow-only";
    }
    return "?";
}

void AnsatzMetric::validate() const {
    auto forbid = [&](const ScalarField& f, Axis a, const char* slot) {
        if (f.depends_on(a))
            throw Error(Errc::role_mismatch, std::string(slot) + " depends on " + axis_name(a) +
                                                 " (" + label + ")");
    };
    forbid(g2, Axis::v, "g2");
    forbid(g3, Axis::v, "g3");
    for (const ScalarField* f : {&g2, &g3, &h4, &h5, &nconn.w2, &nconn.w3, &nconn.n2, &nconn.n3}) {
        forbid(*f, Axis::y5, "coefficient");
        forbid(*f, Axis::x1, "coefficient");
    }
    if (g1 == 0) throw Error(Errc::invalid_argument, "g1 must be nonzero");
}

Box::Box() {
    lo.fill(-std::numeric_limits<real>::infinity());
    hi.fill(std::numeric_limits<real>::infinity());
}

void GridSpec::validate() const {
    auto check = [](const AxisRange& r, const char* name, bool may_collapse) {
        if (r.hi < r.lo) throw Error(Errc::invalid_argument, std::string(name) + " range inverted");
        bool active = r.hi > r.lo;
        if (active && r.count < 5)
            throw Error(Errc::invalid_argument, std::string(name) + " needs at least 5 samples");
        if (!active && !may_collapse && r.count != 1)
            throw Error(Errc::invalid_argument, std::string(name) + " collapsed range needs count 1");
        if (r.count < 1) throw Error(Errc::invalid_argument, std::string(name) + " count < 1");
    };
    check(x2, "x2", false);
    check(x3, "x3", false);
    check(v, "v", false);
    check(chi, "chi", false);
    if (chi.lo < 0) throw Error(Errc::invalid_argument, "chi must be >= 0");
    for (const auto& s : h)
        if (!(s > 0)) throw Error(Errc::invalid_argument, "fd step must be positive");
    if (fd_order != 2 && fd_order != 4) throw Error(Errc::invalid_argument, "fd order must be 2 or 4");
}

namespace {

real node_at(const AxisRange& r, int i) {
    if (r.count == 1) return r.lo;
    return r.lo + (r.hi - r.lo) * i / (r.count - 1);
}

}  // namespace

std::vector<ChartPoint> GridSpec::points() const {
    std::vector<ChartPoint> out;
    out.reserve(std::size_t(chi.count) * x2.count * x3.count * v.count);
    for (int c = 0; c < chi.count; ++c)
        for (int i = 0; i < x2.count; ++i)
            for (int j = 0; j < x3.count; ++j)
                for (int k = 0; k < v.count; ++k) {
                    ChartPoint p;
                    p.x1 = x1;
                    p.y5 = y5;
                    p.chi = node_at(chi, c);
                    p.x2 = node_at(x2, i);
                    p.x3 = node_at(x3, j);
                    p.v = node_at(v, k);
                    out.push_back(p);
                }
    return out;
}

Box GridSpec::stencil_box(int steps) const {
    Box b;
    auto widen = [&](Axis a, const AxisRange& r) {
        b.lo[int(a)] = r.lo - steps * h[int(a)];
        b.hi[int(a)] = r.hi + steps * h[int(a)];
    };
    widen(Axis::x2, x2);
    widen(Axis::x3, x3);
    widen(Axis::v, v);
    widen(Axis::chi, chi);
    if (b.lo[int(Axis::chi)] < 0) b.lo[int(Axis::chi)] = 0;
    return b;
}

ScalarField pp_kappa(const PpWaveChoice& w) {
    ScalarField x = ScalarField::coordinate(Axis::x2), y = ScalarField::coordinate(Axis::x3);
    ScalarField p = ScalarField::coordinate(Axis::v);
    switch (w.kind) {
        case PpWaveKind::plane_monochromatic:
            return (x * x - y * y) * sin(p);
        case PpWaveKind::wave_packet: {
            ScalarField r2 = x * x + y * y;
            ScalarField inside = x * y / (r2 * r2 * exp(ScalarField(w.p0 * w.p0) - p * p));
            return where(ScalarField(w.p0) - abs(p), inside, 0);
        }
        case PpWaveKind::separable_breve:
            return w.breve_kappa * w.k_of_p;
        case PpWaveKind::user_field:
            return w.user;
    }
    return 0;
}

namespace {

real second_partial(const ScalarField& f, const ChartPoint& p, Axis a) {
    if (auto d1 = f.exact_partial(a))
        if (auto d2 = d1->exact_partial(a)) return (*d2)(p);
    const real h = real(1e-3);
    real fp2 = f(p.shifted(a, 2 * h)), fp1 = f(p.shifted(a, h)), f0 = f(p);
    real fm1 = f(p.shifted(a, -h)), fm2 = f(p.shifted(a, -2 * h));
    return (-fp2 + 16 * fp1 - 30 * f0 + 16 * fm1 - fm2) / (12 * h * h);
}

}  // namespace

void check_harmonic(const ScalarField& kappa, const GridSpec& probe, const real& tol) {
    for (const auto& p : probe.points()) {
        real lap = second_partial(kappa, p, Axis::x2) + second_partial(kappa, p, Axis::x3);
        if (bm::abs(lap) > tol)
            throw Error(Errc::non_harmonic, "kappa_xx + kappa_yy = " + format17(lap) + " at (" +
                                                format17(p.x2) + ", " + format17(p.x3) + ", " +
                                                format17(p.v) + ")");
    }
}

ScalarField varpi2_of(const ScalarField& r, const SchwarzschildParams& params) {
    return ScalarField(1) - ScalarField(2 * params.mu) / r + ScalarField(params.eps) / (r * r);
}

namespace {

real varpi2_at(const SchwarzschildParams& s, const real& r) { return 1 - 2 * s.mu / r + s.eps / (r * r); }

void check_params(const SchwarzschildParams& s) {
    if (!(s.mu > 0)) throw Error(Errc::invalid_argument, "mass mu must be positive");
    if (s.eps < 0) throw Error(Errc::invalid_argument, "eps must be >= 0");
    real disc = s.mu * s.mu - s.eps;
    if (disc >= 0) {
        real roots[2] = {s.mu - bm::sqrt(disc), s.mu + bm::sqrt(disc)};
        for (const real& r : roots)
            if (r >= s.lo() && r <= s.hi())
                throw Error(Errc::horizon_domain, "r-range [" + format17(s.lo()) + ", " +
                                                      format17(s.hi()) + "] contains root r = " +
                                                      format17(r) + " of varpi^2");
        if (s.base() >= roots[0] && s.base() <= roots[1])
            throw Error(Errc::horizon_domain, "base point r0 lies inside the horizon");
    }
}

enum class RadialKind { xi, xi_check };

real radial_integrand(const SchwarzschildParams& s, RadialKind k, const real& r) {
    real w = bm::abs(varpi2_at(s, r));
    return k == RadialKind::xi ? bm::sqrt(w) : 1 / (r * bm::sqrt(w));
}

ScalarField radial_integrand_field(const SchwarzschildParams& s, RadialKind k, const ScalarField& r) {
    ScalarField w = abs(varpi2_of(r, s));
    return k == RadialKind::xi ? sqrt(w) : ScalarField(1) / (r * sqrt(w));
}

int settle_panels(const SchwarzschildParams& s, RadialKind k) {
    auto f = [&](const real& r) { return radial_integrand(s, k, r); };
    for (int m = 1; m <= 512; m *= 2) {
        bool ok = true;
        for (const real& end : {s.lo(), s.hi()}) {
            real a = gauss_legendre(f, s.base(), end, m), b = gauss_legendre(f, s.base(), end, 2 * m);
            if (bm::abs(a - b) > real(1e-28) * (1 + bm::abs(b))) ok = false;
        }
        if (ok) return m;
    }
    throw Error(Errc::nonconvergence, "radial chart quadrature did not settle");
}

// r as a function of the chart coordinate on `axis`, by Newton on the
// Gauss-Legendre primitive; dr/dxi = 1 / integrand(r) is exported exactly.
ScalarField radial_inverse(const SchwarzschildParams& s, RadialKind k, Axis axis, int panels) {
    OpaqueSpec spec;
    spec.name = k == RadialKind::xi ? "r(xi)" : "r(xicheck)";
    spec.deps = axis_bit(axis);
    spec.eval = [s, k, axis, panels](const ChartPoint& p, EvalCache&) {
        const real target = p.at(axis);
        auto f = [&](const real& r) { return radial_integrand(s, k, r); };
        auto prim = [&](const real& r) { return gauss_legendre(f, s.base(), r, panels); };
        real lo = s.lo(), hi = s.hi();
        real plo = prim(lo), phi = prim(hi);
        if (target < plo || target > phi)
            throw Error(Errc::horizon_domain, "chart coordinate " + format17(target) +
                                                  " outside radial patch [" + format17(lo) + ", " +
                                                  format17(hi) + "]");
        real r = lo + (hi - lo) * (target - plo) / (phi - plo);
        for (int it = 0; it < 100; ++it) {
            real step = (prim(r) - target) / f(r);
            r -= step;
            if (r < lo) r = lo;
            if (r > hi) r = hi;
            if (bm::abs(step) <= real(1e-32) * r) break;
        }
        return r;
    };
    spec.partial = [s, k, axis, panels](Axis b) -> std::optional<ScalarField> {
        if (b != axis) return ScalarField(0);
        ScalarField r = radial_inverse(s, k, axis, panels);
        return ScalarField(1) / radial_integrand_field(s, k, r);
    };
    return ScalarField::opaque(std::move(spec));
}

}  // namespace

ChartValues schwarzschild_chart(const real& mu, const real& eps, const real& r, const real& r0) {
    if (!(r > 0)) throw Error(Errc::invalid_argument, "r must be positive");
    SchwarzschildParams s;
    s.mu = mu;
    s.eps = eps;
    ChartValues out;
    out.varpi2 = varpi2_at(s, r);
    out.xi = adaptive_simpson([&](const real& t) { return radial_integrand(s, RadialKind::xi, t); }, r0, r);
    return out;
}

SchwarzschildFields schwarzschild_fields(const SchwarzschildParams& params) {
    check_params(params);
    SchwarzschildFields f;
    f.r = radial_inverse(params, RadialKind::xi, Axis::x2, settle_panels(params, RadialKind::xi));
    f.varpi2 = varpi2_of(f.r, params);
    f.r_check = radial_inverse(params, RadialKind::xi_check, Axis::x3,
                               settle_panels(params, RadialKind::xi_check));
    f.varpi2_check = varpi2_of(f.r_check, params);
    return f;
}

AnsatzMetric build_primary(PrimaryKind kind, const SchwarzschildParams& params) {
    if (kind == PrimaryKind::aux5)
        throw Error(Errc::invalid_argument, "aux5 is built from a pp-wave choice");
    SchwarzschildFields sf = schwarzschild_fields(params);
    AnsatzMetric m;
    m.status = "primary";
    m.lambda = 0;
    ScalarField x3 = ScalarField::coordinate(Axis::x3);
    ScalarField x2 = ScalarField::coordinate(Axis::x2);
    if (kind == PrimaryKind::aux1 || kind == PrimaryKind::aux4) {
        m.g1 = params.eps1;
        m.g2 = -1;
        m.g3 = -(sf.r * sf.r);
        ScalarField angular = -(sf.r * sf.r) * sqr(sin(x3));
        m.roles.role = {Role::extra, Role::radial_like, Role::angular, Role::angular, Role::time};
        m.roles.label = {"varkappa", "xi", "theta", "phi", "t"};
        if (kind == PrimaryKind::aux1) {
            m.h4 = angular;
            m.h5 = sf.varpi2;
            m.label = "schw.aux1";
        } else {
            m.h4 = sf.varpi2;
            m.h5 = angular;
            m.roles.role = {Role::extra, Role::radial_like, Role::angular, Role::time, Role::angular};
            m.roles.label = {"varkappa", "xi", "theta", "t", "phi"};
            m.label = "schw.aux4";
        }
    } else {
        // x2 = theta-check with sin(theta) = sech(theta-check); x3 = xi-check.
        m.g1 = -params.r_g * params.r_g;
        m.g2 = -params.r_g * params.r_g;
        m.g3 = -sqr(cosh(x2));
        ScalarField timelike = sf.varpi2_check * sqr(cosh(x2)) / (sf.r_check * sf.r_check);
        if (kind == PrimaryKind::aux2) {
            m.h4 = params.eps1;
            m.h5 = timelike;
            m.roles.role = {Role::angular, Role::angular, Role::radial_like, Role::extra, Role::time};
            m.roles.label = {"phi", "theta_check", "xi_check", "chi", "t"};
            m.label = "schw.aux2";
        } else {
            m.h4 = timelike;
            m.h5 = params.eps1;
            m.roles.role = {Role::angular, Role::angular, Role::radial_like, Role::time, Role::extra};
            m.roles.label = {"phi", "theta_check", "xi_check", "t", "varkappa"};
            m.label = "schw.aux3";
        }
    }
    m.validate();
    return m;
}

AnsatzMetric build_primary(PrimaryKind kind, const PpWaveChoice& wave) {
    if (kind != PrimaryKind::aux5)
        throw Error(Errc::invalid_argument, "pp-wave choices build aux5 only");
    ScalarField kappa = pp_kappa(wave);
    if (wave.kind == PpWaveKind::user_field || wave.kind == PpWaveKind::separable_breve) {
        GridSpec probe;
        probe.x2 = {0.5, 1.5, 5};
        probe.x3 = {0.25, 1.25, 5};
        probe.v = {0.1, 0.9, 5};
        check_harmonic(kappa, probe, real(1e-8));
    }
    AnsatzMetric m;
    m.status = "primary";
    m.g1 = 1;
    m.g2 = -1;
    m.g3 = -1;
    m.h4 = -2 * kappa;
    m.h5 = ScalarField(1) / (8 * kappa);
    m.roles.role = {Role::extra, Role::transverse, Role::transverse, Role::wave_phase, Role::wave_phase};
    m.roles.label = {"varkappa", "x", "y", "p", "v"};
    m.label = "pp.aux5";
    m.validate();
    return m;
}

}  // namespace forge
