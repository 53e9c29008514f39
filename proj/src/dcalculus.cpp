#include "forge/dcalculus.hpp"

#include <cmath>

namespace forge {

namespace bm = boost::multiprecision;

FdConfig FdConfig::from_grid(const GridSpec& g, DerivPolicy policy, int pad_steps) {
    FdConfig c;
    c.order = g.fd_order;
    c.h = g.h;
    c.policy = policy;
    c.domain = g.stencil_box(pad_steps);
    return c;
}

namespace {

void check_stencil(const ChartPoint& p, Axis a, const real& reach, const Box& box) {
    const real& x = p.at(a);
    if (box.contains(a, x - reach) && box.contains(a, x + reach)) return;
    Errc code = a == Axis::chi ? Errc::chi_boundary : Errc::stencil_out_of_domain;
    throw Error(code, std::string("stencil along ") + axis_name(a) + " at " + format17(x) +
                          " needs [" + format17(x - reach) + ", " + format17(x + reach) + "] inside [" +
                          format17(box.lo[int(a)]) + ", " + format17(box.hi[int(a)]) + "]");
}

ScalarField fd_field(const ScalarField& f, Axis a, int deriv, const FdConfig& cfg) {
    const real h = cfg.h[int(a)];
    const int order = cfg.order;
    const Box box = cfg.domain;
    OpaqueSpec s;
    s.name = std::string(deriv == 1 ? "D" : "DD") + axis_name(a) + "[" + f.str() + "]";
    s.deps = f.deps();
    s.smoothness = std::max(0, f.smoothness() - deriv);
    s.eval = [f, a, deriv, order, h, box](const ChartPoint& p, EvalCache& c) -> real {
        const real reach = order == 4 ? 2 * h : h;
        check_stencil(p, a, reach, box);
        auto at = [&](int k) { return f.eval(p.shifted(a, k * h), c); };
        if (deriv == 1) {
            if (order == 2) return (at(1) - at(-1)) / (2 * h);
            return (-at(2) + 8 * at(1) - 8 * at(-1) + at(-2)) / (12 * h);
        }
        if (order == 2) return (at(1) - 2 * at(0) + at(-1)) / (h * h);
        return (-at(2) + 16 * at(1) - 30 * at(0) + 16 * at(-1) - at(-2)) / (12 * h * h);
    };
    return ScalarField::opaque(std::move(s));
}

}  // namespace

ScalarField partial_field(const ScalarField& f, Axis a, const FdConfig& cfg) {
    if (!f.depends_on(a)) return 0;
    if (cfg.policy == DerivPolicy::prefer_exact)
        if (auto d = f.exact_partial(a)) return *d;
    return fd_field(f, a, 1, cfg);
}

ScalarField partial2_field(const ScalarField& f, Axis a, const FdConfig& cfg) {
    if (!f.depends_on(a)) return 0;
    if (cfg.policy == DerivPolicy::prefer_exact)
        if (auto d = f.exact_partial(a)) return partial_field(*d, a, cfg);
    return fd_field(f, a, 2, cfg);
}

real partial(const ScalarField& f, const ChartPoint& p, Axis a, int order, const FdConfig& cfg) {
    if (order != 1 && order != 2) throw Error(Errc::invalid_argument, "derivative order must be 1 or 2");
    return order == 1 ? partial_field(f, a, cfg)(p) : partial2_field(f, a, cfg)(p);
}

real ReducedResiduals::max_abs() const {
    real m = 0;
    for (const real& x : {r_h, r_v, r_w2, r_w3, r_n2, r_n3})
        if (bm::abs(x) > m) m = bm::abs(x);
    return m;
}

bool AnholonomyCoeffs::holonomic(const real& tol) const {
    for (const auto& [k, v] : w_ia_b)
        if (bm::abs(v) > tol) return false;
    for (const auto& [k, v] : omega_ij_a)
        if (bm::abs(v) > tol) return false;
    return true;
}

ResidualEngine::ResidualEngine(const AnsatzMetric& m, const FdConfig& cfg, std::optional<LcOptions> lc)
    : m_(m), cfg_(cfg) {
    m_.validate();
    const Axis X = Axis::x2, Y = Axis::x3, V = Axis::v;
    g2_2 = partial_field(m.g2, X, cfg);
    g2_3 = partial_field(m.g2, Y, cfg);
    g2_33 = partial2_field(m.g2, Y, cfg);
    g3_2 = partial_field(m.g3, X, cfg);
    g3_3 = partial_field(m.g3, Y, cfg);
    g3_22 = partial2_field(m.g3, X, cfg);
    h4_v = partial_field(m.h4, V, cfg);
    h5_v = partial_field(m.h5, V, cfg);
    h5_vv = partial2_field(m.h5, V, cfg);
    phi = log(abs(h5_v / sqrt(abs(m.h4 * m.h5))));
    phi_2 = partial_field(phi, X, cfg);
    phi_3 = partial_field(phi, Y, cfg);
    phi_v = partial_field(phi, V, cfg);
    {
        // phi is exact only when h5* and its partials, and the partials of h4, h5, all are.
        bool exact = cfg.policy == DerivPolicy::prefer_exact;
        auto d5 = m.h5.exact_partial(V);
        exact = exact && d5;
        for (Axis a : {X, Y, V}) exact = exact && m.h4.exact_partial(a) && m.h5.exact_partial(a) && d5->exact_partial(a);
        phi_floor_ = exact ? kPhiStarFloorExact : kPhiStarFloorFd;
    }
    const NConnection& N = m.nconn;
    w2_v = partial_field(N.w2, V, cfg);
    w3_v = partial_field(N.w3, V, cfg);
    w2_3 = partial_field(N.w2, Y, cfg);
    w3_2 = partial_field(N.w3, X, cfg);
    n2_v = partial_field(N.n2, V, cfg);
    n3_v = partial_field(N.n3, V, cfg);
    n2_vv = partial2_field(N.n2, V, cfg);
    n3_vv = partial2_field(N.n3, V, cfg);
    n2_3 = partial_field(N.n2, Y, cfg);
    n3_2 = partial_field(N.n3, X, cfg);
    if (lc) {
        has_lc_ = true;
        lcopt_ = *lc;
        psi_22 = partial2_field(lc->psi, X, cfg);
        psi_33 = partial2_field(lc->psi, Y, cfg);
    }
}

namespace {

int sgn(const real& x) { return x > 0 ? 1 : (x < 0 ? -1 : 0); }

}  // namespace

void ResidualEngine::guard(const ChartPoint& p, EvalCache& c) const {
    real h4 = m_.h4.eval(p, c), h5 = m_.h5.eval(p, c), d5 = h5_v.eval(p, c);
    if (h4 * h5 == 0) throw Error(Errc::degenerate_v_metric, "h4*h5 = 0");
    if (!(bm::abs(d5) > real(1e-28) * (1 + bm::abs(h5))))
        throw Error(Errc::degenerate_v_metric, "h5* = 0 (h5 independent of v)");
    if (!cfg_.kink_guard) return;
    const int s4 = sgn(h4), s5 = sgn(h5), sd = sgn(d5);
    for (Axis a : {Axis::x2, Axis::x3, Axis::v}) {
        for (int dir : {-1, 1}) {
            ChartPoint q = p.shifted(a, dir * cfg_.kink_steps * cfg_.h[int(a)]);
            if (!cfg_.domain.contains(a, q.at(a))) continue;
            try {
                if (sgn(m_.h4.eval(q, c)) != s4 || sgn(m_.h5.eval(q, c)) != s5 ||
                    sgn(h5_v.eval(q, c)) != sd)
                    throw Error(Errc::kink_guard, std::string("sign change of h4, h5 or h5* within ") +
                                                      std::to_string(cfg_.kink_steps) + "h along " +
                                                      axis_name(a));
            } catch (const Error& e) {
                if (e.code() != Errc::stencil_out_of_domain) throw;
            }
        }
    }
}

AuxCoeffs ResidualEngine::aux(const ChartPoint& p, EvalCache& c) const {
    guard(p, c);
    real d5 = h5_v.eval(p, c);
    AuxCoeffs a;
    a.phi = phi.eval(p, c);
    a.alpha2 = d5 * phi_2.eval(p, c);
    a.alpha3 = d5 * phi_3.eval(p, c);
    a.beta = d5 * phi_v.eval(p, c);
    a.gamma = 3 * d5 / (2 * m_.h5.eval(p, c)) - h4_v.eval(p, c) / m_.h4.eval(p, c);
    return a;
}

real ResidualEngine::curvature_h(const ChartPoint& p, EvalCache& c) const {
    real g2 = m_.g2.eval(p, c), g3 = m_.g3.eval(p, c);
    if (g2 * g3 == 0) throw Error(Errc::degenerate_h_metric, "g2*g3 = 0");
    real a2 = g2_2.eval(p, c), a3 = g2_3.eval(p, c), b2 = g3_2.eval(p, c), b3 = g3_3.eval(p, c);
    real bracket = a2 * b2 / (2 * g2) + b2 * b2 / (2 * g3) - g3_22.eval(p, c) + a3 * b3 / (2 * g3) +
                   a3 * a3 / (2 * g2) - g2_33.eval(p, c);
    return bracket / (2 * g2 * g3);
}

real ResidualEngine::curvature_v(const ChartPoint& p, EvalCache& c) const {
    real h4 = m_.h4.eval(p, c), h5 = m_.h5.eval(p, c);
    if (h4 * h5 == 0) throw Error(Errc::degenerate_v_metric, "h4*h5 = 0");
    real d4 = h4_v.eval(p, c), d5 = h5_v.eval(p, c);
    real dlog = (d4 / h4 + d5 / h5) / 2;  // (ln sqrt|h4 h5|)*
    return (d5 * dlog - h5_vv.eval(p, c)) / (2 * h4 * h5);
}

ReducedResiduals ResidualEngine::reduced(const ChartPoint& p, EvalCache& c) const {
    ReducedResiduals r;
    r.point = p;
    r.r_h = curvature_h(p, c) + m_.lambda;
    AuxCoeffs a = aux(p, c);
    r.r_v = curvature_v(p, c) + m_.lambda;
    real h4 = m_.h4.eval(p, c), h5 = m_.h5.eval(p, c);
    r.r_w2 = -m_.nconn.w2.eval(p, c) * a.beta / (2 * h5) - a.alpha2 / (2 * h5);
    r.r_w3 = -m_.nconn.w3.eval(p, c) * a.beta / (2 * h5) - a.alpha3 / (2 * h5);
    real k = -h5 / (2 * h4);
    r.r_n2 = k * (n2_vv.eval(p, c) + a.gamma * n2_v.eval(p, c));
    r.r_n3 = k * (n3_vv.eval(p, c) + a.gamma * n3_v.eval(p, c));
    return r;
}

LCResiduals ResidualEngine::lc(const ChartPoint& p, EvalCache& c) const {
    if (!has_lc_) throw Error(Errc::invalid_argument, "LC residuals need the h-potential psi");
    LCResiduals r;
    real lap = lcopt_.eps2 * psi_22.eval(p, c) + lcopt_.eps3 * psi_33.eval(p, c);
    r.c1 = lap - m_.lambda;
    r.c1_alt = lap + m_.lambda;
    real w2 = m_.nconn.w2.eval(p, c), w3 = m_.nconn.w3.eval(p, c);
    r.c3 = w2_3.eval(p, c) - w3_2.eval(p, c) + w3 * w2_v.eval(p, c) - w2 * w3_v.eval(p, c);
    r.c4 = n2_3.eval(p, c) - n3_2.eval(p, c);
    try {
        guard(p, c);
        real h4 = m_.h4.eval(p, c), h5 = m_.h5.eval(p, c);
        r.c2 = h5_v.eval(p, c) * phi.eval(p, c) / (h4 * h5) - m_.lambda;
        real pv = phi_v.eval(p, c);
        if (!(bm::abs(pv) > phi_floor_))
            throw Error(Errc::phi_star_zero, "phi* = 0 (|phi*| <= " + format17(phi_floor_) + "); w is not fixed by phi");
        r.cw2 = w2 + phi_2.eval(p, c) / pv;
        r.cw3 = w3 + phi_3.eval(p, c) / pv;
    } catch (const Error& e) {
        if (e.code() == Errc::phi_star_zero) {
            r.cw_error = e.what();
        } else {
            throw;
        }
    }
    return r;
}

AnholonomyCoeffs ResidualEngine::anholonomy(const ChartPoint& p, EvalCache& c) const {
    AnholonomyCoeffs a;
    const NConnection& N = m_.nconn;
    real w2 = N.w2.eval(p, c), w3 = N.w3.eval(p, c);
    real dw2 = w2_v.eval(p, c), dw3 = w3_v.eval(p, c), dn2 = n2_v.eval(p, c), dn3 = n3_v.eval(p, c);
    // Coefficients never depend on y5, so every d_5 entry vanishes.
    a.w_ia_b[{2, 4, 4}] = dw2;
    a.w_ia_b[{3, 4, 4}] = dw3;
    a.w_ia_b[{2, 4, 5}] = dn2;
    a.w_ia_b[{3, 4, 5}] = dn3;
    for (int i : {2, 3})
        for (int b : {4, 5}) a.w_ia_b[{i, 5, b}] = 0;
    // e_i = d_i - w_i d_v - n_i d_5
    real o4 = (w2_3.eval(p, c) - w3 * dw2) - (w3_2.eval(p, c) - w2 * dw3);
    real o5 = (n2_3.eval(p, c) - w3 * dn2) - (n3_2.eval(p, c) - w2 * dn3);
    a.omega_ij_a[{2, 3, 4}] = o4;
    a.omega_ij_a[{3, 2, 4}] = -o4;
    a.omega_ij_a[{2, 3, 5}] = o5;
    a.omega_ij_a[{3, 2, 5}] = -o5;
    return a;
}

AuxCoeffs aux_coeffs(const AnsatzMetric& m, const ChartPoint& p, const FdConfig& cfg) {
    EvalCache c;
    return ResidualEngine(m, cfg).aux(p, c);
}

ReducedResiduals reduced_residuals(const AnsatzMetric& m, const ChartPoint& p, const FdConfig& cfg) {
    EvalCache c;
    return ResidualEngine(m, cfg).reduced(p, c);
}

LCResiduals lc_residuals(const AnsatzMetric& m, const ChartPoint& p, const ScalarField& psi, int eps2,
                         int eps3, const FdConfig& cfg) {
    EvalCache c;
    return ResidualEngine(m, cfg, LcOptions{psi, eps2, eps3}).lc(p, c);
}

AnholonomyCoeffs anholonomy(const AnsatzMetric& m, const ChartPoint& p, const FdConfig& cfg) {
    EvalCache c;
    return ResidualEngine(m, cfg).anholonomy(p, c);
}

AnsatzMetric FlowFamily::metric_at(const real& chi) const {
    AnsatzMetric m = metric;
    for (ScalarField* f : {&m.g2, &m.g3, &m.h4, &m.h5, &m.nconn.w2, &m.nconn.w3, &m.nconn.n2, &m.nconn.n3})
        *f = fix_axis(*f, Axis::chi, chi);
    return m;
}

namespace {

FdConfig chi_bounded(FdConfig cfg, const real& chi0) {
    cfg.domain.lo[int(Axis::chi)] = 0;
    cfg.domain.hi[int(Axis::chi)] = chi0;
    return cfg;
}

}  // namespace

EvolutionEngine::EvolutionEngine(const FlowFamily& fam, const FdConfig& cfg)
    : fam_(fam), eng_(fam.metric, chi_bounded(cfg, fam.chi0)) {
    const FdConfig& c = eng_.config();
    const Axis X = Axis::chi;
    const AnsatzMetric& m = fam.metric;
    g2_chi = partial_field(m.g2, X, c);
    g3_chi = partial_field(m.g3, X, c);
    h4_chi = partial_field(m.h4, X, c);
    h5_chi = partial_field(m.h5, X, c);
    w2sq_chi = partial_field(sqr(m.nconn.w2), X, c);
    w3sq_chi = partial_field(sqr(m.nconn.w3), X, c);
    n2sq_chi = partial_field(sqr(m.nconn.n2), X, c);
    n3sq_chi = partial_field(sqr(m.nconn.n3), X, c);
    frame_2 = partial_field(m.g2 + m.h5 * sqr(m.nconn.n2), X, c);
    frame_3 = partial_field(m.g3 + m.h5 * sqr(m.nconn.n3), X, c);
}

EvolutionResiduals EvolutionEngine::evaluate(const ChartPoint& p, EvalCache& c) const {
    if (p.chi < 0 || p.chi > fam_.chi0)
        throw Error(Errc::chi_boundary, "chi = " + format17(p.chi) + " outside [0, chi0]");
    const AnsatzMetric& m = fam_.metric;
    const real lam = fam_.lambda;
    EvolutionResiduals e;
    real R = eng_.curvature_h(p, c);
    real S = eng_.curvature_v(p, c);
    real g2 = m.g2.eval(p, c), g3 = m.g3.eval(p, c), h4 = m.h4.eval(p, c), h5 = m.h5.eval(p, c);
    // Summation over c in {4, 5}: h_44 d(w_i^2) + h_55 d(n_i^2).
    e.e_h2 = g2_chi.eval(p, c) + 2 * (g2 * R - lam * g2) + h4 * w2sq_chi.eval(p, c) + h5 * n2sq_chi.eval(p, c);
    e.e_h3 = g3_chi.eval(p, c) + 2 * (g3 * R - lam * g3) + h4 * w3sq_chi.eval(p, c) + h5 * n3sq_chi.eval(p, c);
    e.e_v4 = h4_chi.eval(p, c) + 2 * (h4 * S - lam * h4);
    e.e_v5 = h5_chi.eval(p, c) + 2 * (h5 * S - lam * h5);
    e.c_frame_2 = frame_2.eval(p, c);
    e.c_frame_3 = frame_3.eval(p, c);
    ReducedResiduals r = eng_.reduced(p, c);
    e.offdiag_flags = {{"r_w2", r.r_w2}, {"r_w3", r.r_w3}, {"r_n2", r.r_n2}, {"r_n3", r.r_n3}};
    return e;
}

EvolutionResiduals evolution_residuals(const FlowFamily& fam, const ChartPoint& p, const FdConfig& cfg) {
    EvalCache c;
    return EvolutionEngine(fam, cfg).evaluate(p, c);
}

}  // namespace forge
