#include "forge/generators.hpp"

#include "forge/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace forge {

namespace bm = boost::multiprecision;

namespace {

const ScalarField X2 = ScalarField::coordinate(Axis::x2);
const ScalarField X3 = ScalarField::coordinate(Axis::x3);
const ScalarField V = ScalarField::coordinate(Axis::v);

ScalarField dv(const ScalarField& f) { return partial_field(f, Axis::v, FdConfig{}); }

}  // namespace

real sine_gordon_q(const real& p, int sign) { return 4 * bm::atan(bm::exp(sign * p)); }

// q* = 2 sign sech(p), q** = -2 sech(p) tanh(p) for either sign.
real sine_gordon_dq(const real& p, int sign) { return 2 * sign / bm::cosh(p); }

real sine_gordon_ddq(const real& p, int /*sign*/) { return -2 * bm::tanh(p) / bm::cosh(p); }

ScalarField sine_gordon_field(int sign, const ScalarField& phase) {
    if (sign != 1 && sign != -1) throw Error(Errc::invalid_argument, "soliton sign must be +1 or -1");
    return 4 * atan(exp(ScalarField(sign) * phase));
}

KdvTravel kdv_travelling(const real& B, const real& a, const real& eps) {
    if (B == 0 || eps == 0) throw Error(Errc::invalid_argument, "KdV travelling wave needs B != 0 and eps != 0");
    return {2 * B * B, B, a, -4 * B * B - a * a / eps, eps};
}

ScalarField kdv_travelling_field(const KdvTravel& k) {
    ScalarField phase = V + ScalarField(k.a) * X2 + ScalarField(k.b) * X3;
    return ScalarField(k.A) * sqr(sech(ScalarField(k.B) * phase));
}

ScalarField kdv_residual_field(const ScalarField& eta, const real& eps, const FdConfig& cfg) {
    auto d = [&](const ScalarField& f, Axis a) { return partial_field(f, a, cfg); };
    ScalarField eta_v = d(eta, Axis::v);
    ScalarField inner = d(eta, Axis::x3) + 6 * eta * eta_v + d(d(eta_v, Axis::v), Axis::v);
    return partial2_field(eta, Axis::x2, cfg) + ScalarField(eps) * d(inner, Axis::v);
}

real kdv_soliton_residual(const ScalarField& eta, const ChartPoint& p, const real& eps, const FdConfig& cfg) {
    return kdv_residual_field(eta, eps, cfg)(p);
}

ScalarField soliton_field(const SolitonChoice& s) {
    switch (s.kind) {
        case SolitonKind::sine_gordon_1d:
            return sine_gordon_field(s.sign, V + ScalarField(s.a2) * X2 + ScalarField(s.a3) * X3);
        case SolitonKind::kdv_like_3d:
            return kdv_travelling_field(kdv_travelling(s.kdv_B, s.kdv_a, s.kdv_eps));
        case SolitonKind::user_field:
            return s.user;
    }
    return 0;
}

ScalarField wave_k(const PpWaveChoice& w) {
    switch (w.kind) {
        case PpWaveKind::plane_monochromatic:
            return sin(V);
        case PpWaveKind::wave_packet:
            return where(ScalarField(w.p0) - abs(V), exp(V * V - ScalarField(w.p0 * w.p0)), 0);
        case PpWaveKind::separable_breve:
            return w.k_of_p;
        case PpWaveKind::user_field:
            break;
    }
    throw Error(Errc::invalid_argument, "a user pp-wave field has no separate k(p)");
}

// ---------------------------------------------------------------- Poisson

namespace {

// Keys cubic convolution kernel (a = -1/2) on |s| and its s-derivatives.
real keys_abs(const real& s, int d) {
    const real a = real(-0.5);
    if (s <= 1) {
        switch (d) {
            case 0: return (a + 2) * s * s * s - (a + 3) * s * s + 1;
            case 1: return 3 * (a + 2) * s * s - 2 * (a + 3) * s;
            case 2: return 6 * (a + 2) * s - 2 * (a + 3);
            default: return 6 * (a + 2);
        }
    }
    if (s < 2) {
        switch (d) {
            case 0: return a * s * s * s - 5 * a * s * s + 8 * a * s - 4 * a;
            case 1: return 3 * a * s * s - 10 * a * s + 8 * a;
            case 2: return 6 * a * s - 10 * a;
            default: return 6 * a;
        }
    }
    return 0;
}

real keys(const real& s, int d) {
    if (d > 3) return 0;
    real v = keys_abs(bm::abs(s), d);
    return (s < 0 && d % 2 == 1) ? -v : v;
}

struct GridTable {
    real x0, y0, hx, hy;
    int nx, ny;                 // solved nodes
    std::vector<real> ext;      // (nx + 2) x (ny + 2), one ghost layer
    const real& at(int i, int j) const { return ext[std::size_t(i + 1) * (ny + 2) + (j + 1)]; }
    real& at(int i, int j) { return ext[std::size_t(i + 1) * (ny + 2) + (j + 1)]; }
};

ScalarField keys_interpolant(std::shared_ptr<const GridTable> t, int dx, int dy) {
    if (dx > 3 || dy > 3) return 0;
    OpaqueSpec s;
    s.name = "psi_grid[" + std::to_string(dx) + "," + std::to_string(dy) + "]";
    s.deps = axis_bit(Axis::x2) | axis_bit(Axis::x3);
    s.smoothness = 1 - dx - dy;
    s.eval = [t, dx, dy](const ChartPoint& p, EvalCache&) -> real {
        const real slack = real(1e-9);
        real u = (p.x2 - t->x0) / t->hx, w = (p.x3 - t->y0) / t->hy;
        if (u < -slack || u > t->nx - 1 + slack || w < -slack || w > t->ny - 1 + slack)
            throw Error(Errc::stencil_out_of_domain, "interpolated psi evaluated at (" + format17(p.x2) + ", " +
                                                         format17(p.x3) + ") outside the solved rectangle");
        int i = std::clamp(int(bm::floor(u).convert_to<double>()), 0, t->nx - 2);
        int j = std::clamp(int(bm::floor(w).convert_to<double>()), 0, t->ny - 2);
        real fu = u - i, fw = w - j;
        real sum = 0;
        for (int a = -1; a <= 2; ++a) {
            real ka = keys(fu - a, dx);
            if (ka == 0) continue;
            for (int b = -1; b <= 2; ++b) sum += ka * keys(fw - b, dy) * t->at(i + a, j + b);
        }
        real scale = 1;
        for (int k = 0; k < dx; ++k) scale *= t->hx;
        for (int k = 0; k < dy; ++k) scale *= t->hy;
        return sum / scale;
    };
    s.partial = [t, dx, dy](Axis a) -> std::optional<ScalarField> {
        if (a == Axis::x2) return keys_interpolant(t, dx + 1, dy);
        if (a == Axis::x3) return keys_interpolant(t, dx, dy + 1);
        return ScalarField(0);
    };
    return ScalarField::opaque(std::move(s));
}

}  // namespace

ScalarField solve_psi_poisson(const real& rhs, const GridSpec& grid, const ScalarField& boundary,
                              const PoissonOptions& opt, PoissonReport* report) {
    const int nx = grid.x2.count, ny = grid.x3.count;
    if (nx < 4 || ny < 4) throw Error(Errc::invalid_argument, "Poisson grid needs at least 4 nodes per axis");
    if (!(grid.x2.hi > grid.x2.lo) || !(grid.x3.hi > grid.x3.lo))
        throw Error(Errc::invalid_argument, "Poisson grid needs hi > lo on x2 and x3");
    const real hx = (grid.x2.hi - grid.x2.lo) / (nx - 1), hy = (grid.x3.hi - grid.x3.lo) / (ny - 1);
    const real cx = 1 / (hx * hx), cy = 1 / (hy * hy);
    auto idx = [ny](int i, int j) { return std::size_t(i) * ny + j; };

    std::vector<real> u(std::size_t(nx) * ny, real(0));
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j)
            if (i == 0 || j == 0 || i == nx - 1 || j == ny - 1) {
                ChartPoint p;
                p.x2 = grid.x2.lo + hx * i;
                p.x3 = grid.x3.lo + hy * j;
                p.x1 = grid.x1;
                p.y5 = grid.y5;
                p.v = grid.v.lo;
                u[idx(i, j)] = boundary(p);
            }

    // Residual of the discrete equation, and -Laplacian with zero boundary.
    auto lap = [&](const std::vector<real>& f, int i, int j) {
        return cx * (f[idx(i + 1, j)] + f[idx(i - 1, j)] - 2 * f[idx(i, j)]) +
               cy * (f[idx(i, j + 1)] + f[idx(i, j - 1)] - 2 * f[idx(i, j)]);
    };
    auto interior = [&](auto&& fn) {
        for (int i = 1; i < nx - 1; ++i)
            for (int j = 1; j < ny - 1; ++j) fn(i, j);
    };

    std::vector<real> r(u.size(), real(0)), d(u.size(), real(0)), q(u.size(), real(0));
    real rr = 0, rmax = 0;
    interior([&](int i, int j) {
        real v = rhs - lap(u, i, j);
        r[idx(i, j)] = -v;
        d[idx(i, j)] = -v;
        rr += v * v;
        rmax = std::max(rmax, bm::abs(v));
    });
    // CG on A = -Laplacian (SPD) for the correction: A delta = lap u - rhs.
    std::vector<real> delta(u.size(), real(0));
    int it = 0;
    while (rmax > opt.tol) {
        if (it >= opt.max_iter)
            throw Error(Errc::nonconvergence, "Poisson CG stopped at residual " + format17(rmax) + " after " +
                                                  std::to_string(it) + " iterations");
        real dq = 0;
        interior([&](int i, int j) {
            q[idx(i, j)] = -lap(d, i, j);
            dq += d[idx(i, j)] * q[idx(i, j)];
        });
        real alpha = rr / dq;
        real rr_new = 0;
        rmax = 0;
        interior([&](int i, int j) {
            delta[idx(i, j)] += alpha * d[idx(i, j)];
            r[idx(i, j)] -= alpha * q[idx(i, j)];
            rr_new += r[idx(i, j)] * r[idx(i, j)];
            rmax = std::max(rmax, bm::abs(r[idx(i, j)]));
        });
        real beta = rr_new / rr;
        rr = rr_new;
        interior([&](int i, int j) { d[idx(i, j)] = r[idx(i, j)] + beta * d[idx(i, j)]; });
        ++it;
    }
    interior([&](int i, int j) { u[idx(i, j)] += delta[idx(i, j)]; });
    real final_res = 0;
    interior([&](int i, int j) { final_res = std::max(final_res, bm::abs(lap(u, i, j) - rhs)); });
    if (final_res > 100 * opt.tol)
        throw Error(Errc::nonconvergence, "Poisson CG drifted: true residual " + format17(final_res));
    if (report) {
        report->residual = final_res;
        report->iterations = it;
    }

    auto t = std::make_shared<GridTable>();
    t->x0 = grid.x2.lo;
    t->y0 = grid.x3.lo;
    t->hx = hx;
    t->hy = hy;
    t->nx = nx;
    t->ny = ny;
    t->ext.assign(std::size_t(nx + 2) * (ny + 2), real(0));
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j) t->at(i, j) = u[idx(i, j)];
    // Quadratic extrapolation into the ghost layer keeps quadratics exact.
    for (int i = 0; i < nx; ++i) {
        t->at(i, -1) = 3 * t->at(i, 0) - 3 * t->at(i, 1) + t->at(i, 2);
        t->at(i, ny) = 3 * t->at(i, ny - 1) - 3 * t->at(i, ny - 2) + t->at(i, ny - 3);
    }
    for (int j = -1; j <= ny; ++j) {
        t->at(-1, j) = 3 * t->at(0, j) - 3 * t->at(1, j) + t->at(2, j);
        t->at(nx, j) = 3 * t->at(nx - 1, j) - 3 * t->at(nx - 2, j) + t->at(nx - 3, j);
    }
    return keys_interpolant(t, 0, 0);
}

ScalarField liouville_psi(const real& c, int k, const real& offset2, const real& offset3) {
    if (k != 1 && k != 2) throw Error(Errc::invalid_argument, "Liouville exponent k must be 1 or 2");
    if (c == 0) return 0;
    // u = k psi / 2 solves u_22 + u_33 = K exp(2u), K = k c / 2.
    const real K = k * c / 2;
    ScalarField e2u;
    if (K > 0) {
        ScalarField y = X3 - ScalarField(offset3);
        e2u = ScalarField(1) / (ScalarField(K) * y * y);
    } else {
        ScalarField rho2 = sqr(X2 - ScalarField(offset2)) + sqr(X3 - ScalarField(offset3));
        e2u = ScalarField(4 / -K) / sqr(1 + rho2);
    }
    return log(e2u) / ScalarField(k);
}

// ---------------------------------------------------------------- N-connection

std::array<ScalarField, 2> w_from_phi(const ScalarField& phi, const FdConfig& cfg) {
    if (!phi.depends_on(Axis::v)) throw Error(Errc::phi_star_zero, "phi does not depend on v");
    ScalarField pv = nonzero_guard(partial_field(phi, Axis::v, cfg), Errc::phi_star_zero, "phi* = 0", real(1e-24));
    return {-partial_field(phi, Axis::x2, cfg) / pv, -partial_field(phi, Axis::x3, cfg) / pv};
}

std::array<ScalarField, 2> n_from_quadrature(const ScalarField& a4, const ScalarField& a5,
                                             const std::array<ScalarField, 2>& n0,
                                             const std::array<ScalarField, 2>& n1, const real& p_lo,
                                             const std::vector<ChartPoint>& probes) {
    if (n1[0].is_zero() && n1[1].is_zero()) return n0;
    ScalarField a5g = nonzero_guard(a5, Errc::degenerate_v_metric, "n-integrand: h5 = 0");
    RunningIntegralSpec spec;
    spec.integrand = abs(a4 / (abs(a5g) * sqrt(abs(a5g))));
    spec.axis = Axis::v;
    spec.lower = p_lo;
    spec.probes = probes;
    spec.name = "Qn";
    ScalarField Q = running_integral(spec);
    return {n0[0] + n1[0] * Q, n0[1] + n1[1] * Q};
}

// ---------------------------------------------------------------- string pipeline

AnsatzMetric solitonic_string_metric(const SolitonChoice& soliton, const PpWaveChoice& wave,
                                     const real& lambda_H, const ScalarField& psi, const ScalarField& h5_0,
                                     const std::array<ScalarField, 2>& n0, const std::array<ScalarField, 2>& n1,
                                     const StringOptions& opt) {
    if (lambda_H == 0) throw Error(Errc::lambda_zero, "lambda_H = 0: the e^{2 eta}/lambda_H^2 term is singular");
    if (h5_0.depends_on(Axis::v))
        throw Error(Errc::invalid_argument, "h5_0 is an integration function and may not depend on v");
    const ScalarField kappa = nonzero_guard(pp_kappa(wave), Errc::zero_factor, "kappa = 0");
    const ScalarField eta = soliton_field(soliton);
    const real lh2 = lambda_H * lambda_H;

    // eta5 = 8 kappa [h5_0 + e^{2 eta} / (2 lambda_H^2)], h5 = eta5 * (1 / 8 kappa).
    ScalarField core = h5_0 + exp(2 * eta) / ScalarField(2 * lh2);
    ScalarField eta5 = 8 * kappa * core;
    ScalarField h5 = eta5 / (8 * kappa);
    // |eta4| = e^{-2 eta} (sqrt|eta5|)*^2 / (2 kappa^2), the v-derivative acting on
    // the generating part only; sign(eta4) = sign(eta5) keeps h4 h5 < 0.
    ScalarField ds = nonzero_guard(dv(sqrt(abs(core))), Errc::degenerate_v_metric, "eta5* = 0");
    ScalarField abs_eta4 = exp(-2 * eta) * 8 * abs(kappa) * sqr(ds) / (2 * sqr(kappa));
    ScalarField eta4 = sign(eta5) * abs_eta4;
    ScalarField h4 = eta4 * (-2 * kappa);

    AnsatzMetric m;
    m.g1 = 1;
    m.g2 = -exp(psi);
    m.g3 = -exp(psi);
    m.h4 = h4;
    m.h5 = h5;
    auto w = w_from_phi(eta);
    m.nconn.w2 = w[0];
    m.nconn.w3 = w[1];
    auto n = n_from_quadrature(h4, h5, n0, n1, opt.p_lo, opt.probes);
    m.nconn.n2 = n[0];
    m.nconn.n3 = n[1];
    m.lambda = -lh2 / 4;
    m.roles.role = {Role::extra, Role::transverse, Role::transverse, Role::wave_phase, Role::wave_phase};
    m.roles.label = {"varkappa", "x", "y", "p", "v"};
    m.label = "gen.string";
    m.status = "generated";
    m.validate();
    return m;
}

AnsatzMetric vacuum_solitonic_metric(const ScalarField& breve_b, const SolitonChoice& q, const PpWaveChoice& wave,
                                     const real& h0, const ScalarField& n0_2, const ScalarField& n0_3,
                                     const GridSpec& probe, const real& curl_tol) {
    if (h0 == 0) throw Error(Errc::zero_factor, "h0 = 0");
    if (breve_b.depends_on(Axis::v)) throw Error(Errc::invalid_argument, "breve_b depends on (x2, x3) only");
    if (n0_2.depends_on(Axis::v) || n0_3.depends_on(Axis::v))
        throw Error(Errc::invalid_argument, "n0 is v-independent (n* = 0 gauge)");
    FdConfig cfg;
    for (const auto& p : probe.points()) {
        real curl = partial(n0_2, p, Axis::x3, 1, cfg) - partial(n0_3, p, Axis::x2, 1, cfg);
        if (bm::abs(curl) > curl_tol)
            throw Error(Errc::curl_violation, "(n2)' - (n3)^dot = " + format17(curl) + " at x2 = " + format17(p.x2) +
                                                  ", x3 = " + format17(p.x3));
    }
    ScalarField b = nonzero_guard(breve_b, Errc::zero_factor, "breve_b = 0");
    ScalarField qk = nonzero_guard(soliton_field(q) * wave_k(wave), Errc::zero_factor, "q k = 0");
    ScalarField qk_v = nonzero_guard(dv(qk), Errc::degenerate_v_metric, "(q k)* = 0");
    AnsatzMetric m;
    m.g1 = 1;
    m.g2 = -1;
    m.g3 = -1;
    m.h4 = -ScalarField(h0 * h0) * sqr(b) * sqr(qk_v);
    m.h5 = sqr(b) * sqr(qk);
    ScalarField lnqk_v = qk_v / qk;
    m.nconn.w2 = partial_field(log(abs(b)), Axis::x2, cfg) / lnqk_v;
    m.nconn.w3 = partial_field(log(abs(b)), Axis::x3, cfg) / lnqk_v;
    m.nconn.n2 = n0_2;
    m.nconn.n3 = n0_3;
    m.lambda = 0;
    m.roles.role = {Role::extra, Role::transverse, Role::transverse, Role::wave_phase, Role::wave_phase};
    m.roles.label = {"varkappa", "x", "y", "p", "v"};
    m.label = "gen.vacuum";
    m.validate();
    return m;
}

// ---------------------------------------------------------------- Schwarzschild deformations

namespace {

CoordinateRoles aux1_roles() {
    CoordinateRoles r;
    r.role = {Role::extra, Role::radial_like, Role::angular, Role::angular, Role::time};
    r.label = {"varkappa", "xi", "theta", "phi", "t"};
    return r;
}

}  // namespace

AnsatzMetric stationary_deformation(const SchwarzschildParams& params, const ScalarField& eta5, const real& h0,
                                    const ScalarField& n2, const ScalarField& n3, const ScalarField& psi) {
    if (!eta5.depends_on(Axis::v)) throw Error(Errc::eta5_star_zero, "eta5 does not depend on phi (eta5* = 0)");
    if (h0 == 0) throw Error(Errc::zero_factor, "h0 = 0");
    AnsatzMetric base = build_primary(PrimaryKind::aux1, params);
    SchwarzschildFields sf = schwarzschild_fields(params);
    ScalarField s5 = sqrt(abs(eta5));
    ScalarField s5v = nonzero_guard(dv(s5), Errc::eta5_star_zero, "eta5* = 0");
    ScalarField varpi = sqrt(abs(sf.varpi2));
    ScalarField eta4 = ScalarField(h0 * h0) * abs(base.h5 / base.h4) * sqr(s5v);
    AnsatzMetric m = base;
    m.g2 = -exp(psi);
    m.g3 = -exp(psi);
    m.h4 = eta4 * base.h4;
    m.h5 = eta5 * base.h5;
    FdConfig cfg;
    m.nconn.w2 = partial_field(s5 * varpi, Axis::x2, cfg) / (s5v * varpi);
    m.nconn.w3 = partial_field(s5, Axis::x3, cfg) / s5v;
    m.nconn.n2 = n2;
    m.nconn.n3 = n3;
    m.lambda = 0;
    m.roles = aux1_roles();
    m.label = "gen.stationary";
    m.status = "generated";
    m.validate();
    return m;
}

AnsatzMetric polarized_aux1(const SchwarzschildParams& params, const ScalarField& eta4, const ScalarField& eta5,
                            const real& eps, const ScalarField& w2, const ScalarField& w3, const ScalarField& n2,
                            const ScalarField& n3) {
    AnsatzMetric m = build_primary(PrimaryKind::aux1, params);
    m.h4 = eta4 * m.h4;
    m.h5 = eta5 * m.h5;
    m.nconn.w2 = ScalarField(eps) * w2;
    m.nconn.w3 = ScalarField(eps) * w3;
    m.nconn.n2 = ScalarField(eps) * n2;
    m.nconn.n3 = ScalarField(eps) * n3;
    m.label = "gen.aux1-polarized";
    m.status = "unverified";
    m.validate();
    return m;
}

RotoidHorizon rotoid_horizon(const SchwarzschildParams& params, const RotoidParams& rot, const real& phi) {
    const real mu = params.mu, eps = params.eps;
    if (!(mu > 0)) throw Error(Errc::invalid_argument, "mass mu must be positive");
    if (eps < 0) throw Error(Errc::invalid_argument, "eps must be >= 0");
    const real s = bm::sin(rot.omega0 * phi + rot.phi0);
    auto q0 = [&](const real& r) -> real {
        if (!rot.q0_of_r) return rot.q0;
        ChartPoint p;
        p.x2 = r;
        return (*rot.q0_of_r)(p);
    };
    // eta5 varpi^2 = 1 - 2mu/r + eps (1/r^2 + 2 q5_1) with 2 q5_1 = q0 sin(.)/(4mu^2) - 1/r^2.
    auto F = [&](const real& r) { return 1 - 2 * mu / r + eps * q0(r) * s / (4 * mu * mu); };
    RotoidHorizon out;
    out.warn_large_eps = eps > real(0.1);
    out.r_root = find_root(F, mu, 4 * mu, real(1e-30) * mu);
    out.r_formula = 2 * mu / (1 + eps * q0(2 * mu) / (4 * mu * mu) * s);
    return out;
}

SmallEpsResult small_eps_polarizations(const SmallEpsChain& chain, const real& eps, const ScalarField& ratio,
                                       const std::vector<ChartPoint>& probes) {
    SmallEpsResult r;
    ScalarField e(eps);
    r.eta4 = sqr(chain.q4_0 + e * chain.q4_1);
    r.eta5 = sqr(1 + e * chain.q5_1 + e * e * chain.q5_2);
    r.match0 = ratio * dv(chain.q5_1) - chain.q4_0;
    r.match1 = ratio * dv(chain.q5_2) - chain.q4_1;
    bool limit = !probes.empty();
    for (const auto& p : probes)
        if (bm::abs(chain.q4_0(p) - 1) > real(1e-12)) limit = false;
    r.schwarzschild_limit = limit;
    return r;
}

SmallEpsChain match_q4(const ScalarField& q5_1, const ScalarField& q5_2, const ScalarField& ratio) {
    return {ratio * dv(q5_1), ratio * dv(q5_2), q5_1, q5_2};
}

// ---------------------------------------------------------------- extra dimension

ExtraDimParts extradim_parts(const ExtraDimSpec& spec, const ScalarField& psi, const real& lambda) {
    if (spec.eps4 != 1 && spec.eps4 != -1) throw Error(Errc::invalid_argument, "eps4 must be +1 or -1");
    if (!spec.f.depends_on(Axis::v)) throw Error(Errc::f_star_zero, "f does not depend on the anisotropic coordinate");
    ScalarField fv = nonzero_guard(dv(spec.f), Errc::f_star_zero, "f* = 0");
    ScalarField df = nonzero_guard(spec.f - spec.f0, Errc::f_equals_f0, "f = f0: singular n-integrand");

    RunningIntegralSpec I;
    I.integrand = fv * (spec.f - spec.f0);
    I.lower = spec.v_lo;
    I.probes = spec.probes;
    I.name = "I_f";
    ScalarField integral = running_integral(I);

    ScalarField varsigma;
    if (spec.literal) {
        ScalarField c = ScalarField(real(spec.eps4) * spec.lambda_H * spec.lambda_H / 16) * spec.h0sq;
        varsigma = spec.varsigma0 + c * integral;
    } else {
        // varsigma = 1 / S with S* = 2 sign(S) eps4 h0^2 lambda f*(f - f0); this
        // is what the v-equation with lambda requires of |h4| = h0^2 (f*)^2 |varsigma|.
        ScalarField S0 = spec.varsigma0;
        ChartPoint base;
        if (spec.probes.size()) base = spec.probes.front();
        real sgnS = S0(base) < 0 ? -1 : 1;
        ScalarField K = ScalarField(2 * sgnS * spec.eps4 * lambda) * spec.h0sq;
        varsigma = ScalarField(1) / nonzero_guard(S0 + K * integral, Errc::degenerate_v_metric, "varsigma pole");
    }

    AnsatzMetric m;
    m.g1 = 1;
    m.g2 = exp(2 * psi);
    m.g3 = exp(2 * psi);
    m.h4 = ScalarField(spec.eps4) * spec.h0sq * sqr(fv) * abs(varsigma);
    m.h5 = sqr(df);
    FdConfig cfg;
    if (varsigma.depends_on(Axis::v)) {
        ScalarField sv = nonzero_guard(dv(varsigma), Errc::degenerate_v_metric, "varsigma* = 0");
        m.nconn.w2 = -partial_field(varsigma, Axis::x2, cfg) / sv;
        m.nconn.w3 = -partial_field(varsigma, Axis::x3, cfg) / sv;
    }  // sourceless: w = 0

    ScalarField n_integral = 0;
    if (spec.n_k2[0].is_zero() && spec.n_k2[1].is_zero()) {
        m.nconn.n2 = spec.n_k1[0];
        m.nconn.n3 = spec.n_k1[1];
    } else {
        RunningIntegralSpec N;
        N.integrand = sqr(fv) * varsigma / (df * df * df);
        N.lower = spec.v_lo;
        N.probes = spec.probes;
        N.name = "I_n";
        n_integral = running_integral(N);
        m.nconn.n2 = spec.n_k1[0] + spec.n_k2[0] * n_integral;
        m.nconn.n3 = spec.n_k1[1] + spec.n_k2[1] * n_integral;
    }
    m.lambda = lambda;
    m.roles.role = {Role::angular, Role::radial_like, Role::angular, Role::extra, Role::time};
    m.roles.label = {"phi", "xi", "theta_check", "varkappa", "t"};
    m.label = spec.literal ? "gen.extradim-literal" : "gen.extradim";
    m.validate();
    return {m, varsigma, integral, n_integral};
}

AnsatzMetric extradim_metric(const ExtraDimSpec& spec, const ScalarField& psi, const real& lambda) {
    return extradim_parts(spec, psi, lambda).metric;
}

AnsatzMetric time_anisotropic_metric(const ExtraDimSpec& spec, const ScalarField& psi, const real& lambda) {
    AnsatzMetric m = extradim_metric(spec, psi, lambda);
    std::swap(m.roles.role[3], m.roles.role[4]);
    std::swap(m.roles.label[3], m.roles.label[4]);
    m.label = spec.literal ? "gen.time-anisotropic-literal" : "gen.time-anisotropic";
    return m;
}

}  // namespace forge
