#include "forge/flows.hpp"

#include "forge/sweep.hpp"

namespace forge {

namespace bm = boost::multiprecision;

namespace {

const ScalarField CHI = ScalarField::coordinate(Axis::chi);

FdConfig chi_bounded(FdConfig cfg, const real& chi0) {
    cfg.domain.lo[int(Axis::chi)] = 0;
    cfg.domain.hi[int(Axis::chi)] = chi0;
    return cfg;
}

void check_chi0(const real& chi0) {
    if (!(chi0 > 0)) throw Error(Errc::chi_range, "chi0 must be positive");
}

}  // namespace

FlowFamily exponential_flow_family(const real& b0sq, const real& n0, const real& lambda, const VacuumInputs& base,
                                   const real& chi0) {
    check_chi0(chi0);
    if (!(b0sq > 0)) throw Error(Errc::invalid_argument, "b0sq must be positive");
    const real A = b0sq * n0 * n0;
    if (A - 2 * lambda * chi0 <= 0)
        throw Error(Errc::chi_range, "(n^0)^2 turns non-positive before chi0: need chi0 < b0sq n0^2 / (2 lambda) = " +
                                         format17(lambda > 0 ? A / (2 * lambda) : real(0)));
    ExponentialData d;
    d.bsq = lambda == 0 ? ScalarField(b0sq) : ScalarField(b0sq) * exp(ScalarField(2 * lambda) * CHI);
    d.n0 = lambda == 0 ? ScalarField(n0) : sqrt((ScalarField(A) - ScalarField(2 * lambda) * CHI) / d.bsq);

    // Each member is the vacuum metric with breve_b^2 -> breve_b^2 bsq(chi) and n^0 = n0(chi).
    GridSpec probe;  // n0(chi) is constant in (x2, x3): the curl condition holds identically
    probe.x2 = probe.x3 = probe.v = {0, 0, 1};
    AnsatzMetric m = vacuum_solitonic_metric(base.breve_b, base.q, base.wave, base.h0, 0, 0, probe);
    m.h4 = m.h4 * d.bsq;
    m.h5 = m.h5 * d.bsq;
    m.nconn.n2 = d.n0;
    m.nconn.n3 = d.n0;
    m.label = "flow.exponential";

    FlowFamily f;
    f.metric = m;
    f.lambda = lambda;
    f.chi0 = chi0;
    f.kind = "exponential";
    f.exponential = d;
    return f;
}

FlowFamily constant_family(const AnsatzMetric& m, const real& chi0) {
    check_chi0(chi0);
    FlowFamily f;
    f.metric = m;
    // Each member is Einstein with the metric's lambda; the flow normalization
    // that keeps such a metric fixed has the opposite sign convention.
    f.lambda = -m.lambda;
    f.chi0 = chi0;
    f.kind = "constant";
    return f;
}

FlowFamily extradim_flow_family(const ExtraDimSpec& spec, const ScalarField& psi, const real& lambda,
                                const real& chi0, bool time_anisotropic) {
    check_chi0(chi0);
    FlowFamily f;
    f.metric = time_anisotropic ? time_anisotropic_metric(spec, psi, lambda) : extradim_metric(spec, psi, lambda);
    f.metric.label = time_anisotropic ? "flow.time-anisotropic" : "flow.extradim";
    f.lambda = -lambda;
    f.chi0 = chi0;
    f.kind = time_anisotropic ? "time-anisotropic" : "extradim";
    return f;
}

FlowFamily stationary_flow_family(const SchwarzschildParams& params, const ScalarField& eta5, const real& h0,
                                  const ScalarField& n2, const ScalarField& n3, const ScalarField& psi,
                                  const real& chi0) {
    check_chi0(chi0);
    FlowFamily f;
    f.metric = stationary_deformation(params, eta5, h0, n2, n3, psi);
    f.metric.label = "flow.stationary";
    f.lambda = 0;
    f.chi0 = chi0;
    f.kind = "stationary";
    f.stationary = StationaryData{h0, eta5};
    return f;
}

FlowConstraintEngine::FlowConstraintEngine(const FlowFamily& fam, const FdConfig& cfg)
    : fam_(fam), cfg_(chi_bounded(cfg, fam.chi0)) {
    const AnsatzMetric& m = fam.metric;
    const Axis X = Axis::chi;
    frame_2 = partial_field(m.g2 + m.h5 * sqr(m.nconn.n2), X, cfg_);
    frame_3 = partial_field(m.g3 + m.h5 * sqr(m.nconn.n3), X, cfg_);
    if (fam.stationary) {
        const auto& s = *fam.stationary;
        ScalarField k = ScalarField(s.h0 * s.h0) * sqr(partial_field(sqrt(abs(s.eta5)), Axis::v, cfg_));
        coframe_2 = k * partial_field(sqr(m.nconn.w2), X, cfg_) - s.eta5 * partial_field(sqr(m.nconn.n2), X, cfg_);
        coframe_3 = k * partial_field(sqr(m.nconn.w3), X, cfg_) - s.eta5 * partial_field(sqr(m.nconn.n3), X, cfg_);
    }
    if (fam.exponential) {
        const auto& e = *fam.exponential;
        const_1 = partial_field(e.bsq, X, cfg_) - ScalarField(2 * fam.lambda) * e.bsq;
        const_2 = partial_field(e.bsq * sqr(e.n0), X, cfg_) + ScalarField(2 * fam.lambda);
    }
}

FlowConstraintResiduals FlowConstraintEngine::evaluate(const ChartPoint& p, EvalCache& c) const {
    if (p.chi < 0 || p.chi > fam_.chi0)
        throw Error(Errc::chi_boundary, "chi = " + format17(p.chi) + " outside [0, chi0]");
    FlowConstraintResiduals r;
    r.c_frame_2 = frame_2.eval(p, c);
    r.c_frame_3 = frame_3.eval(p, c);
    if (fam_.stationary) {
        r.c_coframe_2 = coframe_2.eval(p, c);
        r.c_coframe_3 = coframe_3.eval(p, c);
    }
    if (fam_.exponential) {
        r.c_bsq = const_1.eval(p, c);
        r.c_bn2 = const_2.eval(p, c);
    }
    return r;
}

FlowConstraintResiduals flow_constraint_residuals(const FlowFamily& fam, const ChartPoint& p, const FdConfig& cfg) {
    EvalCache c;
    return FlowConstraintEngine(fam, cfg).evaluate(p, c);
}

namespace {

void raise(real& acc, const real& x) {
    if (bm::abs(x) > acc) acc = bm::abs(x);
}

void raise(std::optional<real>& acc, const std::optional<real>& x) {
    if (!x) return;
    if (!acc) acc = real(0);
    raise(*acc, *x);
}

struct PointFlow {
    real reduced = 0, eh = 0, ev = 0, frame = 0;
    std::optional<real> coframe, exponential;
    std::string error;
};

}  // namespace

FlowReport flow_report(const FlowFamily& fam, const GridSpec& grid, DerivPolicy policy) {
    grid.validate();
    if (grid.chi.lo < 0 || grid.chi.hi > fam.chi0)
        throw Error(Errc::chi_range, "grid chi-range [" + format17(grid.chi.lo) + ", " + format17(grid.chi.hi) +
                                         "] leaves the family range [0, " + format17(fam.chi0) + "]");
    FdConfig cfg = FdConfig::from_grid(grid, policy);
    EvolutionEngine evo(fam, cfg);
    FlowConstraintEngine con(fam, cfg);
    const auto points = grid.points();
    auto per_point = sweep<PointFlow>(points, [&](const ChartPoint& p, EvalCache& c) {
        PointFlow out;
        try {
            out.reduced = evo.engine().reduced(p, c).max_abs();
            EvolutionResiduals e = evo.evaluate(p, c);
            out.eh = std::max(bm::abs(e.e_h2), bm::abs(e.e_h3));
            out.ev = std::max(bm::abs(e.e_v4), bm::abs(e.e_v5));
            FlowConstraintResiduals f = con.evaluate(p, c);
            out.frame = std::max(bm::abs(f.c_frame_2), bm::abs(f.c_frame_3));
            if (f.c_coframe_2) out.coframe = std::max(bm::abs(*f.c_coframe_2), bm::abs(*f.c_coframe_3));
            if (f.c_bsq) out.exponential = std::max(bm::abs(*f.c_bsq), bm::abs(*f.c_bn2));
        } catch (const Error& e) {
            out.error = std::string(e.what()) + " at (x2, x3, v, chi) = (" + format17(p.x2) + ", " + format17(p.x3) +
                        ", " + format17(p.v) + ", " + format17(p.chi) + ")";
        }
        return out;
    });

    FlowReport rep;
    rep.kind = fam.kind;
    rep.lambda = fam.lambda;
    rep.chi0 = fam.chi0;
    const std::size_t per_chi = points.size() / std::size_t(grid.chi.count);
    for (int k = 0; k < grid.chi.count; ++k) {
        FlowSample s;
        s.chi = points[k * per_chi].chi;
        for (std::size_t i = k * per_chi; i < (k + 1) * per_chi; ++i) {
            const PointFlow& pf = per_point[i];
            if (!pf.error.empty()) {
                if (s.error.empty()) s.error = pf.error;
                continue;
            }
            raise(s.reduced_max, pf.reduced);
            raise(s.evolution_h_max, pf.eh);
            raise(s.evolution_v_max, pf.ev);
            raise(s.frame_max, pf.frame);
            raise(s.coframe_max, pf.coframe);
            raise(s.exponential_max, pf.exponential);
        }
        rep.errors = rep.errors || !s.error.empty();
        raise(rep.reduced_max, s.reduced_max);
        raise(rep.evolution_h_max, s.evolution_h_max);
        raise(rep.evolution_v_max, s.evolution_v_max);
        raise(rep.frame_max, s.frame_max);
        raise(rep.coframe_max, s.coframe_max);
        raise(rep.exponential_max, s.exponential_max);
        rep.samples.push_back(std::move(s));
    }
    return rep;
}

}  // namespace forge
