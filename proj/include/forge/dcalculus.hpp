#pragma once

#include "forge/ansatz.hpp"
#include "forge/flow_family.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace forge {

enum class DerivPolicy { prefer_exact, fd_only };

struct FdConfig {
    int order = 4;
    std::array<real, kAxes> h{real(1e-3), real(1e-3), real(1e-3), real(1e-3), real(1e-3), real(1e-3)};
    DerivPolicy policy = DerivPolicy::prefer_exact;
    Box domain;  // stencils must stay inside
    bool kink_guard = true;
    int kink_steps = 10;

    static FdConfig from_grid(const GridSpec& g, DerivPolicy policy, int pad_steps = 16);
};

// Derivative fields: exact when the policy allows and the rules reach,
// otherwise central differences (5-point at order 4, 3-point at order 2).
ScalarField partial_field(const ScalarField& f, Axis a, const FdConfig& cfg);
ScalarField partial2_field(const ScalarField& f, Axis a, const FdConfig& cfg);
real partial(const ScalarField& f, const ChartPoint& p, Axis a, int order, const FdConfig& cfg = {});

struct AuxCoeffs {
    real phi, alpha2, alpha3, beta, gamma;
};

// Sign convention, used everywhere: each reduced residual is the curvature
// combination plus lambda, so an Einstein space R_ab = Lambda g_ab of the
// evolution equations carries lambda = -Lambda here.
struct ReducedResiduals {
    real r_h, r_v, r_w2, r_w3, r_n2, r_n3;
    ChartPoint point;
    real max_abs() const;
};

struct LCResiduals {
    real c1;      // eps2 psi_22 + eps3 psi_33 - lambda
    real c1_alt;  // same with +lambda; both sign conventions are in use
    real c2, c3, c4;
    std::optional<real> cw2, cw3;
    std::string cw_error;  // set when cw entries are unavailable
};

struct AnholonomyCoeffs {
    // (i, a, b) -> d_a N_i^b for i in {2,3}, a,b in {4,5}
    std::map<std::array<int, 3>, real> w_ia_b;
    // (i, j, a) -> Omega^a_ij = e_j(N_i^a) - e_i(N_j^a)
    std::map<std::array<int, 3>, real> omega_ij_a;
    bool holonomic(const real& tol) const;
};

struct EvolutionResiduals {
    real e_h2, e_h3, e_v4, e_v5;
    real c_frame_2, c_frame_3;
    std::vector<std::pair<std::string, real>> offdiag_flags;
};

struct LcOptions {
    ScalarField psi;
    int eps2 = 1, eps3 = 1;
};

// |phi*| at or below these counts as phi* = 0 for the cw entries. With FD
// derivatives phi carries the truncation error of h5* (about 1e-12 at h = 1e-3),
// so its derivatives are only meaningful well above that.
inline const real kPhiStarFloorExact = real(1e-24);
inline const real kPhiStarFloorFd = real(1e-6);

// Derivative fields for one metric, built once and evaluated per point with a
// shared cache. Construction is the expensive symbolic part.
class ResidualEngine {
public:
    ResidualEngine(const AnsatzMetric& m, const FdConfig& cfg, std::optional<LcOptions> lc = std::nullopt);

    const AnsatzMetric& metric() const { return m_; }
    const FdConfig& config() const { return cfg_; }

    void guard(const ChartPoint& p, EvalCache& c) const;
    AuxCoeffs aux(const ChartPoint& p, EvalCache& c) const;
    ReducedResiduals reduced(const ChartPoint& p, EvalCache& c) const;
    LCResiduals lc(const ChartPoint& p, EvalCache& c) const;
    AnholonomyCoeffs anholonomy(const ChartPoint& p, EvalCache& c) const;
    // Curvature parts without lambda: R (h-sector) and S (v-sector).
    real curvature_h(const ChartPoint& p, EvalCache& c) const;
    real curvature_v(const ChartPoint& p, EvalCache& c) const;

private:
    AnsatzMetric m_;
    FdConfig cfg_;
    ScalarField g2_2, g2_3, g2_33, g3_2, g3_3, g3_22;
    ScalarField h4_v, h5_v, h5_vv;
    ScalarField phi, phi_2, phi_3, phi_v;
    ScalarField w2_v, w3_v, w2_3, w3_2;
    ScalarField n2_v, n2_vv, n3_v, n3_vv, n2_3, n3_2;
    real phi_floor_;
    bool has_lc_ = false;
    LcOptions lcopt_;
    ScalarField psi_22, psi_33;
};

AuxCoeffs aux_coeffs(const AnsatzMetric& m, const ChartPoint& p, const FdConfig& cfg = {});
ReducedResiduals reduced_residuals(const AnsatzMetric& m, const ChartPoint& p, const FdConfig& cfg = {});
LCResiduals lc_residuals(const AnsatzMetric& m, const ChartPoint& p, const ScalarField& psi, int eps2,
                         int eps3, const FdConfig& cfg = {});
AnholonomyCoeffs anholonomy(const AnsatzMetric& m, const ChartPoint& p, const FdConfig& cfg = {});

class EvolutionEngine {
public:
    EvolutionEngine(const FlowFamily& fam, const FdConfig& cfg);
    EvolutionResiduals evaluate(const ChartPoint& p, EvalCache& c) const;
    const ResidualEngine& engine() const { return eng_; }

private:
    FlowFamily fam_;
    ResidualEngine eng_;
    ScalarField g2_chi, g3_chi, h4_chi, h5_chi;
    ScalarField w2sq_chi, w3sq_chi, n2sq_chi, n3sq_chi;
    ScalarField frame_2, frame_3;
};

EvolutionResiduals evolution_residuals(const FlowFamily& fam, const ChartPoint& p, const FdConfig& cfg = {});

}  // namespace forge
