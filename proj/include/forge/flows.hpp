#pragma once

#include "forge/dcalculus.hpp"
#include "forge/flow_family.hpp"
#include "forge/generators.hpp"

#include <optional>
#include <string>
#include <vector>

namespace forge {

struct VacuumInputs {
    ScalarField breve_b = 1;
    SolitonChoice q;
    PpWaveChoice wave;
    real h0 = 2;
};

// breve_b^2(chi) = b0sq e^{2 lambda chi}, n^0(chi) = sqrt((b0sq n0^2 - 2 lambda chi) / breve_b^2(chi)),
// the closed forms of d_chi breve_b^2 = 2 lambda breve_b^2 and d_chi[breve_b^2 (n^0)^2] = -2 lambda.
FlowFamily exponential_flow_family(const real& b0sq, const real& n0, const real& lambda, const VacuumInputs& base,
                                   const real& chi0);

// A static metric as a chi-constant family.
FlowFamily constant_family(const AnsatzMetric& m, const real& chi0);

// Section-5 generators with chi entering through psi, n_k1 and any other field.
FlowFamily extradim_flow_family(const ExtraDimSpec& spec, const ScalarField& psi, const real& lambda,
                                const real& chi0, bool time_anisotropic = false);
FlowFamily stationary_flow_family(const SchwarzschildParams& params, const ScalarField& eta5, const real& h0,
                                  const ScalarField& n2, const ScalarField& n3, const ScalarField& psi,
                                  const real& chi0);

struct FlowConstraintResiduals {
    real c_frame_2 = 0, c_frame_3 = 0;                // d_chi[g_i + h5 n_i^2]
    std::optional<real> c_coframe_2, c_coframe_3;  // stationary: h0^2 [(sqrt|eta5|)*]^2 d_chi w_i^2 - eta5 d_chi n_i^2
    std::optional<real> c_bsq, c_bn2;              // exponential: d_chi b^2 - 2 lambda b^2, d_chi[b^2 n^2] + 2 lambda
};

class FlowConstraintEngine {
public:
    FlowConstraintEngine(const FlowFamily& fam, const FdConfig& cfg);
    FlowConstraintResiduals evaluate(const ChartPoint& p, EvalCache& c) const;

private:
    FlowFamily fam_;
    FdConfig cfg_;
    ScalarField frame_2, frame_3;
    ScalarField coframe_2, coframe_3;
    ScalarField const_1, const_2;
};

FlowConstraintResiduals flow_constraint_residuals(const FlowFamily& fam, const ChartPoint& p,
                                                  const FdConfig& cfg = {});

struct FlowSample {
    real chi;
    real reduced_max = 0;
    real evolution_h_max = 0;  // |e_h2|, |e_h3|
    real evolution_v_max = 0;  // |e_v4|, |e_v5|
    real frame_max = 0;
    std::optional<real> coframe_max, exponential_max;
    std::string error;  // evaluator error with point provenance
};

struct FlowReport {
    std::string kind;
    real lambda = 0, chi0 = 0;
    std::vector<FlowSample> samples;
    real reduced_max = 0, evolution_h_max = 0, evolution_v_max = 0, frame_max = 0;
    std::optional<real> coframe_max, exponential_max;
    bool errors = false;
};

// One sample per chi value of the grid; spatial maxima over the grid points.
FlowReport flow_report(const FlowFamily& fam, const GridSpec& grid, DerivPolicy policy = DerivPolicy::prefer_exact);

}  // namespace forge
