#pragma once

#include "forge/ansatz.hpp"
#include "forge/dcalculus.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace forge {

enum class SolitonKind { sine_gordon_1d, kdv_like_3d, user_field };

// eta(x2, x3, v). sine_gordon_1d is q(v + a2 x2 + a3 x3); a2 = a3 = 0 is the
// plain one-dimensional kink.
struct SolitonChoice {
    SolitonKind kind = SolitonKind::sine_gordon_1d;
    int sign = 1;
    real a2 = 0, a3 = 0;
    // kdv_like_3d travelling wave: B and the x2-slope a; eps of the equation
    real kdv_B = 1, kdv_a = real(0.5), kdv_eps = 1;
    ScalarField user;
};

real sine_gordon_q(const real& p, int sign);
real sine_gordon_dq(const real& p, int sign);
real sine_gordon_ddq(const real& p, int sign);
// 4 atan(exp(sign * phase)) as a field.
ScalarField sine_gordon_field(int sign, const ScalarField& phase);
ScalarField soliton_field(const SolitonChoice& s);

// A sech^2(B (v + a x2 + b x3)) with A = 2B^2 and b = -4B^2 - a^2/eps solves
// eta_22 + eps (eta_3 + 6 eta eta_v + eta_vvv)_v = 0.
struct KdvTravel {
    real A, B, a, b, eps;
};
KdvTravel kdv_travelling(const real& B, const real& a, const real& eps);
ScalarField kdv_travelling_field(const KdvTravel& k);
ScalarField kdv_residual_field(const ScalarField& eta, const real& eps, const FdConfig& cfg = {});
real kdv_soliton_residual(const ScalarField& eta, const ChartPoint& p, const real& eps, const FdConfig& cfg = {});

// k(p) of a pp-wave choice, kappa = breve_kappa * k.
ScalarField wave_k(const PpWaveChoice& w);

struct PoissonOptions {
    real tol = real(1e-12);  // max-norm of the discrete residual
    int max_iter = 20000;
};

struct PoissonReport {
    real residual = 0;  // max |Lap_h psi - rhs| over interior nodes
    int iterations = 0;
};

// 5-point Laplacian with Dirichlet data on the x2/x3 rectangle of `grid`;
// conjugate gradients to a fixed residual, then bicubic (Keys) interpolation.
ScalarField solve_psi_poisson(const real& rhs, const GridSpec& grid, const ScalarField& boundary,
                              const PoissonOptions& opt = {}, PoissonReport* report = nullptr);

// Closed-form solution of psi_22 + psi_33 = c exp(k psi), k in {1, 2}.
// c > 0 uses y = x3 - offset3 > 0; c < 0 a round cap centred at the offsets.
ScalarField liouville_psi(const real& c, int k, const real& offset2 = 0, const real& offset3 = 0);

// w_i = -d_i phi / phi*.
std::array<ScalarField, 2> w_from_phi(const ScalarField& phi, const FdConfig& cfg = {});

// n_i = n0_i + n1_i * Q, Q = int_{p_lo}^{v} |a4 a5^{-3/2}| dv.
std::array<ScalarField, 2> n_from_quadrature(const ScalarField& a4, const ScalarField& a5,
                                             const std::array<ScalarField, 2>& n0,
                                             const std::array<ScalarField, 2>& n1, const real& p_lo,
                                             const std::vector<ChartPoint>& probes = {});

struct StringOptions {
    real p_lo = 0;
    std::vector<ChartPoint> probes;  // settle quadrature panels over the use domain
};

AnsatzMetric solitonic_string_metric(const SolitonChoice& soliton, const PpWaveChoice& wave,
                                     const real& lambda_H, const ScalarField& psi, const ScalarField& h5_0,
                                     const std::array<ScalarField, 2>& n0, const std::array<ScalarField, 2>& n1,
                                     const StringOptions& opt = {});

// The curl condition (n2)' - (n3)^dot = 0 is checked on `probe`.
AnsatzMetric vacuum_solitonic_metric(const ScalarField& breve_b, const SolitonChoice& q, const PpWaveChoice& wave,
                                     const real& h0, const ScalarField& n0_2, const ScalarField& n0_3,
                                     const GridSpec& probe, const real& curl_tol = real(1e-10));

// Deformation of aux1 (x2 = xi, x3 = theta, v = phi, y5 = t).
AnsatzMetric stationary_deformation(const SchwarzschildParams& params, const ScalarField& eta5, const real& h0,
                                    const ScalarField& n2, const ScalarField& n3, const ScalarField& psi);

// aux1 with polarizations eta4, eta5 on h4, h5 and coframe terms scaled by eps.
AnsatzMetric polarized_aux1(const SchwarzschildParams& params, const ScalarField& eta4, const ScalarField& eta5,
                            const real& eps, const ScalarField& w2 = 0, const ScalarField& w3 = 0,
                            const ScalarField& n2 = 0, const ScalarField& n3 = 0);

struct RotoidParams {
    real q0 = 1;
    std::optional<ScalarField> q0_of_r;  // field of x2 read as r; overrides q0
    real omega0 = 1;
    real phi0 = 0;
};

struct RotoidHorizon {
    real r_root;
    real r_formula;
    bool warn_large_eps = false;
};

RotoidHorizon rotoid_horizon(const SchwarzschildParams& params, const RotoidParams& rot, const real& phi);

struct SmallEpsChain {
    ScalarField q4_0, q4_1;
    ScalarField q5_1, q5_2;
};

struct SmallEpsResult {
    ScalarField eta4, eta5;
    ScalarField match0, match1;  // order-0 and order-1 matching residuals
    bool schwarzschild_limit = false;  // q4_0 == 1 and q5_1 == 0 on the probes
};

// sqrt|eta4| = q4_0 + eps q4_1, sqrt|eta5| = 1 + eps q5_1 + eps^2 q5_2, with
// matching under eps*h0 = 1: ratio * (q5_k)* = q4_{k-1}, ratio = sqrt|h5/h4|.
SmallEpsResult small_eps_polarizations(const SmallEpsChain& chain, const real& eps, const ScalarField& ratio,
                                       const std::vector<ChartPoint>& probes = {});
// q4_0 and q4_1 from the q5 chain through the matching conditions.
SmallEpsChain match_q4(const ScalarField& q5_1, const ScalarField& q5_2, const ScalarField& ratio);

struct ExtraDimSpec {
    ScalarField f;
    ScalarField f0 = 0;
    ScalarField h0sq = 1;
    ScalarField varsigma0 = 1;
    std::array<ScalarField, 2> n_k1{ScalarField(0), ScalarField(0)};
    std::array<ScalarField, 2> n_k2{ScalarField(0), ScalarField(0)};
    real lambda_H = 1;
    int eps4 = 1;
    real v_lo = 0;
    std::vector<ChartPoint> probes;
    // Literal variant varsigma = varsigma0 + (eps4/16) h0^2 lambda_H^2 int f*(f-f0);
    // kept for comparison only, it does not solve the v-equation.
    bool literal = false;
};

struct ExtraDimParts {
    AnsatzMetric metric;
    ScalarField varsigma;
    ScalarField integral;  // int_{v_lo}^{v} f*(f - f0) dv
    ScalarField n_integral;
};

ExtraDimParts extradim_parts(const ExtraDimSpec& spec, const ScalarField& psi, const real& lambda);
AnsatzMetric extradim_metric(const ExtraDimSpec& spec, const ScalarField& psi, const real& lambda);
// Same coefficients with y4 = t and y5 = varkappa.
AnsatzMetric time_anisotropic_metric(const ExtraDimSpec& spec, const ScalarField& psi, const real& lambda);

}  // namespace forge
