#pragma once

#include "forge/field.hpp"

#include <array>
#include <string>
#include <vector>

namespace forge {

enum class Role { extra, radial_like, angular, time, wave_phase, transverse, flow_only };
const char* role_name(Role r);

// Roles for slots x1, x2, x3, y4 (= v), y5. The anisotropic coordinate is
// always slot y4; only its physical meaning varies between charts.
struct CoordinateRoles {
    std::array<Role, 5> role{Role::extra, Role::transverse, Role::transverse, Role::wave_phase,
                             Role::wave_phase};
    std::array<std::string, 5> label{"x1", "x2", "x3", "v", "y5"};
};

struct NConnection {
    ScalarField w2, w3;  // N_i^4
    ScalarField n2, n3;  // N_i^5
};

struct AnsatzMetric {
    real g1 = 1;  // epsilon_1 in most charts; -r_g^2 for aux2/aux3
    ScalarField g2 = -1, g3 = -1;
    ScalarField h4 = -1, h5 = 1;
    NConnection nconn;
    CoordinateRoles roles;
    real lambda = 0;
    std::string label;
    // "primary", "generated", "unverified" (polarized), "verified".
    std::string status = "generated";
    // Transforms applied, in order.
    std::vector<std::string> history;

    // Structural checks available without sampling: slot dependencies.
    void validate() const;
};

// Axis-aligned box for stencil admissibility; unbounded by default.
struct Box {
    std::array<real, kAxes> lo, hi;
    Box();
    bool contains(Axis a, const real& x) const { return x >= lo[int(a)] && x <= hi[int(a)]; }
};

struct AxisRange {
    real lo = 0, hi = 1;
    int count = 5;
};

struct GridSpec {
    AxisRange x2{1, 2, 5}, x3{1, 2, 5}, v{0.5, 1.5, 5}, chi{0, 0, 1};
    std::array<real, kAxes> h{real(1e-3), real(1e-3), real(1e-3), real(1e-3), real(1e-3), real(1e-3)};
    int fd_order = 4;
    real x1 = 0, y5 = 0;

    void validate() const;
    // Row-major over (chi, x2, x3, v) with v fastest.
    std::vector<ChartPoint> points() const;
    // Grid rectangle widened by `steps` FD steps per axis; chi never widens
    // below 0.
    Box stencil_box(int steps = 16) const;
};

struct SchwarzschildParams {
    real mu = 1;
    real eps = 0;
    real r_g = 2;    // stored as given; G_4 and c folded in
    real r0 = 0;     // base point of xi integrals; 0 selects 3*mu
    real r_min = 0;  // radial patch used for charts; 0 selects 2.5*mu .. 8*mu
    real r_max = 0;
    real eps1 = 1;

    real base() const { return r0 > 0 ? r0 : 3 * mu; }
    real lo() const { return r_min > 0 ? r_min : real(2.5) * mu; }
    real hi() const { return r_max > 0 ? r_max : 8 * mu; }
};

enum class PpWaveKind { plane_monochromatic, wave_packet, separable_breve, user_field };

struct PpWaveChoice {
    PpWaveKind kind = PpWaveKind::plane_monochromatic;
    real p0 = 1;
    ScalarField breve_kappa = 1;  // separable_breve: kappa = breve_kappa(x2,x3) * k_of_p(v)
    ScalarField k_of_p = 1;
    ScalarField user;  // user_field
};

// kappa(x2, x3, v) for a pp-wave choice (v plays p).
ScalarField pp_kappa(const PpWaveChoice& w);
// Throws Errc::non_harmonic when |kappa_xx + kappa_yy| > tol on a probe grid.
void check_harmonic(const ScalarField& kappa, const GridSpec& probe, const real& tol);

enum class PrimaryKind { aux1, aux2, aux3, aux4, aux5 };

AnsatzMetric build_primary(PrimaryKind kind, const SchwarzschildParams& params);
AnsatzMetric build_primary(PrimaryKind kind, const PpWaveChoice& wave);

struct ChartValues {
    real varpi2;
    real xi;
};

// varpi^2 = 1 - 2mu/r + eps/r^2 and xi(r) = int_{r0}^{r} |varpi^2|^{1/2} dr by
// adaptive Simpson (abs tol 1e-10).
ChartValues schwarzschild_chart(const real& mu, const real& eps, const real& r, const real& r0);

// Smooth chart fields for the deformation generators. Radial inversions use a
// fixed Gauss-Legendre rule plus Newton, so they are analytic in xi.
struct SchwarzschildFields {
    ScalarField r;       // r(x2) with x2 = xi (aux1/aux4 chart)
    ScalarField varpi2;  // varpi^2(r(x2))
    ScalarField r_check;       // r(x3) with x3 = xi-check (aux2/aux3 chart)
    ScalarField varpi2_check;  // varpi^2(r(x3))
};
SchwarzschildFields schwarzschild_fields(const SchwarzschildParams& params);

// varpi^2 as a field of an arbitrary radius field.
ScalarField varpi2_of(const ScalarField& r, const SchwarzschildParams& params);

}  // namespace forge
