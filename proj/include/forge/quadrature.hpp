#pragma once

#include "forge/field.hpp"

#include <functional>
#include <vector>

namespace forge {

using RealFn = std::function<real(const real&)>;

struct SimpsonOptions {
    real abs_tol = real(1e-10);
    int max_depth = 50;
    long max_evals = 4'000'000;
};

// Classic recursive adaptive Simpson with Richardson correction.
// Throws Errc::nonconvergence when the budget runs out before abs_tol.
real adaptive_simpson(const RealFn& f, const real& a, const real& b, const SimpsonOptions& opt = {});

// Composite 20-point Gauss-Legendre over `panels` equal panels.
real gauss_legendre(const RealFn& f, const real& a, const real& b, int panels);

struct RunningIntegralSpec {
    ScalarField integrand;
    Axis axis = Axis::v;
    real lower = 0;
    // Points whose upper limits bound the intended use; the panel count is
    // fixed here, at construction, by refining until successive counts agree.
    std::vector<ChartPoint> probes;
    std::string name = "Q";
    int max_panels = 256;
    real panel_tol = real(1e-26);
    // Cross-check of the settled rule against adaptive Simpson.
    real simpson_tol = real(1e-10);
};

// Q(p) = integral of the integrand along `axis` from `lower` to p.axis.
// A fixed-panel rule mapped onto [lower, p.axis] keeps Q analytic in every
// coordinate, so finite differences of Q see no adaptive switching noise.
// The exact partial along `axis` is the integrand itself.
ScalarField running_integral(const RunningIntegralSpec& spec);

// Bracketed root (TOMS 748). Throws Errc::no_root without a sign change.
real find_root(const RealFn& f, const real& a, const real& b, const real& tol);

}  // namespace forge
