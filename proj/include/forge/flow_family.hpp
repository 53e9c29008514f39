#pragma once

#include "forge/ansatz.hpp"

#include <optional>
#include <string>

namespace forge {

// Closed-form chi-profiles of the exponential vacuum family: the metric uses
// breve_b(x2,x3)^2 * bsq(chi) and n^0(chi).
struct ExponentialData {
    ScalarField bsq;  // b0sq * exp(2 lambda chi)
    ScalarField n0;   // sqrt((b0sq n0^2 - 2 lambda chi) / bsq)
};

// Data for the evolving-coframe constraint of the stationary deformations.
struct StationaryData {
    real h0 = 1;
    ScalarField eta5;
};

struct FlowFamily {
    AnsatzMetric metric;  // coefficient fields may depend on chi
    real lambda = 0;      // normalization constant of the evolution equations
    real chi0 = 1;
    std::string kind = "generic";
    std::optional<ExponentialData> exponential;
    std::optional<StationaryData> stationary;

    // The member metric at a fixed chi (chi frozen in every coefficient).
    AnsatzMetric metric_at(const real& chi) const;
};

}  // namespace forge
