#pragma once

#include "forge/ansatz.hpp"

#include <string>
#include <vector>

namespace forge {

// Multiplicative polarizations. Fields may read the slots of the metric they
// are applied to through seed placeholders (Seed::g2 ... Seed::n3), which is
// how parametric (Geroch-type) data enter.
struct PolarizationSet {
    ScalarField eta2 = 1, eta3 = 1, eta4 = 1, eta5 = 1;
    ScalarField eta2_4 = 1, eta3_4 = 1, eta2_5 = 1, eta3_5 = 1;  // on w2, w3, n2, n3
    real theta = 0;
    std::string label = "id";
    std::vector<std::string> order;  // labels of the sets folded in, first applied first

    static PolarizationSet identity();
};

AnsatzMetric apply_polarizations(const AnsatzMetric& m, const PolarizationSet& pol);

// Divide g2, g3, h4, h5 by eta2 (w and n are untouched).
AnsatzMetric conformal_renormalize(const AnsatzMetric& m, const ScalarField& eta2);

// A first, then B: apply(apply(m, A), B) == apply(m, compose(A, B)).
PolarizationSet compose_two_parameter(const PolarizationSet& a, const PolarizationSet& b);

}  // namespace forge
