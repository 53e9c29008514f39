#include "forge/transforms.hpp"

namespace forge {

namespace {

using SeedMap = std::array<std::optional<ScalarField>, kSeeds>;

std::array<ScalarField, kSeeds> slots(const AnsatzMetric& m) {
    return {m.g2, m.g3, m.h4, m.h5, m.nconn.w2, m.nconn.w3, m.nconn.n2, m.nconn.n3};
}

std::array<ScalarField, kSeeds> factors(const PolarizationSet& p) {
    return {p.eta2, p.eta3, p.eta4, p.eta5, p.eta2_4, p.eta3_4, p.eta2_5, p.eta3_5};
}

PolarizationSet from_factors(const std::array<ScalarField, kSeeds>& f) {
    PolarizationSet p;
    p.eta2 = f[0];
    p.eta3 = f[1];
    p.eta4 = f[2];
    p.eta5 = f[3];
    p.eta2_4 = f[4];
    p.eta3_4 = f[5];
    p.eta2_5 = f[6];
    p.eta3_5 = f[7];
    return p;
}

ScalarField bind_seeds(const ScalarField& f, const SeedMap& with) {
    return f.has_seeds() ? substitute_seeds(f, with) : f;
}

}  // namespace

PolarizationSet PolarizationSet::identity() { return {}; }

AnsatzMetric apply_polarizations(const AnsatzMetric& m, const PolarizationSet& pol) {
    auto s = slots(m);
    auto f = factors(pol);
    SeedMap with;
    for (int k = 0; k < kSeeds; ++k) with[k] = s[k];
    std::array<ScalarField, kSeeds> out;
    for (int k = 0; k < kSeeds; ++k) {
        ScalarField eta = bind_seeds(f[k], with);
        if (eta.is_zero())
            throw Error(Errc::zero_polarization, std::string("polarization on ") + seed_name(Seed(k)) + " is 0");
        if (auto c = eta.constant_value(); c && *c == 1) {
            out[k] = s[k];
            continue;
        }
        out[k] = nonzero_guard(eta, Errc::zero_polarization,
                               std::string("polarization on ") + seed_name(Seed(k)) + " vanishes") *
                 s[k];
    }
    AnsatzMetric r = m;
    r.g2 = out[0];
    r.g3 = out[1];
    r.h4 = out[2];
    r.h5 = out[3];
    r.nconn = {out[4], out[5], out[6], out[7]};
    r.status = "unverified";
    r.history.push_back("polarize:" + pol.label + "(theta=" + format17(pol.theta) + ")");
    r.validate();
    return r;
}

AnsatzMetric conformal_renormalize(const AnsatzMetric& m, const ScalarField& eta2) {
    if (eta2.is_zero()) throw Error(Errc::zero_factor, "conformal factor eta2 is 0");
    AnsatzMetric r = m;
    if (auto c = eta2.constant_value(); c && *c == 1) {
        r.history.push_back("conformal:1");
        return r;
    }
    ScalarField f = nonzero_guard(eta2, Errc::zero_factor, "conformal factor eta2 vanishes");
    r.g2 = m.g2 / f;
    r.g3 = m.g3 / f;
    r.h4 = m.h4 / f;
    r.h5 = m.h5 / f;
    r.history.push_back("conformal:1/(" + eta2.str() + ")");
    r.validate();
    return r;
}

PolarizationSet compose_two_parameter(const PolarizationSet& a, const PolarizationSet& b) {
    auto fa = factors(a), fb = factors(b);
    // B sees the slots already transformed by A.
    SeedMap with;
    for (int k = 0; k < kSeeds; ++k) with[k] = fa[k] * ScalarField::seed(Seed(k));
    std::array<ScalarField, kSeeds> out;
    for (int k = 0; k < kSeeds; ++k) out[k] = fa[k] * bind_seeds(fb[k], with);
    PolarizationSet c = from_factors(out);
    c.theta = b.theta;
    c.label = a.label + "*" + b.label;
    c.order = a.order.empty() ? std::vector<std::string>{a.label} : a.order;
    if (b.order.empty())
        c.order.push_back(b.label);
    else
        c.order.insert(c.order.end(), b.order.begin(), b.order.end());
    return c;
}

}  // namespace forge
