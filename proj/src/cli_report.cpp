#include "forge/cli_report.hpp"

#include "forge/expression.hpp"
#include "forge/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace forge {

namespace bm = boost::multiprecision;
using json = nlohmann::ordered_json;

// ---------------------------------------------------------------- small utilities

std::string fnv1a64(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

namespace {

std::string nearest(const std::string& word, const std::vector<std::string>& known) {
    std::string best;
    std::size_t bd = std::string::npos;
    for (const auto& k : known) {
        std::size_t d = edit_distance(word, k);
        if (d < bd) {
            bd = d;
            best = k;
        }
    }
    return best;
}

[[noreturn]] void unknown(const std::string& what, const std::string& word, const std::vector<std::string>& known) {
    std::string msg = what + " '" + word + "'";
    if (!known.empty()) msg += " (did you mean '" + nearest(word, known) + "'?)";
    throw Error(Errc::unknown_identifier, msg);
}

void dump_rec(const json& j, int indent, int depth, std::string& out) {
    auto nl = [&](int d) {
        if (indent < 0) return;
        out += '\n';
        out.append(std::size_t(indent * d), ' ');
    };
    switch (j.type()) {
        case json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += '{';
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) out += ',';
                first = false;
                nl(depth + 1);
                out += json(it.key()).dump();
                out += indent < 0 ? ":" : ": ";
                dump_rec(it.value(), indent, depth + 1, out);
            }
            nl(depth);
            out += '}';
            return;
        }
        case json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            out += '[';
            bool first = true;
            for (const auto& v : j) {
                if (!first) out += ',';
                first = false;
                nl(depth + 1);
                dump_rec(v, indent, depth + 1, out);
            }
            nl(depth);
            out += ']';
            return;
        }
        case json::value_t::number_float: {
            double x = j.get<double>();
            std::string s = format17(x);
            out += std::isfinite(x) ? s : "\"" + s + "\"";
            return;
        }
        default:
            out += j.dump();
    }
}

double dbl(const real& x) {
    double d = x.convert_to<double>();
    return d == 0 ? 0.0 : d;  // no "-0" in reports
}

}  // namespace

std::string dump_json(const json& j, int indent) {
    std::string out;
    dump_rec(j, indent, 0, out);
    out += '\n';
    return out;
}

// ---------------------------------------------------------------- catalog

const std::vector<CatalogEntry>& catalog() {
    static const std::vector<CatalogEntry> c = {
        {"pp.plane", "metric,wave", "pp-wave primary, kappa = (x^2 - y^2) sin p"},
        {"pp.packet", "metric,wave", "pp-wave primary, packet kappa = xy exp(p^2 - p0^2)/(x^2+y^2)^2 for |p| < p0"},
        {"pp.separable", "wave", "kappa = breve_kappa(x, y) k(p), harmonicity checked"},
        {"schw.aux1", "metric", "Schwarzschild chart (xi, theta, phi, t), v = phi"},
        {"schw.aux2", "metric", "Schwarzschild chart (theta-check, xi-check), h4 = eps1"},
        {"schw.aux3", "metric", "Schwarzschild chart (theta-check, xi-check), v = t"},
        {"schw.aux4", "metric", "Schwarzschild chart (xi, theta, t, phi), v = t"},
        {"gen.string", "metric", "solitonic pp-wave in string gravity (sine-Gordon or KdV eta, lambda_H)"},
        {"gen.vacuum", "metric", "vacuum solitonic pp-wave, h4 = -h0^2 b^2 [(qk)*]^2, h5 = b^2 (qk)^2"},
        {"gen.stationary", "metric", "stationary deformation of schw.aux1 by eta5"},
        {"gen.extradim", "metric", "extra-dimension solution from a profile f(v)"},
        {"gen.time-anisotropic", "metric", "gen.extradim with v read as time"},
        {"soliton.sg1d", "soliton", "q = 4 atan(exp(sign (v + a2 x2 + a3 x3)))"},
        {"soliton.kdv-travel", "soliton", "A sech^2(B (v + a x2 + b x3)), A = 2B^2, b = -4B^2 - a^2/eps"},
        {"liouville", "psi", "closed-form psi_22 + psi_33 = c exp(k psi)"},
        {"poisson", "psi", "5-point Dirichlet solve of psi_22 + psi_33 = rhs, bicubic interpolant"},
    };
    return c;
}

namespace {

std::vector<std::string> ids_of(const std::string& kind) {
    std::vector<std::string> out;
    for (const auto& e : catalog())
        if (e.kind.find(kind) != std::string::npos) out.push_back(e.id);
    return out;
}

// ---------------------------------------------------------------- strict reader

class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw Error(Errc::parse, path_ + ": expected an object");
    }

    bool has(const std::string& k) {
        known_.push_back(k);
        return j_.contains(k);
    }

    const json& raw(const std::string& k) {
        if (!has(k)) throw Error(Errc::parse, at(k) + ": missing");
        return j_.at(k);
    }

    real num(const std::string& k, std::optional<real> def = std::nullopt) {
        if (!has(k)) {
            if (def) return *def;
            throw Error(Errc::parse, at(k) + ": missing number");
        }
        return number(j_.at(k), at(k));
    }

    int integer(const std::string& k, int def) {
        if (!has(k)) return def;
        const json& v = j_.at(k);
        if (!v.is_number_integer()) throw Error(Errc::parse, at(k) + ": expected an integer");
        return v.get<int>();
    }

    bool boolean(const std::string& k, bool def) {
        if (!has(k)) return def;
        if (!j_.at(k).is_boolean()) throw Error(Errc::parse, at(k) + ": expected true/false");
        return j_.at(k).get<bool>();
    }

    std::string str(const std::string& k, std::optional<std::string> def = std::nullopt) {
        if (!has(k)) {
            if (def) return *def;
            throw Error(Errc::parse, at(k) + ": missing string");
        }
        if (!j_.at(k).is_string()) throw Error(Errc::parse, at(k) + ": expected a string");
        return j_.at(k).get<std::string>();
    }

    ScalarField field(const std::string& k, std::optional<ScalarField> def = std::nullopt,
                      const ParseOptions& opt = {}) {
        if (!has(k)) {
            if (def) return *def;
            throw Error(Errc::parse, at(k) + ": missing field expression");
        }
        return field_of(j_.at(k), at(k), opt);
    }

    Reader sub(const std::string& k) { return Reader(raw(k), at(k)); }

    std::string at(const std::string& k) const { return path_ + "." + k; }
    const std::string& path() const { return path_; }
    const json& node() const { return j_; }

    void done() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (std::find(known_.begin(), known_.end(), it.key()) == known_.end())
                unknown(path_ + ": unknown key", it.key(), known_);
    }

    static real number(const json& v, const std::string& where) {
        if (v.is_number()) return real(v.get<double>());
        if (v.is_string()) {
            try {
                return parse_real(v.get<std::string>());
            } catch (const std::exception&) {
            }
        }
        throw Error(Errc::parse, where + ": expected a number");
    }

    static ScalarField field_of(const json& v, const std::string& where, const ParseOptions& opt) {
        if (v.is_number()) return real(v.get<double>());
        if (!v.is_string()) throw Error(Errc::parse, where + ": expected a number or expression string");
        try {
            return parse_field(v.get<std::string>(), opt);
        } catch (const Error& e) {
            throw Error(e.code(), where + ": " + e.what());
        }
    }

private:
    json j_;
    std::string path_;
    mutable std::vector<std::string> known_;
};

AxisRange read_range(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 3) throw Error(Errc::parse, where + ": expected [lo, hi, count]");
    AxisRange r;
    r.lo = Reader::number(v[0], where + "[0]");
    r.hi = Reader::number(v[1], where + "[1]");
    if (!v[2].is_number_integer()) throw Error(Errc::parse, where + "[2]: count must be an integer");
    r.count = v[2].get<int>();
    return r;
}

std::pair<real, real> read_pair(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 2) throw Error(Errc::parse, where + ": expected [a, b]");
    return {Reader::number(v[0], where + "[0]"), Reader::number(v[1], where + "[1]")};
}

std::array<ScalarField, 2> read_field_pair(Reader& r, const std::string& k, const ScalarField& def) {
    if (!r.has(k)) return {def, def};
    const json& v = r.raw(k);
    if (!v.is_array() || v.size() != 2) throw Error(Errc::parse, r.at(k) + ": expected [field, field]");
    return {Reader::field_of(v[0], r.at(k) + "[0]", {}), Reader::field_of(v[1], r.at(k) + "[1]", {})};
}

void read_grid(Reader g, Scenario& s) {
    GridSpec& grid = s.grid;
    if (g.has("x2")) grid.x2 = read_range(g.raw("x2"), g.at("x2"));
    if (g.has("x3")) grid.x3 = read_range(g.raw("x3"), g.at("x3"));
    if (g.has("v")) grid.v = read_range(g.raw("v"), g.at("v"));
    if (g.has("chi")) grid.chi = read_range(g.raw("chi"), g.at("chi"));
    if (g.has("h")) {
        const json& h = g.raw("h");
        if (h.is_array()) {
            if (h.size() != kAxes) throw Error(Errc::parse, g.at("h") + ": expected one step per axis (6)");
            for (int k = 0; k < kAxes; ++k) grid.h[k] = Reader::number(h[k], g.at("h"));
        } else {
            grid.h.fill(Reader::number(h, g.at("h")));
        }
    }
    grid.fd_order = g.integer("fd_order", grid.fd_order);
    grid.x1 = g.num("x1", grid.x1);
    grid.y5 = g.num("y5", grid.y5);
    std::string pol = g.str("policy", std::string("exact"));
    if (pol == "exact")
        s.policy = DerivPolicy::prefer_exact;
    else if (pol == "fd_only")
        s.policy = DerivPolicy::fd_only;
    else
        unknown(g.at("policy") + ": unknown policy", pol, {"exact", "fd_only"});
    g.done();
}

// Corners of the sampled box: enough to settle running-integral panels.
std::vector<ChartPoint> corner_probes(const GridSpec& g) {
    std::vector<ChartPoint> out;
    for (const real& x2 : {g.x2.lo, g.x2.hi})
        for (const real& x3 : {g.x3.lo, g.x3.hi})
            for (const real& v : {g.v.lo, g.v.hi})
                for (const real& chi : {g.chi.lo, g.chi.hi}) {
                    ChartPoint p;
                    p.x1 = g.x1;
                    p.y5 = g.y5;
                    p.x2 = x2;
                    p.x3 = x3;
                    p.v = v;
                    p.chi = chi;
                    out.push_back(p);
                }
    return out;
}

// ---------------------------------------------------------------- field specs

SolitonChoice read_soliton(const json& v, const std::string& where) {
    SolitonChoice s;
    if (v.is_string() || v.is_number()) {
        s.kind = SolitonKind::user_field;
        s.user = Reader::field_of(v, where, {});
        return s;
    }
    Reader r(v, where);
    std::string id = r.str("id");
    if (id == "soliton.sg1d") {
        s.kind = SolitonKind::sine_gordon_1d;
        s.sign = r.integer("sign", 1);
        s.a2 = r.num("a2", real(0));
        s.a3 = r.num("a3", real(0));
    } else if (id == "soliton.kdv-travel") {
        s.kind = SolitonKind::kdv_like_3d;
        s.kdv_B = r.num("B", real(1));
        s.kdv_a = r.num("a", real(0.5));
        s.kdv_eps = r.num("eps", real(1));
    } else {
        unknown(r.at("id") + ": unknown soliton", id, ids_of("soliton"));
    }
    r.done();
    return s;
}

PpWaveChoice read_wave(const json& v, const std::string& where) {
    PpWaveChoice w;
    if (v.is_string() || v.is_number()) {
        w.kind = PpWaveKind::user_field;
        w.user = Reader::field_of(v, where, {});
        return w;
    }
    Reader r(v, where);
    std::string id = r.str("id");
    if (id == "pp.plane") {
        w.kind = PpWaveKind::plane_monochromatic;
    } else if (id == "pp.packet") {
        w.kind = PpWaveKind::wave_packet;
        w.p0 = r.num("p0", real(1));
    } else if (id == "pp.separable") {
        w.kind = PpWaveKind::separable_breve;
        w.breve_kappa = r.field("breve_kappa");
        w.k_of_p = r.field("k_of_p");
    } else {
        unknown(r.at("id") + ": unknown wave", id, ids_of("wave"));
    }
    r.done();
    return w;
}

ScalarField read_psi(const json& v, const std::string& where) {
    if (v.is_string() || v.is_number()) return Reader::field_of(v, where, {});
    Reader r(v, where);
    std::string id = r.str("id");
    ScalarField out;
    if (id == "liouville") {
        real c = r.num("c");
        int k = r.integer("k", 1);
        out = liouville_psi(c, k, r.num("offset2", real(0)), r.num("offset3", real(0)));
    } else if (id == "poisson") {
        GridSpec g;
        auto [x2lo, x2hi] = read_pair(r.raw("x2"), r.at("x2"));
        auto [x3lo, x3hi] = read_pair(r.raw("x3"), r.at("x3"));
        int n = r.integer("nodes", 65);
        g.x2 = {x2lo, x2hi, n};
        g.x3 = {x3lo, x3hi, n};
        PoissonOptions opt;
        opt.tol = r.num("tol", opt.tol);
        out = solve_psi_poisson(r.num("rhs", real(0)), g, r.field("boundary", ScalarField(0)), opt);
    } else {
        unknown(r.at("id") + ": unknown psi builder", id, ids_of("psi"));
    }
    r.done();
    return out;
}

ScalarField psi_param(Reader& r, const std::string& k) {
    if (!r.has(k)) return 0;
    return read_psi(r.raw(k), r.at(k));
}

SchwarzschildParams read_schw(Reader& r) {
    SchwarzschildParams p;
    p.mu = r.num("mu", p.mu);
    p.eps = r.num("eps", p.eps);
    p.r_g = r.num("r_g", p.r_g);
    p.r0 = r.num("r0", p.r0);
    p.r_min = r.num("r_min", p.r_min);
    p.r_max = r.num("r_max", p.r_max);
    p.eps1 = r.num("eps1", p.eps1);
    return p;
}

VacuumInputs read_vacuum(Reader& r) {
    VacuumInputs vi;
    vi.breve_b = r.field("breve_b", ScalarField(1));
    if (r.has("soliton")) vi.q = read_soliton(r.raw("soliton"), r.at("soliton"));
    if (r.has("wave")) vi.wave = read_wave(r.raw("wave"), r.at("wave"));
    vi.h0 = r.num("h0", real(2));
    return vi;
}

ExtraDimSpec read_extradim(Reader& r, const GridSpec& grid) {
    ExtraDimSpec e;
    e.f = r.field("f");
    e.f0 = r.field("f0", ScalarField(0));
    e.h0sq = r.field("h0sq", ScalarField(1));
    e.varsigma0 = r.field("varsigma0", ScalarField(1));
    e.n_k1 = read_field_pair(r, "n_k1", 0);
    e.n_k2 = read_field_pair(r, "n_k2", 0);
    e.lambda_H = r.num("lambda_H", real(1));
    e.eps4 = r.integer("eps4", 1);
    e.v_lo = r.num("v_lo", grid.v.lo);
    e.literal = r.boolean("literal", false);
    e.probes = corner_probes(grid);
    return e;
}

struct Built {
    AnsatzMetric metric;
    std::optional<ScalarField> psi;
    std::optional<VacuumInputs> vacuum;
    std::optional<ExtraDimSpec> extradim;
    std::optional<ScalarField> eta5;
    real h0 = 1;
    ScalarField n2 = 0, n3 = 0;
    SchwarzschildParams schw;
};

Built build(const std::string& id, const json& params, const GridSpec& grid) {
    Reader r(params.is_null() ? json::object() : params, "builder.params");
    Built b;
    if (id == "pp.plane" || id == "pp.packet") {
        PpWaveChoice w;
        w.kind = id == "pp.plane" ? PpWaveKind::plane_monochromatic : PpWaveKind::wave_packet;
        if (id == "pp.packet") w.p0 = r.num("p0", real(1));
        b.metric = build_primary(PrimaryKind::aux5, w);
        b.metric.label = id;
    } else if (id.rfind("schw.aux", 0) == 0 && id.size() == 9 && id[8] >= '1' && id[8] <= '4') {
        PrimaryKind k = std::array{PrimaryKind::aux1, PrimaryKind::aux2, PrimaryKind::aux3, PrimaryKind::aux4}[id[8] - '1'];
        b.metric = build_primary(k, read_schw(r));
    } else if (id == "gen.string") {
        SolitonChoice q;
        if (r.has("soliton")) q = read_soliton(r.raw("soliton"), r.at("soliton"));
        PpWaveChoice w;
        if (r.has("wave")) w = read_wave(r.raw("wave"), r.at("wave"));
        real lh = r.num("lambda_H", real(1));
        ScalarField psi = psi_param(r, "psi");
        ScalarField h50 = r.field("h5_0", ScalarField(0));
        auto n0 = read_field_pair(r, "n0", 0);
        auto n1 = read_field_pair(r, "n1", 0);
        StringOptions so;
        so.p_lo = r.num("p_lo", real(0));
        so.probes = corner_probes(grid);
        b.metric = solitonic_string_metric(q, w, lh, psi, h50, n0, n1, so);
        b.psi = psi;
    } else if (id == "gen.vacuum") {
        VacuumInputs vi = read_vacuum(r);
        ScalarField n02 = r.field("n0_2", ScalarField(0)), n03 = r.field("n0_3", ScalarField(0));
        b.metric = vacuum_solitonic_metric(vi.breve_b, vi.q, vi.wave, vi.h0, n02, n03, grid);
        b.vacuum = vi;
        b.psi = ScalarField(0);
    } else if (id == "gen.stationary") {
        b.schw = read_schw(r);
        b.eta5 = r.field("eta5");
        b.h0 = r.num("h0", real(2));
        b.n2 = r.field("n2", ScalarField(0));
        b.n3 = r.field("n3", ScalarField(0));
        b.psi = psi_param(r, "psi");
        b.metric = stationary_deformation(b.schw, *b.eta5, b.h0, b.n2, b.n3, *b.psi);
    } else if (id == "gen.extradim" || id == "gen.time-anisotropic") {
        ExtraDimSpec e = read_extradim(r, grid);
        real lambda = r.num("lambda", -e.lambda_H * e.lambda_H / 2);
        ScalarField psi = r.has("psi") ? psi_param(r, "psi") : liouville_psi(lambda, 2, 0, 0);
        b.metric = id == "gen.extradim" ? extradim_metric(e, psi, lambda) : time_anisotropic_metric(e, psi, lambda);
        b.extradim = e;
        b.psi = psi;
    } else {
        unknown("builder.id: unknown catalog id", id, ids_of("metric"));
    }
    r.done();
    return b;
}

PolarizationSet read_polarization(const json& v, const std::string& where) {
    Reader r(v, where);
    PolarizationSet p;
    p.label = r.str("label", std::string("set"));
    p.theta = r.num("theta", real(0));
    ParseOptions opt;
    opt.allow_seeds = true;
    opt.constants["theta"] = p.theta;
    p.eta2 = r.field("eta2", ScalarField(1), opt);
    p.eta3 = r.field("eta3", ScalarField(1), opt);
    p.eta4 = r.field("eta4", ScalarField(1), opt);
    p.eta5 = r.field("eta5", ScalarField(1), opt);
    p.eta2_4 = r.field("eta2_4", ScalarField(1), opt);
    p.eta3_4 = r.field("eta3_4", ScalarField(1), opt);
    p.eta2_5 = r.field("eta2_5", ScalarField(1), opt);
    p.eta3_5 = r.field("eta3_5", ScalarField(1), opt);
    r.done();
    return p;
}

const std::vector<std::string> kSuites = {"reduced", "lc", "anholonomy", "evolution", "flow-constraints"};

std::pair<int, int> line_col(const std::string& text, std::size_t byte) {
    int line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

}  // namespace

// ---------------------------------------------------------------- loading

Scenario parse_scenario(const std::string& text, const Overrides& ov) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        auto [line, col] = line_col(text, e.byte > 0 ? e.byte - 1 : 0);
        throw Error(Errc::parse, "scenario JSON: line " + std::to_string(line) + ", column " + std::to_string(col) +
                                     ": " + e.what());
    }
    Reader top(root, "scenario");
    Scenario s;
    s.hash = fnv1a64(text);
    s.name = top.str("name");
    if (s.name.empty() || s.name.find_first_of("/\\") != std::string::npos)
        throw Error(Errc::parse, "scenario.name must be a non-empty file-name-safe string");

    if (top.has("grid")) read_grid(top.sub("grid"), s);
    if (ov.grid_scale) {
        if (!(*ov.grid_scale > 0)) throw Error(Errc::invalid_argument, "--grid-scale must be positive");
        for (AxisRange* a : {&s.grid.x2, &s.grid.x3, &s.grid.v, &s.grid.chi})
            if (a->count > 1) a->count = int(std::lround(dbl((a->count - 1) * *ov.grid_scale))) + 1;
    }
    if (ov.fd_order) s.grid.fd_order = *ov.fd_order;
    s.grid.validate();

    {
        Reader b = top.sub("builder");
        s.builder = b.str("id");
        if (b.has("params")) s.params = b.raw("params");
        b.done();
    }

    if (top.has("suites")) {
        const json& su = top.raw("suites");
        if (!su.is_array()) throw Error(Errc::parse, "scenario.suites: expected an array");
        for (const auto& x : su) {
            if (!x.is_string()) throw Error(Errc::parse, "scenario.suites: entries are suite names");
            std::string n = x.get<std::string>();
            if (std::find(kSuites.begin(), kSuites.end(), n) == kSuites.end())
                unknown("scenario.suites: unknown suite", n, kSuites);
            if (std::find(s.suites.begin(), s.suites.end(), n) == s.suites.end()) s.suites.push_back(n);
        }
    }
    if (top.has("tolerances")) {
        Reader t = top.sub("tolerances");
        for (const auto& n : kSuites)
            if (t.has(n)) s.tolerances[n] = t.num(n);
        t.done();
    }
    for (const auto& [k, v] : ov.tolerances) {
        if (std::find(kSuites.begin(), kSuites.end(), k) == kSuites.end())
            unknown("--tol: unknown suite", k, kSuites);
        s.tolerances[k] = v;
    }
    if (top.has("judge")) {
        Reader t = top.sub("judge");
        for (const auto& n : kSuites)
            if (t.has(n)) {
                const json& a = t.raw(n);
                if (!a.is_array()) throw Error(Errc::parse, t.at(n) + ": expected an array of component names");
                for (const auto& c : a) s.judge[n].push_back(c.get<std::string>());
            }
        t.done();
    }
    if (top.has("convergence")) {
        Reader c = top.sub("convergence");
        ConvergenceSpec cs;
        const json& h = c.raw("h");
        if (!h.is_array() || h.size() < 2) throw Error(Errc::parse, c.at("h") + ": expected at least two steps");
        for (const auto& x : h) cs.h.push_back(Reader::number(x, c.at("h")));
        if (c.has("min_order")) cs.min_order = c.num("min_order");
        c.done();
        s.convergence = cs;
    }
    if (top.has("flow")) {
        Reader f = top.sub("flow");
        FlowSpec fs;
        fs.family = f.str("family", fs.family);
        fs.chi0 = f.num("chi0", fs.chi0);
        fs.b0sq = f.num("b0sq", fs.b0sq);
        fs.n0 = f.num("n0", fs.n0);
        bool has_lambda = f.has("lambda");
        if (has_lambda) fs.lambda = f.num("lambda");
        f.done();
        s.flow = fs;
        if (!has_lambda) s.flow->lambda = std::numeric_limits<double>::quiet_NaN();
    }
    if (top.has("rotoid")) {
        Reader r = top.sub("rotoid");
        RotoidSpec rs;
        rs.params.mu = r.num("mu", real(1));
        rs.params.eps = r.num("eps", real(0));
        if (r.has("q0")) {
            const json& q = r.raw("q0");
            if (q.is_string()) {
                ParseOptions o;
                o.aliases["r"] = Axis::x2;
                rs.rot.q0_of_r = Reader::field_of(q, r.at("q0"), o);
            } else {
                rs.rot.q0 = Reader::number(q, r.at("q0"));
            }
        }
        rs.rot.omega0 = r.num("omega0", real(1));
        rs.rot.phi0 = r.num("phi0", real(0));
        rs.samples = r.integer("samples", 360);
        if (rs.samples < 1) throw Error(Errc::parse, r.at("samples") + ": must be >= 1");
        r.done();
        s.rotoid = rs;
    }
    if (top.has("output")) {
        Reader o = top.sub("output");
        s.output.dir = o.str("dir", s.output.dir);
        s.output.json = o.boolean("json", true);
        s.output.csv = o.boolean("csv", true);
        o.done();
    }
    if (ov.out_dir) s.output.dir = *ov.out_dir;

    // Compile: builder, transforms, flow family, LC potential.
    Built b = build(s.builder, s.params, s.grid);
    s.metric = b.metric;
    std::optional<json> transform;
    if (top.has("transform")) {
        Reader t = top.sub("transform");
        if (t.has("polarizations")) {
            const json& ps = t.raw("polarizations");
            if (!ps.is_array()) throw Error(Errc::parse, t.at("polarizations") + ": expected an array");
            for (std::size_t k = 0; k < ps.size(); ++k)
                s.metric = apply_polarizations(
                    s.metric, read_polarization(ps[k], t.at("polarizations") + "[" + std::to_string(k) + "]"));
        }
        if (t.has("conformal")) s.metric = conformal_renormalize(s.metric, t.field("conformal"));
        t.done();
    }
    if (top.has("lc")) {
        Reader l = top.sub("lc");
        LcOptions o;
        o.psi = l.has("psi") ? read_psi(l.raw("psi"), l.at("psi")) : b.psi.value_or(ScalarField(0));
        o.eps2 = l.integer("eps2", 1);
        o.eps3 = l.integer("eps3", 1);
        l.done();
        s.lc = o;
    } else if (std::find(s.suites.begin(), s.suites.end(), "lc") != s.suites.end()) {
        s.lc = LcOptions{b.psi.value_or(ScalarField(0)), 1, 1};
    }
    top.done();

    auto wants = [&](const char* n) { return std::find(s.suites.begin(), s.suites.end(), n) != s.suites.end(); };
    if ((wants("evolution") || wants("flow-constraints")) && !s.flow)
        throw Error(Errc::role_mismatch, "suites 'evolution' and 'flow-constraints' need a flow block");
    if (s.grid.chi.hi > s.grid.chi.lo && !s.flow)
        throw Error(Errc::role_mismatch, "the grid samples chi but the scenario has no flow block");
    if (s.flow) {
        const FlowSpec& f = *s.flow;
        auto need = [&](const std::string& builder) {
            if (s.builder != builder)
                throw Error(Errc::role_mismatch,
                            "flow family '" + f.family + "' is built from '" + builder + "', not '" + s.builder + "'");
        };
        auto lam = [&](const real& def) { return bm::isnan(f.lambda) ? def : f.lambda; };
        if (f.family == "constant") {
            s.family = constant_family(s.metric, f.chi0);
            s.family->lambda = lam(s.family->lambda);
        } else if (f.family == "exponential") {
            need("gen.vacuum");
            s.family = exponential_flow_family(f.b0sq, f.n0, lam(0), *b.vacuum, f.chi0);
            s.metric = s.family->metric;
        } else if (f.family == "extradim" || f.family == "time-anisotropic") {
            need(f.family == "extradim" ? "gen.extradim" : "gen.time-anisotropic");
            s.family = extradim_flow_family(*b.extradim, *b.psi, b.metric.lambda, f.chi0, f.family != "extradim");
            s.family->lambda = lam(s.family->lambda);
        } else if (f.family == "stationary") {
            need("gen.stationary");
            s.family = stationary_flow_family(b.schw, *b.eta5, b.h0, b.n2, b.n3, *b.psi, f.chi0);
            s.family->lambda = lam(0);
        } else {
            unknown("flow.family: unknown family", f.family,
                    {"constant", "exponential", "extradim", "time-anisotropic", "stationary"});
        }
        if (s.family && !s.metric.history.empty()) s.family->metric.history = s.metric.history;
        if (s.grid.chi.lo < 0 || s.grid.chi.hi > f.chi0)
            throw Error(Errc::chi_range, "grid chi range leaves [0, chi0]");
    }
    return s;
}

Scenario load_scenario(const std::string& path, const Overrides& ov) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io, "cannot read scenario file '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return parse_scenario(os.str(), ov);
}

// ---------------------------------------------------------------- running

namespace {

using Values = std::vector<std::optional<real>>;

struct PointOut {
    Values values;
    std::string error;
};

struct SuiteRun {
    std::string id;
    std::vector<std::string> components;
    std::vector<std::string> judged;
    std::vector<PointOut> points;
    std::string note;
};

std::optional<real> opt(const std::optional<real>& x) { return x; }

SuiteRun run_suite(const std::string& id, const Scenario& s, const std::vector<ChartPoint>& pts, const FdConfig& cfg) {
    SuiteRun r;
    r.id = id;
    const AnsatzMetric& m = s.family ? s.family->metric : s.metric;
    auto evaluate = [&](auto&& fn) {
        r.points = sweep<PointOut>(pts, [&](const ChartPoint& p, EvalCache& c) {
            PointOut o;
            try {
                o.values = fn(p, c);
            } catch (const Error& e) {
                o.error = e.what();
            }
            return o;
        });
    };
    if (id == "reduced") {
        r.components = {"r_h", "r_v", "r_w2", "r_w3", "r_n2", "r_n3"};
        ResidualEngine eng(m, cfg);
        evaluate([&](const ChartPoint& p, EvalCache& c) -> Values {
            ReducedResiduals x = eng.reduced(p, c);
            return {x.r_h, x.r_v, x.r_w2, x.r_w3, x.r_n2, x.r_n3};
        });
        r.judged = r.components;
    } else if (id == "lc") {
        r.components = {"c1", "c1_alt", "c2", "c3", "c4", "cw2", "cw3"};
        ResidualEngine eng(m, cfg, s.lc);
        std::vector<std::string> notes(pts.size());
        evaluate([&](const ChartPoint& p, EvalCache& c) -> Values {
            LCResiduals x = eng.lc(p, c);
            return {x.c1, x.c1_alt, x.c2, x.c3, x.c4, x.cw2, x.cw3};
        });
        r.judged = {"c1", "c2", "c3", "c4", "cw2", "cw3"};
        for (const auto& p : r.points)
            if (p.error.empty() && !p.values[5]) {
                r.note = "cw2/cw3 unavailable where phi* = 0 (w is not fixed by phi there)";
                break;
            }
    } else if (id == "anholonomy") {
        r.components = {"W_2_4_4", "W_3_4_4", "W_2_4_5", "W_3_4_5", "Omega_23_4", "Omega_23_5"};
        ResidualEngine eng(m, cfg);
        evaluate([&](const ChartPoint& p, EvalCache& c) -> Values {
            AnholonomyCoeffs a = eng.anholonomy(p, c);
            return {a.w_ia_b.at({2, 4, 4}), a.w_ia_b.at({3, 4, 4}), a.w_ia_b.at({2, 4, 5}),
                    a.w_ia_b.at({3, 4, 5}), a.omega_ij_a.at({2, 3, 4}), a.omega_ij_a.at({2, 3, 5})};
        });
        r.note = "informational unless components are listed under judge.anholonomy";
    } else if (id == "evolution") {
        r.components = {"e_h2", "e_h3", "e_v4", "e_v5"};
        EvolutionEngine eng(*s.family, cfg);
        evaluate([&](const ChartPoint& p, EvalCache& c) -> Values {
            EvolutionResiduals e = eng.evaluate(p, c);
            return {e.e_h2, e.e_h3, e.e_v4, e.e_v5};
        });
        r.judged = r.components;
        r.note = "h-sector sums h_cc d_chi (N_i^c)^2 over c in {4, 5}";
    } else if (id == "flow-constraints") {
        r.components = {"c_frame_2", "c_frame_3", "c_coframe_2", "c_coframe_3", "c_bsq", "c_bn2"};
        FlowConstraintEngine eng(*s.family, cfg);
        evaluate([&](const ChartPoint& p, EvalCache& c) -> Values {
            FlowConstraintResiduals f = eng.evaluate(p, c);
            return {f.c_frame_2, f.c_frame_3, opt(f.c_coframe_2), opt(f.c_coframe_3), opt(f.c_bsq),
                    opt(f.c_bn2)};
        });
        r.judged = r.components;
    }
    if (auto it = s.judge.find(id); it != s.judge.end()) {
        for (const auto& c : it->second)
            if (std::find(r.components.begin(), r.components.end(), c) == r.components.end())
                unknown("judge." + id + ": unknown component", c, r.components);
        r.judged = it->second;
    }
    return r;
}

struct Norms {
    real max = 0, mean = 0, rms = 0;
    long count = 0;
};

Norms norms_of(const SuiteRun& r, const std::vector<std::size_t>& cols) {
    Norms n;
    real sum = 0, sq = 0;
    for (const auto& p : r.points) {
        if (!p.error.empty()) continue;
        for (std::size_t c : cols)
            if (p.values[c]) {
                real a = bm::abs(*p.values[c]);
                n.max = std::max(n.max, a);
                sum += a;
                sq += a * a;
                ++n.count;
            }
    }
    if (n.count) {
        n.mean = sum / n.count;
        n.rms = bm::sqrt(sq / n.count);
    }
    return n;
}

json norms_json(const Norms& n) {
    json j;
    j["max"] = dbl(n.max);
    j["mean"] = dbl(n.mean);
    j["rms"] = dbl(n.rms);
    j["samples"] = n.count;
    return j;
}

std::vector<std::size_t> columns(const SuiteRun& r, const std::vector<std::string>& names) {
    std::vector<std::size_t> out;
    for (const auto& n : names)
        out.push_back(std::size_t(std::find(r.components.begin(), r.components.end(), n) - r.components.begin()));
    return out;
}

json point_json(const ChartPoint& p) {
    json j;
    j["x2"] = dbl(p.x2);
    j["x3"] = dbl(p.x3);
    j["v"] = dbl(p.v);
    j["chi"] = dbl(p.chi);
    return j;
}

std::string csv_num(const std::optional<real>& x) { return x ? format17(dbl(*x)) : ""; }

std::string csv_quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
    return out + "\"";
}

real fit_order(const std::vector<real>& h, const std::vector<real>& e) {
    real sx = 0, sy = 0, sxx = 0, sxy = 0;
    const real n = real(int(h.size()));
    for (std::size_t k = 0; k < h.size(); ++k) {
        real x = bm::log(h[k]), y = bm::log(e[k]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

const char* policy_name(DerivPolicy p) { return p == DerivPolicy::fd_only ? "fd_only" : "exact"; }

json grid_json(const GridSpec& g, DerivPolicy pol) {
    auto range = [](const AxisRange& r) { return json::array({dbl(r.lo), dbl(r.hi), r.count}); };
    json j;
    j["x2"] = range(g.x2);
    j["x3"] = range(g.x3);
    j["v"] = range(g.v);
    j["chi"] = range(g.chi);
    json h = json::array();
    for (const auto& x : g.h) h.push_back(dbl(x));
    j["h"] = h;
    j["fd_order"] = g.fd_order;
    j["policy"] = policy_name(pol);
    j["x1"] = dbl(g.x1);
    j["y5"] = dbl(g.y5);
    return j;
}

}  // namespace

RunResult run_scenario(const Scenario& s) {
    RunResult res;
    json rep;
    json prov;
    prov["artifact"] = kArtifactVersion;
    prov["scenario"] = s.name;
    prov["scenario_hash"] = s.hash;
    rep["provenance"] = prov;

    const AnsatzMetric& m = s.family ? s.family->metric : s.metric;
    bool pass = true;
    if (!s.suites.empty() || s.convergence) {
        json mj;
        mj["builder"] = s.builder;
        mj["label"] = m.label;
        mj["lambda"] = dbl(m.lambda);
        mj["g1"] = dbl(m.g1);
        json roles = json::array();
        for (int k = 0; k < 5; ++k) roles.push_back(m.roles.label[k] + ":" + role_name(m.roles.role[k]));
        mj["roles"] = roles;
        mj["history"] = m.history;
        rep["metric"] = mj;
        rep["grid"] = grid_json(s.grid, s.policy);
        if (s.family) {
            json f;
            f["family"] = s.family->kind;
            f["lambda"] = dbl(s.family->lambda);
            f["chi0"] = dbl(s.family->chi0);
            rep["flow"] = f;
        }
    }

    const auto pts = s.grid.points();
    const FdConfig cfg = FdConfig::from_grid(s.grid, s.policy);
    json suites = json::object();
    bool reduced_pass = false;
    for (const auto& id : s.suites) {
        SuiteRun r = run_suite(id, s, pts, cfg);
        const real tol = s.tolerances.count(id) ? s.tolerances.at(id) : real(1e-8);
        auto judged_cols = columns(r, r.judged);
        Norms all = norms_of(r, judged_cols);
        long errors = 0;
        json errs = json::array();
        for (std::size_t i = 0; i < r.points.size(); ++i)
            if (!r.points[i].error.empty()) {
                ++errors;
                if (errs.size() < 20) {
                    json e = point_json(pts[i]);
                    e["index"] = i;
                    e["message"] = r.points[i].error;
                    errs.push_back(e);
                }
            }
        bool ok = errors == 0 && all.max <= tol;
        if (id == "reduced") reduced_pass = ok;
        pass = pass && ok;

        json sj;
        sj["tolerance"] = dbl(tol);
        sj["judged"] = r.judged;
        sj["norms"] = norms_json(all);
        json comp = json::object();
        for (std::size_t c = 0; c < r.components.size(); ++c) {
            Norms n = norms_of(r, {c});
            comp[r.components[c]] = n.count ? norms_json(n) : json(nullptr);
        }
        sj["components"] = comp;
        sj["errors"] = errors;
        if (!errs.empty()) sj["error_points"] = errs;
        if (!r.note.empty()) sj["note"] = r.note;
        sj["pass"] = ok;
        json pj = json::array();
        std::ostringstream csv;
        csv << "suite,index,x2,x3,v,chi";
        for (const auto& c : r.components) csv << "," << c;
        csv << ",norm,error\n";
        for (std::size_t i = 0; i < r.points.size(); ++i) {
            const PointOut& po = r.points[i];
            json row = point_json(pts[i]);
            json vals = json::object();
            real norm = 0;
            for (std::size_t c = 0; c < r.components.size(); ++c) {
                const std::optional<real> x = po.error.empty() ? po.values[c] : std::nullopt;
                vals[r.components[c]] = x ? json(dbl(*x)) : json(nullptr);
            }
            for (std::size_t c : judged_cols)
                if (po.error.empty() && po.values[c]) norm = std::max(norm, bm::abs(*po.values[c]));
            row["values"] = vals;
            row["norm"] = po.error.empty() ? json(dbl(norm)) : json(nullptr);
            pj.push_back(row);
            csv << id << "," << i << "," << format17(dbl(pts[i].x2)) << "," << format17(dbl(pts[i].x3)) << ","
                << format17(dbl(pts[i].v)) << "," << format17(dbl(pts[i].chi));
            for (std::size_t c = 0; c < r.components.size(); ++c)
                csv << "," << (po.error.empty() ? csv_num(po.values[c]) : "");
            csv << "," << (po.error.empty() ? format17(dbl(norm)) : "") << ","
                << (po.error.empty() ? "" : csv_quote(po.error)) << "\n";
        }
        sj["points"] = pj;
        suites[id] = sj;
        res.csv[id] = csv.str();
    }
    if (!s.suites.empty()) rep["suites"] = suites;

    if (s.convergence) {
        json cj;
        json rows = json::array();
        std::vector<real> hs, es;
        bool conv_ok = true;
        const real tol = s.tolerances.count("reduced") ? s.tolerances.at("reduced") : real(1e-8);
        for (const real& h : s.convergence->h) {
            GridSpec g = s.grid;
            g.h.fill(h);
            SuiteRun r = run_suite("reduced", s, pts, FdConfig::from_grid(g, s.policy));
            Norms n = norms_of(r, columns(r, r.judged));
            long errors = 0;
            for (const auto& p : r.points) errors += p.error.empty() ? 0 : 1;
            json row;
            row["h"] = dbl(h);
            row["max"] = dbl(n.max);
            row["errors"] = errors;
            rows.push_back(row);
            hs.push_back(h);
            es.push_back(n.max);
            conv_ok = conv_ok && errors == 0 && n.max <= tol;
        }
        cj["table"] = rows;
        // Below this floor the residual is round-off and no order can be fitted.
        const real floor = real(1e-25);
        bool exact = std::all_of(es.begin(), es.end(), [&](const real& e) { return e <= floor; });
        if (exact) {
            cj["order"] = nullptr;
            cj["note"] = "residuals at round-off for every step; no order fitted";
        } else if (std::any_of(es.begin(), es.end(), [&](const real& e) { return e <= 0; })) {
            cj["order"] = nullptr;
            conv_ok = false;
        } else {
            real order = fit_order(hs, es);
            cj["order"] = dbl(order);
            if (s.convergence->min_order) conv_ok = conv_ok && order >= *s.convergence->min_order;
        }
        if (s.convergence->min_order) cj["min_order"] = dbl(*s.convergence->min_order);
        cj["pass"] = conv_ok;
        rep["convergence"] = cj;
        pass = pass && conv_ok;
    }

    if (!s.suites.empty()) {
        bool verified = reduced_pass && pass;
        rep["metric"]["status"] = verified ? "verified" : m.status;
    }
    res.exit_code = pass ? 0 : 1;
    if (!s.suites.empty() || s.convergence) {
        rep["pass"] = pass;
        rep["exit_code"] = res.exit_code;
    }
    res.json = dump_json(rep);
    return res;
}

HorizonResult horizon_table(const Scenario& s) {
    if (!s.rotoid) throw Error(Errc::role_mismatch, "horizon needs a rotoid block");
    const RotoidSpec& r = *s.rotoid;
    HorizonResult out;
    std::ostringstream csv, plot;
    csv << "phi,r_root,r_formula,difference,error\n";
    plot << "# phi r_plus\n";
    for (int k = 0; k < r.samples; ++k) {
        real phi = 2 * pi() * k / r.samples;
        try {
            RotoidHorizon h = rotoid_horizon(r.params, r.rot, phi);
            csv << format17(dbl(phi)) << "," << format17(dbl(h.r_root)) << "," << format17(dbl(h.r_formula)) << ","
                << format17(dbl(h.r_root - h.r_formula)) << ",\n";
            plot << format17(dbl(phi)) << " " << format17(dbl(h.r_root)) << "\n";
        } catch (const Error& e) {
            csv << format17(dbl(phi)) << ",,,," << csv_quote(e.what()) << "\n";
            out.exit_code = 1;
        }
    }
    out.csv = csv.str();
    out.plot = plot.str();
    return out;
}

std::string generate_table(const Scenario& s) {
    const AnsatzMetric& m = s.family ? s.family->metric : s.metric;
    const std::vector<std::pair<const char*, const ScalarField*>> cols = {
        {"g2", &m.g2}, {"g3", &m.g3}, {"h4", &m.h4}, {"h5", &m.h5},
        {"w2", &m.nconn.w2}, {"w3", &m.nconn.w3}, {"n2", &m.nconn.n2}, {"n3", &m.nconn.n3}};
    const auto pts = s.grid.points();
    auto rows = sweep<std::string>(pts, [&](const ChartPoint& p, EvalCache& c) {
        std::ostringstream os;
        os << format17(dbl(p.x2)) << "," << format17(dbl(p.x3)) << "," << format17(dbl(p.v)) << ","
           << format17(dbl(p.chi));
        std::string err;
        for (const auto& col : cols) {
            try {
                os << "," << format17(dbl(col.second->eval(p, c)));
            } catch (const Error& e) {
                os << ",";
                if (err.empty()) err = std::string(col.first) + ": " + e.what();
            }
        }
        os << "," << (err.empty() ? "" : csv_quote(err)) << "\n";
        return os.str();
    });
    std::string out = "x2,x3,v,chi,g2,g3,h4,h5,w2,w3,n2,n3,error\n";
    for (const auto& r : rows) out += r;
    return out;
}

void write_run(const Scenario& s, const RunResult& r) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(s.output.dir, ec);
    if (ec) throw Error(Errc::io, "cannot create output directory '" + s.output.dir + "': " + ec.message());
    auto write = [](const fs::path& p, const std::string& text) {
        std::ofstream f(p, std::ios::binary);
        if (!f) throw Error(Errc::io, "cannot write '" + p.string() + "'");
        f << text;
        if (!f) throw Error(Errc::io, "write failed for '" + p.string() + "'");
    };
    const fs::path dir(s.output.dir);
    if (s.output.json) write(dir / (s.name + ".json"), r.json);
    if (s.output.csv)
        for (const auto& [suite, text] : r.csv) write(dir / (s.name + "." + suite + ".csv"), text);
}

}  // namespace forge
