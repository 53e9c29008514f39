#include "forge/field.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <iomanip>
#include <sstream>
#include <unordered_map>

namespace forge {

namespace bm = boost::multiprecision;

const char* errc_name(Errc c) {
    switch (c) {
        case Errc::invalid_argument: return "invalid-argument";
        case Errc::stencil_out_of_domain: return "stencil-out-of-domain";
        case Errc::chi_boundary: return "chi-boundary";
        case Errc::degenerate_v_metric: return "degenerate-v-metric";
        case Errc::degenerate_h_metric: return "degenerate-h-metric";
        case Errc::phi_star_zero: return "phi-star-zero";
        case Errc::kink_guard: return "kink-guard";
        case Errc::lambda_zero: return "lambda-zero";
        case Errc::eta5_star_zero: return "eta5-star-zero";
        case Errc::f_star_zero: return "f-star-zero";
        case Errc::f_equals_f0: return "f-equals-f0";
        case Errc::curl_violation: return "curl-condition-violation";
        case Errc::chi_range: return "chi-range";
        case Errc::nonconvergence: return "nonconvergence";
        case Errc::no_root: return "no-root-in-bracket";
        case Errc::horizon_domain: return "domain-touches-horizon";
        case Errc::non_harmonic: return "non-harmonic";
        case Errc::zero_polarization: return "zero-polarization";
        case Errc::zero_factor: return "zero-factor";
        case Errc::unbound_seed: return "unbound-seed";
        case Errc::parse: return "parse-error";
        case Errc::unknown_identifier: return "unknown-identifier";
        case Errc::role_mismatch: return "role-mismatch";
        case Errc::io: return "io-error";
    }
    return "error";
}

real parse_real(const std::string& text) { return real(text); }

std::string format17(double x) {
    if (std::isnan(x)) return "NaN";
    if (std::isinf(x)) return x > 0 ? "Infinity" : "-Infinity";
    std::ostringstream os;
    os << std::setprecision(17) << x;
    return os.str();
}

const char* axis_name(Axis a) {
    static const char* names[] = {"x1", "x2", "x3", "v", "y5", "chi"};
    return names[static_cast<int>(a)];
}

const char* seed_name(Seed s) {
    static const char* names[] = {"g2", "g3", "h4", "h5", "w2", "w3", "n2", "n3"};
    return names[static_cast<int>(s)];
}

real& ChartPoint::at(Axis a) {
    switch (a) {
        case Axis::x1: return x1;
        case Axis::x2: return x2;
        case Axis::x3: return x3;
        case Axis::v: return v;
        case Axis::y5: return y5;
        case Axis::chi: return chi;
    }
    return x1;
}

const real& ChartPoint::at(Axis a) const { return const_cast<ChartPoint*>(this)->at(a); }

namespace {

void raw_bits(const real& x, std::uint64_t out[2]) {
    __float128 q = x.backend().value();
    std::memcpy(out, &q, sizeof(q));
}

}  // namespace

bool bitwise_equal(const ChartPoint& a, const ChartPoint& b) {
    for (int i = 0; i < kAxes; ++i) {
        std::uint64_t x[2], y[2];
        raw_bits(a.at(static_cast<Axis>(i)), x);
        raw_bits(b.at(static_cast<Axis>(i)), y);
        if (x[0] != y[0] || x[1] != y[1]) return false;
    }
    return true;
}

std::size_t EvalCache::KeyHash::operator()(const Key& k) const {
    std::uint64_t h = reinterpret_cast<std::uintptr_t>(k.node) * 0x9E3779B97F4A7C15ull;
    for (int i = 0; i < kAxes; ++i) {
        std::uint64_t b[2];
        raw_bits(k.p.at(static_cast<Axis>(i)), b);
        h ^= b[0] + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
        h ^= b[1] + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
}

const real* EvalCache::find(const void* node, const ChartPoint& p) const {
    auto it = map_.find(Key{node, p});
    return it == map_.end() ? nullptr : &it->second;
}

void EvalCache::store(const void* node, const ChartPoint& p, const real& value) {
    map_.emplace(Key{node, p}, value);
}

namespace detail {

enum class Op {
    constant, coord, seed, neg, add, sub, mul, div, pow,
    exp, log, sqrt, abs, sin, cos, tan, atan, sinh, cosh, tanh, sech, sign,
    where, guard, opaque,
};

struct Node {
    Op op = Op::constant;
    real value = 0;
    int index = 0;  // axis, seed slot or guard error code
    std::shared_ptr<const Node> a, b, c;
    unsigned deps = 0;
    bool seeds = false;
    int smooth = 1 << 20;
    std::shared_ptr<const OpaqueSpec> opaque;
    std::string text;  // guard message
};

}  // namespace detail

using detail::Node;
using detail::Op;
using NodePtr = std::shared_ptr<const Node>;

namespace {

bool memoized(Op op) {
    switch (op) {
        case Op::pow: case Op::exp: case Op::log: case Op::sqrt: case Op::sin: case Op::cos:
        case Op::tan: case Op::atan: case Op::sinh: case Op::cosh: case Op::tanh: case Op::sech:
            return true;
        default:
            return false;
    }
}

NodePtr make_const(const real& v) {
    auto n = std::make_shared<Node>();
    n->op = Op::constant;
    n->value = v;
    return n;
}

const NodePtr& zero_node() {
    static const NodePtr z = make_const(0);
    return z;
}

const NodePtr& one_node() {
    static const NodePtr o = make_const(1);
    return o;
}

bool is_const(const NodePtr& n, real* v = nullptr) {
    if (n->op != Op::constant) return false;
    if (v) *v = n->value;
    return true;
}

bool is_value(const NodePtr& n, int x) { return n->op == Op::constant && n->value == x; }

real apply_unary(Op op, const real& x) {
    switch (op) {
        case Op::neg: return -x;
        case Op::exp: return bm::exp(x);
        case Op::log: return bm::log(x);
        case Op::sqrt: return bm::sqrt(x);
        case Op::abs: return bm::abs(x);
        case Op::sin: return bm::sin(x);
        case Op::cos: return bm::cos(x);
        case Op::tan: return bm::tan(x);
        case Op::atan: return bm::atan(x);
        case Op::sinh: return bm::sinh(x);
        case Op::cosh: return bm::cosh(x);
        case Op::tanh: return bm::tanh(x);
        case Op::sech: return 1 / bm::cosh(x);
        case Op::sign: return x > 0 ? real(1) : (x < 0 ? real(-1) : real(0));
        default: break;
    }
    throw Error(Errc::invalid_argument, "not a unary op");
}

real ipow(const real& x, long n) {
    if (n < 0) return 1 / ipow(x, -n);
    real r = 1, b = x;
    while (n) {
        if (n & 1) r *= b;
        b *= b;
        n >>= 1;
    }
    return r;
}

real apply_pow(const real& x, const real& y) {
    if (y == bm::floor(y) && bm::abs(y) < 64) return ipow(x, static_cast<long>(y));
    return bm::pow(x, y);
}

NodePtr make_unary(Op op, const NodePtr& a) {
    real c;
    if (is_const(a, &c)) return make_const(apply_unary(op, c));
    if (op == Op::neg && a->op == Op::neg) return a->a;
    auto n = std::make_shared<Node>();
    n->op = op;
    n->a = a;
    n->deps = a->deps;
    n->seeds = a->seeds;
    n->smooth = a->smooth;
    return n;
}

NodePtr make_binary(Op op, const NodePtr& a, const NodePtr& b) {
    real ca, cb;
    bool ka = is_const(a, &ca), kb = is_const(b, &cb);
    if (ka && kb) {
        switch (op) {
            case Op::add: return make_const(ca + cb);
            case Op::sub: return make_const(ca - cb);
            case Op::mul: return make_const(ca * cb);
            case Op::div: return make_const(ca / cb);
            case Op::pow: return make_const(apply_pow(ca, cb));
            default: break;
        }
    }
    switch (op) {
        case Op::add:
            if (ka && ca == 0) return b;
            if (kb && cb == 0) return a;
            break;
        case Op::sub:
            if (kb && cb == 0) return a;
            if (ka && ca == 0) return make_unary(Op::neg, b);
            break;
        case Op::mul:
            if ((ka && ca == 0) || (kb && cb == 0)) return zero_node();
            if (ka && ca == 1) return b;
            if (kb && cb == 1) return a;
            if (ka && ca == -1) return make_unary(Op::neg, b);
            if (kb && cb == -1) return make_unary(Op::neg, a);
            break;
        case Op::div:
            if (ka && ca == 0) return zero_node();
            if (kb && cb == 1) return a;
            if (kb && cb == -1) return make_unary(Op::neg, a);
            break;
        case Op::pow:
            if (kb && cb == 0) return one_node();
            if (kb && cb == 1) return a;
            if (kb && cb == 2) return make_binary(Op::mul, a, a);
            break;
        default:
            break;
    }
    auto n = std::make_shared<Node>();
    n->op = op;
    n->a = a;
    n->b = b;
    n->deps = a->deps | b->deps;
    n->seeds = a->seeds || b->seeds;
    n->smooth = std::min(a->smooth, b->smooth);
    return n;
}

NodePtr make_where(const NodePtr& c, const NodePtr& a, const NodePtr& b) {
    real cv;
    if (is_const(c, &cv)) return cv > 0 ? a : b;
    auto n = std::make_shared<Node>();
    n->op = Op::where;
    n->a = a;
    n->b = b;
    n->c = c;
    n->deps = a->deps | b->deps | c->deps;
    n->seeds = a->seeds || b->seeds || c->seeds;
    n->smooth = std::min(a->smooth, b->smooth);
    return n;
}

real eval_node(const Node& n, const ChartPoint& p, EvalCache& cache);

real eval_ptr(const NodePtr& n, const ChartPoint& p, EvalCache& cache) { return eval_node(*n, p, cache); }

real eval_uncached(const Node& n, const ChartPoint& p, EvalCache& cache) {
    switch (n.op) {
        case Op::constant: return n.value;
        case Op::coord: return p.at(static_cast<Axis>(n.index));
        case Op::seed:
            throw Error(Errc::unbound_seed,
                        std::string("seed slot '") + seed_name(static_cast<Seed>(n.index)) +
                            "' evaluated before the field was applied to a metric");
        case Op::add: return eval_ptr(n.a, p, cache) + eval_ptr(n.b, p, cache);
        case Op::sub: return eval_ptr(n.a, p, cache) - eval_ptr(n.b, p, cache);
        case Op::mul: return eval_ptr(n.a, p, cache) * eval_ptr(n.b, p, cache);
        case Op::div: return eval_ptr(n.a, p, cache) / eval_ptr(n.b, p, cache);
        case Op::pow: return apply_pow(eval_ptr(n.a, p, cache), eval_ptr(n.b, p, cache));
        case Op::where:
            return eval_ptr(n.c, p, cache) > 0 ? eval_ptr(n.a, p, cache) : eval_ptr(n.b, p, cache);
        case Op::guard: {
            real x = eval_ptr(n.a, p, cache);
            if (!(bm::abs(x) > n.value)) throw Error(static_cast<Errc>(n.index), n.text);
            return x;
        }
        case Op::opaque: return n.opaque->eval(p, cache);
        default: return apply_unary(n.op, eval_ptr(n.a, p, cache));
    }
}

real eval_node(const Node& n, const ChartPoint& p, EvalCache& cache) {
    bool memo = n.op == Op::opaque ? n.opaque->memo : memoized(n.op);
    if (!memo) return eval_uncached(n, p, cache);
    if (const real* hit = cache.find(&n, p)) return *hit;
    real v = eval_uncached(n, p, cache);
    cache.store(&n, p, v);
    return v;
}

using DiffMemo = std::unordered_map<const Node*, std::optional<NodePtr>>;

std::optional<NodePtr> diff(const NodePtr& n, Axis ax, DiffMemo& memo);

std::optional<NodePtr> diff_impl(const NodePtr& n, Axis ax, DiffMemo& memo) {
    if (!(n->deps & axis_bit(ax))) return zero_node();
    auto mul = [](const NodePtr& x, const NodePtr& y) { return make_binary(Op::mul, x, y); };
    auto div = [](const NodePtr& x, const NodePtr& y) { return make_binary(Op::div, x, y); };
    auto add = [](const NodePtr& x, const NodePtr& y) { return make_binary(Op::add, x, y); };
    auto sub = [](const NodePtr& x, const NodePtr& y) { return make_binary(Op::sub, x, y); };
    switch (n->op) {
        case Op::constant: return zero_node();
        case Op::coord: return static_cast<Axis>(n->index) == ax ? one_node() : zero_node();
        case Op::seed: return std::nullopt;
        case Op::opaque: {
            if (!n->opaque->partial) return std::nullopt;
            auto r = n->opaque->partial(ax);
            if (!r) return std::nullopt;
            return r->node();
        }
        case Op::where: {
            auto da = diff(n->a, ax, memo), db = diff(n->b, ax, memo);
            if (!da || !db) return std::nullopt;
            return make_where(n->c, *da, *db);
        }
        default: break;
    }
    auto da = diff(n->a, ax, memo);
    if (!da) return std::nullopt;
    const NodePtr& a = n->a;
    switch (n->op) {
        case Op::neg: return make_unary(Op::neg, *da);
        case Op::guard: return *da;
        case Op::add:
        case Op::sub:
        case Op::mul:
        case Op::div:
        case Op::pow: {
            auto db = diff(n->b, ax, memo);
            if (!db) return std::nullopt;
            const NodePtr& b = n->b;
            if (n->op == Op::add) return add(*da, *db);
            if (n->op == Op::sub) return sub(*da, *db);
            if (n->op == Op::mul) return add(mul(*da, b), mul(a, *db));
            if (n->op == Op::div) return div(sub(mul(*da, b), mul(a, *db)), mul(b, b));
            real cb;
            if (is_const(b, &cb))
                return mul(mul(make_const(cb), make_binary(Op::pow, a, make_const(cb - 1))), *da);
            // d(a^b) = a^b (b' ln a + b a'/a)
            return mul(n, add(mul(*db, make_unary(Op::log, a)), div(mul(b, *da), a)));
        }
        case Op::exp: return mul(n, *da);
        case Op::log: return div(*da, a);
        case Op::sqrt: return div(*da, mul(make_const(2), n));
        case Op::abs: return mul(make_unary(Op::sign, a), *da);
        case Op::sin: return mul(make_unary(Op::cos, a), *da);
        case Op::cos: return make_unary(Op::neg, mul(make_unary(Op::sin, a), *da));
        case Op::tan: return mul(add(one_node(), mul(n, n)), *da);
        case Op::atan: return div(*da, add(one_node(), mul(a, a)));
        case Op::sinh: return mul(make_unary(Op::cosh, a), *da);
        case Op::cosh: return mul(make_unary(Op::sinh, a), *da);
        case Op::tanh: {
            NodePtr s = make_unary(Op::sech, a);
            return mul(mul(s, s), *da);
        }
        case Op::sech: return make_unary(Op::neg, mul(mul(n, make_unary(Op::tanh, a)), *da));
        case Op::sign: return zero_node();
        default: break;
    }
    return std::nullopt;
}

std::optional<NodePtr> diff(const NodePtr& n, Axis ax, DiffMemo& memo) {
    auto it = memo.find(n.get());
    if (it != memo.end()) return it->second;
    auto r = diff_impl(n, ax, memo);
    memo.emplace(n.get(), r);
    return r;
}

const char* op_name(Op op) {
    switch (op) {
        case Op::exp: return "exp";
        case Op::log: return "log";
        case Op::sqrt: return "sqrt";
        case Op::abs: return "abs";
        case Op::sin: return "sin";
        case Op::cos: return "cos";
        case Op::tan: return "tan";
        case Op::atan: return "atan";
        case Op::sinh: return "sinh";
        case Op::cosh: return "cosh";
        case Op::tanh: return "tanh";
        case Op::sech: return "sech";
        case Op::sign: return "sign";
        default: return "?";
    }
}

void print(const NodePtr& n, std::ostream& os) {
    switch (n->op) {
        case Op::constant: os << format17(n->value); return;
        case Op::coord: os << axis_name(static_cast<Axis>(n->index)); return;
        case Op::seed: os << seed_name(static_cast<Seed>(n->index)); return;
        case Op::neg: os << "(-"; print(n->a, os); os << ")"; return;
        case Op::add: case Op::sub: case Op::mul: case Op::div: case Op::pow: {
            const char* sym = n->op == Op::add ? "+" : n->op == Op::sub ? "-" : n->op == Op::mul ? "*"
                            : n->op == Op::div ? "/" : "^";
            os << "(";
            print(n->a, os);
            os << sym;
            print(n->b, os);
            os << ")";
            return;
        }
        case Op::where:
            os << "where(";
            print(n->c, os);
            os << ",";
            print(n->a, os);
            os << ",";
            print(n->b, os);
            os << ")";
            return;
        case Op::guard: print(n->a, os); return;
        case Op::opaque: os << n->opaque->name; return;
        default: os << op_name(n->op) << "("; print(n->a, os); os << ")"; return;
    }
}

}  // namespace

ScalarField::ScalarField() : node_(zero_node()) {}
ScalarField::ScalarField(const real& c) : node_(make_const(c)) {}
ScalarField::ScalarField(double c) : node_(make_const(real(c))) {}
ScalarField::ScalarField(int c) : node_(make_const(real(c))) {}

ScalarField ScalarField::coordinate(Axis a) {
    auto n = std::make_shared<Node>();
    n->op = Op::coord;
    n->index = static_cast<int>(a);
    n->deps = axis_bit(a);
    return ScalarField(NodePtr(n));
}

ScalarField ScalarField::seed(Seed s) {
    auto n = std::make_shared<Node>();
    n->op = Op::seed;
    n->index = static_cast<int>(s);
    n->deps = axis_bit(Axis::x2) | axis_bit(Axis::x3) | axis_bit(Axis::v) | axis_bit(Axis::chi);
    n->seeds = true;
    return ScalarField(NodePtr(n));
}

ScalarField ScalarField::opaque(OpaqueSpec spec) {
    auto n = std::make_shared<Node>();
    n->op = Op::opaque;
    n->deps = spec.deps;
    n->smooth = spec.smoothness;
    n->opaque = std::make_shared<const OpaqueSpec>(std::move(spec));
    return ScalarField(NodePtr(n));
}

real ScalarField::operator()(const ChartPoint& p) const {
    EvalCache cache;
    return eval_node(*node_, p, cache);
}

real ScalarField::eval(const ChartPoint& p, EvalCache& cache) const { return eval_node(*node_, p, cache); }

std::optional<ScalarField> ScalarField::exact_partial(Axis a) const {
    DiffMemo memo;
    auto r = diff(node_, a, memo);
    if (!r) return std::nullopt;
    return ScalarField(*r);
}

unsigned ScalarField::deps() const { return node_->deps; }
bool ScalarField::has_seeds() const { return node_->seeds; }

std::optional<real> ScalarField::constant_value() const {
    if (node_->op == Op::constant) return node_->value;
    return std::nullopt;
}

bool ScalarField::is_zero() const { return node_->op == Op::constant && node_->value == 0; }
int ScalarField::smoothness() const { return node_->smooth; }

std::string ScalarField::str() const {
    std::ostringstream os;
    print(node_, os);
    return os.str();
}

ScalarField operator-(const ScalarField& a) { return ScalarField(make_unary(Op::neg, a.node())); }
ScalarField operator+(const ScalarField& a, const ScalarField& b) {
    return ScalarField(make_binary(Op::add, a.node(), b.node()));
}
ScalarField operator-(const ScalarField& a, const ScalarField& b) {
    return ScalarField(make_binary(Op::sub, a.node(), b.node()));
}
ScalarField operator*(const ScalarField& a, const ScalarField& b) {
    return ScalarField(make_binary(Op::mul, a.node(), b.node()));
}
ScalarField operator/(const ScalarField& a, const ScalarField& b) {
    return ScalarField(make_binary(Op::div, a.node(), b.node()));
}
ScalarField pow(const ScalarField& a, const ScalarField& b) {
    return ScalarField(make_binary(Op::pow, a.node(), b.node()));
}

#define FORGE_UNARY(fn, op) \
    ScalarField fn(const ScalarField& a) { return ScalarField(make_unary(Op::op, a.node())); }
FORGE_UNARY(exp, exp)
FORGE_UNARY(log, log)
FORGE_UNARY(sqrt, sqrt)
FORGE_UNARY(abs, abs)
FORGE_UNARY(sin, sin)
FORGE_UNARY(cos, cos)
FORGE_UNARY(tan, tan)
FORGE_UNARY(atan, atan)
FORGE_UNARY(sinh, sinh)
FORGE_UNARY(cosh, cosh)
FORGE_UNARY(tanh, tanh)
FORGE_UNARY(sech, sech)
FORGE_UNARY(sign, sign)
#undef FORGE_UNARY

ScalarField where(const ScalarField& cond, const ScalarField& a, const ScalarField& b) {
    return ScalarField(make_where(cond.node(), a.node(), b.node()));
}

ScalarField nonzero_guard(const ScalarField& a, Errc code, const std::string& what, const real& floor) {
    real c;
    if (is_const(a.node(), &c)) {
        if (!(bm::abs(c) > floor)) throw Error(code, what);
        return a;
    }
    auto n = std::make_shared<Node>();
    n->op = Op::guard;
    n->a = a.node();
    n->value = floor;
    n->index = static_cast<int>(code);
    n->text = what;
    n->deps = a.deps();
    n->seeds = a.has_seeds();
    n->smooth = a.smoothness();
    return ScalarField(NodePtr(n));
}

ScalarField fix_axis(const ScalarField& f, Axis a, const real& value) {
    if (!f.depends_on(a)) return f;
    if (auto c = f.constant_value()) return *c;
    OpaqueSpec s;
    s.name = "fix(" + f.str() + "," + axis_name(a) + ")";
    s.deps = f.deps() & ~axis_bit(a);
    s.eval = [f, a, value](const ChartPoint& p, EvalCache& cache) {
        ChartPoint q = p;
        q.at(a) = value;
        return f.eval(q, cache);
    };
    s.partial = [f, a, value](Axis b) -> std::optional<ScalarField> {
        if (b == a) return ScalarField(0);
        auto d = f.exact_partial(b);
        if (!d) return std::nullopt;
        return fix_axis(*d, a, value);
    };
    s.smoothness = f.smoothness();
    s.memo = false;
    return ScalarField::opaque(std::move(s));
}

namespace {

NodePtr substitute(const NodePtr& n, const std::array<std::optional<ScalarField>, kSeeds>& with,
                   std::unordered_map<const Node*, NodePtr>& memo) {
    if (!n->seeds) return n;
    auto it = memo.find(n.get());
    if (it != memo.end()) return it->second;
    NodePtr out;
    if (n->op == Op::seed) {
        const auto& s = with[n->index];
        out = s ? s->node() : n;
    } else if (n->op == Op::where) {
        out = make_where(substitute(n->c, with, memo), substitute(n->a, with, memo),
                         substitute(n->b, with, memo));
    } else if (n->op == Op::guard) {
        auto g = std::make_shared<Node>(*n);
        g->a = substitute(n->a, with, memo);
        g->deps = g->a->deps;
        g->seeds = g->a->seeds;
        out = g;
    } else if (n->b) {
        out = make_binary(n->op, substitute(n->a, with, memo), substitute(n->b, with, memo));
    } else if (n->a) {
        out = make_unary(n->op, substitute(n->a, with, memo));
    } else {
        out = n;
    }
    memo.emplace(n.get(), out);
    return out;
}

}  // namespace

ScalarField substitute_seeds(const ScalarField& f,
                             const std::array<std::optional<ScalarField>, kSeeds>& with) {
    std::unordered_map<const Node*, NodePtr> memo;
    return ScalarField(substitute(f.node(), with, memo));
}

}  // namespace forge
