#pragma once

#include "forge/error.hpp"
#include "forge/real.hpp"

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>

namespace forge {

// x1 is the trivial/extra slot, v is the anisotropic coordinate y^4, chi the
// flow parameter.
enum class Axis : int { x1 = 0, x2, x3, v, y5, chi };
constexpr int kAxes = 6;

const char* axis_name(Axis a);
constexpr unsigned axis_bit(Axis a) { return 1u << static_cast<int>(a); }

struct ChartPoint {
    real x1 = 0, x2 = 0, x3 = 0, v = 0, y5 = 0, chi = 0;

    real& at(Axis a);
    const real& at(Axis a) const;
    ChartPoint shifted(Axis a, const real& d) const {
        ChartPoint q = *this;
        q.at(a) += d;
        return q;
    }
};

bool bitwise_equal(const ChartPoint& a, const ChartPoint& b);

// Slots a polarization set may read from the metric it is applied to.
enum class Seed : int { g2 = 0, g3, h4, h5, w2, w3, n2, n3 };
constexpr int kSeeds = 8;
const char* seed_name(Seed s);

// Per-evaluation memo. One cache lives for one top-level evaluation (or one
// grid point of a sweep); it is never shared between threads.
class EvalCache {
public:
    const real* find(const void* node, const ChartPoint& p) const;
    void store(const void* node, const ChartPoint& p, const real& value);
    std::size_t size() const { return map_.size(); }

private:
    struct Key {
        const void* node;
        ChartPoint p;
        bool operator==(const Key& o) const { return node == o.node && bitwise_equal(p, o.p); }
    };
    struct KeyHash {
        std::size_t operator()(const Key& k) const;
    };
    std::unordered_map<Key, real, KeyHash> map_;
};

namespace detail {
struct Node;
}

class ScalarField;

struct OpaqueSpec {
    std::string name;
    unsigned deps = 0;  // axis_bit mask of coordinates the value may depend on
    std::function<real(const ChartPoint&, EvalCache&)> eval;
    // Exact partial along an axis, or nullopt when only FD is available.
    std::function<std::optional<ScalarField>(Axis)> partial;
    int smoothness = 64;
    bool memo = true;
};

// Immutable expression DAG over chart coordinates. Derivatives are symbolic
// where the rules reach; opaque leaves may provide their own partials.
class ScalarField {
public:
    ScalarField();
    ScalarField(const real& c);  // NOLINT(implicit)
    ScalarField(double c);       // NOLINT(implicit)
    ScalarField(int c);          // NOLINT(implicit)
    explicit ScalarField(std::shared_ptr<const detail::Node> n) : node_(std::move(n)) {}

    static ScalarField coordinate(Axis a);
    static ScalarField seed(Seed s);
    static ScalarField opaque(OpaqueSpec spec);

    real operator()(const ChartPoint& p) const;
    real eval(const ChartPoint& p, EvalCache& cache) const;

    std::optional<ScalarField> exact_partial(Axis a) const;

    unsigned deps() const;
    bool depends_on(Axis a) const { return (deps() & axis_bit(a)) != 0; }
    bool has_seeds() const;
    std::optional<real> constant_value() const;
    bool is_zero() const;
    int smoothness() const;
    std::string str() const;

    const std::shared_ptr<const detail::Node>& node() const { return node_; }

private:
    std::shared_ptr<const detail::Node> node_;
};

ScalarField operator-(const ScalarField& a);
ScalarField operator+(const ScalarField& a, const ScalarField& b);
ScalarField operator-(const ScalarField& a, const ScalarField& b);
ScalarField operator*(const ScalarField& a, const ScalarField& b);
ScalarField operator/(const ScalarField& a, const ScalarField& b);

ScalarField pow(const ScalarField& a, const ScalarField& b);
ScalarField exp(const ScalarField& a);
ScalarField log(const ScalarField& a);
ScalarField sqrt(const ScalarField& a);
ScalarField abs(const ScalarField& a);
ScalarField sin(const ScalarField& a);
ScalarField cos(const ScalarField& a);
ScalarField tan(const ScalarField& a);
ScalarField atan(const ScalarField& a);
ScalarField sinh(const ScalarField& a);
ScalarField cosh(const ScalarField& a);
ScalarField tanh(const ScalarField& a);
ScalarField sech(const ScalarField& a);
ScalarField sign(const ScalarField& a);
inline ScalarField sqr(const ScalarField& a) { return a * a; }
// cond > 0 ? a : b, differentiated branchwise.
ScalarField where(const ScalarField& cond, const ScalarField& a, const ScalarField& b);
// Passes the value through; throws `code` when |value| <= floor.
ScalarField nonzero_guard(const ScalarField& a, Errc code, const std::string& what,
                          const real& floor = real(0));

// Freeze one coordinate to a value (used for chi slices of flow families).
ScalarField fix_axis(const ScalarField& f, Axis a, const real& value);
// Replace seed placeholders by fields; unset entries stay placeholders.
ScalarField substitute_seeds(const ScalarField& f,
                             const std::array<std::optional<ScalarField>, kSeeds>& with);

}  // namespace forge
