#pragma once

// All field arithmetic runs in IEEE quad precision. Nested 5-point stencils at
// h ~ 1e-3 lose ~12 digits to cancellation, which double cannot afford.
#include <boost/math/constants/constants.hpp>
#include <boost/multiprecision/float128.hpp>

#include <string>

namespace forge {

using real = boost::multiprecision::float128;

inline double to_double(const real& x) { return static_cast<double>(x); }

inline real pi() { return boost::math::constants::pi<real>(); }

real parse_real(const std::string& text);

// 17 significant digits of the double rounding; stable across runs.
std::string format17(double x);
inline std::string format17(const real& x) { return format17(to_double(x)); }

}  // namespace forge
