#pragma once

#include "forge/field.hpp"

#include <map>
#include <string>

namespace forge {

struct ParseOptions {
    // Extra named constants, e.g. {"theta", 0.3} for polarization sets.
    std::map<std::string, real> constants;
    // Aliases for coordinates, e.g. {"p", Axis::v} for pp-wave charts.
    std::map<std::string, Axis> aliases;
    // Allow g2..n3 to refer to the metric a polarization set is applied to.
    bool allow_seeds = false;
};

// Grammar: + - * / ^, unary minus, parentheses, numbers, coordinates
// x1 x2 x3 v y5 chi, constants pi e, and functions exp log ln sqrt abs sin
// cos tan atan sinh cosh tanh sech pow(a,b). Errors carry the 1-based column.
ScalarField parse_field(const std::string& text, const ParseOptions& opts = {});

}  // namespace forge
