#pragma once

#include "forge/dcalculus.hpp"
#include "forge/flows.hpp"
#include "forge/generators.hpp"
#include "forge/transforms.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace forge {

inline constexpr const char* kArtifactVersion = "forge 0.1.0";

struct ConvergenceSpec {
    std::vector<real> h;
    std::optional<real> min_order;
};

struct FlowSpec {
    std::string family = "constant";  // constant | exponential | extradim | time-anisotropic | stationary
    real lambda = 0, chi0 = 1;
    real b0sq = 1, n0 = 1;
};

struct RotoidSpec {
    SchwarzschildParams params;
    RotoidParams rot;
    int samples = 360;
};

struct OutputSpec {
    std::string dir = ".";
    bool json = true, csv = true;
};

// Command-line overrides, applied before anything is built.
struct Overrides {
    std::optional<real> grid_scale;
    std::optional<int> fd_order;
    std::map<std::string, real> tolerances;
    std::optional<std::string> out_dir;
};

struct Scenario {
    std::string name;
    std::string builder;
    nlohmann::ordered_json params;
    GridSpec grid;
    DerivPolicy policy = DerivPolicy::prefer_exact;
    std::vector<std::string> suites;
    std::map<std::string, real> tolerances;
    std::map<std::string, std::vector<std::string>> judge;
    std::optional<ConvergenceSpec> convergence;
    std::optional<FlowSpec> flow;
    std::optional<RotoidSpec> rotoid;
    OutputSpec output;
    std::string hash;  // FNV-1a 64 of the scenario bytes

    // Compiled at load time.
    AnsatzMetric metric;
    std::optional<FlowFamily> family;
    std::optional<LcOptions> lc;
};

struct CatalogEntry {
    std::string id, kind, summary;
};
const std::vector<CatalogEntry>& catalog();

Scenario parse_scenario(const std::string& text, const Overrides& ov = {});
Scenario load_scenario(const std::string& path, const Overrides& ov = {});

struct RunResult {
    int exit_code = 0;  // 0 pass, 1 suite failure
    std::string json;
    std::map<std::string, std::string> csv;  // suite -> CSV text
};

RunResult run_scenario(const Scenario& s);

struct HorizonResult {
    int exit_code = 0;
    std::string csv;   // phi,r_root,r_formula,difference,error
    std::string plot;  // two columns: phi r_root
};
HorizonResult horizon_table(const Scenario& s);

// Metric coefficients on the grid: x2,x3,v,chi,g2,g3,h4,h5,w2,w3,n2,n3,error.
std::string generate_table(const Scenario& s);

// Files: <dir>/<name>.json and <dir>/<name>.<suite>.csv.
void write_run(const Scenario& s, const RunResult& r);

// JSON with stable key order and every float at 17 significant digits.
std::string dump_json(const nlohmann::ordered_json& j, int indent = 2);

std::string fnv1a64(const std::string& bytes);
std::size_t edit_distance(const std::string& a, const std::string& b);

}  // namespace forge
