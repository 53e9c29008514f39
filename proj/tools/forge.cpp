// forge: batch front door. Exit codes: 0 pass, 1 suite failure, 2 infrastructure.
#include "forge/cli_report.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

using namespace forge;

void write_file(const std::filesystem::path& p, const std::string& text) {
    std::filesystem::create_directories(p.parent_path().empty() ? "." : p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if (!f || !(f << text)) throw Error(Errc::io, "cannot write '" + p.string() + "'");
}

std::filesystem::path out_path(const Scenario& s, const std::string& suffix) {
    return std::filesystem::path(s.output.dir) / (s.name + suffix);
}

int cmd_run(const Scenario& s, bool flow) {
    if (flow && !s.family) throw Error(Errc::role_mismatch, "flow needs a scenario with a flow block");
    Scenario sc = s;
    if (flow && sc.suites.empty()) sc.suites = {"evolution", "flow-constraints"};
    RunResult r = run_scenario(sc);
    write_run(sc, r);
    std::cout << sc.name << ": " << (r.exit_code == 0 ? "pass" : "FAIL") << " -> " << out_path(sc, ".json").string()
              << "\n";
    return r.exit_code;
}

int cmd_generate(const Scenario& s) {
    write_file(out_path(s, ".metric.csv"), generate_table(s));
    std::cout << s.name << ": " << (s.family ? s.family->metric : s.metric).label << " ("
              << (s.family ? s.family->metric : s.metric).status << ") -> " << out_path(s, ".metric.csv").string()
              << "\n";
    return 0;
}

int cmd_horizon(const Scenario& s) {
    HorizonResult h = horizon_table(s);
    write_file(out_path(s, ".horizon.csv"), h.csv);
    write_file(out_path(s, ".horizon.dat"), h.plot);
    std::cout << s.name << ": horizon table -> " << out_path(s, ".horizon.csv").string() << "\n";
    return h.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"forge: exact-solution ansatz builder and residual verifier"};
    app.require_subcommand(1);

    std::string scenario_path;
    double grid_scale = 0;
    int fd_order = 0;
    std::vector<std::string> tols;
    std::string out_dir;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("scenario", scenario_path, "scenario JSON file")->required();
        sub->add_option("--grid-scale", grid_scale, "refine every sampled axis by this factor");
        sub->add_option("--fd-order", fd_order, "finite-difference order")->check(CLI::IsMember({2, 4}));
        sub->add_option("--tol", tols, "per-suite tolerance, suite=value (repeatable)");
        sub->add_option("--out-dir", out_dir, "output directory");
    };
    auto* run = app.add_subcommand("run", "build, verify and write the report");
    auto* verify = app.add_subcommand("verify", "same as run");
    auto* flow = app.add_subcommand("flow", "run the flow suites of a flow scenario");
    auto* generate = app.add_subcommand("generate", "build the metric and write its coefficients on the grid");
    auto* horizon = app.add_subcommand("horizon", "rotoid horizon table over a phi sweep");
    auto* cat = app.add_subcommand("catalog", "list builtin identifiers");
    for (auto* s : {run, verify, flow, generate, horizon}) add_common(s);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (cat->parsed()) {
        for (const auto& e : catalog()) std::cout << e.id << "\t" << e.kind << "\t" << e.summary << "\n";
        return 0;
    }

    try {
        Overrides ov;
        if (grid_scale != 0) ov.grid_scale = real(grid_scale);
        if (fd_order != 0) ov.fd_order = fd_order;
        if (!out_dir.empty()) ov.out_dir = out_dir;
        for (const auto& t : tols) {
            auto eq = t.find('=');
            if (eq == std::string::npos) throw Error(Errc::parse, "--tol expects suite=value, got '" + t + "'");
            ov.tolerances[t.substr(0, eq)] = parse_real(t.substr(eq + 1));
        }
        Scenario s = load_scenario(scenario_path, ov);
        if (run->parsed() || verify->parsed()) return cmd_run(s, false);
        if (flow->parsed()) return cmd_run(s, true);
        if (generate->parsed()) return cmd_generate(s);
        return cmd_horizon(s);
    } catch (const std::exception& e) {
        std::cerr << "forge: " << e.what() << "\n";
        return 2;
    }
}
