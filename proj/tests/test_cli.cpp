#include "doctest.h"

#include "forge/cli_report.hpp"
#include "forge/expression.hpp"
#include "test_support.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace forge;
using namespace forge::test;
namespace fs = std::filesystem;
namespace bm = boost::multiprecision;

namespace {

const std::string kVacuum = R"({
  "name": "vac",
  "builder": {"id": "gen.vacuum", "params": {
    "breve_b": "x2^2 - x3^2", "h0": 2, "n0_2": "x2*x3", "n0_3": "x2^2/2"}},
  "grid": {"x2": [1.5, 2, 5], "x3": [0, 0.5, 5], "v": [0.5, 1.5, 5]},
  "suites": ["reduced", "lc"]
})";

Errc code_of(const std::string& text) {
    try {
        parse_scenario(text);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("scenario loaded");
    return Errc::io;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

int forge_cli(const std::string& args) {
    std::string cmd = std::string(FORGE_BIN) + " " + args + " > /dev/null 2>&1";
    int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

}  // namespace

TEST_CASE("minimal scenario loads with defaults") {
    Scenario s = parse_scenario(R"({"name": "m", "builder": {"id": "pp.plane"}, "suites": ["reduced"]})");
    CHECK(s.metric.label == "pp.plane");
    CHECK(s.grid.x2.count == 5);
    CHECK(s.grid.fd_order == 4);
    CHECK(s.output.dir == ".");
}

TEST_CASE("unknown identifiers name the nearest match") {
    try {
        parse_scenario(R"({"name": "m", "builder": {"id": "pp.plain"}})");
        FAIL("loaded");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::unknown_identifier);
        CHECK(std::string(e.what()).find("'pp.plane'") != std::string::npos);
    }
    CHECK(code_of(R"({"name": "m", "builder": {"id": "pp.plane"}, "sutes": []})") == Errc::unknown_identifier);
    CHECK(code_of(R"({"name": "m", "builder": {"id": "pp.plane"}, "suites": ["reduce"]})") ==
          Errc::unknown_identifier);
}

TEST_CASE("parse errors carry line and column") {
    try {
        parse_scenario("{\n  \"name\": \"m\",\n  \"builder\": {\"id\": pp}\n}");
        FAIL("loaded");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::parse);
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    CHECK(code_of(R"({"name": "m", "builder": {"id": "gen.vacuum", "params": {"breve_b": "x2 +* 1"}}})") ==
          Errc::parse);
    CHECK(code_of(R"({"name": "m", "builder": {"id": "pp.plane"}, "suites": ["evolution"]})") ==
          Errc::role_mismatch);
}

TEST_CASE("expression soliton equals the builtin kink") {
    Scenario a = parse_scenario(R"J({"name": "a", "builder": {"id": "gen.vacuum",
        "params": {"soliton": "4*atan(exp(v))"}}})J");
    Scenario b = parse_scenario(R"({"name": "b", "builder": {"id": "gen.vacuum",
        "params": {"soliton": {"id": "soliton.sg1d"}}}})");
    GridSpec g = box(1.5, 2, 0, 0.5, 0.5, 1.5);
    for (const auto& p : random_points(g, 100)) {
        CHECK(d(bm::abs(a.metric.h5(p) - b.metric.h5(p))) <= 1e-12 * d(bm::abs(b.metric.h5(p))));
        CHECK(d(bm::abs(a.metric.nconn.w2(p) - b.metric.nconn.w2(p))) <= 1e-12);
    }
    SolitonChoice q;
    ScalarField kink = soliton_field(q), user = parse_field("4*atan(exp(v))");
    for (const auto& p : random_points(g, 100)) CHECK(d(bm::abs(kink(p) - user(p))) <= 1e-12);
}

TEST_CASE("reports: pass, sensitivity, empty body and reproducibility") {
    Scenario s = parse_scenario(kVacuum);
    RunResult r1 = run_scenario(s), r2 = run_scenario(parse_scenario(kVacuum));
    CHECK(r1.exit_code == 0);
    CHECK(r1.json == r2.json);
    CHECK(r1.json.find("\"status\": \"verified\"") != std::string::npos);
    CHECK(r1.csv.at("reduced").rfind("suite,index,x2,x3,v,chi,r_h,r_v,r_w2,r_w3,r_n2,r_n3,norm,error\n", 0) == 0);

    std::string kicked = kVacuum;
    kicked.insert(kicked.rfind('}'), R"(, "transform": {"polarizations": [{"eta4": "1 + 1e-3*v"}]})");
    RunResult k = run_scenario(parse_scenario(kicked));
    CHECK(k.exit_code == 1);
    auto j = nlohmann::json::parse(k.json);
    CHECK(j["suites"]["reduced"]["components"]["r_v"]["max"].get<double>() > 1e-8);

    RunResult e = run_scenario(parse_scenario(R"({"name": "e", "builder": {"id": "pp.plane"}})"));
    CHECK(e.exit_code == 0);
    auto je = nlohmann::json::parse(e.json);
    CHECK(je.size() == 1);
    CHECK(je.contains("provenance"));
}

TEST_CASE("overrides: grid scale, fd order and tolerances") {
    Overrides ov;
    ov.grid_scale = 2;
    ov.fd_order = 2;
    ov.tolerances["reduced"] = real(1e-40);
    Scenario s = parse_scenario(kVacuum, ov);
    CHECK(s.grid.x2.count == 9);
    CHECK(s.grid.fd_order == 2);
    CHECK(run_scenario(s).exit_code == 1);
}

TEST_CASE("horizon table over a phi sweep") {
    Scenario s = parse_scenario(R"({"name": "h", "builder": {"id": "schw.aux1"},
        "rotoid": {"eps": 0, "samples": 360}})");
    HorizonResult h = horizon_table(s);
    CHECK(h.exit_code == 0);
    std::istringstream in(h.csv);
    std::string line;
    std::getline(in, line);
    CHECK(line == "phi,r_root,r_formula,difference,error");
    int rows = 0;
    double last = -1;
    while (std::getline(in, line)) {
        double phi = std::stod(line.substr(0, line.find(',')));
        CHECK(phi > last);
        last = phi;
        CHECK(line.find(",2,2,0,") != std::string::npos);
        ++rows;
    }
    CHECK(rows == 360);
}

TEST_CASE("exit-code contract of the binary") {
    fs::path dir = fs::temp_directory_path() / "forge_cli_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ofstream(dir / "vac.json") << kVacuum;
    std::ofstream(dir / "typo.json") << R"({"name": "t", "builder": {"id": "pp.plain"}})";
    const std::string out = " --out-dir " + (dir / "out").string();
    CHECK(forge_cli("run " + (dir / "vac.json").string() + out) == 0);
    std::string first = slurp(dir / "out" / "vac.json");
    CHECK(forge_cli("verify " + (dir / "vac.json").string() + out) == 0);
    CHECK(slurp(dir / "out" / "vac.json") == first);
    CHECK(fs::exists(dir / "out" / "vac.reduced.csv"));
    CHECK(forge_cli("run " + (dir / "vac.json").string() + out + " --tol reduced=1e-40") == 1);
    CHECK(forge_cli("run " + (dir / "typo.json").string() + out) == 2);
    CHECK(forge_cli("run " + (dir / "missing.json").string() + out) == 2);
    CHECK(forge_cli("catalog") == 0);
    fs::remove_all(dir);
}
