#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "vilab/config.hpp"
#include "vilab/runner.hpp"

using namespace vilab;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
    fs::path d = fs::temp_directory_path() / ("vilab_test_" + tag);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

fs::path write_config(const fs::path& dir, const std::string& name, const nlohmann::json& j) {
    fs::path p = dir / name;
    std::ofstream out(p);
    out << j.dump(2);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(VILAB_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

nlohmann::json minimal_poisson(const fs::path& out) {
    nlohmann::json j;
    j["problem"] = "poisson";
    j["mesh"] = {{"domain", "rectangle"}, {"n", {4, 4}}};
    j["load"] = {{"f", 1.0}};
    j["output"] = {{"directory", out.string()}};
    return j;
}

} // namespace

TEST_CASE("minimal poisson config runs to exit 0 with artifacts") {
    fs::path d = temp_dir("poisson");
    fs::path cfg = write_config(d, "p.json", minimal_poisson(d / "out"));
    std::ostringstream log;
    RunOptions opts;
    opts.log = &log;
    CHECK(run_config_file(cfg, opts) == kExitOk);
    CHECK(fs::exists(d / "out" / "u.csv"));
    CHECK(fs::exists(d / "out" / "report.json"));
    auto report = nlohmann::json::parse(slurp(d / "out" / "report.json"));
    CHECK(report["exit_code"] == 0);
    // the effective config echoes expanded defaults
    CHECK(report["config"]["solver"]["tol"].get<double>() == 1e-8);
    CHECK(report["config"]["coefficients"]["a"].get<double>() == 1.0);
}

TEST_CASE("unknown keys are rejected with exit 1 and the key name") {
    fs::path d = temp_dir("badkey");
    nlohmann::json j = minimal_poisson(d / "out");
    j["solvr"] = {{"tol", 1e-8}};
    fs::path cfg = write_config(d, "bad.json", j);
    std::ostringstream log;
    RunOptions opts;
    opts.log = &log;
    CHECK(run_config_file(cfg, opts) == kExitConfigError);
    CHECK(log.str().find("solvr") != std::string::npos);
}

TEST_CASE("nested unknown key is named") {
    fs::path d = temp_dir("badkey2");
    nlohmann::json j = minimal_poisson(d / "out");
    j["mesh"]["shape"] = "round";
    std::ostringstream log;
    RunOptions opts;
    opts.log = &log;
    CHECK(run_config_file(write_config(d, "bad.json", j), opts) == kExitConfigError);
    CHECK(log.str().find("mesh.shape") != std::string::npos);
}

TEST_CASE("obstacle run with max_iter 1 exits 2") {
    fs::path d = temp_dir("obst2");
    nlohmann::json j;
    j["problem"] = "obstacle";
    j["mesh"] = {{"domain", "interval"}, {"n", {12}}};
    j["load"] = {{"f", 8.0}};
    j["obstacle"] = {{"lower", 0.0}};
    j["solver"] = {{"method", "psor"}, {"max_iter", 1}};
    j["output"] = {{"directory", (d / "out").string()}};
    std::ostringstream log;
    RunOptions opts;
    opts.log = &log;
    CHECK(run_config_file(write_config(d, "o.json", j), opts) == kExitNotConverged);
}

TEST_CASE("obstacle run converges and passes verification") {
    fs::path d = temp_dir("obst0");
    nlohmann::json j;
    j["problem"] = "obstacle";
    j["mesh"] = {{"domain", "interval"}, {"n", {12}}};
    j["load"] = {{"f", -8.0}};
    j["obstacle"] = {{"lower", 0.0}};
    j["output"] = {{"directory", (d / "out").string()}};
    std::ostringstream log;
    RunOptions opts;
    opts.log = &log;
    CHECK(run_config_file(write_config(d, "o.json", j), opts) == kExitOk);
    auto report = nlohmann::json::parse(slurp(d / "out" / "report.json"));
    CHECK(report["verify"]["cp1_pass"].get<bool>());
    CHECK(fs::exists(d / "out" / "solution.csv"));
}

TEST_CASE("tresca run writes the friction columns") {
    fs::path d = temp_dir("tresca");
    nlohmann::json j;
    j["problem"] = "tresca";
    j["mesh"] = {{"domain", "interval"}, {"n", {9}}};
    j["load"] = {{"f", 10.0}};
    j["friction"] = {{"g", 2.0}, {"nodes", "all"}};
    j["output"] = {{"directory", (d / "out").string()}};
    std::ostringstream log;
    RunOptions opts;
    opts.log = &log;
    CHECK(run_config_file(write_config(d, "t.json", j), opts) == kExitOk);
    const std::string csv = slurp(d / "out" / "solution.csv");
    CHECK(csv.rfind("node_id,x1,x2,u,lambda,active,p,state", 0) == 0);
    CHECK(csv.find("slip") != std::string::npos);
}

TEST_CASE("signorini config labels the split south edge and verifies") {
    fs::path d = temp_dir("sig");
    nlohmann::json j;
    j["problem"] = "signorini";
    j["mesh"] = {{"domain", "rectangle"}, {"n", {6, 6}}};
    j["load"] = {{"f", 5.0}};
    j["boundary"]["segments"] = nlohmann::json::array(
        {{{"name", "contact"}, {"where", "south"}, {"type", "signorini"}, {"gap", 0.0}, {"sense", "upper"}},
         {{"name", "west"}, {"where", "west"}, {"type", "dirichlet"}, {"value", 0.0}},
         {{"name", "east"}, {"where", "east"}, {"type", "dirichlet"}, {"value", 0.0}},
         {{"name", "north"}, {"where", "north"}, {"type", "dirichlet"}, {"value", 0.0}}});
    j["output"] = {{"directory", (d / "out").string()}};
    std::ostringstream log;
    RunOptions opts;
    opts.log = &log;
    CHECK(run_config_file(write_config(d, "s.json", j), opts) == kExitOk);
    auto report = nlohmann::json::parse(slurp(d / "out" / "report.json"));
    CHECK(report["verify"]["cp1_pass"].get<bool>());
}

TEST_CASE("vi3 config runs the cone-constrained solver") {
    fs::path d = temp_dir("vi3");
    nlohmann::json j;
    j["problem"] = "vi3";
    j["mesh"] = {{"domain", "interval"}, {"n", {8}}};
    j["load"] = {{"f", 6.0}};
    j["friction"] = {{"g", 1.5}, {"nodes", "all"}, {"cone", "nonnegative"}};
    j["output"] = {{"directory", (d / "out").string()}};
    std::ostringstream log;
    RunOptions opts;
    opts.log = &log;
    CHECK(run_config_file(write_config(d, "v.json", j), opts) == kExitOk);
    auto report = nlohmann::json::parse(slurp(d / "out" / "report.json"));
    CHECK(report["verify"]["mp_pass"].get<bool>());
    CHECK(report["residuals"]["cone_comp"].get<double>() <= 1e-7);
}

TEST_CASE("l_shape poisson through the config layer") {
    fs::path d = temp_dir("lshape");
    nlohmann::json j;
    j["problem"] = "poisson";
    j["mesh"] = {{"domain", "l_shape"}, {"n", {7, 7}}};
    j["boundary"]["segments"] = nlohmann::json::array(
        {{{"name", "walls"}, {"where", "all"}, {"type", "dirichlet"}, {"value", "lshape_exact"}}});
    j["load"] = {{"f", 0.0}};
    j["output"] = {{"directory", (d / "out").string()}};
    std::ostringstream log;
    RunOptions opts;
    opts.log = &log;
    opts.dump_mesh = true;
    CHECK(run_config_file(write_config(d, "l.json", j), opts) == kExitOk);
    CHECK(fs::exists(d / "out" / "mesh.json"));
    CHECK(slurp(d / "out" / "mesh.json").find("l_shape") != std::string::npos);
}

TEST_CASE("tresca config on a boundary segment") {
    fs::path d = temp_dir("tresca_seg");
    nlohmann::json j;
    j["problem"] = "tresca";
    j["mesh"] = {{"domain", "rectangle"}, {"n", {6, 6}}};
    j["load"] = {{"f", 40.0}};
    j["boundary"]["segments"] = nlohmann::json::array(
        {{{"name", "south"}, {"where", "south"}, {"type", "neumann"}, {"flux", 0.0}},
         {{"name", "west"}, {"where", "west"}, {"type", "dirichlet"}, {"value", 0.0}},
         {{"name", "east"}, {"where", "east"}, {"type", "dirichlet"}, {"value", 0.0}},
         {{"name", "north"}, {"where", "north"}, {"type", "dirichlet"}, {"value", 0.0}}});
    j["friction"] = {{"g", 2.0}, {"nodes", "segment:south"}};
    j["output"] = {{"directory", (d / "out").string()}};
    std::ostringstream log;
    RunOptions opts;
    opts.log = &log;
    CHECK(run_config_file(write_config(d, "t.json", j), opts) == kExitOk);
    auto report = nlohmann::json::parse(slurp(d / "out" / "report.json"));
    CHECK(report["verify"]["mp_pass"].get<bool>());
}

TEST_CASE("determinism: identical config and seed give byte-identical CSVs") {
    fs::path d = temp_dir("determ");
    nlohmann::json j;
    j["problem"] = "obstacle";
    j["mesh"] = {{"domain", "rectangle"}, {"n", {6, 6}}};
    j["load"] = {{"f", -20.0}};
    j["obstacle"] = {{"lower", -0.01}};
    j["solver"] = {{"seed", 99}};
    j["output"] = {{"directory", (d / "out1").string()}};
    fs::path cfg1 = write_config(d, "r1.json", j);
    j["output"] = {{"directory", (d / "out2").string()}};
    fs::path cfg2 = write_config(d, "r2.json", j);
    std::ostringstream log;
    RunOptions opts;
    opts.log = &log;
    REQUIRE(run_config_file(cfg1, opts) == kExitOk);
    REQUIRE(run_config_file(cfg2, opts) == kExitOk);
    CHECK(slurp(d / "out1" / "solution.csv") == slurp(d / "out2" / "solution.csv"));
}

TEST_CASE("dump flags write mesh and matrix files") {
    fs::path d = temp_dir("dumps");
    fs::path cfg = write_config(d, "p.json", minimal_poisson(d / "out"));
    std::ostringstream log;
    RunOptions opts;
    opts.log = &log;
    opts.dump_mesh = true;
    opts.dump_matrix = true;
    CHECK(run_config_file(cfg, opts) == kExitOk);
    CHECK(fs::exists(d / "out" / "mesh.json"));
    CHECK(fs::exists(d / "out" / "matrix.mtx"));
    CHECK(slurp(d / "out" / "matrix.mtx").rfind("%%MatrixMarket", 0) == 0);
}

TEST_CASE("output directory override from the environment") {
    fs::path d = temp_dir("envdir");
    nlohmann::json j = minimal_poisson(d / "ignored");
    fs::path cfg = write_config(d, "p.json", j);
    setenv("VILAB_OUTPUT_DIR", (d / "env_out").c_str(), 1);
    std::ostringstream log;
    RunOptions opts;
    opts.log = &log;
    CHECK(run_config_file(cfg, opts) == kExitOk);
    unsetenv("VILAB_OUTPUT_DIR");
    CHECK(fs::exists(d / "env_out" / "u.csv"));
    CHECK(!fs::exists(d / "ignored" / "u.csv"));
}

TEST_CASE("cli binary: solve, fixtures list, fixtures run, exit codes") {
    fs::path d = temp_dir("clibin");
    fs::path cfg = write_config(d, "p.json", minimal_poisson(d / "out"));
    CHECK(run_cli("solve " + cfg.string()) == 0);
    CHECK(run_cli("fixtures list") == 0);
    CHECK(run_cli("fixtures run nope") == 1);
    CHECK(run_cli("solve /definitely/missing.json") == 1);
    // smallest real study through the binary
    CHECK(run_cli("fixtures run interval_smooth --output " + (d / "fx").string()) == 0);
    CHECK(fs::exists(d / "fx" / "study_interval_smooth.csv"));
}

TEST_CASE("gnep demo config in the repository parses") {
    fs::path demo = fs::path(VILAB_SOURCE_DIR) / "configs" / "gnep_demo.json";
    REQUIRE(fs::exists(demo));
    RunConfig cfg = load_config(demo);
    CHECK(cfg.problem == "gnep");
    CHECK(cfg.players.size() == 2);
    CHECK(cfg.mesh.n == std::vector<int>{8, 8});
    // disjoint observation masks and bounded controls, per the shipped demo
    CHECK(cfg.players[0].obs_mask == "left_half");
    CHECK(cfg.players[1].obs_mask == "right_half");
}
