// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Criteria run on seeded instances with pinned tolerances; the GNEP
// criterion uses the demo config shipped in configs/.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <vector>

#include "vilab/config.hpp"
#include "vilab/export.hpp"
#include "vilab/fixtures.hpp"
#include "vilab/friction.hpp"
#include "vilab/gnep.hpp"
#include "vilab/obstacle.hpp"
#include "vilab/oracles.hpp"
#include "vilab/rng.hpp"
#include "vilab/runner.hpp"

using namespace vilab;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

struct Criterion {
    int id;
    std::string label;
    bool pass = true;
    std::ostringstream detail;
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

    Criterion(int i, std::string l) : id(i), label(std::move(l)) {}

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            if (detail.tellp() > 0) detail << "; ";
            detail << what;
        }
    }

    ~Criterion() {
        const double dt =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("[%s] criterion %d: %s (%.1f s)%s%s\n", pass ? "PASS" : "FAIL", id,
                    label.c_str(), dt, pass ? "" : " -- ", pass ? "" : detail.str().c_str());
        std::fflush(stdout);
        if (!pass) ++g_failures;
    }
};

BoundarySpec all_dirichlet(const Grid& g, double value = 0.0) {
    SegmentRule all =
        SegmentRule::dirichlet("boundary", [](std::span<const double>) { return true; }, value);
    return label_boundary(g, {&all, 1});
}

Field seeded_load(const Grid& g, std::uint64_t seed, double amp) {
    Rng rng(seed);
    Field f(g.num_nodes());
    for (auto& v : f.values) v = rng.uniform(-amp, amp);
    return f;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// ---- criterion 1: CP-1 verification on 50 seeded obstacle instances ----
void criterion_1() {
    Criterion c(1, "CP-1 verification on 50 seeded obstacle instances, residuals <= 1e-8");
    ObstacleOptions opt;
    opt.tol = 1e-9;
    int count = 0;
    auto run_batch = [&](const Grid& grid, int batch, std::uint64_t base) {
        DiscreteOperator op = assemble(grid, CoefficientField::constant(), all_dirichlet(grid));
        ObstacleSpec spec = ObstacleSpec::domain_lower(op, Field::zeros(grid));
        for (int i = 0; i < batch; ++i) {
            Field f = seeded_load(grid, base + i, 40.0);
            MixedSolution sol = solve_obstacle_pdas(op, f, spec, opt);
            c.require(sol.converged, "solver did not converge (seed " + std::to_string(base + i) + ")");
            Cp1Residuals r = verify_cp1(op, f, spec, sol);
            c.require(r.stationarity <= 1e-8 && r.feasibility <= 1e-8 &&
                          r.dual_feasibility <= 1e-8 && r.complementarity <= 1e-8,
                      "residuals exceed 1e-8 (seed " + std::to_string(base + i) + ")");
            ++count;
        }
    };
    run_batch(Grid::interval(0.0, 1.0, 10), 10, 1000);
    run_batch(Grid::interval(0.0, 1.0, 50), 10, 2000);
    run_batch(Grid::interval(0.0, 1.0, 200), 10, 3000);
    run_batch(Grid::rectangle({0.0, 1.0}, {0.0, 1.0}, 8, 8), 10, 4000);
    run_batch(Grid::rectangle({0.0, 1.0}, {0.0, 1.0}, 16, 16), 10, 5000);
    c.require(count == 50, "expected 50 instances");
}

// ---- criterion 2: PSOR, PDAS and the enumeration oracle agree ----
void criterion_2() {
    Criterion c(2, "PSOR/PDAS/oracle agreement to 1e-7 on 20 instances with <= 12 constraints");
    ObstacleOptions opt;
    opt.tol = 1e-10;
    opt.omega = 1.7;

    auto compare = [&](const DiscreteOperator& op, const Field& f, const ObstacleSpec& spec,
                       std::uint64_t seed) {
        MixedSolution a = solve_obstacle_psor(op, f, spec, opt);
        MixedSolution b = solve_obstacle_pdas(op, f, spec, opt);
        c.require(a.converged && b.converged, "non-convergence (seed " + std::to_string(seed) + ")");

        const int m = op.num_free();
        Eigen::MatrixXd H(op.matrix());
        Eigen::VectorXd q = -op.effective_load(f);
        Eigen::VectorXd lo = Eigen::VectorXd::Constant(m, -std::numeric_limits<double>::infinity());
        Eigen::VectorXd hi = Eigen::VectorXd::Constant(m, std::numeric_limits<double>::infinity());
        for (std::size_t k = 0; k < spec.constrained_nodes.size(); ++k) {
            lo[op.free_index(spec.constrained_nodes[k])] = spec.lower[k];
            hi[op.free_index(spec.constrained_nodes[k])] = spec.upper[k];
        }
        auto oracle = oracle_active_set_qp(H, q, lo, hi, Eigen::MatrixXd(0, m), Eigen::VectorXd(0),
                                           Eigen::VectorXd(0));
        c.require(oracle.size() == 1, "oracle did not isolate one solution");
        if (oracle.size() != 1) return;
        Eigen::VectorXd ua = op.restrict_free(a.u), ub = op.restrict_free(b.u);
        c.require((ua - oracle[0].x).cwiseAbs().maxCoeff() <= 1e-7, "psor u mismatch");
        c.require((ub - oracle[0].x).cwiseAbs().maxCoeff() <= 1e-7, "pdas u mismatch");
        for (std::size_t k = 0; k < spec.constrained_nodes.size(); ++k) {
            const int fi = op.free_index(spec.constrained_nodes[k]);
            const bool upper_only = spec.has_upper(k) && !spec.has_lower(k);
            const double lam_o = upper_only ? oracle[0].mu_box[fi] : -oracle[0].mu_box[fi];
            c.require(std::abs(a.lambda[k] - lam_o) <= 1e-7, "psor lambda mismatch");
            c.require(std::abs(b.lambda[k] - lam_o) <= 1e-7, "pdas lambda mismatch");
        }
    };

    // 12 domain-obstacle chains with 12 constrained nodes
    {
        Grid g = Grid::interval(0.0, 1.0, 12);
        DiscreteOperator op = assemble(g, CoefficientField::constant(), all_dirichlet(g));
        ObstacleSpec spec = ObstacleSpec::domain_lower(op, Field::zeros(g));
        for (int i = 0; i < 12; ++i) compare(op, seeded_load(g, 6000 + i, 60.0), spec, 6000 + i);
    }
    // 8 Signorini strips with 6 constrained boundary nodes
    {
        Grid g = Grid::rectangle({0.0, 1.0}, {0.0, 1.0}, 6, 6);
        std::vector<SegmentRule> rules;
        rules.push_back(SegmentRule::signorini(
            "south", [](std::span<const double> x) { return x[1] == 0.0; }, 0.0,
            SignoriniSense::upper));
        rules.push_back(SegmentRule::dirichlet(
            "walls",
            [](std::span<const double> x) { return x[1] > 0.0 || x[0] == 0.0 || x[0] == 1.0; }, 0.0));
        BoundarySpec b = label_boundary(g, rules);
        DiscreteOperator op = assemble(g, CoefficientField::constant(), b);
        ObstacleSpec spec = ObstacleSpec::boundary_obstacle(op, "south");
        for (int i = 0; i < 8; ++i) compare(op, seeded_load(g, 7000 + i, 30.0), spec, 7000 + i);
    }
}

// ---- criterion 3: Tresca friction against the stick/slip oracle ----
void criterion_3() {
    Criterion c(3, "friction characterization: oracle match to 1e-7 and exact scalar cases");
    FrictionOptions opt;
    opt.tol = 1e-9;

    Grid g = Grid::interval(0.0, 1.0, 8);
    DiscreteOperator op = assemble(g, CoefficientField::constant(), all_dirichlet(g));
    FrictionSpec fs = FrictionSpec::on_all_free(op, 2.0);
    for (int i = 0; i < 20; ++i) {
        Field f = seeded_load(g, 8000 + i, 15.0);
        FrictionSolution sol = solve_vi2(op, f, fs, opt);
        c.require(sol.converged, "vi2 did not converge (seed " + std::to_string(8000 + i) + ")");
        c.require(sol.residuals.box <= 1e-8 && sol.residuals.alignment <= 1e-8 &&
                      sol.residuals.stationarity <= 1e-8,
                  "vi2 residuals exceed 1e-8");
        auto oracle = oracle_stick_slip(op, f, fs);
        c.require(!oracle.empty(), "stick/slip oracle found nothing");
        if (oracle.empty()) continue;
        Eigen::VectorXd u = op.restrict_free(sol.u);
        double best = 1e300;
        std::size_t arg = 0;
        for (std::size_t k = 0; k < oracle.size(); ++k) {
            const double d = (oracle[k].u - u).cwiseAbs().maxCoeff();
            if (d < best) {
                best = d;
                arg = k;
            }
        }
        c.require(best <= 1e-7, "u differs from the oracle");
        for (std::size_t k = 0; k < sol.p.size(); ++k)
            c.require(std::abs(sol.p[k] - oracle[arg].p[k]) <= 1e-7, "p differs from the oracle");
    }

    // scalar soft-threshold cases, exact to 1e-12
    Eigen::MatrixXd A(1, 1);
    A << 2.0;
    DiscreteOperator sop = DiscreteOperator::from_dense(A);
    FrictionSpec sfs = FrictionSpec::on_nodes({0}, {1.0});
    Field f1(1), f2(1);
    f1.values[0] = 5.0;
    f2.values[0] = 0.5;
    FrictionSolution s1 = solve_vi2(sop, f1, sfs, opt);
    FrictionSolution s2 = solve_vi2(sop, f2, sfs, opt);
    c.require(std::abs(s1.u.values[0] - 2.0) <= 1e-12 && std::abs(s1.p[0] - 1.0) <= 1e-12,
              "scalar slip case not exact");
    c.require(std::abs(s2.u.values[0]) <= 1e-12 && std::abs(s2.p[0] - 0.5) <= 1e-12,
              "scalar stick case not exact");
}

// ---- criterion 4: MP-3 decomposition on cone-constrained instances ----
void criterion_4() {
    Criterion c(4, "MP-3: cone complementarity to 1e-8 and f - Au = p + lambda to 1e-10");
    FrictionOptions opt;
    opt.tol = 1e-10;
    Grid g = Grid::interval(0.0, 1.0, 8);
    DiscreteOperator op = assemble(g, CoefficientField::constant(), all_dirichlet(g));

    for (int i = 0; i < 10; ++i) {
        FrictionSpec fs = FrictionSpec::on_all_free(op, 2.0);
        fs.with_cone_everywhere(op, i % 2 == 0 ? ConeSign::nonnegative : ConeSign::nonpositive);
        // unit pairing weights so the decomposition identity is literal
        std::fill(fs.weight.begin(), fs.weight.end(), 1.0);
        std::fill(fs.cone_weight.begin(), fs.cone_weight.end(), 1.0);
        Field f = seeded_load(g, 9000 + i, 10.0);
        FrictionSolution sol = solve_vi3(op, f, fs, opt);
        c.require(sol.converged, "vi3 did not converge (seed " + std::to_string(9000 + i) + ")");
        FrictionResiduals r = verify_mp2_mp3(op, f, fs, sol);
        c.require(r.max() <= 1e-8, "verify_mp2_mp3 residuals exceed 1e-8");
        c.require(r.cone_comp <= 1e-8, "<lambda,u> exceeds 1e-8");

        // decomposition identity, componentwise
        Eigen::VectorXd resid = op.effective_load(f) - op.matrix() * op.restrict_free(sol.u);
        for (int k = 0; k < op.num_free(); ++k) {
            const double pk = sol.p[k];
            const double lk = sol.lambda[k];
            c.require(std::abs(resid[k] - pk - lk) <= 1e-10, "f - Au != p + lambda");
        }
    }

    // degenerate cone-free case returns lambda = 0 exactly
    FrictionSpec fs = FrictionSpec::on_all_free(op, 2.0);
    std::vector<int> nodes;
    std::vector<ConeSign> signs;
    for (int k = 0; k < op.num_free(); ++k) {
        nodes.push_back(op.node_of_free(k));
        signs.push_back(ConeSign::free_sign);
    }
    fs.with_cone(nodes, signs);
    FrictionSolution sol = solve_vi3(op, seeded_load(g, 9100, 10.0), fs, opt);
    c.require(sol.converged, "cone-free vi3 did not converge");
    for (double l : sol.lambda) c.require(l == 0.0, "cone-free lambda not exactly zero");
}

// ---- criterion 5: positive homogeneity ----
void criterion_5() {
    Criterion c(5, "homogeneity: (f,g) -> t(f,g) scales (u,p,lambda) within 1e-9 relative");
    FrictionOptions opt;
    opt.tol = 1e-11;
    Grid g = Grid::interval(0.0, 1.0, 9);
    DiscreteOperator op = assemble(g, CoefficientField::constant(), all_dirichlet(g));
    for (int i = 0; i < 10; ++i) {
        Field f = seeded_load(g, 9500 + i, 12.0);
        const double gbound = 1.0 + 0.2 * i;
        FrictionSpec fs = FrictionSpec::on_all_free(op, gbound);
        fs.with_cone_everywhere(op, ConeSign::nonnegative);
        FrictionSolution base = solve_vi3(op, f, fs, opt);
        c.require(base.converged, "base solve failed");
        for (double t : {0.5, 3.0}) {
            Field ft = f;
            for (auto& v : ft.values) v *= t;
            FrictionSpec fst = FrictionSpec::on_all_free(op, gbound * t);
            fst.with_cone_everywhere(op, ConeSign::nonnegative);
            FrictionSolution scaled = solve_vi3(op, ft, fst, opt);
            c.require(scaled.converged, "scaled solve failed");
            for (std::size_t v = 0; v < scaled.u.size(); ++v) {
                const double want = t * base.u.values[v];
                c.require(std::abs(scaled.u.values[v] - want) <= 1e-9 * (1.0 + std::abs(want)),
                          "u does not scale");
            }
            for (std::size_t k = 0; k < scaled.p.size(); ++k) {
                const double want_p = t * base.p[k];
                c.require(std::abs(scaled.p[k] - want_p) <= 1e-9 * (1.0 + std::abs(want_p)),
                          "p does not scale");
                const double want_l = t * base.lambda[k];
                c.require(std::abs(scaled.lambda[k] - want_l) <= 1e-9 * (1.0 + std::abs(want_l)),
                          "lambda does not scale");
            }
        }
    }
}

// ---- criterion 6: the shipped GNEP demo, end to end through the runner ----
void criterion_6() {
    Criterion c(6, "GNEP demo: merit <= 1e-6 within 200 sweeps, normalized checks to 1e-6");
    const fs::path demo = fs::path(VILAB_SOURCE_DIR) / "configs" / "gnep_demo.json";
    RunConfig cfg = load_config(demo);
    c.require(cfg.problem == "gnep" && cfg.players.size() == 2, "demo config shape");
    c.require(cfg.players[0].obs_mask == "left_half" && cfg.players[1].obs_mask == "right_half",
              "demo masks must be disjoint");
    c.require(cfg.samples == 500, "demo must sample 500 deviations");

    const fs::path dir = fs::temp_directory_path() / "vilab_acceptance_gnep";
    fs::remove_all(dir);
    std::ostringstream log;
    RunOptions opts;
    opts.output_dir_override = dir.string();
    opts.log = &log;
    const int rc = run_config_file(demo, opts);
    c.require(rc == kExitOk, "demo run exited " + std::to_string(rc));

    auto report = nlohmann::json::parse(slurp(dir / "report.json"));
    c.require(report["converged"].get<bool>(), "relaxation did not converge");
    c.require(report["sweeps"].get<int>() <= 200, "sweep budget exceeded");
    c.require(report["merit"].get<double>() <= 1e-6, "merit above 1e-6");
    const auto& ver = report["verify"]["normalized"];
    c.require(ver["samples"].get<int>() == 500, "sample count");
    c.require(ver["max_sampled_psi"].get<double>() <= 1e-6, "sampled Psi above 1e-6");
    c.require(ver["joint_br_psi"].get<double>() <= 1e-6, "joint best-response Psi above 1e-6");
    c.require(ver["worst_player_gap"].get<double>() <= 1e-6, "per-player Nash gap above 1e-6");

    // the demo exercises its control boxes: count controls pinned at a bound
    int active = 0;
    for (int nu = 1; nu <= 2; ++nu) {
        std::ifstream in(dir / ("control_" + std::to_string(nu) + ".csv"));
        std::string line;
        std::getline(in, line); // header
        const double lo = cfg.players[nu - 1].control_lo, hi = cfg.players[nu - 1].control_hi;
        while (std::getline(in, line)) {
            const auto pos = line.rfind(',');
            const double u = std::stod(line.substr(pos + 1));
            if (std::abs(u - lo) <= 1e-6 || std::abs(u - hi) <= 1e-6) ++active;
        }
    }
    c.require(active > 0, "control boxes inactive at the equilibrium");
}

// ---- criterion 7: cross-formulation agreement ----
void criterion_7() {
    Criterion c(7, "formulations (II) and (III) agree to 1e-5; reconstruction closes");
    for (int i = 0; i < 5; ++i) {
        Rng rng(11000 + i);
        Grid g = Grid::interval(0.0, 1.0, 5);
        std::vector<GnepPlayer> ps;
        for (int nu = 0; nu < 2; ++nu) {
            GnepPlayer p;
            p.gamma = 0.3 + 0.3 * rng.uniform();
            p.beta = 1.0 + 0.5 * rng.uniform();
            p.target = Field::constant(g, 0.06 * rng.uniform(-1.0, 1.0));
            p.obs_mask.assign(g.num_nodes(), 1);
            p.control_lo = -40.0;
            p.control_hi = 40.0;
            ps.push_back(std::move(p));
        }
        GnepInstance inst =
            make_gnep_instance(g, CoefficientField::constant(), ps, Field::constant(g, 1.0),
                               Field::constant(g, -10.0), Field::constant(g, 10.0));
        GnepOptions opt;
        opt.tol = 1e-10;
        auto [w_state, w_rep] = solve_gnep_relaxation(inst, opt);
        auto [u_state, u_rep] = solve_formulation_ii(inst, opt);
        c.require(w_rep.converged() && u_rep.converged(), "one formulation failed to converge");
        c.require((w_state.y - u_state.y).cwiseAbs().maxCoeff() <= 1e-5,
                  "states differ beyond 1e-5");
        Reconstruction rec = reconstruct_state(inst, w_state);
        c.require(rec.mismatch <= 1e-9, "reconstruction round-trip above solver tolerance");
    }
}

// ---- criterion 8: regularity shadows ----
void criterion_8() {
    Criterion c(8, "convergence studies: smooth >= 1.9, singular <= 1.5 and strictly below");
    ConvergenceStudy smooth = run_convergence_study(find_fixture("square_smooth"));
    ConvergenceStudy lshape = run_convergence_study(find_fixture("lshape_singular"));
    ConvergenceStudy kinder = run_convergence_study(find_fixture("kinderlehrer_signorini"));
    c.require(smooth.levels.size() >= 3, "smooth study needs >= 3 refinements");
    c.require(smooth.observed_order >= 1.9, "smooth order below 1.9");
    c.require(lshape.observed_order <= 1.5, "l-shape order above 1.5");
    c.require(kinder.observed_order <= 1.5, "signorini order above 1.5");
    c.require(lshape.observed_order < smooth.observed_order, "l-shape not below smooth");
    c.require(kinder.observed_order < smooth.observed_order, "signorini not below smooth");
    c.require(smooth.within_window && lshape.within_window && kinder.within_window,
              "a study left its registry window");
}

// ---- criterion 9: determinism of solve runs ----
void criterion_9() {
    Criterion c(9, "determinism: repeated solve runs give byte-identical CSVs");
    const fs::path dir = fs::temp_directory_path() / "vilab_acceptance_determ";
    fs::remove_all(dir);
    fs::create_directories(dir);

    nlohmann::json j;
    j["problem"] = "tresca";
    j["mesh"] = {{"domain", "rectangle"}, {"n", {8, 8}}};
    j["load"] = {{"f", 30.0}};
    j["friction"] = {{"g", 2.0}, {"nodes", "all"}};
    j["solver"] = {{"seed", 77}};
    j["output"] = {{"directory", (dir / "a").string()}};
    {
        std::ofstream out(dir / "cfg_a.json");
        out << j.dump(2);
    }
    j["output"] = {{"directory", (dir / "b").string()}};
    {
        std::ofstream out(dir / "cfg_b.json");
        out << j.dump(2);
    }

    const std::string cli = VILAB_CLI_PATH;
    const int ra = std::system((cli + " solve " + (dir / "cfg_a.json").string() + " >/dev/null 2>&1").c_str());
    const int rb = std::system((cli + " solve " + (dir / "cfg_b.json").string() + " >/dev/null 2>&1").c_str());
    c.require(WEXITSTATUS(ra) == 0 && WEXITSTATUS(rb) == 0, "solve runs failed");
    c.require(slurp(dir / "a" / "solution.csv") == slurp(dir / "b" / "solution.csv"),
              "solution CSVs differ between runs");
    c.require(!slurp(dir / "a" / "solution.csv").empty(), "empty CSV");
}

} // namespace

int main() {
    std::printf("acceptance suite\n");
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    if (g_failures == 0) {
        std::printf("all criteria passed\n");
        return 0;
    }
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
}
