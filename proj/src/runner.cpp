#include "vilab/runner.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "vilab/export.hpp"
#include "vilab/fixtures.hpp"
#include "vilab/friction.hpp"
#include "vilab/gnep.hpp"
#include "vilab/obstacle.hpp"
#include "vilab/version.hpp"

namespace vilab {

namespace {

namespace fs = std::filesystem;
using ordered = nlohmann::ordered_json;

fs::path resolve_output_dir(const RunConfig& cfg, const RunOptions& opts) {
    if (opts.output_dir_override) return fs::path(*opts.output_dir_override);
    if (const char* env = std::getenv("VILAB_OUTPUT_DIR")) return fs::path(env);
    return fs::path(cfg.output_directory);
}

std::ostream& log_of(const RunOptions& opts) { return opts.log ? *opts.log : std::cout; }

bool wants(const RunConfig& cfg, const std::string& fmt) {
    for (const auto& f : cfg.formats)
        if (f == fmt) return true;
    return false;
}

ordered residuals_json(const Cp1Residuals& r) {
    return ordered{{"stationarity", r.stationarity},
                   {"feasibility", r.feasibility},
                   {"dual_feasibility", r.dual_feasibility},
                   {"complementarity", r.complementarity}};
}

ordered residuals_json(const FrictionResiduals& r) {
    return ordered{{"stationarity", r.stationarity}, {"box", r.box},
                   {"alignment", r.alignment},       {"cone_comp", r.cone_comp},
                   {"cone_primal", r.cone_primal},   {"cone_dual", r.cone_dual}};
}

struct RunContext {
    fs::path dir;
    const RunConfig& cfg;
    ordered report;
    double t0 = 0.0;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    explicit RunContext(const RunConfig& c, const fs::path& d) : dir(d), cfg(c) {
        report["version"] = kVersion;
        report["problem"] = c.problem;
        report["config"] = c.effective;
    }

    void finish(int exit_code) {
        report["exit_code"] = exit_code;
        report["wall_time_s"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (wants(cfg, "json")) write_text_file(dir / "report.json", report.dump(2) + "\n");
    }
};

int run_poisson(RunContext& ctx, const Grid& grid, const DiscreteOperator& op, const Field& f) {
    Field u;
    try {
        u = solve_dirichlet(op, f);
    } catch (const std::exception& e) {
        ctx.report["error"] = e.what();
        ctx.finish(kExitNotConverged);
        return kExitNotConverged;
    }
    ctx.report["converged"] = true;
    if (wants(ctx.cfg, "csv")) write_text_file(ctx.dir / "u.csv", field_csv(grid, u));
    ctx.finish(kExitOk);
    return kExitOk;
}

int run_obstacle_like(RunContext& ctx, const Grid& grid, const DiscreteOperator& op, const Field& f) {
    const RunConfig& cfg = ctx.cfg;
    ObstacleSpec spec;
    if (cfg.problem == "signorini") {
        std::string seg = cfg.obstacle_segment;
        if (seg.empty()) {
            for (const auto& s : op.boundary().segments())
                if (s.kind == ConditionKind::signorini) seg = s.name;
        }
        if (seg.empty()) throw ConfigError("signorini problem needs a signorini boundary segment");
        spec = ObstacleSpec::boundary_obstacle(op, seg);
    } else {
        if (!cfg.obstacle_lower && !cfg.obstacle_upper)
            throw ConfigError("missing key 'obstacle.lower' (or 'obstacle.upper')");
        const double lo = cfg.obstacle_lower.value_or(-std::numeric_limits<double>::infinity());
        const double hi = cfg.obstacle_upper.value_or(std::numeric_limits<double>::infinity());
        if (cfg.obstacle_upper)
            spec = ObstacleSpec::domain_box(op, Field(op.num_nodes(), lo), Field(op.num_nodes(), hi));
        else
            spec = ObstacleSpec::domain_lower(op, Field(op.num_nodes(), lo));
    }

    ObstacleOptions oopt;
    oopt.tol = cfg.tol;
    oopt.max_iter = cfg.max_iter;
    oopt.omega = cfg.omega;
    const ObstacleMethod method = cfg.method == "psor" ? ObstacleMethod::psor : ObstacleMethod::pdas;
    MixedSolution sol = method == ObstacleMethod::psor ? solve_obstacle_psor(op, f, spec, oopt)
                                                       : solve_obstacle_pdas(op, f, spec, oopt);

    ctx.report["converged"] = sol.converged;
    ctx.report["iterations"] = sol.iterations;
    ctx.report["residuals"] = residuals_json(sol.residuals);
    Cp1Residuals check = verify_cp1(op, f, spec, sol);
    ctx.report["verify"]["cp1"] = residuals_json(check);
    ctx.report["verify"]["cp1_pass"] = check.pass(cfg.tol * 10);

    if (wants(cfg, "csv")) write_text_file(ctx.dir / "solution.csv", mixed_solution_csv(grid, sol));

    int code = kExitOk;
    if (!sol.converged)
        code = kExitNotConverged;
    else if (!check.pass(cfg.tol * 10))
        code = kExitVerifyFailed;
    ctx.finish(code);
    return code;
}

int run_friction_like(RunContext& ctx, const Grid& grid, const DiscreteOperator& op, const Field& f) {
    const RunConfig& cfg = ctx.cfg;
    FrictionSpec fspec;
    if (cfg.friction_nodes == "all") {
        fspec = FrictionSpec::on_all_free(op, cfg.friction_g);
    } else if (cfg.friction_nodes.rfind("segment:", 0) == 0) {
        fspec = FrictionSpec::on_segment(op, cfg.friction_nodes.substr(8), cfg.friction_g);
    } else {
        throw ConfigError("key 'friction.nodes' must be 'all' or 'segment:<name>'");
    }
    if (cfg.problem == "vi3" && cfg.cone != "none")
        fspec.with_cone_everywhere(op, cfg.cone == "nonnegative" ? ConeSign::nonnegative
                                                                 : ConeSign::nonpositive);

    FrictionOptions fopt;
    fopt.tol = cfg.tol;
    fopt.max_iter = cfg.max_iter;
    fopt.method = cfg.method == "uzawa" ? FrictionMethod::uzawa : FrictionMethod::semismooth;

    FrictionSolution sol =
        cfg.problem == "vi3" ? solve_vi3(op, f, fspec, fopt) : solve_vi2(op, f, fspec, fopt);

    ctx.report["converged"] = sol.converged;
    ctx.report["iterations"] = sol.iterations;
    ctx.report["residuals"] = residuals_json(sol.residuals);
    ctx.report["energy"] = friction_energy(sol.u, f, op, fspec);
    FrictionResiduals check = verify_mp2_mp3(op, f, fspec, sol);
    ctx.report["verify"]["mp"] = residuals_json(check);
    ctx.report["verify"]["mp_pass"] = check.pass(cfg.tol * 10);

    if (wants(cfg, "csv"))
        write_text_file(ctx.dir / "solution.csv", friction_solution_csv(grid, fspec, sol));

    int code = kExitOk;
    if (!sol.converged)
        code = kExitNotConverged;
    else if (!check.pass(cfg.tol * 10))
        code = kExitVerifyFailed;
    ctx.finish(code);
    return code;
}

int run_gnep(RunContext& ctx, const Grid& grid) {
    const RunConfig& cfg = ctx.cfg;
    std::vector<GnepPlayer> players;
    const double xmid = 0.5 * (grid.extent(0).min + grid.extent(0).max);
    for (const auto& pc : cfg.players) {
        GnepPlayer p;
        p.gamma = pc.gamma;
        p.beta = pc.beta;
        if (!pc.target_fn.empty()) {
            const std::string fn = pc.target_fn;
            p.target = Field::from_function(
                grid, [fn](std::span<const double> x) { return builtin_function(fn, x); });
        } else {
            p.target = Field::constant(grid, pc.target);
        }
        p.obs_mask.assign(grid.num_nodes(), 1);
        if (pc.obs_mask != "all") {
            for (std::size_t v = 0; v < grid.num_nodes(); ++v) {
                const bool left = grid.x(v)[0] <= xmid;
                p.obs_mask[v] = (pc.obs_mask == "left_half") == left ? 1 : 0;
            }
        }
        p.control_lo = pc.control_lo;
        p.control_hi = pc.control_hi;
        players.push_back(std::move(p));
    }
    Field f = build_load_from_config(cfg, grid);
    GnepInstance inst =
        make_gnep_instance(grid, build_coefficients_from_config(cfg), std::move(players), f,
                           Field::constant(grid, cfg.state_lo), Field::constant(grid, cfg.state_hi));

    GnepOptions gopt;
    gopt.tol = cfg.gnep_tol;
    gopt.max_iter = cfg.gnep_max_sweeps;
    auto [state, rep] = solve_gnep_relaxation(inst, gopt);

    ctx.report["converged"] = rep.converged();
    ctx.report["terminated"] = to_string(rep.terminated);
    ctx.report["sweeps"] = rep.iterations.empty() ? 0 : rep.iterations.back().k;
    ctx.report["merit"] = state.merit;

    NormalizedReport ver = verify_normalized(inst, state, cfg.samples, cfg.seed);
    ctx.report["verify"]["normalized"] = ordered{{"max_sampled_psi", ver.max_sampled_psi},
                                                 {"joint_br_psi", ver.joint_br_psi},
                                                 {"worst_player_gap", ver.worst_player_gap},
                                                 {"samples", ver.samples}};
    const bool vpass = ver.pass(cfg.gnep_tol);
    ctx.report["verify"]["normalized_pass"] = vpass;

    Reconstruction rec = reconstruct_state(inst, state);
    ctx.report["verify"]["reconstruction_mismatch"] = rec.mismatch;

    if (wants(cfg, "csv")) {
        write_text_file(ctx.dir / "state.csv", field_csv(grid, inst.op.embed(state.y)));
        for (int nu = 0; nu < inst.num_players(); ++nu) {
            write_text_file(ctx.dir / ("control_" + std::to_string(nu + 1) + ".csv"),
                            field_csv(grid, inst.op.embed_with(state.u[nu], 0.0)));
        }
        write_text_file(ctx.dir / "merit_trace.csv", merit_trace_csv(rep));
    }

    int code = kExitOk;
    if (!rep.converged())
        code = kExitNotConverged;
    else if (!vpass)
        code = kExitVerifyFailed;
    ctx.finish(code);
    return code;
}

} // namespace

int run_fixture(const std::string& name, const RunOptions& opts) {
    const AnalyticCase& acase = find_fixture(name);
    ConvergenceStudy study = run_convergence_study(acase);
    log_of(opts) << study_table(study);

    fs::path dir = opts.output_dir_override ? fs::path(*opts.output_dir_override) : fs::path(".");
    if (const char* env = std::getenv("VILAB_OUTPUT_DIR"); env && !opts.output_dir_override)
        dir = fs::path(env);
    std::error_code ec;
    fs::create_directories(dir, ec);
    write_text_file(dir / ("study_" + name + ".csv"), study_csv(study));
    return study.within_window ? kExitOk : kExitVerifyFailed;
}

int run_config_file(const fs::path& config_path, const RunOptions& opts) {
    RunConfig cfg;
    try {
        cfg = load_config(config_path);
    } catch (const ConfigError& e) {
        log_of(opts) << "config error: " << e.what() << "\n";
        return kExitConfigError;
    }

    if (cfg.problem == "fixture") return run_fixture(cfg.fixture_name, opts);

    const fs::path dir = resolve_output_dir(cfg, opts);
    std::error_code ec;
    fs::create_directories(dir, ec);

    try {
        Grid grid = build_grid_from_config(cfg);
        BoundarySpec boundary = build_boundary_from_config(cfg, grid);
        DiscreteOperator op = cfg.problem == "gnep"
                                  ? DiscreteOperator() // gnep assembles its own all-Dirichlet operator
                                  : assemble(grid, build_coefficients_from_config(cfg), boundary);

        RunContext ctx(cfg, dir);
        if (opts.dump_mesh) write_text_file(dir / "mesh.json", mesh_to_json(grid, &boundary) + "\n");
        if (opts.dump_matrix && cfg.problem != "gnep")
            write_text_file(dir / "matrix.mtx", matrix_to_matrix_market(op));

        if (cfg.problem == "gnep") return run_gnep(ctx, grid);

        Field f = build_load_from_config(cfg, grid);
        if (cfg.problem == "poisson") return run_poisson(ctx, grid, op, f);
        if (cfg.problem == "obstacle" || cfg.problem == "signorini")
            return run_obstacle_like(ctx, grid, op, f);
        if (cfg.problem == "tresca" || cfg.problem == "vi3")
            return run_friction_like(ctx, grid, op, f);
        throw ConfigError("unhandled problem '" + cfg.problem + "'");
    } catch (const ConfigError& e) {
        log_of(opts) << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::invalid_argument& e) {
        log_of(opts) << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        log_of(opts) << "error: " << e.what() << "\n";
        return kExitNotConverged;
    }
}

} // namespace vilab
