#include "vilab/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace vilab {

namespace {

using nlohmann::json;
using ordered = nlohmann::ordered_json;

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError("unknown key '" + where + it.key() + "'");
}

double need_number(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key)) throw ConfigError("missing key '" + where + key + "'");
    if (!obj[key].is_number()) throw ConfigError("key '" + where + key + "' must be a number");
    return obj[key].get<double>();
}

double opt_number(const json& obj, const std::string& key, double def, const std::string& where) {
    if (!obj.contains(key)) return def;
    if (!obj[key].is_number()) throw ConfigError("key '" + where + key + "' must be a number");
    return obj[key].get<double>();
}

std::string opt_string(const json& obj, const std::string& key, const std::string& def,
                       const std::string& where) {
    if (!obj.contains(key)) return def;
    if (!obj[key].is_string()) throw ConfigError("key '" + where + key + "' must be a string");
    return obj[key].get<std::string>();
}

// number -> constant; string -> builtin name
void parse_value_or_fn(const json& obj, const std::string& key, double& value, std::string& fn,
                       const std::string& where) {
    if (!obj.contains(key)) return;
    if (obj[key].is_number()) {
        value = obj[key].get<double>();
        fn.clear();
    } else if (obj[key].is_string()) {
        fn = obj[key].get<std::string>();
        if (!is_builtin_function(fn))
            throw ConfigError("key '" + where + key + "': unknown builtin '" + fn + "'");
    } else {
        throw ConfigError("key '" + where + key + "' must be a number or builtin name");
    }
}

} // namespace

double builtin_function(const std::string& name, std::span<const double> x) {
    constexpr double pi = std::numbers::pi;
    if (name == "zero") return 0.0;
    if (name == "one") return 1.0;
    if (name == "sin_pi")
        return x.size() == 1 ? std::sin(pi * x[0]) : std::sin(pi * x[0]) * std::sin(pi * x[1]);
    if (name == "sin_pi_load")
        return x.size() == 1 ? pi * pi * std::sin(pi * x[0])
                             : 2.0 * pi * pi * std::sin(pi * x[0]) * std::sin(pi * x[1]);
    if (name == "lshape_exact") {
        const double rho = std::hypot(x[0], x[1]);
        if (rho == 0.0) return 0.0;
        double t = std::atan2(x[1], x[0]);
        if (t < 0.0) t += 2.0 * pi;
        return std::pow(rho, 2.0 / 3.0) * std::sin(2.0 / 3.0 * t);
    }
    if (name == "kinderlehrer_exact") {
        const double rho = std::hypot(x[0], x[1]);
        if (rho == 0.0) return 0.0;
        double t = std::atan2(x[1], x[0]);
        if (t < 0.0) t = 0.0;
        return -std::sqrt(rho) * std::cos(0.5 * t);
    }
    throw ConfigError("unknown builtin function '" + name + "'");
}

bool is_builtin_function(const std::string& name) {
    static const std::set<std::string> names = {"zero",         "one",
                                                "sin_pi",       "sin_pi_load",
                                                "lshape_exact", "kinderlehrer_exact"};
    return names.count(name) > 0;
}

RunConfig parse_config(const json& j) {
    if (!j.is_object()) throw ConfigError("config root must be an object");
    reject_unknown_keys(j,
                        {"problem", "mesh", "coefficients", "boundary", "load", "obstacle",
                         "friction", "gnep", "fixture", "solver", "output"},
                        "");

    RunConfig cfg;
    cfg.problem = opt_string(j, "problem", "", "");
    static const std::set<std::string> problems = {"poisson", "obstacle", "signorini", "tresca",
                                                   "vi3",     "gnep",     "fixture"};
    if (!problems.count(cfg.problem))
        throw ConfigError("key 'problem' must be one of poisson/obstacle/signorini/tresca/vi3/gnep/fixture");

    // mesh
    if (cfg.problem != "fixture") {
        if (!j.contains("mesh")) throw ConfigError("missing key 'mesh'");
        const json& m = j["mesh"];
        reject_unknown_keys(m, {"domain", "extents", "n"}, "mesh.");
        const std::string dom = opt_string(m, "domain", "rectangle", "mesh.");
        if (dom == "interval")
            cfg.mesh.domain = DomainKind::interval;
        else if (dom == "rectangle")
            cfg.mesh.domain = DomainKind::rectangle;
        else if (dom == "l_shape")
            cfg.mesh.domain = DomainKind::l_shape;
        else
            throw ConfigError("key 'mesh.domain' must be interval/rectangle/l_shape");

        const int dim = cfg.mesh.domain == DomainKind::interval ? 1 : 2;
        if (!m.contains("n") || !m["n"].is_array() || static_cast<int>(m["n"].size()) != dim)
            throw ConfigError("key 'mesh.n' must be an array of " + std::to_string(dim) + " ints");
        for (const auto& v : m["n"]) cfg.mesh.n.push_back(v.get<int>());
        if (m.contains("extents")) {
            if (!m["extents"].is_array() || static_cast<int>(m["extents"].size()) != dim)
                throw ConfigError("key 'mesh.extents' must be an array of " + std::to_string(dim) +
                                  " [min,max] pairs");
            for (const auto& e : m["extents"]) {
                if (!e.is_array() || e.size() != 2)
                    throw ConfigError("key 'mesh.extents' entries must be [min,max] pairs");
                cfg.mesh.extents.push_back({e[0].get<double>(), e[1].get<double>()});
            }
        } else {
            for (int k = 0; k < dim; ++k)
                cfg.mesh.extents.push_back(cfg.mesh.domain == DomainKind::l_shape ? Extent{-1.0, 1.0}
                                                                                  : Extent{0.0, 1.0});
        }
    }

    // coefficients
    if (j.contains("coefficients")) {
        const json& c = j["coefficients"];
        reject_unknown_keys(c, {"a", "a_zero"}, "coefficients.");
        cfg.coeff_a = opt_number(c, "a", 1.0, "coefficients.");
        cfg.coeff_a_zero = opt_number(c, "a_zero", 0.0, "coefficients.");
    }

    // boundary
    if (j.contains("boundary")) {
        const json& b = j["boundary"];
        reject_unknown_keys(b, {"segments"}, "boundary.");
        if (!b.contains("segments") || !b["segments"].is_array())
            throw ConfigError("key 'boundary.segments' must be an array");
        int idx = 0;
        for (const auto& sj : b["segments"]) {
            const std::string where_prefix = "boundary.segments[" + std::to_string(idx) + "].";
            reject_unknown_keys(sj,
                                {"name", "where", "type", "value", "flux", "gap", "sense", "x1_min",
                                 "x1_max", "x2_min", "x2_max"},
                                where_prefix);
            SegmentConfig sc;
            sc.name = opt_string(sj, "name", "segment" + std::to_string(idx), where_prefix);
            sc.where = opt_string(sj, "where", "all", where_prefix);
            static const std::set<std::string> wheres = {"all", "west", "east", "south", "north", "ends"};
            if (!wheres.count(sc.where))
                throw ConfigError("key '" + where_prefix + "where' must be all/west/east/south/north/ends");
            sc.type = opt_string(sj, "type", "dirichlet", where_prefix);
            if (sc.type != "dirichlet" && sc.type != "neumann" && sc.type != "signorini")
                throw ConfigError("key '" + where_prefix + "type' must be dirichlet/neumann/signorini");
            if (sj.contains("x1_min")) sc.x1_min = need_number(sj, "x1_min", where_prefix);
            if (sj.contains("x1_max")) sc.x1_max = need_number(sj, "x1_max", where_prefix);
            if (sj.contains("x2_min")) sc.x2_min = need_number(sj, "x2_min", where_prefix);
            if (sj.contains("x2_max")) sc.x2_max = need_number(sj, "x2_max", where_prefix);
            parse_value_or_fn(sj, "value", sc.value, sc.value_fn, where_prefix);
            if (sj.contains("flux")) {
                sc.value = need_number(sj, "flux", where_prefix);
                sc.value_fn.clear();
            }
            sc.gap = opt_number(sj, "gap", 0.0, where_prefix);
            sc.sense = opt_string(sj, "sense", "upper", where_prefix);
            if (sc.sense != "upper" && sc.sense != "lower")
                throw ConfigError("key '" + where_prefix + "sense' must be upper/lower");
            cfg.segments.push_back(std::move(sc));
            ++idx;
        }
    }

    // load
    if (j.contains("load")) {
        const json& l = j["load"];
        reject_unknown_keys(l, {"f"}, "load.");
        parse_value_or_fn(l, "f", cfg.load, cfg.load_fn, "load.");
    }

    // obstacle
    if (j.contains("obstacle")) {
        const json& o = j["obstacle"];
        reject_unknown_keys(o, {"lower", "upper", "segment"}, "obstacle.");
        if (o.contains("lower")) cfg.obstacle_lower = need_number(o, "lower", "obstacle.");
        if (o.contains("upper")) cfg.obstacle_upper = need_number(o, "upper", "obstacle.");
        cfg.obstacle_segment = opt_string(o, "segment", "", "obstacle.");
    }

    // friction
    if (j.contains("friction")) {
        const json& fr = j["friction"];
        reject_unknown_keys(fr, {"g", "nodes", "cone"}, "friction.");
        cfg.friction_g = opt_number(fr, "g", 1.0, "friction.");
        cfg.friction_nodes = opt_string(fr, "nodes", "all", "friction.");
        cfg.cone = opt_string(fr, "cone", "none", "friction.");
        if (cfg.cone != "none" && cfg.cone != "nonnegative" && cfg.cone != "nonpositive")
            throw ConfigError("key 'friction.cone' must be none/nonnegative/nonpositive");
    }

    // gnep
    if (j.contains("gnep")) {
        const json& g = j["gnep"];
        reject_unknown_keys(g, {"players", "state_box"}, "gnep.");
        if (!g.contains("players") || !g["players"].is_array() || g["players"].empty())
            throw ConfigError("key 'gnep.players' must be a non-empty array");
        int idx = 0;
        for (const auto& pj : g["players"]) {
            const std::string wp = "gnep.players[" + std::to_string(idx) + "].";
            reject_unknown_keys(pj, {"gamma", "beta", "target", "obs_mask", "control_box"}, wp);
            GnepPlayerConfig pc;
            pc.gamma = opt_number(pj, "gamma", 1.0, wp);
            pc.beta = opt_number(pj, "beta", 1.0, wp);
            parse_value_or_fn(pj, "target", pc.target, pc.target_fn, wp);
            pc.obs_mask = opt_string(pj, "obs_mask", "all", wp);
            if (pc.obs_mask != "all" && pc.obs_mask != "left_half" && pc.obs_mask != "right_half")
                throw ConfigError("key '" + wp + "obs_mask' must be all/left_half/right_half");
            if (pj.contains("control_box")) {
                const auto& cb = pj["control_box"];
                if (!cb.is_array() || cb.size() != 2)
                    throw ConfigError("key '" + wp + "control_box' must be [lo,hi]");
                pc.control_lo = cb[0].get<double>();
                pc.control_hi = cb[1].get<double>();
            }
            cfg.players.push_back(pc);
            ++idx;
        }
        if (g.contains("state_box")) {
            const auto& sb = g["state_box"];
            if (!sb.is_array() || sb.size() != 2)
                throw ConfigError("key 'gnep.state_box' must be [lo,hi]");
            cfg.state_lo = sb[0].get<double>();
            cfg.state_hi = sb[1].get<double>();
        }
    }

    // fixture
    if (j.contains("fixture")) {
        const json& fx = j["fixture"];
        reject_unknown_keys(fx, {"name"}, "fixture.");
        cfg.fixture_name = opt_string(fx, "name", "", "fixture.");
    }
    if (cfg.problem == "fixture" && cfg.fixture_name.empty())
        throw ConfigError("missing key 'fixture.name'");

    // solver
    if (j.contains("solver")) {
        const json& s = j["solver"];
        reject_unknown_keys(
            s, {"method", "tol", "max_iter", "omega", "seed", "samples", "gnep_tol", "gnep_max_sweeps"},
            "solver.");
        cfg.method = opt_string(s, "method", "pdas", "solver.");
        static const std::set<std::string> methods = {"pdas", "psor", "semismooth", "uzawa"};
        if (!methods.count(cfg.method))
            throw ConfigError("key 'solver.method' must be pdas/psor/semismooth/uzawa");
        cfg.tol = opt_number(s, "tol", 1e-8, "solver.");
        cfg.max_iter = static_cast<int>(opt_number(s, "max_iter", 0, "solver."));
        cfg.omega = opt_number(s, "omega", 1.5, "solver.");
        cfg.seed = static_cast<std::uint64_t>(opt_number(s, "seed", 12345, "solver."));
        cfg.samples = static_cast<int>(opt_number(s, "samples", 500, "solver."));
        cfg.gnep_tol = opt_number(s, "gnep_tol", 1e-6, "solver.");
        cfg.gnep_max_sweeps = static_cast<int>(opt_number(s, "gnep_max_sweeps", 200, "solver."));
    }

    // output
    if (j.contains("output")) {
        const json& o = j["output"];
        reject_unknown_keys(o, {"directory", "formats"}, "output.");
        cfg.output_directory = opt_string(o, "directory", "out", "output.");
        if (o.contains("formats")) {
            cfg.formats.clear();
            for (const auto& f : o["formats"]) {
                const std::string fs = f.get<std::string>();
                if (fs != "csv" && fs != "json")
                    throw ConfigError("key 'output.formats' entries must be csv/json");
                cfg.formats.push_back(fs);
            }
        }
    }

    // effective config echo (defaults expanded)
    ordered eff;
    eff["problem"] = cfg.problem;
    if (cfg.problem != "fixture") {
        eff["mesh"]["domain"] = cfg.mesh.domain == DomainKind::interval    ? "interval"
                                : cfg.mesh.domain == DomainKind::rectangle ? "rectangle"
                                                                           : "l_shape";
        eff["mesh"]["extents"] = ordered::array();
        for (const auto& e : cfg.mesh.extents) eff["mesh"]["extents"].push_back({e.min, e.max});
        eff["mesh"]["n"] = cfg.mesh.n;
    }
    eff["coefficients"] = {{"a", cfg.coeff_a}, {"a_zero", cfg.coeff_a_zero}};
    eff["boundary"]["segments"] = ordered::array();
    for (const auto& sc : cfg.segments) {
        ordered sj;
        sj["name"] = sc.name;
        sj["where"] = sc.where;
        sj["type"] = sc.type;
        if (sc.x1_min) sj["x1_min"] = *sc.x1_min;
        if (sc.x1_max) sj["x1_max"] = *sc.x1_max;
        if (sc.x2_min) sj["x2_min"] = *sc.x2_min;
        if (sc.x2_max) sj["x2_max"] = *sc.x2_max;
        if (!sc.value_fn.empty())
            sj["value"] = sc.value_fn;
        else
            sj["value"] = sc.value;
        if (sc.type == "signorini") {
            sj["gap"] = sc.gap;
            sj["sense"] = sc.sense;
        }
        eff["boundary"]["segments"].push_back(sj);
    }
    if (!cfg.load_fn.empty())
        eff["load"]["f"] = cfg.load_fn;
    else
        eff["load"]["f"] = cfg.load;
    if (cfg.obstacle_lower) eff["obstacle"]["lower"] = *cfg.obstacle_lower;
    if (cfg.obstacle_upper) eff["obstacle"]["upper"] = *cfg.obstacle_upper;
    if (!cfg.obstacle_segment.empty()) eff["obstacle"]["segment"] = cfg.obstacle_segment;
    if (cfg.problem == "tresca" || cfg.problem == "vi3") {
        eff["friction"] = {{"g", cfg.friction_g}, {"nodes", cfg.friction_nodes}, {"cone", cfg.cone}};
    }
    if (cfg.problem == "gnep") {
        eff["gnep"]["players"] = ordered::array();
        for (const auto& pc : cfg.players) {
            ordered pj;
            pj["gamma"] = pc.gamma;
            pj["beta"] = pc.beta;
            if (!pc.target_fn.empty())
                pj["target"] = pc.target_fn;
            else
                pj["target"] = pc.target;
            pj["obs_mask"] = pc.obs_mask;
            pj["control_box"] = {pc.control_lo, pc.control_hi};
            eff["gnep"]["players"].push_back(pj);
        }
        eff["gnep"]["state_box"] = {cfg.state_lo, cfg.state_hi};
    }
    if (cfg.problem == "fixture") eff["fixture"]["name"] = cfg.fixture_name;
    eff["solver"] = {{"method", cfg.method},   {"tol", cfg.tol},
                     {"max_iter", cfg.max_iter}, {"omega", cfg.omega},
                     {"seed", cfg.seed},       {"samples", cfg.samples},
                     {"gnep_tol", cfg.gnep_tol}, {"gnep_max_sweeps", cfg.gnep_max_sweeps}};
    eff["output"] = {{"directory", cfg.output_directory}, {"formats", cfg.formats}};
    cfg.effective = std::move(eff);
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(j);
}

Grid build_grid_from_config(const RunConfig& cfg) {
    return Grid::build(cfg.mesh.domain, cfg.mesh.extents, cfg.mesh.n);
}

CoefficientField build_coefficients_from_config(const RunConfig& cfg) {
    return CoefficientField::constant(cfg.coeff_a, cfg.coeff_a_zero);
}

namespace {
std::function<bool(std::span<const double>)> where_predicate(const SegmentConfig& sc, const Grid& grid) {
    const double x0min = grid.extent(0).min, x0max = grid.extent(0).max;
    const double x1min = grid.dim() == 2 ? grid.extent(1).min : 0.0;
    const double x1max = grid.dim() == 2 ? grid.extent(1).max : 0.0;
    const double tol0 = 1e-9 * (x0max - x0min);
    const double tol1 = grid.dim() == 2 ? 1e-9 * (x1max - x1min) : 0.0;
    const std::string w = sc.where;
    auto base = [=](std::span<const double> x) {
        if (w == "all") return true;
        if (w == "ends") return true; // 1d: both endpoints
        if (w == "west") return std::abs(x[0] - x0min) <= tol0;
        if (w == "east") return std::abs(x[0] - x0max) <= tol0;
        if (w == "south") return std::abs(x[1] - x1min) <= tol1;
        if (w == "north") return std::abs(x[1] - x1max) <= tol1;
        return false;
    };
    const auto clamps = sc;
    return [=](std::span<const double> x) {
        if (!base(x)) return false;
        if (clamps.x1_min && !(x[0] > *clamps.x1_min)) return false;
        if (clamps.x1_max && !(x[0] <= *clamps.x1_max)) return false;
        if (x.size() > 1) {
            if (clamps.x2_min && !(x[1] > *clamps.x2_min)) return false;
            if (clamps.x2_max && !(x[1] <= *clamps.x2_max)) return false;
        }
        return true;
    };
}
} // namespace

BoundarySpec build_boundary_from_config(const RunConfig& cfg, const Grid& grid) {
    std::vector<SegmentRule> rules;
    if (cfg.segments.empty()) {
        rules.push_back(SegmentRule::dirichlet("boundary", [](std::span<const double>) { return true; }, 0.0));
    } else {
        for (const auto& sc : cfg.segments) {
            auto where = where_predicate(sc, grid);
            if (sc.type == "dirichlet") {
                if (!sc.value_fn.empty()) {
                    const std::string fn = sc.value_fn;
                    rules.push_back(SegmentRule::dirichlet_fn(sc.name, where, [fn](std::span<const double> x) {
                        return builtin_function(fn, x);
                    }));
                } else {
                    rules.push_back(SegmentRule::dirichlet(sc.name, where, sc.value));
                }
            } else if (sc.type == "neumann") {
                rules.push_back(SegmentRule::neumann(sc.name, where, sc.value));
            } else {
                rules.push_back(SegmentRule::signorini(sc.name, where, sc.gap,
                                                       sc.sense == "lower" ? SignoriniSense::lower
                                                                           : SignoriniSense::upper));
            }
        }
    }
    return label_boundary(grid, rules);
}

Field build_load_from_config(const RunConfig& cfg, const Grid& grid) {
    if (!cfg.load_fn.empty()) {
        const std::string fn = cfg.load_fn;
        return Field::from_function(grid,
                                    [fn](std::span<const double> x) { return builtin_function(fn, x); });
    }
    return Field::constant(grid, cfg.load);
}

} // namespace vilab
