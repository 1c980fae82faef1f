#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "vilab/assembly.hpp"
#include "vilab/grid.hpp"

namespace vilab {

/// Config file problem: schema violations carry the offending key.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct MeshConfig {
    DomainKind domain = DomainKind::rectangle;
    std::vector<Extent> extents;
    std::vector<int> n;
};

struct SegmentConfig {
    std::string name;
    std::string where;           // all | west | east | south | north | ends
    std::optional<double> x1_min, x1_max, x2_min, x2_max; // min exclusive, max inclusive
    std::string type;            // dirichlet | neumann | signorini
    double value = 0.0;          // dirichlet value or neumann flux
    std::string value_fn;        // builtin name, overrides value when set
    double gap = 0.0;
    std::string sense = "upper"; // signorini only
};

struct GnepPlayerConfig {
    double gamma = 1.0;
    double beta = 1.0;
    double target = 0.0;
    std::string target_fn;
    std::string obs_mask = "all"; // all | left_half | right_half
    double control_lo = -1.0;
    double control_hi = 1.0;
};

struct RunConfig {
    std::string problem; // poisson | obstacle | signorini | tresca | vi3 | gnep | fixture
    MeshConfig mesh;
    double coeff_a = 1.0;
    double coeff_a_zero = 0.0;
    std::vector<SegmentConfig> segments; // empty: all-Dirichlet zero
    double load = 0.0;
    std::string load_fn;

    // obstacle / signorini
    std::optional<double> obstacle_lower;
    std::optional<double> obstacle_upper;
    std::string obstacle_segment;

    // friction
    double friction_g = 1.0;
    std::string friction_nodes = "all"; // all | segment:<name>
    std::string cone = "none";          // none | nonnegative | nonpositive

    // gnep
    std::vector<GnepPlayerConfig> players;
    double state_lo = -1e9, state_hi = 1e9;

    // fixture
    std::string fixture_name;

    // solver
    std::string method = "pdas"; // pdas | psor | semismooth | uzawa
    double tol = 1e-8;
    int max_iter = 0;
    double omega = 1.5;
    std::uint64_t seed = 12345;
    int samples = 500;
    double gnep_tol = 1e-6;
    int gnep_max_sweeps = 200;

    // output
    std::string output_directory = "out";
    std::vector<std::string> formats = {"csv", "json"};

    nlohmann::ordered_json effective; // defaults expanded, echoed in reports
};

/// Strict parse: unknown keys are rejected with the offending key named.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);

/// Named scalar fields available in config files.
double builtin_function(const std::string& name, std::span<const double> x);
bool is_builtin_function(const std::string& name);

/// Grid/boundary/coefficients from the mesh, boundary and coefficient
/// sections.
Grid build_grid_from_config(const RunConfig& cfg);
BoundarySpec build_boundary_from_config(const RunConfig& cfg, const Grid& grid);
CoefficientField build_coefficients_from_config(const RunConfig& cfg);
Field build_load_from_config(const RunConfig& cfg, const Grid& grid);

} // namespace vilab
