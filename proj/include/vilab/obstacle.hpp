#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "vilab/assembly.hpp"
#include "vilab/report.hpp"

namespace vilab {

/// Pointwise constraint set for the VI of the first kind. Domain obstacles
/// bound the solution on every free node; boundary obstacles bound it on one
/// Signorini segment. Bounds are stored per constrained node as a (lower,
/// upper) pair with +-infinity for an absent side; g_preimage is a grid
/// function whose restriction to the constrained set reproduces the bound.
struct ObstacleSpec {
    enum class Kind { domain_obstacle, boundary_obstacle };

    Kind kind = Kind::domain_obstacle;
    std::vector<int> constrained_nodes; // grid node ids, ascending
    std::vector<double> lower, upper;   // per constrained node
    Field g_preimage;
    std::string segment; // boundary obstacles only

    /// u >= psi on all free nodes.
    static ObstacleSpec domain_lower(const DiscreteOperator& op, const Field& psi);
    /// psi <= u <= phi on all free nodes.
    static ObstacleSpec domain_box(const DiscreteOperator& op, const Field& psi, const Field& phi);
    /// Gap constraint on one Signorini segment; gap values and the sense
    /// (u <= g or u >= g) come from the boundary labeling.
    static ObstacleSpec boundary_obstacle(const DiscreteOperator& op, const std::string& segment);

    bool has_lower(std::size_t c) const { return lower[c] > -std::numeric_limits<double>::infinity(); }
    bool has_upper(std::size_t c) const { return upper[c] < std::numeric_limits<double>::infinity(); }
};

struct Cp1Residuals {
    double stationarity = 0.0;
    double feasibility = 0.0;
    double dual_feasibility = 0.0;
    double complementarity = 0.0;

    double max() const;
    bool pass(double tol) const { return max() <= tol; }
};

/// Primal solution plus the multiplier of the mixed/complementarity system.
/// lambda is (Au - f) restricted to the constrained nodes, stored so that a
/// correctly active multiplier is nonnegative: on upper-only (gap) nodes the
/// sign is flipped, i.e. lambda is the contact pressure. Box-constrained
/// nodes keep the raw value and split by sign (positive at the lower bound,
/// negative at the upper).
struct MixedSolution {
    Field u;
    std::vector<double> lambda;
    std::vector<int> constrained_nodes;
    std::vector<int> active_set;                 // node ids
    std::vector<std::vector<int>> active_history; // PDAS only
    Cp1Residuals residuals;
    bool converged = false;
    int iterations = 0;
};

struct ObstacleOptions {
    double tol = 1e-8;
    int max_iter = 0;     // 0: solver default (100*N for PSOR, 10*N for PDAS)
    double omega = 1.5;   // PSOR relaxation, in (0,2)
    double c = 0.0;       // PDAS active-set scaling; 0: max diagonal of A
};

/// Projected SOR sweep with componentwise clamping onto the obstacle.
MixedSolution solve_obstacle_psor(const DiscreteOperator& op, const Field& f,
                                  const ObstacleSpec& spec, const ObstacleOptions& opt = {});

/// Primal-dual active set iteration; terminates when the active sets repeat.
MixedSolution solve_obstacle_pdas(const DiscreteOperator& op, const Field& f,
                                  const ObstacleSpec& spec, const ObstacleOptions& opt = {});

enum class ObstacleMethod { psor, pdas };

/// Boundary-obstacle (Signorini) solve on the named segment.
MixedSolution solve_signorini(const DiscreteOperator& op, const Field& f,
                              const ObstacleSpec& spec, ObstacleMethod method,
                              const ObstacleOptions& opt = {});

/// Recomputes the four complementarity-system residuals of a candidate
/// solution from scratch; independent of any solver internals.
Cp1Residuals verify_cp1(const DiscreteOperator& op, const Field& f, const ObstacleSpec& spec,
                        const MixedSolution& sol);

} // namespace vilab
