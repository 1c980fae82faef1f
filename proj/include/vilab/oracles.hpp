#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

#include "vilab/assembly.hpp"

namespace vilab {

struct FrictionSpec; // friction.hpp
struct GnepInstance; // gnep.hpp

/// Brute-force oracles. They share no solve path with the production solvers
/// beyond dense linear algebra, and are deterministic given their inputs.

struct OracleQpSolution {
    Eigen::VectorXd x;
    Eigen::VectorXd mu_box;  // signed: >=0 at hi, <=0 at lo
    Eigen::VectorXd mu_rows;
};

/// Enumerates every activity pattern of the box/row constraints (inactive,
/// at lower, at upper), solves the equality-constrained KKT system of each,
/// and keeps the primal-dual feasible ones. Intended for <= ~12 constrained
/// indices. Distinct solutions are deduplicated by the primal point; for a
/// strictly convex objective at most one primal survives.
std::vector<OracleQpSolution> oracle_active_set_qp(const Eigen::MatrixXd& H,
                                                   const Eigen::VectorXd& q,
                                                   const Eigen::VectorXd& lo,
                                                   const Eigen::VectorXd& hi,
                                                   const Eigen::MatrixXd& M,
                                                   const Eigen::VectorXd& rlo,
                                                   const Eigen::VectorXd& rhi,
                                                   double tol = 1e-9);

struct OracleFrictionSolution {
    Eigen::VectorXd u;       // free vector
    Eigen::VectorXd p;       // per friction node
    Eigen::VectorXd lambda;  // per cone node (zero when no cone)
};

/// Enumerates stick/slip(+/-) and cone-active patterns over the friction and
/// cone nodes (<= ~8), solves each reduced dense system, and returns the
/// consistent solutions (deduplicated by u).
std::vector<OracleFrictionSolution> oracle_stick_slip(const DiscreteOperator& op,
                                                      const Field& f,
                                                      const FrictionSpec& fspec,
                                                      double tol = 1e-9);

struct OracleGnepSolution {
    std::vector<double> w;   // one scalar per player (1-node grid)
    double state_multiplier = 0.0;
};

/// Closed-form normalized-equilibrium enumeration on a 1-interior-node grid,
/// N <= 3: simultaneous stationarity with a shared state-box multiplier over
/// all activity patterns of the control and state bounds.
std::vector<OracleGnepSolution> oracle_gnep_fixed_point(const GnepInstance& instance,
                                                        double tol = 1e-9);

} // namespace vilab
