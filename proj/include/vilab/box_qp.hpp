#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace vilab {

/// minimize 1/2 x'Hx + q'x  subject to  lo <= x <= hi  and  rlo <= Mx <= rhi.
/// H must be SPD. Entries of the bound vectors may be +-infinity.
struct BoxQpProblem {
    Eigen::MatrixXd H;
    Eigen::VectorXd q;
    Eigen::VectorXd lo, hi;     // box; sized like q (use +-inf for "none")
    Eigen::MatrixXd M;          // general rows (may be 0 x n)
    Eigen::VectorXd rlo, rhi;
};

struct BoxQpOptions {
    double tol = 1e-10;          // KKT residual target
    double feas_tol = 1e-9;
    int max_iter = 0;            // 0: derived from problem size
    std::optional<Eigen::VectorXd> x0; // feasible start (skips phase 1)
};

struct BoxQpResult {
    Eigen::VectorXd x;
    Eigen::VectorXd mu_box;     // signed: >=0 at active upper bound, <=0 at lower
    Eigen::VectorXd mu_rows;    // signed, same convention per general row
    bool converged = false;
    bool infeasible = false;
    int iterations = 0;
    double stationarity = 0.0;  // ||Hx + q + mu_box + M' mu_rows||_inf
    double feasibility = 0.0;
    double complementarity = 0.0;
};

/// Primal active-set method (equality-constrained KKT subproblems). The
/// initial point is projected onto the feasible set by cyclic slab
/// projections when no feasible x0 is supplied; an empty projection limit
/// signals an infeasible region.
BoxQpResult solve_box_qp(const BoxQpProblem& problem, const BoxQpOptions& options = {});

} // namespace vilab
