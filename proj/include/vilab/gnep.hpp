#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vilab/assembly.hpp"
#include "vilab/report.hpp"

namespace vilab {

/// One player of the multiobjective control game: tracking weight pair
/// (gamma, beta), target, 0/1 observation mask (the discrete restriction
/// operator; hook for general linear observations), and the control box.
struct GnepPlayer {
    double gamma = 1.0;
    double beta = 1.0;
    Field target;
    std::vector<std::uint8_t> obs_mask; // per grid node
    double control_lo = -1.0;
    double control_hi = 1.0;
};

/// Discrete instance of the N-player control game over one shared elliptic
/// operator with homogeneous Dirichlet data. Working variables are the
/// per-player fields w^nu with A w^nu = beta_nu u^nu; the shared state is
/// y = y0 + sum_nu w^nu where A y0 = f. Construction solves one feasibility
/// QP and rejects instances whose control boxes cannot keep the state inside
/// the state box.
struct GnepInstance {
    DiscreteOperator op;
    std::vector<GnepPlayer> players;
    Field f;
    Field state_lo, state_hi;

    // derived at construction
    Eigen::VectorXd y0;                  // free nodes
    Eigen::VectorXd quad_weight;         // discrete L2 weights per free node
    Eigen::MatrixXd regularizer;         // dense A' diag(w) A (shared across players)
    Eigen::VectorXd feasible_w;          // stacked feasible point from the certificate QP
    bool zero_feasible = false;

    int num_players() const { return static_cast<int>(players.size()); }
    int num_free() const { return op.num_free(); }
};

GnepInstance make_gnep_instance(const Grid& grid, const CoefficientField& coeffs,
                                std::vector<GnepPlayer> players, const Field& f,
                                const Field& state_lo, const Field& state_hi);

/// Equilibrium candidate in the multistate variables: per-player w, the
/// reconstructed state y and controls u, and the merit value at return.
struct GnepState {
    std::vector<Eigen::VectorXd> w;
    Eigen::VectorXd y;
    std::vector<Eigen::VectorXd> u;
    double merit = 0.0;
};

/// Player nu's cost at the stacked point w (multistate form).
double theta(const GnepInstance& inst, int nu, const std::vector<Eigen::VectorXd>& w);

/// Nikaido-Isoda aggregate: sum over players of the improvement from
/// switching the own block from x to y while the others stay at x.
double nikaido_isoda(const GnepInstance& inst, const std::vector<Eigen::VectorXd>& x,
                     const std::vector<Eigen::VectorXd>& y);

struct BestResponse {
    Eigen::VectorXd w;
    bool feasible = true;
    double kkt_residual = 0.0;
};

/// Minimizer of theta_nu over player nu's slice of the common feasible set,
/// the opponents fixed at w. Strictly convex box/row QP.
BestResponse best_response(const GnepInstance& inst, int nu, const std::vector<Eigen::VectorXd>& w,
                           const std::optional<Eigen::VectorXd>& warm_start = {});

struct GnepOptions {
    double tol = 1e-6;     // merit target
    int max_iter = 200;    // relaxation sweeps
    double tau0 = 1.0;
    double shrink = 0.5;
    double slope = 1e-4;   // Armijo slope on the merit
    double tau_floor = 1e-8;
};

/// Best-response relaxation with an Armijo line search on the merit
/// V(w) = Psi(w, BR(w)). Starts from w = 0 when feasible, otherwise from the
/// certificate point.
std::pair<GnepState, ConvergenceReport> solve_gnep_relaxation(const GnepInstance& inst,
                                                              const GnepOptions& opt = {});

struct NormalizedReport {
    double max_sampled_psi = 0.0;  // max Psi(x, y) over sampled feasible y
    double joint_br_psi = 0.0;     // Psi(x, BR(x))
    double worst_player_gap = 0.0; // max_nu theta_nu(x) - theta_nu(BR_nu, x^{-nu})
    int samples = 0;
    bool pass(double tol) const {
        return max_sampled_psi <= tol && joint_br_psi <= tol && worst_player_gap <= tol;
    }
};

/// Checks the normalized-equilibrium inequality against seeded feasible
/// samples, the joint best response, and the per-player Nash gaps.
NormalizedReport verify_normalized(const GnepInstance& inst, const GnepState& state,
                                   int n_samples, std::uint64_t seed);

/// Same game solved in the control variables (every best response applies
/// the dense inverse of the operator); cross-check oracle for the multistate
/// path, intended for small grids.
std::pair<GnepState, ConvergenceReport> solve_formulation_ii(const GnepInstance& inst,
                                                             const GnepOptions& opt = {});

/// From w: controls via A w = beta u, a fresh PDE solve with those controls,
/// and the state mismatch between the two routes.
struct Reconstruction {
    std::vector<Eigen::VectorXd> u;
    Eigen::VectorXd y_direct;   // y0 + sum w
    Eigen::VectorXd y_resolved; // solve of A y = sum beta u + f
    double mismatch = 0.0;
};
Reconstruction reconstruct_state(const GnepInstance& inst, const GnepState& state);

} // namespace vilab
