#pragma once

#include <string>
#include <vector>

#include "vilab/assembly.hpp"
#include "vilab/report.hpp"

namespace vilab {

enum class ConeSign : char { free_sign = 0, nonnegative = 1, nonpositive = -1 };

/// Data of the nonsmooth term g|u| over a node set (Tresca bound g > 0,
/// nodal quadrature weights) plus an optional sign-constraint cone for the
/// cone-constrained VI. The cone and friction node sets may overlap
/// arbitrarily.
struct FrictionSpec {
    std::vector<int> friction_nodes;   // grid node ids, ascending
    std::vector<double> g;             // per friction node, > 0
    std::vector<double> weight;        // quadrature weight per friction node
    std::vector<int> cone_nodes;       // ids with a sign constraint
    std::vector<ConeSign> cone;        // per cone node
    std::vector<double> cone_weight;   // pairing weight per cone node

    /// Friction on every free node with trapezoidal (dual-cell) weights.
    static FrictionSpec on_all_free(const DiscreteOperator& op, double g);
    static FrictionSpec on_all_free(const DiscreteOperator& op, const Field& g);
    /// Friction on one boundary segment with boundary-share weights.
    static FrictionSpec on_segment(const DiscreteOperator& op, const std::string& segment, double g);
    /// Explicit node list; unit weights unless given.
    static FrictionSpec on_nodes(std::vector<int> nodes, std::vector<double> g,
                                 std::vector<double> weight = {});

    FrictionSpec& with_cone(std::vector<int> nodes, std::vector<ConeSign> signs,
                            std::vector<double> weight = {});
    FrictionSpec& with_cone_everywhere(const DiscreteOperator& op, ConeSign sign);

    bool has_cone() const { return !cone_nodes.empty(); }
    void validate() const;
};

struct FrictionResiduals {
    double stationarity = 0.0;  // ||Au + B'(w p) + B'(w lambda) - f||_inf
    double box = 0.0;           // max (|p_i| - g_i)_+
    double alignment = 0.0;     // max |p_i u_i - g_i |u_i||
    double cone_comp = 0.0;     // |<lambda, u>|
    double cone_primal = 0.0;   // cone violation of u
    double cone_dual = 0.0;     // sign violation of lambda

    double max() const;
    bool pass(double tol) const { return max() <= tol; }
};

/// Solution of the friction VI: primal field, friction multiplier p with
/// |p| <= g and p u = g|u|, and (for the cone-constrained problem) the cone
/// multiplier lambda with <lambda, u> = 0. When u vanishes on nodes carrying
/// both conditions the (p, lambda) split is not unique; only the residual
/// identities are meaningful there.
struct FrictionSolution {
    Field u;
    std::vector<double> p;        // per friction node
    std::vector<double> lambda;   // per cone node
    FrictionResiduals residuals;
    bool converged = false;
    int iterations = 0;
    std::vector<char> state;      // per friction node: 0 stick, +1 slip+, -1 slip-
};

enum class FrictionMethod { semismooth, uzawa };

struct FrictionOptions {
    double tol = 1e-8;
    int max_iter = 0;             // 0: solver default
    double c = 0.0;               // projection scaling; 0: max diagonal of A
    FrictionMethod method = FrictionMethod::semismooth;
};

/// VI of the second kind: Au + B'(w p) = f with p in the box [-g, g] aligned
/// with u. Semismooth Newton on the projection reformulation
/// p = proj_[-g,g](p + c u); Uzawa fallback when the active sets cycle.
FrictionSolution solve_vi2(const DiscreteOperator& op, const Field& f, const FrictionSpec& fspec,
                           const FrictionOptions& opt = {});

/// Cone-constrained VI (homogeneous cone): returns the decomposition
/// f - Au = B'(w p) + B'(w lambda) with p in the box and lambda in the polar
/// cone, <lambda, u> = 0.
FrictionSolution solve_vi3(const DiscreteOperator& op, const Field& f, const FrictionSpec& fspec,
                           const FrictionOptions& opt = {});

/// Independent recomputation of every residual of a candidate solution.
FrictionResiduals verify_mp2_mp3(const DiscreteOperator& op, const Field& f,
                                 const FrictionSpec& fspec, const FrictionSolution& sol);

/// Nonsmooth objective 1/2<Au,u> - <f,u> + sum w g |u|.
double friction_energy(const Field& u, const Field& f, const DiscreteOperator& op,
                       const FrictionSpec& fspec);

} // namespace vilab
