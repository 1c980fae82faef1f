#include "vilab/obstacle.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace vilab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

void check_feasible_bounds(const ObstacleSpec& spec) {
    for (std::size_t c = 0; c < spec.constrained_nodes.size(); ++c)
        if (spec.lower[c] > spec.upper[c])
            throw std::invalid_argument("ObstacleSpec: lower > upper at node " +
                                        std::to_string(spec.constrained_nodes[c]));
}
} // namespace

ObstacleSpec ObstacleSpec::domain_lower(const DiscreteOperator& op, const Field& psi) {
    check_same_size(psi, op.num_nodes(), "domain_lower");
    ObstacleSpec s;
    s.kind = Kind::domain_obstacle;
    s.g_preimage = psi;
    for (int k = 0; k < op.num_free(); ++k) {
        const int v = op.node_of_free(k);
        s.constrained_nodes.push_back(v);
        s.lower.push_back(psi.values[v]);
        s.upper.push_back(kInf);
    }
    if (op.has_grid()) {
        // feasibility: the fixed Dirichlet values must sit above psi
        for (std::size_t v = 0; v < op.num_nodes(); ++v)
            if (op.free_index(static_cast<int>(v)) < 0 &&
                op.dirichlet_value(static_cast<int>(v)) < psi.values[v] - 1e-12)
                throw std::invalid_argument(
                    "ObstacleSpec: Dirichlet data below the obstacle at node " + std::to_string(v));
    }
    return s;
}

ObstacleSpec ObstacleSpec::domain_box(const DiscreteOperator& op, const Field& psi, const Field& phi) {
    check_same_size(psi, op.num_nodes(), "domain_box");
    check_same_size(phi, op.num_nodes(), "domain_box");
    ObstacleSpec s;
    s.kind = Kind::domain_obstacle;
    s.g_preimage = psi;
    for (int k = 0; k < op.num_free(); ++k) {
        const int v = op.node_of_free(k);
        s.constrained_nodes.push_back(v);
        s.lower.push_back(psi.values[v]);
        s.upper.push_back(phi.values[v]);
    }
    check_feasible_bounds(s);
    if (op.has_grid()) {
        for (std::size_t v = 0; v < op.num_nodes(); ++v)
            if (op.free_index(static_cast<int>(v)) < 0) {
                const double d = op.dirichlet_value(static_cast<int>(v));
                if (d < psi.values[v] - 1e-12 || d > phi.values[v] + 1e-12)
                    throw std::invalid_argument(
                        "ObstacleSpec: Dirichlet data outside the box at node " + std::to_string(v));
            }
    }
    return s;
}

ObstacleSpec ObstacleSpec::boundary_obstacle(const DiscreteOperator& op, const std::string& segment) {
    if (!op.has_grid())
        throw std::invalid_argument("boundary_obstacle: operator has no grid");
    const BoundarySpec& b = op.boundary();
    const int sid = b.find_segment(segment);
    if (sid < 0 || b.segments()[sid].kind != ConditionKind::signorini)
        throw std::invalid_argument("boundary_obstacle: no Signorini segment named '" + segment + "'");
    const SignoriniSense sense = b.segments()[sid].sense;

    ObstacleSpec s;
    s.kind = Kind::boundary_obstacle;
    s.segment = segment;
    s.g_preimage = Field(op.num_nodes(), 0.0);
    s.g_preimage.grid_id = op.grid().id();
    for (int k = 0; k < op.num_free(); ++k) {
        const int v = op.node_of_free(k);
        if (b.segment_of_node(v) != sid) continue;
        const double g = b.value_of_node(v);
        s.constrained_nodes.push_back(v);
        s.lower.push_back(sense == SignoriniSense::lower ? g : -kInf);
        s.upper.push_back(sense == SignoriniSense::upper ? g : kInf);
        s.g_preimage.values[v] = g;
    }
    if (s.constrained_nodes.empty())
        throw std::invalid_argument("boundary_obstacle: segment '" + segment + "' has no free nodes");
    return s;
}

double Cp1Residuals::max() const {
    return std::max({stationarity, feasibility, dual_feasibility, complementarity});
}

namespace {

// Internal bound problem on free indices. lambda_signed follows the
// lower-positive orientation: lambda = (A u - rhs) restricted.
struct BoundView {
    std::vector<int> cfree;          // free indices of constrained nodes
    std::vector<double> lo, hi;      // per constrained entry
    std::vector<char> upper_only;    // sign flip for reporting
};

BoundView make_view(const DiscreteOperator& op, const ObstacleSpec& spec) {
    BoundView bv;
    bv.cfree.reserve(spec.constrained_nodes.size());
    for (std::size_t c = 0; c < spec.constrained_nodes.size(); ++c) {
        const int k = op.free_index(spec.constrained_nodes[c]);
        if (k < 0)
            throw std::invalid_argument("ObstacleSpec: constrained node is not a free unknown");
        bv.cfree.push_back(k);
        bv.lo.push_back(spec.lower[c]);
        bv.hi.push_back(spec.upper[c]);
        bv.upper_only.push_back(spec.upper[c] < kInf && spec.lower[c] == -kInf);
    }
    return bv;
}

// Residuals of a candidate (u_free, lambda_signed) in the lower-positive
// orientation; stationarity checks A u - rhs - embedded(lambda).
Cp1Residuals residuals_from(const DiscreteOperator& op, const Eigen::VectorXd& rhs,
                            const BoundView& bv, const Eigen::VectorXd& ufree,
                            const Eigen::VectorXd& lam_signed) {
    Cp1Residuals r;
    Eigen::VectorXd res = op.matrix() * ufree - rhs;
    for (std::size_t c = 0; c < bv.cfree.size(); ++c)
        res[bv.cfree[c]] -= lam_signed[c];
    r.stationarity = res.size() ? res.cwiseAbs().maxCoeff() : 0.0;
    for (std::size_t c = 0; c < bv.cfree.size(); ++c) {
        const double u = ufree[bv.cfree[c]];
        const double lam = lam_signed[c];
        const bool has_lo = bv.lo[c] > -kInf, has_hi = bv.hi[c] < kInf;
        if (has_lo) r.feasibility = std::max(r.feasibility, bv.lo[c] - u);
        if (has_hi) r.feasibility = std::max(r.feasibility, u - bv.hi[c]);
        const double lp = std::max(lam, 0.0);  // pairs with the lower bound
        const double lm = std::max(-lam, 0.0); // pairs with the upper bound
        if (!has_lo) r.dual_feasibility = std::max(r.dual_feasibility, lp);
        if (!has_hi) r.dual_feasibility = std::max(r.dual_feasibility, lm);
        if (has_lo) r.complementarity = std::max(r.complementarity, lp * std::abs(u - bv.lo[c]));
        if (has_hi) r.complementarity = std::max(r.complementarity, lm * std::abs(bv.hi[c] - u));
    }
    return r;
}

MixedSolution package(const DiscreteOperator& op, const Eigen::VectorXd& rhs, const BoundView& bv,
                      const ObstacleSpec& spec, const Eigen::VectorXd& ufree, double tol,
                      bool converged, int iterations) {
    MixedSolution sol;
    Eigen::VectorXd lam(bv.cfree.size());
    Eigen::VectorXd res = op.matrix() * ufree - rhs;
    for (std::size_t c = 0; c < bv.cfree.size(); ++c) lam[c] = res[bv.cfree[c]];
    sol.residuals = residuals_from(op, rhs, bv, ufree, lam);
    sol.u = op.embed(ufree);
    sol.constrained_nodes = spec.constrained_nodes;
    sol.lambda.resize(lam.size());
    const double act_tol = 10.0 * tol;
    for (std::size_t c = 0; c < bv.cfree.size(); ++c) {
        sol.lambda[c] = bv.upper_only[c] ? -lam[c] : lam[c];
        // degenerate complementarity (lambda ~ 0 at the bound) counts as inactive
        if (std::abs(lam[c]) > act_tol)
            sol.active_set.push_back(spec.constrained_nodes[c]);
    }
    sol.converged = converged;
    sol.iterations = iterations;
    return sol;
}

} // namespace

MixedSolution solve_obstacle_psor(const DiscreteOperator& op, const Field& f,
                                  const ObstacleSpec& spec, const ObstacleOptions& opt) {
    if (!(opt.omega > 0.0 && opt.omega < 2.0))
        throw std::invalid_argument("solve_obstacle_psor: omega must lie in (0,2)");
    const BoundView bv = make_view(op, spec);
    const Eigen::VectorXd rhs = op.effective_load(f);
    const int m = op.num_free();
    const int max_iter = opt.max_iter > 0 ? opt.max_iter : 100 * m;

    // row-major copy for Gauss-Seidel sweeps
    Eigen::SparseMatrix<double, Eigen::RowMajor> Ar(op.matrix());
    Eigen::VectorXd diag(m);
    for (int i = 0; i < m; ++i) diag[i] = op.matrix().coeff(i, i);

    std::vector<double> lo(m, -kInf), hi(m, kInf);
    for (std::size_t c = 0; c < bv.cfree.size(); ++c) {
        lo[bv.cfree[c]] = bv.lo[c];
        hi[bv.cfree[c]] = bv.hi[c];
    }

    Eigen::VectorXd u = Eigen::VectorXd::Zero(m);
    for (int i = 0; i < m; ++i) u[i] = std::clamp(u[i], lo[i], hi[i]);

    bool converged = false;
    int it = 0;
    Eigen::VectorXd lam(bv.cfree.size());
    for (; it < max_iter; ++it) {
        for (int i = 0; i < m; ++i) {
            double s = rhs[i];
            for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator a(Ar, i); a; ++a)
                if (a.col() != i) s -= a.value() * u[a.col()];
            const double gs = s / diag[i];
            u[i] = std::clamp((1.0 - opt.omega) * u[i] + opt.omega * gs, lo[i], hi[i]);
        }
        Eigen::VectorXd res = op.matrix() * u - rhs;
        for (std::size_t c = 0; c < bv.cfree.size(); ++c) lam[c] = res[bv.cfree[c]];
        if (residuals_from(op, rhs, bv, u, lam).max() <= opt.tol) {
            converged = true;
            ++it;
            break;
        }
    }
    return package(op, rhs, bv, spec, u, opt.tol, converged, it);
}

MixedSolution solve_obstacle_pdas(const DiscreteOperator& op, const Field& f,
                                  const ObstacleSpec& spec, const ObstacleOptions& opt) {
    const BoundView bv = make_view(op, spec);
    const Eigen::VectorXd rhs = op.effective_load(f);
    const int m = op.num_free();
    const int nc = static_cast<int>(bv.cfree.size());
    const int max_iter = opt.max_iter > 0 ? opt.max_iter : std::max(20, 10 * m);
    const double c_scale = opt.c > 0.0 ? opt.c : op.max_diagonal();

    // state per constrained entry: 0 inactive, 1 at lower, 2 at upper
    std::vector<char> state(nc, 0), prev(nc, 0);
    std::vector<std::vector<int>> history;
    Eigen::VectorXd u = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd lam = Eigen::VectorXd::Zero(nc);

    bool converged = false;
    int it = 0;
    for (; it < max_iter; ++it) {
        // solve with actives pinned to their bound
        std::vector<double> pin(m, std::numeric_limits<double>::quiet_NaN());
        for (int c = 0; c < nc; ++c)
            if (state[c] == 1)
                pin[bv.cfree[c]] = bv.lo[c];
            else if (state[c] == 2)
                pin[bv.cfree[c]] = bv.hi[c];

        std::vector<int> red_of(m, -1), full_of;
        for (int i = 0; i < m; ++i)
            if (std::isnan(pin[i])) {
                red_of[i] = static_cast<int>(full_of.size());
                full_of.push_back(i);
            }
        const int mr = static_cast<int>(full_of.size());
        std::vector<Eigen::Triplet<double>> trips;
        Eigen::VectorXd b(mr);
        for (int r = 0; r < mr; ++r) b[r] = rhs[full_of[r]];
        for (int k = 0; k < op.matrix().outerSize(); ++k)
            for (SpMat::InnerIterator a(op.matrix(), k); a; ++a) {
                const int i = static_cast<int>(a.row()), j = static_cast<int>(a.col());
                if (red_of[i] < 0) continue;
                if (red_of[j] >= 0)
                    trips.emplace_back(red_of[i], red_of[j], a.value());
                else
                    b[red_of[i]] -= a.value() * pin[j];
            }
        SpMat Ar(mr, mr);
        Ar.setFromTriplets(trips.begin(), trips.end());
        Eigen::SimplicialLLT<SpMat> llt(Ar);
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("solve_obstacle_pdas: reduced system not SPD");
        Eigen::VectorXd ur = llt.solve(b);

        for (int i = 0; i < m; ++i) u[i] = std::isnan(pin[i]) ? ur[red_of[i]] : pin[i];
        Eigen::VectorXd res = op.matrix() * u - rhs;
        for (int c = 0; c < nc; ++c)
            lam[c] = (state[c] != 0) ? res[bv.cfree[c]] : 0.0;

        // active-set update: lower if lam + c(lo-u) > 0, upper if lam + c(hi-u) < 0
        prev = state;
        std::vector<int> snapshot;
        for (int c = 0; c < nc; ++c) {
            const double ui = u[bv.cfree[c]];
            char s = 0;
            if (bv.lo[c] > -kInf && lam[c] + c_scale * (bv.lo[c] - ui) > 0.0)
                s = 1;
            else if (bv.hi[c] < kInf && lam[c] + c_scale * (bv.hi[c] - ui) < 0.0)
                s = 2;
            state[c] = s;
            if (s != 0) snapshot.push_back(spec.constrained_nodes[c]);
        }
        history.push_back(std::move(snapshot));
        if (state == prev) {
            converged = true;
            ++it;
            break;
        }
    }

    MixedSolution sol = package(op, rhs, bv, spec, u, opt.tol, converged, it);
    sol.active_history = std::move(history);
    if (sol.converged) sol.converged = sol.residuals.max() <= opt.tol;
    return sol;
}

MixedSolution solve_signorini(const DiscreteOperator& op, const Field& f,
                              const ObstacleSpec& spec, ObstacleMethod method,
                              const ObstacleOptions& opt) {
    if (spec.kind != ObstacleSpec::Kind::boundary_obstacle)
        throw std::invalid_argument("solve_signorini: boundary_obstacle spec required");
    return method == ObstacleMethod::psor ? solve_obstacle_psor(op, f, spec, opt)
                                          : solve_obstacle_pdas(op, f, spec, opt);
}

Cp1Residuals verify_cp1(const DiscreteOperator& op, const Field& f, const ObstacleSpec& spec,
                        const MixedSolution& sol) {
    const BoundView bv = make_view(op, spec);
    const Eigen::VectorXd rhs = op.effective_load(f);
    Eigen::VectorXd ufree = op.restrict_free(sol.u);
    Eigen::VectorXd lam(bv.cfree.size());
    if (sol.lambda.size() != bv.cfree.size())
        throw std::invalid_argument("verify_cp1: lambda length mismatch");
    for (std::size_t c = 0; c < bv.cfree.size(); ++c)
        lam[c] = bv.upper_only[c] ? -sol.lambda[c] : sol.lambda[c];
    Cp1Residuals r = residuals_from(op, rhs, bv, ufree, lam);
    // Dirichlet trace is part of primal feasibility
    for (std::size_t v = 0; v < op.num_nodes(); ++v)
        if (op.free_index(static_cast<int>(v)) < 0)
            r.feasibility = std::max(r.feasibility,
                                     std::abs(sol.u.values[v] - op.dirichlet_value(static_cast<int>(v))));
    return r;
}

} // namespace vilab
