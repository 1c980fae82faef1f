#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <functional>
#include <memory>
#include <span>
#include <string>

#include "vilab/grid.hpp"

namespace vilab {

using SpMat = Eigen::SparseMatrix<double>;

/// Diagonal coefficient tensor a^{kk}(x) plus zero-order coefficient a(x).
/// Sampled values must satisfy a^{kk} >= alpha > 0 and a >= 0; assemble()
/// rejects violations and records alpha as the sampled minimum.
struct CoefficientField {
    std::function<double(std::span<const double>)> a_axis[2];
    std::function<double(std::span<const double>)> a_zero;

    static CoefficientField constant(double a = 1.0, double c = 0.0);
    static CoefficientField isotropic(std::function<double(std::span<const double>)> a,
                                      std::function<double(std::span<const double>)> c = {});
    static CoefficientField anisotropic(std::function<double(std::span<const double>)> a0,
                                        std::function<double(std::span<const double>)> a1,
                                        std::function<double(std::span<const double>)> c = {});
};

/// Sparse SPD realization of the bilinear form on the free nodes (interior
/// plus non-Dirichlet boundary). Rows are the finite-volume 5-point (3-point
/// in 1D) stencil scaled by 1/h^d, so interior rows carry the familiar
/// (-1, 2, -1)/h^2 pattern. Dirichlet couplings are eliminated into
/// dirichlet_lift; Neumann data enters neumann_flux through half-cell faces.
/// Immutable after assembly; the Cholesky factorization is built eagerly and
/// shared by concurrent solves.
class DiscreteOperator {
public:
    int num_free() const { return static_cast<int>(node_of_free_.size()); }
    int free_index(int node) const { return free_of_node_[node]; }
    int node_of_free(int k) const { return node_of_free_[k]; }
    std::size_t num_nodes() const { return free_of_node_.size(); }

    const SpMat& matrix() const { return A_; }
    const Eigen::VectorXd& dirichlet_lift() const { return lift_; }
    const Eigen::VectorXd& neumann_flux() const { return flux_; }
    /// Dual-cell volume fraction per free node (trapezoidal load weights).
    const Eigen::VectorXd& load_weight() const { return weight_; }
    double ellipticity_alpha() const { return alpha_; }
    double max_diagonal() const { return max_diag_; }

    bool has_grid() const { return grid_ != nullptr; }
    const Grid& grid() const { return *grid_; }
    const BoundarySpec& boundary() const { return *boundary_; }
    double dirichlet_value(int node) const { return dirichlet_value_[node]; }

    /// Right-hand side of the discrete system for nodal load f:
    /// weight .* f|free + neumann_flux + dirichlet_lift.
    Eigen::VectorXd effective_load(const Field& f) const;

    Eigen::VectorXd restrict_free(const Field& full) const;
    /// Free vector -> full-grid field; Dirichlet nodes get their data values
    /// (or `dirichlet_fill` when given).
    Field embed(const Eigen::VectorXd& ufree) const;
    Field embed_with(const Eigen::VectorXd& ufree, double dirichlet_fill) const;

    /// Solves A x = b with the cached sparse Cholesky factor, one step of
    /// iterative refinement, and a conjugate-gradient fallback. Writes the
    /// relative residual when requested.
    Eigen::VectorXd solve(const Eigen::VectorXd& b, double* rel_residual = nullptr) const;

    /// Synthetic operator over an explicit SPD matrix (test surrogates,
    /// scalar models). All nodes are free; weights default to 1.
    static DiscreteOperator from_matrix(const SpMat& A);
    static DiscreteOperator from_dense(const Eigen::MatrixXd& A);

    friend DiscreteOperator assemble(const Grid& grid, const CoefficientField& coeffs,
                                     const BoundarySpec& boundary);

private:
    SpMat A_;
    Eigen::VectorXd lift_, flux_, weight_;
    std::vector<int> free_of_node_, node_of_free_;
    std::vector<double> dirichlet_value_;
    std::shared_ptr<const Grid> grid_;
    std::shared_ptr<const BoundarySpec> boundary_;
    double alpha_ = 0.0;
    double max_diag_ = 0.0;
    std::shared_ptr<Eigen::SimplicialLLT<SpMat>> llt_;

    void factorize();
};

DiscreteOperator assemble(const Grid& grid, const CoefficientField& coeffs,
                          const BoundarySpec& boundary);

/// Solves the linear Dirichlet problem A u = effective_load(f) to relative
/// residual 1e-10; throws on solver failure. The returned field carries the
/// Dirichlet data on eliminated nodes.
Field solve_dirichlet(const DiscreteOperator& op, const Field& f);

/// Matrix-vector product A v on the free nodes, embedded into a full field
/// with zeros at Dirichlet nodes.
Field apply(const DiscreteOperator& op, const Field& v);

/// Matrix Market coordinate dump (symmetric, lower triangle).
std::string matrix_to_matrix_market(const DiscreteOperator& op);

} // namespace vilab
