#include "vilab/assembly.hpp"

#include <Eigen/IterativeLinearSolvers>

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace vilab {

CoefficientField CoefficientField::constant(double a, double c) {
    CoefficientField cf;
    cf.a_axis[0] = [a](std::span<const double>) { return a; };
    cf.a_axis[1] = cf.a_axis[0];
    cf.a_zero = [c](std::span<const double>) { return c; };
    return cf;
}

CoefficientField CoefficientField::isotropic(std::function<double(std::span<const double>)> a,
                                             std::function<double(std::span<const double>)> c) {
    CoefficientField cf;
    cf.a_axis[0] = a;
    cf.a_axis[1] = std::move(a);
    cf.a_zero = c ? std::move(c) : [](std::span<const double>) { return 0.0; };
    return cf;
}

CoefficientField CoefficientField::anisotropic(std::function<double(std::span<const double>)> a0,
                                               std::function<double(std::span<const double>)> a1,
                                               std::function<double(std::span<const double>)> c) {
    CoefficientField cf;
    cf.a_axis[0] = std::move(a0);
    cf.a_axis[1] = std::move(a1);
    cf.a_zero = c ? std::move(c) : [](std::span<const double>) { return 0.0; };
    return cf;
}

namespace {

struct Mid {
    std::array<double, 2> x;
    std::span<const double> span(int dim) const { return {x.data(), static_cast<std::size_t>(dim)}; }
};

} // namespace

DiscreteOperator assemble(const Grid& grid, const CoefficientField& coeffs,
                          const BoundarySpec& boundary) {
    const int dim = grid.dim();
    const std::size_t nn = grid.num_nodes();

    DiscreteOperator op;
    op.grid_ = std::make_shared<Grid>(grid);
    op.boundary_ = std::make_shared<BoundarySpec>(boundary);
    op.free_of_node_.assign(nn, -1);
    op.dirichlet_value_.assign(nn, 0.0);

    bool any_dirichlet = false;
    for (std::size_t v = 0; v < nn; ++v) {
        if (grid.is_boundary(v) && boundary.is_dirichlet(v)) {
            op.dirichlet_value_[v] = boundary.value_of_node(v);
            any_dirichlet = true;
        } else {
            op.free_of_node_[v] = static_cast<int>(op.node_of_free_.size());
            op.node_of_free_.push_back(static_cast<int>(v));
        }
    }

    const int m = op.num_free();
    op.lift_ = Eigen::VectorXd::Zero(m);
    op.flux_ = Eigen::VectorXd::Zero(m);
    op.weight_ = Eigen::VectorXd::Zero(m);

    double hd = grid.h(0);
    if (dim == 2) hd *= grid.h(1);

    double alpha = std::numeric_limits<double>::infinity();
    bool a_zero_positive_everywhere = true;

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(m) * (2 * dim + 1));

    for (int r = 0; r < m; ++r) {
        const int v = op.node_of_free_[r];
        const auto& nd = grid.node(v);
        const int i = nd.idx[0], j = nd.idx[1];

        double diag = 0.0;

        for (int axis = 0; axis < dim; ++axis) {
            const double h = grid.h(axis);
            for (int dir = -1; dir <= 1; dir += 2) {
                const int qi = i + (axis == 0 ? dir : 0);
                const int qj = j + (axis == 1 ? dir : 0);
                const int q = grid.node_at(qi, qj);
                if (q < 0) continue; // dual face on the boundary: flux handled below

                // transverse dual-face fraction of this edge
                double frac = 1.0;
                if (dim == 2) {
                    const int other = 1 - axis;
                    const double f0 = i + (axis == 0 ? 0.5 * dir : 0.0);
                    const double f1 = j + (axis == 1 ? 0.5 * dir : 0.0);
                    double present = 0.0;
                    for (int s = -1; s <= 1; s += 2) {
                        const double g0 = f0 + (other == 0 ? 0.5 * s : 0.0);
                        const double g1 = f1 + (other == 1 ? 0.5 * s : 0.0);
                        if (grid.inside_open(g0, g1)) present += 0.5;
                    }
                    frac = present;
                }
                if (frac == 0.0) continue;

                Mid mid;
                mid.x = nd.x;
                mid.x[axis] += 0.5 * dir * h;
                const double a = coeffs.a_axis[axis] ? coeffs.a_axis[axis](mid.span(dim)) : 1.0;
                if (!(a > 0.0)) {
                    std::ostringstream os;
                    os << "assemble: ellipticity violated (a <= 0) near node " << v << " at (";
                    for (int k = 0; k < dim; ++k) os << (k ? "," : "") << mid.x[k];
                    os << ")";
                    throw std::invalid_argument(os.str());
                }
                alpha = std::min(alpha, a);

                // edge transmissibility in operator scaling (divide by h^d)
                double t = a * frac;
                for (int k = 0; k < dim; ++k)
                    t /= (k == axis) ? h * h : 1.0;

                diag += t;
                const int rq = op.free_of_node_[q];
                if (rq >= 0)
                    trips.emplace_back(r, rq, -t);
                else
                    op.lift_[r] += t * op.dirichlet_value_[q];
            }
        }

        // dual-cell volume fraction: quadrants present around the node
        double volfrac = 0.0;
        if (dim == 1) {
            if (grid.inside_open(i - 0.5)) volfrac += 0.5;
            if (grid.inside_open(i + 0.5)) volfrac += 0.5;
        } else {
            for (int qq = 0; qq < 4; ++qq) {
                const double s0 = (qq & 1) ? 0.5 : -0.5;
                const double s1 = (qq & 2) ? 0.5 : -0.5;
                if (grid.inside_open(i + s0, j + s1)) volfrac += 0.25;
            }
        }
        op.weight_[r] = volfrac;

        const double az = coeffs.a_zero ? coeffs.a_zero(grid.x(v)) : 0.0;
        if (az < 0.0)
            throw std::invalid_argument("assemble: a_zero < 0 at node " + std::to_string(v));
        if (!(az > 0.0)) a_zero_positive_everywhere = false;
        diag += az * volfrac;

        trips.emplace_back(r, r, diag);

        // Neumann flux through truncated dual faces
        if (grid.is_boundary(v) && boundary.is_neumann(v)) {
            const double qdat = boundary.value_of_node(v);
            if (qdat != 0.0) {
                for (int axis = 0; axis < dim; ++axis) {
                    for (int dir = -1; dir <= 1; dir += 2) {
                        const int qi = i + (axis == 0 ? dir : 0);
                        const int qj = j + (axis == 1 ? dir : 0);
                        if (grid.node_at(qi, qj) >= 0) continue;
                        // boundary share transverse to this face
                        double share = 1.0;
                        if (dim == 2) {
                            const int other = 1 - axis;
                            double ext = 0.0;
                            for (int s = -1; s <= 1; s += 2) {
                                const int pi = i + (other == 0 ? s : 0);
                                const int pj = j + (other == 1 ? s : 0);
                                if (grid.node_at(pi, pj) >= 0) ext += 0.5;
                            }
                            share = ext * grid.h(other);
                        }
                        op.flux_[r] += qdat * share / hd;
                    }
                }
            }
        }
    }

    if (!any_dirichlet && !a_zero_positive_everywhere)
        throw std::invalid_argument(
            "assemble: no Dirichlet segment and a_zero vanishes somewhere; problem is not coercive");

    op.alpha_ = alpha;
    op.A_.resize(m, m);
    op.A_.setFromTriplets(trips.begin(), trips.end());
    op.A_.makeCompressed();
    op.max_diag_ = 0.0;
    for (int k = 0; k < m; ++k) op.max_diag_ = std::max(op.max_diag_, op.A_.coeff(k, k));
    op.factorize();
    return op;
}

void DiscreteOperator::factorize() {
    llt_ = std::make_shared<Eigen::SimplicialLLT<SpMat>>();
    llt_->compute(A_);
    if (llt_->info() != Eigen::Success)
        throw std::runtime_error("DiscreteOperator: Cholesky factorization failed (matrix not SPD?)");
}

Eigen::VectorXd DiscreteOperator::effective_load(const Field& f) const {
    check_same_size(f, num_nodes(), "effective_load");
    Eigen::VectorXd rhs = lift_ + flux_;
    for (int k = 0; k < num_free(); ++k)
        rhs[k] += weight_[k] * f.values[node_of_free_[k]];
    return rhs;
}

Eigen::VectorXd DiscreteOperator::restrict_free(const Field& full) const {
    check_same_size(full, num_nodes(), "restrict_free");
    Eigen::VectorXd v(num_free());
    for (int k = 0; k < num_free(); ++k) v[k] = full.values[node_of_free_[k]];
    return v;
}

Field DiscreteOperator::embed(const Eigen::VectorXd& ufree) const {
    Field out(num_nodes());
    if (grid_) out.grid_id = grid_->id();
    for (std::size_t v = 0; v < num_nodes(); ++v)
        out.values[v] = free_of_node_[v] >= 0 ? ufree[free_of_node_[v]] : dirichlet_value_[v];
    return out;
}

Field DiscreteOperator::embed_with(const Eigen::VectorXd& ufree, double dirichlet_fill) const {
    Field out(num_nodes(), dirichlet_fill);
    if (grid_) out.grid_id = grid_->id();
    for (std::size_t v = 0; v < num_nodes(); ++v)
        if (free_of_node_[v] >= 0) out.values[v] = ufree[free_of_node_[v]];
    return out;
}

Eigen::VectorXd DiscreteOperator::solve(const Eigen::VectorXd& b, double* rel_residual) const {
    if (b.size() != num_free())
        throw std::invalid_argument("solve: dimension mismatch");
    Eigen::VectorXd x = llt_->solve(b);
    const double bn = std::max(b.norm(), 1e-300);
    double res = (A_ * x - b).norm() / bn;
    if (res > 1e-12) {
        x += llt_->solve(b - A_ * x); // one refinement step
        res = (A_ * x - b).norm() / bn;
    }
    if (res > 1e-10) {
        Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper> cg(A_);
        cg.setTolerance(1e-13);
        x = cg.solveWithGuess(b, x);
        res = (A_ * x - b).norm() / bn;
    }
    if (rel_residual) *rel_residual = res;
    return x;
}

DiscreteOperator DiscreteOperator::from_matrix(const SpMat& A) {
    if (A.rows() != A.cols())
        throw std::invalid_argument("from_matrix: square matrix required");
    DiscreteOperator op;
    op.A_ = A;
    op.A_.makeCompressed();
    const int m = static_cast<int>(A.rows());
    op.free_of_node_.resize(m);
    op.node_of_free_.resize(m);
    op.dirichlet_value_.assign(m, 0.0);
    for (int k = 0; k < m; ++k) {
        op.free_of_node_[k] = k;
        op.node_of_free_[k] = k;
    }
    op.lift_ = Eigen::VectorXd::Zero(m);
    op.flux_ = Eigen::VectorXd::Zero(m);
    op.weight_ = Eigen::VectorXd::Ones(m);
    op.max_diag_ = 0.0;
    for (int k = 0; k < m; ++k) op.max_diag_ = std::max(op.max_diag_, op.A_.coeff(k, k));
    op.alpha_ = op.max_diag_;
    op.factorize();
    return op;
}

DiscreteOperator DiscreteOperator::from_dense(const Eigen::MatrixXd& A) {
    return from_matrix(A.sparseView());
}

Field solve_dirichlet(const DiscreteOperator& op, const Field& f) {
    Eigen::VectorXd rhs = op.effective_load(f);
    double res = 0.0;
    Eigen::VectorXd u = op.solve(rhs, &res);
    if (res > 1e-10) {
        std::ostringstream os;
        os << "solve_dirichlet: linear solver did not reach 1e-10 (relative residual " << res << ")";
        throw std::runtime_error(os.str());
    }
    return op.embed(u);
}

Field apply(const DiscreteOperator& op, const Field& v) {
    Eigen::VectorXd av = op.matrix() * op.restrict_free(v);
    return op.embed_with(av, 0.0);
}

std::string matrix_to_matrix_market(const DiscreteOperator& op) {
    std::ostringstream os;
    os.precision(17);
    const SpMat& A = op.matrix();
    std::size_t nnz_lower = 0;
    for (int k = 0; k < A.outerSize(); ++k)
        for (SpMat::InnerIterator it(A, k); it; ++it)
            if (it.row() >= it.col()) ++nnz_lower;
    os << "%%MatrixMarket matrix coordinate real symmetric\n";
    os << A.rows() << " " << A.cols() << " " << nnz_lower << "\n";
    for (int k = 0; k < A.outerSize(); ++k)
        for (SpMat::InnerIterator it(A, k); it; ++it)
            if (it.row() >= it.col())
                os << (it.row() + 1) << " " << (it.col() + 1) << " " << it.value() << "\n";
    return os.str();
}

} // namespace vilab
