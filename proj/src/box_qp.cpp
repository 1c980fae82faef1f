#include "vilab/box_qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace vilab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct ConstraintView {
    // constraint id c < n refers to box component c; c >= n refers to row c-n
    const BoxQpProblem& p;
    int n, k;

    explicit ConstraintView(const BoxQpProblem& pr)
        : p(pr), n(static_cast<int>(pr.q.size())), k(static_cast<int>(pr.M.rows())) {}

    int count() const { return n + k; }
    double lo(int c) const { return c < n ? p.lo[c] : p.rlo[c - n]; }
    double hi(int c) const { return c < n ? p.hi[c] : p.rhi[c - n]; }
    double value(int c, const Eigen::VectorXd& x) const {
        return c < n ? x[c] : p.M.row(c - n).dot(x);
    }
    double dir(int c, const Eigen::VectorXd& s) const {
        return c < n ? s[c] : p.M.row(c - n).dot(s);
    }
    void add_row(Eigen::MatrixXd& A, int row, int c) const {
        if (c < n)
            A(row, c) = 1.0;
        else
            A.row(row) = p.M.row(c - n);
    }
    bool is_equality(int c) const { return hi(c) - lo(c) <= 0.0; }
};

// Cyclic projection onto box and row slabs; good enough as a phase-1 when no
// feasible start is supplied. Returns the worst violation reached.
double project_feasible(const ConstraintView& cv, Eigen::VectorXd& x, double target, int max_pass) {
    const BoxQpProblem& p = cv.p;
    double viol = kInf;
    for (int pass = 0; pass < max_pass; ++pass) {
        for (int i = 0; i < cv.n; ++i) x[i] = std::clamp(x[i], p.lo[i], p.hi[i]);
        viol = 0.0;
        for (int r = 0; r < cv.k; ++r) {
            const double nv = p.M.row(r).squaredNorm();
            if (nv <= 0.0) continue;
            double val = p.M.row(r).dot(x);
            if (val > p.rhi[r])
                x -= ((val - p.rhi[r]) / nv) * p.M.row(r).transpose();
            else if (val < p.rlo[r])
                x += ((p.rlo[r] - val) / nv) * p.M.row(r).transpose();
        }
        for (int i = 0; i < cv.n; ++i)
            viol = std::max({viol, p.lo[i] - x[i], x[i] - p.hi[i]});
        for (int r = 0; r < cv.k; ++r) {
            const double val = p.M.row(r).dot(x);
            viol = std::max({viol, p.rlo[r] - val, val - p.rhi[r]});
        }
        if (viol <= target) break;
    }
    return viol;
}

} // namespace

BoxQpResult solve_box_qp(const BoxQpProblem& p, const BoxQpOptions& opt) {
    const int n = static_cast<int>(p.q.size());
    const int k = static_cast<int>(p.M.rows());
    if (p.H.rows() != n || p.H.cols() != n || p.lo.size() != n || p.hi.size() != n)
        throw std::invalid_argument("solve_box_qp: inconsistent dimensions");
    if (k > 0 && (p.M.cols() != n || p.rlo.size() != k || p.rhi.size() != k))
        throw std::invalid_argument("solve_box_qp: inconsistent row constraints");
    for (int i = 0; i < n; ++i)
        if (p.lo[i] > p.hi[i]) throw std::invalid_argument("solve_box_qp: lo > hi in box");

    ConstraintView cv(p);
    BoxQpResult res;
    res.mu_box = Eigen::VectorXd::Zero(n);
    res.mu_rows = Eigen::VectorXd::Zero(k);

    Eigen::LLT<Eigen::MatrixXd> hllt(p.H);
    if (hllt.info() != Eigen::Success)
        throw std::invalid_argument("solve_box_qp: H is not positive definite");

    // starting point
    Eigen::VectorXd x;
    if (opt.x0) {
        x = *opt.x0;
    } else {
        x = hllt.solve(-p.q);
        for (int i = 0; i < n; ++i) x[i] = std::clamp(x[i], p.lo[i], p.hi[i]);
    }
    const double ft = opt.feas_tol;
    double viol = project_feasible(cv, x, 0.1 * ft, 20000);
    if (viol > ft) {
        res.x = x;
        res.infeasible = true;
        res.feasibility = viol;
        return res;
    }

    const double scale = 1.0 + x.cwiseAbs().maxCoeff();
    const double atol = 1e-10 * scale;
    const int max_iter = opt.max_iter > 0 ? opt.max_iter : 100 + 10 * (n + k);

    // initial working set: active constraints, filtered for linear independence
    std::vector<int> wc;    // constraint ids
    std::vector<int> wside; // +1 at hi, -1 at lo
    {
        std::vector<int> cand;
        for (int c = 0; c < cv.count(); ++c) {
            const double v = cv.value(c, x);
            if (cv.is_equality(c) || v >= cv.hi(c) - atol || v <= cv.lo(c) + atol) cand.push_back(c);
        }
        Eigen::MatrixXd At(n, 0);
        for (int c : cand) {
            Eigen::MatrixXd trial(n, At.cols() + 1);
            trial.leftCols(At.cols()) = At;
            Eigen::MatrixXd arow = Eigen::MatrixXd::Zero(1, n);
            cv.add_row(arow, 0, c);
            trial.col(At.cols()) = arow.transpose();
            if (trial.colPivHouseholderQr().rank() == trial.cols()) {
                At = trial;
                wc.push_back(c);
                const double v = cv.value(c, x);
                wside.push_back(v >= cv.hi(c) - atol ? +1 : -1);
            }
        }
    }

    Eigen::VectorXd mu;

    for (res.iterations = 0; res.iterations < max_iter; ++res.iterations) {
        const int w = static_cast<int>(wc.size());
        Eigen::VectorXd g = p.H * x + p.q;
        Eigen::VectorXd s;

        if (w == 0) {
            s = -hllt.solve(g);
            mu.resize(0);
        } else {
            Eigen::MatrixXd A = Eigen::MatrixXd::Zero(w, n);
            for (int r = 0; r < w; ++r) cv.add_row(A, r, wc[r]);
            // Schur complement on the factored H
            Eigen::MatrixXd HinvAt = hllt.solve(A.transpose());
            Eigen::MatrixXd S = A * HinvAt;
            Eigen::VectorXd hg = hllt.solve(g);
            mu = S.ldlt().solve(-A * hg);
            s = -hg - HinvAt * mu;
        }

        if (s.cwiseAbs().maxCoeff() <= 1e-12 * scale) {
            // stationary on the working set: check multiplier signs
            int drop = -1;
            double worst = 1e-12 * (1.0 + (w ? mu.cwiseAbs().maxCoeff() : 0.0));
            for (int r = 0; r < w; ++r) {
                if (cv.is_equality(wc[r])) continue;
                const double bad = wside[r] > 0 ? -mu[r] : mu[r];
                if (bad > worst) {
                    worst = bad;
                    drop = r;
                }
            }
            if (drop < 0) {
                res.converged = true;
                break;
            }
            wc.erase(wc.begin() + drop);
            wside.erase(wside.begin() + drop);
            continue;
        }

        // step to the nearest blocking constraint
        double alpha = 1.0;
        int block = -1, bside = 0;
        for (int c = 0; c < cv.count(); ++c) {
            bool inw = false;
            for (int r = 0; r < w; ++r)
                if (wc[r] == c) { inw = true; break; }
            if (inw) continue;
            const double d = cv.dir(c, s);
            if (d > 1e-14) {
                if (cv.hi(c) < kInf) {
                    const double a = (cv.hi(c) - cv.value(c, x)) / d;
                    if (a < alpha) { alpha = a; block = c; bside = +1; }
                }
            } else if (d < -1e-14) {
                if (cv.lo(c) > -kInf) {
                    const double a = (cv.lo(c) - cv.value(c, x)) / d;
                    if (a < alpha) { alpha = a; block = c; bside = -1; }
                }
            }
        }
        alpha = std::max(alpha, 0.0);
        x += alpha * s;
        if (block >= 0) {
            wc.push_back(block);
            wside.push_back(bside);
        }
    }

    res.x = x;
    for (std::size_t r = 0; r < wc.size(); ++r) {
        if (static_cast<int>(r) >= mu.size()) break;
        if (wc[r] < n)
            res.mu_box[wc[r]] = mu[r];
        else
            res.mu_rows[wc[r] - n] = mu[r];
    }

    // recomputed KKT residuals
    Eigen::VectorXd stat = p.H * x + p.q + res.mu_box;
    if (k > 0) stat += p.M.transpose() * res.mu_rows;
    res.stationarity = stat.cwiseAbs().maxCoeff();
    res.feasibility = 0.0;
    res.complementarity = 0.0;
    for (int c = 0; c < cv.count(); ++c) {
        const double v = cv.value(c, x);
        res.feasibility = std::max({res.feasibility, cv.lo(c) - v, v - cv.hi(c)});
        const double m = c < n ? res.mu_box[c] : res.mu_rows[c - n];
        if (cv.is_equality(c)) continue;
        if (m > 0.0 && cv.hi(c) < kInf)
            res.complementarity = std::max(res.complementarity, std::abs(m * (cv.hi(c) - v)));
        else if (m < 0.0 && cv.lo(c) > -kInf)
            res.complementarity = std::max(res.complementarity, std::abs(m * (v - cv.lo(c))));
    }
    res.feasibility = std::max(res.feasibility, 0.0);
    if (!res.converged)
        res.converged = res.stationarity <= opt.tol && res.feasibility <= ft &&
                        res.complementarity <= opt.tol;
    return res;
}

} // namespace vilab
