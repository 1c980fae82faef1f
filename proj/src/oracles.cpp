#include "vilab/oracles.hpp"

#include <cmath>
#include <stdexcept>

#include "vilab/friction.hpp"
#include "vilab/gnep.hpp"

namespace vilab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

bool same_point(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double tol) {
    return (a - b).cwiseAbs().maxCoeff() <= tol * (1.0 + a.cwiseAbs().maxCoeff());
}
} // namespace

std::vector<OracleQpSolution> oracle_active_set_qp(const Eigen::MatrixXd& H,
                                                   const Eigen::VectorXd& q,
                                                   const Eigen::VectorXd& lo,
                                                   const Eigen::VectorXd& hi,
                                                   const Eigen::MatrixXd& M,
                                                   const Eigen::VectorXd& rlo,
                                                   const Eigen::VectorXd& rhi,
                                                   double tol) {
    const int n = static_cast<int>(q.size());
    const int k = static_cast<int>(M.rows());

    // enumerable constraints: those with at least one finite side
    struct C {
        Eigen::VectorXd a;
        double lo, hi;
        bool is_box;
        int origin;
    };
    std::vector<C> cs;
    for (int i = 0; i < n; ++i) {
        if (lo[i] > -kInf || hi[i] < kInf) {
            Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
            e[i] = 1.0;
            cs.push_back({e, lo[i], hi[i], true, i});
        }
    }
    for (int r = 0; r < k; ++r)
        if (rlo[r] > -kInf || rhi[r] < kInf)
            cs.push_back({M.row(r).transpose(), rlo[r], rhi[r], false, r});

    const int nc = static_cast<int>(cs.size());
    // states per constraint: 0 inactive, 1 at lo (if finite), 2 at hi (if finite)
    std::vector<int> nstates(nc);
    double total = 1.0;
    for (int c = 0; c < nc; ++c) {
        nstates[c] = 1 + (cs[c].lo > -kInf ? 1 : 0) + (cs[c].hi < kInf ? 1 : 0);
        total *= nstates[c];
    }
    if (total > 2.2e6)
        throw std::invalid_argument("oracle_active_set_qp: too many activity patterns");

    std::vector<OracleQpSolution> out;
    std::vector<int> pat(nc, 0);
    const std::size_t npat = static_cast<std::size_t>(total);

    for (std::size_t it = 0; it < npat; ++it) {
        // decode mixed-radix pattern
        {
            std::size_t t = it;
            for (int c = 0; c < nc; ++c) {
                pat[c] = static_cast<int>(t % nstates[c]);
                t /= nstates[c];
            }
        }
        std::vector<int> act;   // constraint index
        std::vector<double> bd; // bound value
        std::vector<int> side;  // -1 lo, +1 hi
        for (int c = 0; c < nc; ++c) {
            if (pat[c] == 0) continue;
            const bool has_lo = cs[c].lo > -kInf;
            const int s = (pat[c] == 1 && has_lo) ? -1 : +1;
            act.push_back(c);
            side.push_back(s);
            bd.push_back(s < 0 ? cs[c].lo : cs[c].hi);
        }
        const int na = static_cast<int>(act.size());
        if (na > n) continue;

        Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + na, n + na);
        Eigen::VectorXd rhs(n + na);
        K.topLeftCorner(n, n) = H;
        for (int a = 0; a < na; ++a) {
            K.block(0, n + a, n, 1) = cs[act[a]].a;
            K.block(n + a, 0, 1, n) = cs[act[a]].a.transpose();
            rhs[n + a] = bd[a];
        }
        rhs.head(n) = -q;
        Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
        Eigen::VectorXd z = lu.solve(rhs);
        const double resk = (K * z - rhs).cwiseAbs().maxCoeff();
        const double zscale = 1.0 + z.cwiseAbs().maxCoeff();
        if (!(resk <= tol * zscale)) continue;

        Eigen::VectorXd x = z.head(n);
        bool ok = true;
        // primal feasibility
        for (int c = 0; c < nc && ok; ++c) {
            const double v = cs[c].a.dot(x);
            if (v < cs[c].lo - tol * zscale || v > cs[c].hi + tol * zscale) ok = false;
        }
        // dual signs: mu >= 0 at hi, <= 0 at lo
        for (int a = 0; a < na && ok; ++a) {
            const double mu = z[n + a];
            if (side[a] > 0 && mu < -tol * zscale) ok = false;
            if (side[a] < 0 && mu > tol * zscale) ok = false;
        }
        if (!ok) continue;

        bool dup = false;
        for (const auto& sol : out)
            if (same_point(sol.x, x, 10 * tol)) {
                dup = true;
                break;
            }
        if (dup) continue;

        OracleQpSolution sol;
        sol.x = x;
        sol.mu_box = Eigen::VectorXd::Zero(n);
        sol.mu_rows = Eigen::VectorXd::Zero(k);
        for (int a = 0; a < na; ++a) {
            const C& c = cs[act[a]];
            if (c.is_box)
                sol.mu_box[c.origin] = z[n + a];
            else
                sol.mu_rows[c.origin] = z[n + a];
        }
        out.push_back(std::move(sol));
    }
    return out;
}

std::vector<OracleFrictionSolution> oracle_stick_slip(const DiscreteOperator& op,
                                                      const Field& f,
                                                      const FrictionSpec& s,
                                                      double tol) {
    const int m = op.num_free();
    const Eigen::MatrixXd A = Eigen::MatrixXd(op.matrix());
    const Eigen::VectorXd rhs = op.effective_load(f);

    std::vector<int> ffree, cfree;
    for (int v : s.friction_nodes) ffree.push_back(op.free_index(v));
    for (int v : s.cone_nodes) cfree.push_back(op.free_index(v));
    std::vector<int> fr_of(m, -1), cn_of(m, -1);
    for (std::size_t i = 0; i < ffree.size(); ++i) fr_of[ffree[i]] = static_cast<int>(i);
    for (std::size_t i = 0; i < cfree.size(); ++i) cn_of[cfree[i]] = static_cast<int>(i);

    // special nodes and their admissible states
    // state encoding: 0 pinned (u = 0), 1 slip+/inactive+, 2 slip-
    struct SpecialNode {
        int free;
        std::vector<int> states;
    };
    std::vector<SpecialNode> special;
    for (int kf = 0; kf < m; ++kf) {
        const int fi = fr_of[kf], ci = cn_of[kf];
        if (fi < 0 && ci < 0) continue;
        ConeSign sg = ci >= 0 ? s.cone[ci] : ConeSign::free_sign;
        SpecialNode sn;
        sn.free = kf;
        if (fi >= 0) {
            if (sg == ConeSign::free_sign)
                sn.states = {0, 1, 2};
            else if (sg == ConeSign::nonnegative)
                sn.states = {0, 1};
            else
                sn.states = {0, 2};
        } else if (sg != ConeSign::free_sign) {
            sn.states = {0, 1}; // cone only: active, inactive
        } else {
            continue; // unconstrained
        }
        special.push_back(std::move(sn));
    }
    double total = 1.0;
    for (const auto& sn : special) total *= static_cast<double>(sn.states.size());
    if (total > 2.2e6)
        throw std::invalid_argument("oracle_stick_slip: too many stick/slip patterns");

    std::vector<OracleFrictionSolution> out;
    const int ns = static_cast<int>(special.size());
    std::vector<int> pat(ns, 0);

    for (std::size_t it = 0; it < static_cast<std::size_t>(total); ++it) {
        {
            std::size_t t = it;
            for (int c = 0; c < ns; ++c) {
                pat[c] = special[c].states[t % special[c].states.size()];
                t /= special[c].states.size();
            }
        }
        // assemble: pinned nodes eliminated, slip contributions on the rhs
        std::vector<int> red(m, -1), full;
        Eigen::VectorXd b = rhs;
        for (int c = 0; c < ns; ++c) {
            const int kf = special[c].free;
            const int fi = fr_of[kf];
            if (pat[c] == 0 || fi < 0) continue;
            if (pat[c] == 1) b[kf] -= s.weight[fi] * s.g[fi];
            if (pat[c] == 2) b[kf] += s.weight[fi] * s.g[fi];
        }
        std::vector<char> pinned(m, 0);
        for (int c = 0; c < ns; ++c)
            if (pat[c] == 0) pinned[special[c].free] = 1;
        for (int i = 0; i < m; ++i)
            if (!pinned[i]) {
                red[i] = static_cast<int>(full.size());
                full.push_back(i);
            }
        const int mr = static_cast<int>(full.size());
        Eigen::VectorXd ur;
        if (mr > 0) {
            Eigen::MatrixXd Ar(mr, mr);
            Eigen::VectorXd br(mr);
            for (int r = 0; r < mr; ++r) {
                br[r] = b[full[r]];
                for (int cc = 0; cc < mr; ++cc) Ar(r, cc) = A(full[r], full[cc]);
            }
            ur = Ar.fullPivLu().solve(br);
            if ((Ar * ur - br).cwiseAbs().maxCoeff() > tol * (1.0 + ur.cwiseAbs().maxCoeff()))
                continue;
        }
        Eigen::VectorXd u = Eigen::VectorXd::Zero(m);
        for (int i = 0; i < m; ++i) u[i] = red[i] >= 0 ? ur[red[i]] : 0.0;
        Eigen::VectorXd resid = rhs - A * u;

        // consistency per node
        Eigen::VectorXd p = Eigen::VectorXd::Zero(static_cast<int>(ffree.size()));
        Eigen::VectorXd lam = Eigen::VectorXd::Zero(static_cast<int>(cfree.size()));
        bool ok = true;
        for (int c = 0; c < ns && ok; ++c) {
            const int kf = special[c].free;
            const int fi = fr_of[kf], ci = cn_of[kf];
            const ConeSign sg = ci >= 0 ? s.cone[ci] : ConeSign::free_sign;
            if (fi >= 0) {
                if (pat[c] == 1) {
                    p[fi] = s.g[fi];
                    if (u[kf] < -tol) ok = false;
                } else if (pat[c] == 2) {
                    p[fi] = -s.g[fi];
                    if (u[kf] > tol) ok = false;
                } else {
                    const double r = resid[kf];
                    if (sg == ConeSign::free_sign) {
                        p[fi] = r / s.weight[fi];
                        if (std::abs(p[fi]) > s.g[fi] + tol) ok = false;
                    } else {
                        p[fi] = std::clamp(r / s.weight[fi], -s.g[fi], s.g[fi]);
                        lam[ci] = (r - s.weight[fi] * p[fi]) / s.cone_weight[ci];
                        if (sg == ConeSign::nonnegative && lam[ci] > tol) ok = false;
                        if (sg == ConeSign::nonpositive && lam[ci] < -tol) ok = false;
                    }
                }
            } else {
                if (pat[c] == 0) {
                    lam[ci] = resid[kf] / s.cone_weight[ci];
                    if (sg == ConeSign::nonnegative && lam[ci] > tol) ok = false;
                    if (sg == ConeSign::nonpositive && lam[ci] < -tol) ok = false;
                } else {
                    if (sg == ConeSign::nonnegative && u[kf] < -tol) ok = false;
                    if (sg == ConeSign::nonpositive && u[kf] > tol) ok = false;
                }
            }
        }
        if (!ok) continue;

        bool dup = false;
        for (const auto& sol : out)
            if (same_point(sol.u, u, 10 * tol)) {
                dup = true;
                break;
            }
        if (dup) continue;
        out.push_back({u, p, lam});
    }
    return out;
}

std::vector<OracleGnepSolution> oracle_gnep_fixed_point(const GnepInstance& inst, double tol) {
    const int N = inst.num_players();
    const int m = inst.num_free();
    if (m != 1)
        throw std::invalid_argument("oracle_gnep_fixed_point: 1 interior node required");
    if (N > 3)
        throw std::invalid_argument("oracle_gnep_fixed_point: N <= 3 required");

    const double a = inst.op.matrix().coeff(0, 0);
    const double omega = inst.quad_weight[0];
    const double y0 = inst.y0[0];
    const int node = inst.op.node_of_free(0);
    const double s_lo = inst.state_lo.values[node];
    const double s_hi = inst.state_hi.values[node];

    std::vector<OracleGnepSolution> out;
    // states: per player control constraint {in, lo, hi}, shared state {in, lo, hi}
    int npat = 3;
    for (int nu = 0; nu < N; ++nu) npat *= 3;

    for (int pat = 0; pat < npat; ++pat) {
        int t = pat;
        std::vector<int> cst(N);
        for (int nu = 0; nu < N; ++nu) {
            cst[nu] = t % 3;
            t /= 3;
        }
        const int sst = t % 3;

        // unknowns: w_nu (N), mu_nu for active controls, eta if state active
        std::vector<int> mu_idx(N, -1);
        int nu_unknowns = N;
        for (int nu = 0; nu < N; ++nu)
            if (cst[nu] != 0) mu_idx[nu] = nu_unknowns++;
        const int eta_idx = sst != 0 ? nu_unknowns++ : -1;

        Eigen::MatrixXd K = Eigen::MatrixXd::Zero(nu_unknowns, nu_unknowns);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nu_unknowns);

        for (int nu = 0; nu < N; ++nu) {
            const GnepPlayer& p = inst.players[nu];
            const double chi = p.obs_mask[node] ? 1.0 : 0.0;
            const double gt = p.target.values[node];
            // omega*chi*(y0 + sum w - g) + (gamma/beta^2) a^2 omega w_nu + mu a + eta = 0
            for (int mu = 0; mu < N; ++mu) K(nu, mu) += omega * chi;
            K(nu, nu) += (p.gamma / (p.beta * p.beta)) * a * a * omega;
            if (mu_idx[nu] >= 0) K(nu, mu_idx[nu]) = a;
            if (eta_idx >= 0) K(nu, eta_idx) = 1.0;
            rhs[nu] = omega * chi * (gt - y0);

            if (cst[nu] != 0) {
                const double bound = cst[nu] == 1 ? p.beta * p.control_lo : p.beta * p.control_hi;
                K(mu_idx[nu], nu) = a;
                rhs[mu_idx[nu]] = bound;
            }
        }
        if (eta_idx >= 0) {
            for (int nu = 0; nu < N; ++nu) K(eta_idx, nu) = 1.0;
            rhs[eta_idx] = (sst == 1 ? s_lo : s_hi) - y0;
        }

        Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
        Eigen::VectorXd z = lu.solve(rhs);
        if ((K * z - rhs).cwiseAbs().maxCoeff() > tol * (1.0 + z.cwiseAbs().maxCoeff())) continue;

        bool ok = true;
        double ysum = y0;
        for (int nu = 0; nu < N; ++nu) ysum += z[nu];
        for (int nu = 0; nu < N && ok; ++nu) {
            const GnepPlayer& p = inst.players[nu];
            const double aw = a * z[nu];
            if (aw < p.beta * p.control_lo - tol || aw > p.beta * p.control_hi + tol) ok = false;
            if (cst[nu] != 0) {
                const double mu = z[mu_idx[nu]];
                if (cst[nu] == 1 && mu > tol) ok = false;  // lo-side multiplier <= 0
                if (cst[nu] == 2 && mu < -tol) ok = false; // hi-side multiplier >= 0
            }
        }
        if (ysum < s_lo - tol || ysum > s_hi + tol) ok = false;
        if (ok && eta_idx >= 0) {
            const double eta = z[eta_idx];
            if (sst == 1 && eta > tol) ok = false;
            if (sst == 2 && eta < -tol) ok = false;
        }
        if (!ok) continue;

        OracleGnepSolution sol;
        sol.w.resize(N);
        for (int nu = 0; nu < N; ++nu) sol.w[nu] = z[nu];
        sol.state_multiplier = eta_idx >= 0 ? z[eta_idx] : 0.0;
        bool dup = false;
        for (const auto& other : out) {
            double d = 0.0;
            for (int nu = 0; nu < N; ++nu) d = std::max(d, std::abs(other.w[nu] - sol.w[nu]));
            if (d <= 10 * tol) {
                dup = true;
                break;
            }
        }
        if (!dup) out.push_back(std::move(sol));
    }
    return out;
}

} // namespace vilab
