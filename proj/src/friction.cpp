#include "vilab/friction.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace vilab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

FrictionSpec FrictionSpec::on_all_free(const DiscreteOperator& op, double g) {
    return on_all_free(op, Field(op.num_nodes(), g));
}

FrictionSpec FrictionSpec::on_all_free(const DiscreteOperator& op, const Field& g) {
    check_same_size(g, op.num_nodes(), "FrictionSpec");
    FrictionSpec s;
    for (int k = 0; k < op.num_free(); ++k) {
        const int v = op.node_of_free(k);
        s.friction_nodes.push_back(v);
        s.g.push_back(g.values[v]);
        s.weight.push_back(op.load_weight()[k]);
    }
    s.validate();
    return s;
}

FrictionSpec FrictionSpec::on_segment(const DiscreteOperator& op, const std::string& segment,
                                      double g) {
    if (!op.has_grid())
        throw std::invalid_argument("FrictionSpec::on_segment: operator has no grid");
    const Grid& grid = op.grid();
    const BoundarySpec& b = op.boundary();
    const int sid = b.find_segment(segment);
    if (sid < 0)
        throw std::invalid_argument("FrictionSpec: unknown segment '" + segment + "'");
    double hd = grid.h(0);
    if (grid.dim() == 2) hd *= grid.h(1);

    FrictionSpec s;
    for (int k = 0; k < op.num_free(); ++k) {
        const int v = op.node_of_free(k);
        if (b.segment_of_node(v) != sid) continue;
        double share = 1.0;
        if (grid.dim() == 2) {
            // tangential boundary share, as for Neumann dual faces
            const auto& nd = grid.node(v);
            double best = 0.0;
            for (int axis = 0; axis < 2; ++axis) {
                for (int dir = -1; dir <= 1; dir += 2) {
                    const int qi = nd.idx[0] + (axis == 0 ? dir : 0);
                    const int qj = nd.idx[1] + (axis == 1 ? dir : 0);
                    if (grid.node_at(qi, qj) >= 0) continue;
                    const int other = 1 - axis;
                    double ext = 0.0;
                    for (int t = -1; t <= 1; t += 2) {
                        const int pi = nd.idx[0] + (other == 0 ? t : 0);
                        const int pj = nd.idx[1] + (other == 1 ? t : 0);
                        if (grid.node_at(pi, pj) >= 0) ext += 0.5;
                    }
                    best += ext * grid.h(other);
                }
            }
            share = best;
        }
        s.friction_nodes.push_back(v);
        s.g.push_back(g);
        s.weight.push_back(share / hd);
    }
    if (s.friction_nodes.empty())
        throw std::invalid_argument("FrictionSpec: segment '" + segment + "' has no free nodes");
    s.validate();
    return s;
}

FrictionSpec FrictionSpec::on_nodes(std::vector<int> nodes, std::vector<double> g,
                                    std::vector<double> weight) {
    FrictionSpec s;
    s.friction_nodes = std::move(nodes);
    s.g = std::move(g);
    s.weight = weight.empty() ? std::vector<double>(s.friction_nodes.size(), 1.0) : std::move(weight);
    s.validate();
    return s;
}

FrictionSpec& FrictionSpec::with_cone(std::vector<int> nodes, std::vector<ConeSign> signs,
                                      std::vector<double> weight) {
    cone_nodes = std::move(nodes);
    cone = std::move(signs);
    cone_weight = weight.empty() ? std::vector<double>(cone_nodes.size(), 1.0) : std::move(weight);
    validate();
    return *this;
}

FrictionSpec& FrictionSpec::with_cone_everywhere(const DiscreteOperator& op, ConeSign sign) {
    cone_nodes.clear();
    cone.clear();
    cone_weight.clear();
    for (int k = 0; k < op.num_free(); ++k) {
        cone_nodes.push_back(op.node_of_free(k));
        cone.push_back(sign);
        cone_weight.push_back(op.load_weight()[k]);
    }
    return *this;
}

void FrictionSpec::validate() const {
    if (g.size() != friction_nodes.size() || weight.size() != friction_nodes.size())
        throw std::invalid_argument("FrictionSpec: inconsistent friction arrays");
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!(g[i] > 0.0))
            throw std::invalid_argument("FrictionSpec: friction bound g must be positive (node " +
                                        std::to_string(friction_nodes[i]) + ")");
        if (!(weight[i] > 0.0))
            throw std::invalid_argument("FrictionSpec: quadrature weight must be positive");
    }
    if (cone.size() != cone_nodes.size() ||
        (cone_weight.size() != cone_nodes.size() && !cone_nodes.empty()))
        throw std::invalid_argument("FrictionSpec: inconsistent cone arrays");
}

double FrictionResiduals::max() const {
    return std::max({stationarity, box, alignment, cone_comp, cone_primal, cone_dual});
}

namespace {

// Free-index view of a friction problem.
struct FrictionView {
    std::vector<int> ffree;          // free index per friction node
    std::vector<int> cfree;          // free index per cone node
    std::vector<int> fr_of_free;     // free index -> friction ordinal or -1
    std::vector<int> cn_of_free;     // free index -> cone ordinal or -1
};

FrictionView make_view(const DiscreteOperator& op, const FrictionSpec& s) {
    FrictionView v;
    v.fr_of_free.assign(op.num_free(), -1);
    v.cn_of_free.assign(op.num_free(), -1);
    for (std::size_t i = 0; i < s.friction_nodes.size(); ++i) {
        const int k = op.free_index(s.friction_nodes[i]);
        if (k < 0) throw std::invalid_argument("FrictionSpec: friction node is not a free unknown");
        v.ffree.push_back(k);
        v.fr_of_free[k] = static_cast<int>(i);
    }
    for (std::size_t i = 0; i < s.cone_nodes.size(); ++i) {
        const int k = op.free_index(s.cone_nodes[i]);
        if (k < 0) throw std::invalid_argument("FrictionSpec: cone node is not a free unknown");
        v.cfree.push_back(k);
        v.cn_of_free[k] = static_cast<int>(i);
    }
    return v;
}

FrictionResiduals residuals_from(const DiscreteOperator& op, const Eigen::VectorXd& rhs,
                                 const FrictionSpec& s, const FrictionView& view,
                                 const Eigen::VectorXd& ufree, const Eigen::VectorXd& p,
                                 const Eigen::VectorXd& lam) {
    FrictionResiduals r;
    Eigen::VectorXd res = op.matrix() * ufree - rhs;
    for (std::size_t i = 0; i < view.ffree.size(); ++i) res[view.ffree[i]] += s.weight[i] * p[i];
    for (std::size_t i = 0; i < view.cfree.size(); ++i) res[view.cfree[i]] += s.cone_weight[i] * lam[i];
    r.stationarity = res.size() ? res.cwiseAbs().maxCoeff() : 0.0;

    for (std::size_t i = 0; i < view.ffree.size(); ++i) {
        const double u = ufree[view.ffree[i]];
        r.box = std::max(r.box, std::abs(p[i]) - s.g[i]);
        r.alignment = std::max(r.alignment, std::abs(p[i] * u - s.g[i] * std::abs(u)));
    }
    r.box = std::max(r.box, 0.0);

    double pairing = 0.0;
    for (std::size_t i = 0; i < view.cfree.size(); ++i) {
        const double u = ufree[view.cfree[i]];
        pairing += s.cone_weight[i] * lam[i] * u;
        switch (s.cone[i]) {
        case ConeSign::nonnegative:
            r.cone_primal = std::max(r.cone_primal, -u);
            r.cone_dual = std::max(r.cone_dual, lam[i]);
            break;
        case ConeSign::nonpositive:
            r.cone_primal = std::max(r.cone_primal, u);
            r.cone_dual = std::max(r.cone_dual, -lam[i]);
            break;
        case ConeSign::free_sign:
            r.cone_dual = std::max(r.cone_dual, std::abs(lam[i]));
            break;
        }
    }
    r.cone_primal = std::max(r.cone_primal, 0.0);
    r.cone_dual = std::max(r.cone_dual, 0.0);
    r.cone_comp = std::abs(pairing);
    return r;
}

enum class NState : char { none, pinned, slip_p, slip_m };

struct SsnWork {
    std::vector<NState> state;
    Eigen::VectorXd u, p, lam, resid;
};

// one pinned-set solve + multiplier split
void ssn_solve(const DiscreteOperator& op, const Eigen::VectorXd& rhs, const FrictionSpec& s,
               const FrictionView& view, SsnWork& w) {
    const int m = op.num_free();
    Eigen::VectorXd b = rhs;
    std::vector<char> pinned(m, 0);
    for (std::size_t i = 0; i < view.ffree.size(); ++i) {
        if (w.state[view.ffree[i]] == NState::slip_p)
            b[view.ffree[i]] -= s.weight[i] * s.g[i];
        else if (w.state[view.ffree[i]] == NState::slip_m)
            b[view.ffree[i]] += s.weight[i] * s.g[i];
    }
    for (int k = 0; k < m; ++k)
        if (w.state[k] == NState::pinned) pinned[k] = 1;

    std::vector<int> red_of(m, -1), full_of;
    for (int i = 0; i < m; ++i)
        if (!pinned[i]) {
            red_of[i] = static_cast<int>(full_of.size());
            full_of.push_back(i);
        }
    const int mr = static_cast<int>(full_of.size());
    std::vector<Eigen::Triplet<double>> trips;
    Eigen::VectorXd br(mr);
    for (int r = 0; r < mr; ++r) br[r] = b[full_of[r]];
    for (int k = 0; k < op.matrix().outerSize(); ++k)
        for (SpMat::InnerIterator a(op.matrix(), k); a; ++a) {
            const int i = static_cast<int>(a.row()), j = static_cast<int>(a.col());
            if (red_of[i] < 0) continue;
            if (red_of[j] >= 0) trips.emplace_back(red_of[i], red_of[j], a.value());
        }
    SpMat Ar(mr, mr);
    Ar.setFromTriplets(trips.begin(), trips.end());
    Eigen::VectorXd ur;
    if (mr > 0) {
        Eigen::SimplicialLLT<SpMat> llt(Ar);
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("solve_vi: reduced system not SPD");
        ur = llt.solve(br);
    }
    w.u = Eigen::VectorXd::Zero(m);
    for (int i = 0; i < m; ++i) w.u[i] = red_of[i] >= 0 ? ur[red_of[i]] : 0.0;
    w.resid = rhs - op.matrix() * w.u; // r_i = w_phi p_i + w_k lam_i at pinned nodes

    w.p = Eigen::VectorXd::Zero(static_cast<int>(view.ffree.size()));
    w.lam = Eigen::VectorXd::Zero(static_cast<int>(view.cfree.size()));
    for (std::size_t i = 0; i < view.ffree.size(); ++i) {
        const int k = view.ffree[i];
        if (w.state[k] == NState::slip_p)
            w.p[i] = s.g[i];
        else if (w.state[k] == NState::slip_m)
            w.p[i] = -s.g[i];
        else {
            const double r = w.resid[k];
            const int cn = view.cn_of_free[k];
            if (cn >= 0 && s.cone[cn] != ConeSign::free_sign) {
                // split r = w_phi p + w_k lam with p clamped into the box
                w.p[i] = std::clamp(r / s.weight[i], -s.g[i], s.g[i]);
                w.lam[cn] = (r - s.weight[i] * w.p[i]) / s.cone_weight[cn];
            } else {
                w.p[i] = r / s.weight[i]; // unclamped; box residual reports any excess
            }
        }
    }
    for (std::size_t i = 0; i < view.cfree.size(); ++i) {
        const int k = view.cfree[i];
        if (view.fr_of_free[k] >= 0) continue; // handled above
        w.lam[i] = (w.state[k] == NState::pinned) ? w.resid[k] / s.cone_weight[i] : 0.0;
    }
}

FrictionSolution package(const DiscreteOperator& op, const Eigen::VectorXd& rhs,
                         const FrictionSpec& s, const FrictionView& view, const SsnWork& w,
                         double tol, int iterations) {
    FrictionSolution sol;
    sol.u = op.embed_with(w.u, 0.0);
    // Dirichlet values belong in the reported field
    for (std::size_t v = 0; v < op.num_nodes(); ++v)
        if (op.free_index(static_cast<int>(v)) < 0)
            sol.u.values[v] = op.dirichlet_value(static_cast<int>(v));
    sol.p.assign(w.p.data(), w.p.data() + w.p.size());
    sol.lambda.assign(w.lam.data(), w.lam.data() + w.lam.size());
    sol.residuals = residuals_from(op, rhs, s, view, w.u, w.p, w.lam);
    sol.converged = sol.residuals.max() <= tol;
    sol.iterations = iterations;
    sol.state.resize(view.ffree.size());
    for (std::size_t i = 0; i < view.ffree.size(); ++i) {
        const NState st = w.state[view.ffree[i]];
        sol.state[i] = st == NState::slip_p ? +1 : st == NState::slip_m ? -1 : 0;
    }
    return sol;
}

FrictionSolution solve_uzawa(const DiscreteOperator& op, const Eigen::VectorXd& rhs,
                             const FrictionSpec& s, const FrictionView& view,
                             const FrictionOptions& opt) {
    const int nf = static_cast<int>(view.ffree.size());
    const double c = opt.c > 0.0 ? opt.c : op.max_diagonal();
    double rho = 0.5 * c;
    const int max_iter = opt.max_iter > 0 ? opt.max_iter : 200000;

    Eigen::VectorXd p = Eigen::VectorXd::Zero(nf);
    Eigen::VectorXd u;
    double best = kInf;
    int since_best = 0;
    int it = 0;
    SsnWork w;
    w.lam = Eigen::VectorXd::Zero(static_cast<int>(view.cfree.size()));
    for (; it < max_iter; ++it) {
        Eigen::VectorXd b = rhs;
        for (int i = 0; i < nf; ++i) b[view.ffree[i]] -= s.weight[i] * p[i];
        u = op.solve(b);
        for (int i = 0; i < nf; ++i)
            p[i] = std::clamp(p[i] + rho * u[view.ffree[i]], -s.g[i], s.g[i]);
        const double r = residuals_from(op, rhs, s, view, u, p, w.lam).max();
        if (r <= opt.tol) {
            ++it;
            break;
        }
        if (r < 0.999 * best) {
            best = r;
            since_best = 0;
        } else if (++since_best > 50) {
            rho *= 0.5; // step too aggressive for this operator; shrink
            since_best = 0;
        }
    }
    w.u = u;
    w.p = p;
    w.state.assign(op.num_free(), NState::none);
    for (int i = 0; i < nf; ++i) {
        const double ui = u[view.ffree[i]];
        w.state[view.ffree[i]] =
            std::abs(ui) <= 1e-12 ? NState::pinned : (ui > 0 ? NState::slip_p : NState::slip_m);
    }
    return package(op, rhs, s, view, w, opt.tol, it);
}

FrictionSolution solve_ssn(const DiscreteOperator& op, const Eigen::VectorXd& rhs,
                           const FrictionSpec& s, const FrictionView& view,
                           const FrictionOptions& opt, bool allow_uzawa_fallback) {
    const int m = op.num_free();
    const int max_iter = opt.max_iter > 0 ? opt.max_iter : 100 + 2 * m;
    const double c_scale = opt.c > 0.0 ? opt.c : op.max_diagonal();

    SsnWork w;
    w.state.assign(m, NState::none);
    // friction nodes start pinned; cone-only nodes start unconstrained
    for (int k : view.ffree) w.state[k] = NState::pinned;

    std::map<std::vector<NState>, int> seen;
    bool cycled = false;
    int it = 0;
    for (; it < max_iter; ++it) {
        ssn_solve(op, rhs, s, view, w);

        std::vector<NState> next = w.state;
        for (std::size_t i = 0; i < view.ffree.size(); ++i) {
            const int k = view.ffree[i];
            const int cn = view.cn_of_free[k];
            const ConeSign sg = cn >= 0 ? s.cone[cn] : ConeSign::free_sign;
            const double g = s.g[i];
            const double wphi = s.weight[i];
            if (w.state[k] == NState::pinned) {
                const double r = w.resid[k];
                if (sg == ConeSign::free_sign) {
                    if (r > wphi * g)
                        next[k] = NState::slip_p;
                    else if (r < -wphi * g)
                        next[k] = NState::slip_m;
                } else if (sg == ConeSign::nonnegative) {
                    if (r > wphi * g) next[k] = NState::slip_p;
                } else {
                    if (r < -wphi * g) next[k] = NState::slip_m;
                }
            } else if (w.state[k] == NState::slip_p) {
                const double u = w.u[k];
                if (u < 0.0)
                    next[k] = (sg == ConeSign::free_sign && g + c_scale * u < -g) ? NState::slip_m
                                                                                  : NState::pinned;
            } else if (w.state[k] == NState::slip_m) {
                const double u = w.u[k];
                if (u > 0.0)
                    next[k] = (sg == ConeSign::free_sign && -g + c_scale * u > g) ? NState::slip_p
                                                                                  : NState::pinned;
            }
        }
        for (std::size_t i = 0; i < view.cfree.size(); ++i) {
            const int k = view.cfree[i];
            if (view.fr_of_free[k] >= 0) continue;
            const ConeSign sg = s.cone[i];
            if (sg == ConeSign::free_sign) continue;
            if (w.state[k] == NState::pinned) {
                const double lam = w.lam[i];
                const bool ok = sg == ConeSign::nonnegative ? lam <= 0.0 : lam >= 0.0;
                if (!ok) next[k] = NState::none;
            } else {
                const double u = w.u[k];
                const bool violated = sg == ConeSign::nonnegative ? u < 0.0 : u > 0.0;
                if (violated) next[k] = NState::pinned;
            }
        }

        if (next == w.state) {
            ++it;
            break;
        }
        auto [pos, fresh] = seen.emplace(next, it);
        if (!fresh) {
            cycled = true;
            ++it;
            break;
        }
        w.state = std::move(next);
    }

    if (cycled && allow_uzawa_fallback && view.cfree.empty())
        return solve_uzawa(op, rhs, s, view, opt);

    FrictionSolution sol = package(op, rhs, s, view, w, opt.tol, it);
    if (cycled || it >= max_iter) sol.converged = sol.residuals.max() <= opt.tol;
    return sol;
}

} // namespace

FrictionSolution solve_vi2(const DiscreteOperator& op, const Field& f, const FrictionSpec& fspec,
                           const FrictionOptions& opt) {
    fspec.validate();
    if (fspec.has_cone())
        throw std::invalid_argument("solve_vi2: cone given; use solve_vi3");
    const FrictionView view = make_view(op, fspec);
    const Eigen::VectorXd rhs = op.effective_load(f);
    if (opt.method == FrictionMethod::uzawa) return solve_uzawa(op, rhs, fspec, view, opt);
    return solve_ssn(op, rhs, fspec, view, opt, /*allow_uzawa_fallback=*/true);
}

FrictionSolution solve_vi3(const DiscreteOperator& op, const Field& f, const FrictionSpec& fspec,
                           const FrictionOptions& opt) {
    fspec.validate();
    const FrictionView view = make_view(op, fspec);
    const Eigen::VectorXd rhs = op.effective_load(f);
    return solve_ssn(op, rhs, fspec, view, opt, /*allow_uzawa_fallback=*/false);
}

FrictionResiduals verify_mp2_mp3(const DiscreteOperator& op, const Field& f,
                                 const FrictionSpec& fspec, const FrictionSolution& sol) {
    const FrictionView view = make_view(op, fspec);
    const Eigen::VectorXd rhs = op.effective_load(f);
    Eigen::VectorXd u = op.restrict_free(sol.u);
    Eigen::VectorXd p = Eigen::Map<const Eigen::VectorXd>(sol.p.data(), sol.p.size());
    Eigen::VectorXd lam = Eigen::Map<const Eigen::VectorXd>(sol.lambda.data(), sol.lambda.size());
    if (p.size() != static_cast<int>(view.ffree.size()) ||
        lam.size() != static_cast<int>(view.cfree.size()))
        throw std::invalid_argument("verify_mp2_mp3: multiplier length mismatch");
    return residuals_from(op, rhs, fspec, view, u, p, lam);
}

double friction_energy(const Field& u, const Field& f, const DiscreteOperator& op,
                       const FrictionSpec& fspec) {
    // the quadratic energy form needs a symmetric operator
    SpMat D = SpMat(op.matrix().transpose()) - op.matrix();
    double asym = 0.0;
    for (int k = 0; k < D.outerSize(); ++k)
        for (SpMat::InnerIterator it(D, k); it; ++it) asym = std::max(asym, std::abs(it.value()));
    if (asym > 1e-10 * std::max(1.0, op.max_diagonal()))
        throw std::invalid_argument("friction_energy: operator is not symmetric");

    const FrictionView view = make_view(op, fspec);
    const Eigen::VectorXd rhs = op.effective_load(f);
    Eigen::VectorXd uf = op.restrict_free(u);
    double e = 0.5 * uf.dot(op.matrix() * uf) - rhs.dot(uf);
    for (std::size_t i = 0; i < view.ffree.size(); ++i)
        e += fspec.weight[i] * fspec.g[i] * std::abs(uf[view.ffree[i]]);
    return e;
}

} // namespace vilab
