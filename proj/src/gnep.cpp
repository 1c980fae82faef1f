#include "vilab/gnep.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "vilab/box_qp.hpp"
#include "vilab/rng.hpp"

namespace vilab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
} // namespace

GnepInstance make_gnep_instance(const Grid& grid, const CoefficientField& coeffs,
                                std::vector<GnepPlayer> players, const Field& f,
                                const Field& state_lo, const Field& state_hi) {
    if (players.empty())
        throw std::invalid_argument("make_gnep_instance: at least one player required");

    // homogeneous Dirichlet data on the whole boundary
    SegmentRule all = SegmentRule::dirichlet("boundary", [](std::span<const double>) { return true; }, 0.0);
    BoundarySpec bspec = label_boundary(grid, {&all, 1});

    GnepInstance inst;
    inst.op = assemble(grid, coeffs, bspec);
    inst.players = std::move(players);
    inst.f = f;
    inst.state_lo = state_lo;
    inst.state_hi = state_hi;

    const int m = inst.op.num_free();
    const int N = inst.num_players();
    check_same_size(f, inst.op.num_nodes(), "gnep f");
    check_same_size(state_lo, inst.op.num_nodes(), "gnep state_lo");
    check_same_size(state_hi, inst.op.num_nodes(), "gnep state_hi");

    for (int nu = 0; nu < N; ++nu) {
        const GnepPlayer& p = inst.players[nu];
        if (!(p.gamma > 0.0) || !(p.beta > 0.0))
            throw std::invalid_argument("make_gnep_instance: gamma and beta must be positive");
        if (p.control_lo > p.control_hi)
            throw std::invalid_argument("make_gnep_instance: control box is empty");
        check_same_size(p.target, inst.op.num_nodes(), "gnep target");
        if (p.obs_mask.size() != inst.op.num_nodes())
            throw std::invalid_argument("make_gnep_instance: obs_mask length mismatch");
    }
    for (int k = 0; k < m; ++k) {
        const int v = inst.op.node_of_free(k);
        if (!(state_lo.values[v] < state_hi.values[v]))
            throw std::invalid_argument("make_gnep_instance: state box needs a0 < b0 nodewise");
    }

    inst.y0 = inst.op.solve(inst.op.effective_load(f));

    double hd = grid.h(0);
    if (grid.dim() == 2) hd *= grid.h(1);
    inst.quad_weight = hd * inst.op.load_weight();

    Eigen::MatrixXd Adense = Eigen::MatrixXd(inst.op.matrix());
    inst.regularizer = Adense.transpose() * inst.quad_weight.asDiagonal() * Adense;

    // feasibility certificate: can controls inside the boxes keep the state
    // inside the state box? One slack-minimizing QP decides.
    Eigen::VectorXd slo(m), shi(m);
    for (int k = 0; k < m; ++k) {
        const int v = inst.op.node_of_free(k);
        slo[k] = state_lo.values[v];
        shi[k] = state_hi.values[v];
    }

    inst.zero_feasible = true;
    for (const auto& p : inst.players)
        if (p.control_lo > 0.0 || p.control_hi < 0.0) inst.zero_feasible = false;
    if (inst.zero_feasible)
        for (int k = 0; k < m; ++k)
            if (inst.y0[k] < slo[k] - 1e-12 || inst.y0[k] > shi[k] + 1e-12) {
                inst.zero_feasible = false;
                break;
            }

    const int nm = N * m;
    BoxQpProblem cert;
    cert.H = Eigen::MatrixXd::Identity(nm + 1, nm + 1) * 1e-8;
    cert.H(nm, nm) = 1.0;
    cert.q = Eigen::VectorXd::Zero(nm + 1);
    cert.lo = Eigen::VectorXd::Constant(nm + 1, -kInf);
    cert.hi = Eigen::VectorXd::Constant(nm + 1, kInf);
    cert.lo[nm] = 0.0;
    // rows: control boxes (hard), then the state box relaxed by the slack
    cert.M = Eigen::MatrixXd::Zero(nm + 2 * m, nm + 1);
    cert.rlo = Eigen::VectorXd::Constant(nm + 2 * m, -kInf);
    cert.rhi = Eigen::VectorXd::Constant(nm + 2 * m, kInf);
    for (int nu = 0; nu < N; ++nu) {
        cert.M.block(nu * m, nu * m, m, m) = Adense;
        cert.rlo.segment(nu * m, m).setConstant(inst.players[nu].beta * inst.players[nu].control_lo);
        cert.rhi.segment(nu * m, m).setConstant(inst.players[nu].beta * inst.players[nu].control_hi);
    }
    for (int i = 0; i < m; ++i) {
        // sum_nu w_i - s <= shi - y0   and   sum_nu w_i + s >= slo - y0
        for (int nu = 0; nu < N; ++nu) {
            cert.M(nm + i, nu * m + i) = 1.0;
            cert.M(nm + m + i, nu * m + i) = 1.0;
        }
        cert.M(nm + i, nm) = -1.0;
        cert.rhi[nm + i] = shi[i] - inst.y0[i];
        cert.M(nm + m + i, nm) = 1.0;
        cert.rlo[nm + m + i] = slo[i] - inst.y0[i];
    }
    // start: mid-box controls, slack large enough
    Eigen::VectorXd x0(nm + 1);
    for (int nu = 0; nu < N; ++nu) {
        const auto& p = inst.players[nu];
        const double umid = 0.5 * (p.control_lo + p.control_hi);
        Eigen::VectorXd uvec = Eigen::VectorXd::Constant(m, p.beta * umid);
        x0.segment(nu * m, m) = inst.op.solve(uvec);
    }
    double s0 = 0.0;
    for (int i = 0; i < m; ++i) {
        double tot = inst.y0[i];
        for (int nu = 0; nu < N; ++nu) tot += x0[nu * m + i];
        s0 = std::max({s0, slo[i] - tot, tot - shi[i]});
    }
    x0[nm] = s0 + 1.0;
    BoxQpOptions copt;
    copt.x0 = x0;
    BoxQpResult cres = solve_box_qp(cert, copt);
    const double slack = cres.x[nm];
    if (cres.infeasible || slack > 1e-7)
        throw std::invalid_argument("make_gnep_instance: certified infeasible (state box "
                                    "unreachable from the control boxes, slack " +
                                    std::to_string(slack) + ")");

    if (inst.zero_feasible) {
        inst.feasible_w = Eigen::VectorXd::Zero(nm);
    } else {
        // polish the certificate point onto the hard constraint set
        BoxQpProblem pol;
        pol.H = Eigen::MatrixXd::Identity(nm, nm);
        pol.q = -cres.x.head(nm);
        pol.lo = Eigen::VectorXd::Constant(nm, -kInf);
        pol.hi = Eigen::VectorXd::Constant(nm, kInf);
        pol.M = Eigen::MatrixXd::Zero(nm + m, nm);
        pol.rlo = Eigen::VectorXd::Constant(nm + m, -kInf);
        pol.rhi = Eigen::VectorXd::Constant(nm + m, kInf);
        for (int nu = 0; nu < N; ++nu) {
            pol.M.block(nu * m, nu * m, m, m) = Adense;
            pol.rlo.segment(nu * m, m).setConstant(inst.players[nu].beta * inst.players[nu].control_lo);
            pol.rhi.segment(nu * m, m).setConstant(inst.players[nu].beta * inst.players[nu].control_hi);
        }
        for (int i = 0; i < m; ++i) {
            for (int nu = 0; nu < N; ++nu) pol.M(nm + i, nu * m + i) = 1.0;
            pol.rlo[nm + i] = slo[i] - inst.y0[i];
            pol.rhi[nm + i] = shi[i] - inst.y0[i];
        }
        BoxQpResult pres = solve_box_qp(pol);
        if (pres.infeasible)
            throw std::invalid_argument("make_gnep_instance: feasible-point polish failed");
        inst.feasible_w = pres.x;
    }
    return inst;
}

namespace {

// theta_nu with player nu's block replaced by `own`
double theta_mixed(const GnepInstance& inst, int nu, const std::vector<Eigen::VectorXd>& w,
                   const Eigen::VectorXd& own) {
    const int m = inst.num_free();
    Eigen::VectorXd y = inst.y0;
    for (int mu = 0; mu < inst.num_players(); ++mu) y += (mu == nu) ? own : w[mu];

    const GnepPlayer& p = inst.players[nu];
    double track = 0.0;
    for (int k = 0; k < m; ++k) {
        const int v = inst.op.node_of_free(k);
        if (!p.obs_mask[v]) continue;
        const double d = y[k] - p.target.values[v];
        track += inst.quad_weight[k] * d * d;
    }
    const Eigen::VectorXd aw = inst.op.matrix() * own;
    const double reg = aw.dot(inst.quad_weight.asDiagonal() * aw);
    return 0.5 * track + 0.5 * (p.gamma / (p.beta * p.beta)) * reg;
}

} // namespace

double theta(const GnepInstance& inst, int nu, const std::vector<Eigen::VectorXd>& w) {
    return theta_mixed(inst, nu, w, w[nu]);
}

double nikaido_isoda(const GnepInstance& inst, const std::vector<Eigen::VectorXd>& x,
                     const std::vector<Eigen::VectorXd>& y) {
    double psi = 0.0;
    for (int nu = 0; nu < inst.num_players(); ++nu)
        psi += theta_mixed(inst, nu, x, x[nu]) - theta_mixed(inst, nu, x, y[nu]);
    return psi;
}

BestResponse best_response(const GnepInstance& inst, int nu, const std::vector<Eigen::VectorXd>& w,
                           const std::optional<Eigen::VectorXd>& warm_start) {
    const int m = inst.num_free();
    const GnepPlayer& p = inst.players[nu];

    Eigen::VectorXd s = inst.y0;
    for (int mu = 0; mu < inst.num_players(); ++mu)
        if (mu != nu) s += w[mu];

    Eigen::VectorXd mask(m);
    for (int k = 0; k < m; ++k) mask[k] = p.obs_mask[inst.op.node_of_free(k)] ? 1.0 : 0.0;

    BoxQpProblem qp;
    qp.H = inst.regularizer * (p.gamma / (p.beta * p.beta));
    qp.H.diagonal() += (inst.quad_weight.array() * mask.array()).matrix();
    qp.q.resize(m);
    for (int k = 0; k < m; ++k) {
        const int v = inst.op.node_of_free(k);
        qp.q[k] = mask[k] * inst.quad_weight[k] * (s[k] - p.target.values[v]);
    }
    qp.lo.resize(m);
    qp.hi.resize(m);
    for (int k = 0; k < m; ++k) {
        const int v = inst.op.node_of_free(k);
        qp.lo[k] = inst.state_lo.values[v] - s[k];
        qp.hi[k] = inst.state_hi.values[v] - s[k];
    }
    qp.M = Eigen::MatrixXd(inst.op.matrix());
    qp.rlo = Eigen::VectorXd::Constant(m, p.beta * p.control_lo);
    qp.rhi = Eigen::VectorXd::Constant(m, p.beta * p.control_hi);

    BoxQpOptions opt;
    opt.tol = 1e-10;
    if (warm_start)
        opt.x0 = *warm_start;
    else
        opt.x0 = w[nu]; // the current block is always slice-feasible

    BoxQpResult res = solve_box_qp(qp, opt);
    BestResponse br;
    br.w = res.x;
    br.feasible = !res.infeasible;
    br.kkt_residual = std::max({res.stationarity, res.feasibility, res.complementarity});
    return br;
}

namespace {

struct SweepState {
    std::vector<Eigen::VectorXd> w;
    std::vector<Eigen::VectorXd> br;
    double merit = 0.0;
};

using ThetaFn = std::function<double(int, const std::vector<Eigen::VectorXd>&, const Eigen::VectorXd&)>;
using BrFn = std::function<Eigen::VectorXd(int, const std::vector<Eigen::VectorXd>&,
                                           const Eigen::VectorXd& warm)>;

double merit_of(const ThetaFn& th, const std::vector<Eigen::VectorXd>& w,
                const std::vector<Eigen::VectorXd>& br) {
    double v = 0.0;
    for (std::size_t nu = 0; nu < w.size(); ++nu)
        v += th(static_cast<int>(nu), w, w[nu]) - th(static_cast<int>(nu), w, br[nu]);
    return v;
}

std::pair<std::vector<Eigen::VectorXd>, ConvergenceReport>
relaxation_loop(int num_players, const ThetaFn& th, const BrFn& br_fn,
                std::vector<Eigen::VectorXd> w, const GnepOptions& opt) {
    const auto t0 = std::chrono::steady_clock::now();
    ConvergenceReport rep;
    rep.terminated = Termination::max_iter;

    SweepState cur;
    cur.w = std::move(w);
    cur.br.resize(num_players);
    for (int nu = 0; nu < num_players; ++nu) cur.br[nu] = br_fn(nu, cur.w, cur.w[nu]);
    cur.merit = merit_of(th, cur.w, cur.br);

    SweepState best = cur;
    double tau_taken = 0.0;

    for (int k = 0; k < opt.max_iter; ++k) {
        rep.iterations.push_back({k, cur.merit, tau_taken});
        if (cur.merit <= opt.tol) {
            rep.terminated = Termination::converged;
            break;
        }

        double tau = opt.tau0;
        bool accepted = false;
        while (tau >= opt.tau_floor) {
            SweepState trial;
            trial.w.resize(num_players);
            for (int nu = 0; nu < num_players; ++nu)
                trial.w[nu] = (1.0 - tau) * cur.w[nu] + tau * cur.br[nu];
            trial.br.resize(num_players);
            for (int nu = 0; nu < num_players; ++nu)
                trial.br[nu] = br_fn(nu, trial.w, cur.br[nu]);
            trial.merit = merit_of(th, trial.w, trial.br);
            if (trial.merit <= (1.0 - opt.slope * tau) * cur.merit) {
                cur = std::move(trial);
                tau_taken = tau;
                accepted = true;
                break;
            }
            tau *= opt.shrink;
        }
        if (!accepted) {
            rep.terminated = Termination::stalled;
            break;
        }
        if (cur.merit < best.merit) best = cur;
    }
    if (rep.terminated == Termination::converged || cur.merit <= best.merit) best = cur;
    if (rep.iterations.empty() || rep.iterations.back().value != best.merit)
        rep.iterations.push_back({static_cast<int>(rep.iterations.size()), best.merit, tau_taken});

    rep.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {best.w, rep};
}

} // namespace

std::pair<GnepState, ConvergenceReport> solve_gnep_relaxation(const GnepInstance& inst,
                                                              const GnepOptions& opt) {
    const int N = inst.num_players();
    const int m = inst.num_free();

    std::vector<Eigen::VectorXd> w0(N);
    for (int nu = 0; nu < N; ++nu)
        w0[nu] = inst.zero_feasible ? Eigen::VectorXd::Zero(m)
                                    : inst.feasible_w.segment(nu * m, m).eval();

    ThetaFn th = [&inst](int nu, const std::vector<Eigen::VectorXd>& w, const Eigen::VectorXd& own) {
        return theta_mixed(inst, nu, w, own);
    };
    BrFn br = [&inst](int nu, const std::vector<Eigen::VectorXd>& w, const Eigen::VectorXd& warm) {
        BestResponse r = best_response(inst, nu, w, warm);
        return r.feasible ? r.w : w[nu];
    };

    auto [w, rep] = relaxation_loop(N, th, br, std::move(w0), opt);

    GnepState st;
    st.w = std::move(w);
    st.y = inst.y0;
    for (int nu = 0; nu < N; ++nu) st.y += st.w[nu];
    st.u.resize(N);
    for (int nu = 0; nu < N; ++nu)
        st.u[nu] = (inst.op.matrix() * st.w[nu]) / inst.players[nu].beta;
    st.merit = rep.iterations.empty() ? 0.0 : rep.iterations.back().value;
    return {std::move(st), std::move(rep)};
}

NormalizedReport verify_normalized(const GnepInstance& inst, const GnepState& state,
                                   int n_samples, std::uint64_t seed) {
    const int N = inst.num_players();
    const int m = inst.num_free();
    const int nm = N * m;
    NormalizedReport rep;

    // joint best response and per-player gaps
    std::vector<Eigen::VectorXd> br(N);
    for (int nu = 0; nu < N; ++nu) br[nu] = best_response(inst, nu, state.w, state.w[nu]).w;
    rep.joint_br_psi = nikaido_isoda(inst, state.w, br);
    for (int nu = 0; nu < N; ++nu) {
        const double gap = theta_mixed(inst, nu, state.w, state.w[nu]) -
                           theta_mixed(inst, nu, state.w, br[nu]);
        rep.worst_player_gap = std::max(rep.worst_player_gap, gap);
    }

    // sampled feasible deviations
    Eigen::VectorXd slo(m), shi(m);
    for (int k = 0; k < m; ++k) {
        const int v = inst.op.node_of_free(k);
        slo[k] = inst.state_lo.values[v];
        shi[k] = inst.state_hi.values[v];
    }
    Eigen::VectorXd xbar(nm);
    for (int nu = 0; nu < N; ++nu) xbar.segment(nu * m, m) = state.w[nu];
    const double scale = 1.0 + xbar.cwiseAbs().maxCoeff();

    auto feasibility_violation = [&](const Eigen::VectorXd& z) {
        double viol = 0.0;
        Eigen::VectorXd y = inst.y0;
        for (int nu = 0; nu < N; ++nu) y += z.segment(nu * m, m);
        for (int k = 0; k < m; ++k) viol = std::max({viol, slo[k] - y[k], y[k] - shi[k]});
        for (int nu = 0; nu < N; ++nu) {
            Eigen::VectorXd aw = inst.op.matrix() * z.segment(nu * m, m);
            const auto& p = inst.players[nu];
            for (int k = 0; k < m; ++k)
                viol = std::max({viol, p.beta * p.control_lo - aw[k], aw[k] - p.beta * p.control_hi});
        }
        return viol;
    };

    // joint projection problem, shared across samples
    BoxQpProblem proj;
    proj.H = Eigen::MatrixXd::Identity(nm, nm);
    proj.lo = Eigen::VectorXd::Constant(nm, -kInf);
    proj.hi = Eigen::VectorXd::Constant(nm, kInf);
    proj.M = Eigen::MatrixXd::Zero(nm + m, nm);
    proj.rlo = Eigen::VectorXd::Constant(nm + m, -kInf);
    proj.rhi = Eigen::VectorXd::Constant(nm + m, kInf);
    Eigen::MatrixXd Adense(inst.op.matrix());
    for (int nu = 0; nu < N; ++nu) {
        proj.M.block(nu * m, nu * m, m, m) = Adense;
        proj.rlo.segment(nu * m, m).setConstant(inst.players[nu].beta * inst.players[nu].control_lo);
        proj.rhi.segment(nu * m, m).setConstant(inst.players[nu].beta * inst.players[nu].control_hi);
    }
    for (int i = 0; i < m; ++i) {
        for (int nu = 0; nu < N; ++nu) proj.M(nm + i, nu * m + i) = 1.0;
        proj.rlo[nm + i] = slo[i] - inst.y0[i];
        proj.rhi[nm + i] = shi[i] - inst.y0[i];
    }

    Rng rng(seed);
    const double deltas[3] = {0.01, 0.1, 1.0};
    for (int s = 0; s < n_samples; ++s) {
        Eigen::VectorXd z(nm);
        if (s % 2 == 0) {
            // random controls inside the boxes
            for (int nu = 0; nu < N; ++nu) {
                const auto& p = inst.players[nu];
                Eigen::VectorXd uv(m);
                for (int k = 0; k < m; ++k)
                    uv[k] = p.beta * rng.uniform(p.control_lo, p.control_hi);
                z.segment(nu * m, m) = inst.op.solve(uv);
            }
        } else {
            const double d = deltas[(s / 2) % 3] * scale;
            z = xbar;
            for (int i = 0; i < nm; ++i) z[i] += d * rng.normal();
        }
        if (feasibility_violation(z) > 1e-9) {
            proj.q = -z;
            BoxQpOptions popt;
            popt.x0 = xbar;
            BoxQpResult pres = solve_box_qp(proj, popt);
            if (pres.infeasible) continue;
            z = pres.x;
        }
        std::vector<Eigen::VectorXd> y(N);
        for (int nu = 0; nu < N; ++nu) y[nu] = z.segment(nu * m, m);
        rep.max_sampled_psi = std::max(rep.max_sampled_psi, nikaido_isoda(inst, state.w, y));
        ++rep.samples;
    }
    return rep;
}

std::pair<GnepState, ConvergenceReport> solve_formulation_ii(const GnepInstance& inst,
                                                             const GnepOptions& opt) {
    const int N = inst.num_players();
    const int m = inst.num_free();
    if (m > 400)
        throw std::invalid_argument("solve_formulation_ii: intended for small grids (every best "
                                    "response applies the dense operator inverse)");

    // dense inverse of the operator
    Eigen::MatrixXd G(m, m);
    {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
        for (int k = 0; k < m; ++k) {
            e[k] = 1.0;
            G.col(k) = inst.op.solve(e);
            e[k] = 0.0;
        }
    }
    const Eigen::VectorXd fvec = inst.op.effective_load(inst.f);

    Eigen::VectorXd slo(m), shi(m);
    std::vector<Eigen::VectorXd> mask(N), gtarget(N);
    for (int k = 0; k < m; ++k) {
        const int v = inst.op.node_of_free(k);
        slo[k] = inst.state_lo.values[v];
        shi[k] = inst.state_hi.values[v];
    }
    for (int nu = 0; nu < N; ++nu) {
        mask[nu].resize(m);
        gtarget[nu].resize(m);
        for (int k = 0; k < m; ++k) {
            const int v = inst.op.node_of_free(k);
            mask[nu][k] = inst.players[nu].obs_mask[v] ? 1.0 : 0.0;
            gtarget[nu][k] = inst.players[nu].target.values[v];
        }
    }

    auto state_of = [&](int nu, const std::vector<Eigen::VectorXd>& u, const Eigen::VectorXd& own) {
        Eigen::VectorXd rhs = fvec;
        for (int mu = 0; mu < N; ++mu)
            rhs += inst.players[mu].beta * ((mu == nu) ? own : u[mu]);
        return (G * rhs).eval();
    };

    ThetaFn th = [&](int nu, const std::vector<Eigen::VectorXd>& u, const Eigen::VectorXd& own) {
        Eigen::VectorXd y = state_of(nu, u, own);
        double track = 0.0, reg = 0.0;
        for (int k = 0; k < m; ++k) {
            const double d = y[k] - gtarget[nu][k];
            track += mask[nu][k] * inst.quad_weight[k] * d * d;
            reg += inst.quad_weight[k] * own[k] * own[k];
        }
        return 0.5 * track + 0.5 * inst.players[nu].gamma * reg;
    };

    std::vector<Eigen::MatrixXd> Hfix(N);
    for (int nu = 0; nu < N; ++nu) {
        const double b = inst.players[nu].beta;
        Hfix[nu] = b * b * G.transpose() *
                       (mask[nu].array() * inst.quad_weight.array()).matrix().asDiagonal() * G;
        Hfix[nu].diagonal() += inst.players[nu].gamma * inst.quad_weight;
    }

    BrFn br = [&](int nu, const std::vector<Eigen::VectorXd>& u, const Eigen::VectorXd& warm) {
        const auto& p = inst.players[nu];
        Eigen::VectorXd stilde = fvec;
        for (int mu = 0; mu < N; ++mu)
            if (mu != nu) stilde += inst.players[mu].beta * u[mu];
        stilde = G * stilde;

        BoxQpProblem qp;
        qp.H = Hfix[nu];
        qp.q = p.beta * G.transpose() *
               (mask[nu].array() * inst.quad_weight.array() * (stilde - gtarget[nu]).array()).matrix();
        qp.lo = Eigen::VectorXd::Constant(m, p.control_lo);
        qp.hi = Eigen::VectorXd::Constant(m, p.control_hi);
        qp.M = p.beta * G;
        qp.rlo = slo - stilde;
        qp.rhi = shi - stilde;
        BoxQpOptions bopt;
        bopt.tol = 1e-10;
        bopt.x0 = warm;
        BoxQpResult res = solve_box_qp(qp, bopt);
        if (res.infeasible) {
            BoxQpOptions cold;
            cold.tol = 1e-10;
            cold.x0 = u[nu];
            res = solve_box_qp(qp, cold);
        }
        return res.infeasible ? u[nu] : res.x;
    };

    // start from the controls of the feasible point
    std::vector<Eigen::VectorXd> u0(N);
    for (int nu = 0; nu < N; ++nu) {
        Eigen::VectorXd w = inst.zero_feasible ? Eigen::VectorXd::Zero(m)
                                               : inst.feasible_w.segment(nu * m, m).eval();
        u0[nu] = (inst.op.matrix() * w) / inst.players[nu].beta;
    }

    auto [u, rep] = relaxation_loop(N, th, br, std::move(u0), opt);

    GnepState st;
    st.u = std::move(u);
    st.w.resize(N);
    for (int nu = 0; nu < N; ++nu)
        st.w[nu] = G * (inst.players[nu].beta * st.u[nu]);
    st.y = inst.y0;
    for (int nu = 0; nu < N; ++nu) st.y += st.w[nu];
    st.merit = rep.iterations.empty() ? 0.0 : rep.iterations.back().value;
    return {std::move(st), std::move(rep)};
}

Reconstruction reconstruct_state(const GnepInstance& inst, const GnepState& state) {
    const int N = inst.num_players();
    Reconstruction rec;
    rec.u.resize(N);
    for (int nu = 0; nu < N; ++nu)
        rec.u[nu] = (inst.op.matrix() * state.w[nu]) / inst.players[nu].beta;
    rec.y_direct = inst.y0;
    for (int nu = 0; nu < N; ++nu) rec.y_direct += state.w[nu];
    Eigen::VectorXd rhs = inst.op.effective_load(inst.f);
    for (int nu = 0; nu < N; ++nu) rhs += inst.players[nu].beta * rec.u[nu];
    rec.y_resolved = inst.op.solve(rhs);
    rec.mismatch = (rec.y_direct - rec.y_resolved).cwiseAbs().maxCoeff();
    return rec;
}

} // namespace vilab
