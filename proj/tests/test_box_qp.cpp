#include "doctest.h"

#include <cmath>

#include "vilab/box_qp.hpp"
#include "vilab/oracles.hpp"
#include "vilab/rng.hpp"

using namespace vilab;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

BoxQpProblem unconstrained(int n) {
    BoxQpProblem p;
    p.H = Eigen::MatrixXd::Identity(n, n);
    p.q = Eigen::VectorXd::Zero(n);
    p.lo = Eigen::VectorXd::Constant(n, -kInf);
    p.hi = Eigen::VectorXd::Constant(n, kInf);
    p.M = Eigen::MatrixXd(0, n);
    p.rlo = Eigen::VectorXd(0);
    p.rhi = Eigen::VectorXd(0);
    return p;
}

Eigen::MatrixXd random_spd(Rng& rng, int n) {
    Eigen::MatrixXd R(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) R(i, j) = rng.uniform(-1.0, 1.0);
    return R * R.transpose() + n * Eigen::MatrixXd::Identity(n, n);
}
} // namespace

TEST_CASE("no constraints: Newton point") {
    BoxQpProblem p = unconstrained(3);
    p.H << 4, 1, 0, 1, 3, 1, 0, 1, 2;
    p.q << -1, 2, -3;
    BoxQpResult r = solve_box_qp(p);
    REQUIRE(r.converged);
    Eigen::VectorXd expect = p.H.ldlt().solve(-p.q);
    CHECK((r.x - expect).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("identity hessian clips to the box") {
    BoxQpProblem p = unconstrained(4);
    p.q = Eigen::VectorXd::Constant(4, -2.0);
    p.lo = Eigen::VectorXd::Constant(4, 0.0);
    p.hi = Eigen::VectorXd::Constant(4, 1.0);
    BoxQpResult r = solve_box_qp(p);
    REQUIRE(r.converged);
    for (int i = 0; i < 4; ++i) CHECK(r.x[i] == doctest::Approx(1.0).epsilon(1e-12));
    for (int i = 0; i < 4; ++i) CHECK(r.mu_box[i] == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("seeded problems match the enumeration oracle") {
    for (std::uint64_t seed : {11u, 12u, 13u, 14u, 15u, 16u, 17u, 18u, 19u, 20u}) {
        Rng rng(seed);
        const int n = 8;
        BoxQpProblem p = unconstrained(n);
        p.H = random_spd(rng, n);
        for (int i = 0; i < n; ++i) p.q[i] = rng.uniform(-4.0, 4.0);
        p.lo = Eigen::VectorXd::Constant(n, -0.4);
        p.hi = Eigen::VectorXd::Constant(n, 0.4);
        p.M.resize(3, n);
        p.rlo.resize(3);
        p.rhi.resize(3);
        for (int r = 0; r < 3; ++r) {
            for (int j = 0; j < n; ++j) p.M(r, j) = rng.uniform(-1.0, 1.0);
            p.rlo[r] = -0.8;
            p.rhi[r] = 0.8;
        }

        BoxQpResult got = solve_box_qp(p);
        REQUIRE(got.converged);
        auto oracle = oracle_active_set_qp(p.H, p.q, p.lo, p.hi, p.M, p.rlo, p.rhi);
        REQUIRE(oracle.size() == 1);
        CHECK((got.x - oracle[0].x).cwiseAbs().maxCoeff() <= 1e-8);
        CHECK((got.mu_box - oracle[0].mu_box).cwiseAbs().maxCoeff() <= 1e-6);
        CHECK((got.mu_rows - oracle[0].mu_rows).cwiseAbs().maxCoeff() <= 1e-6);
    }
}

TEST_CASE("kkt residuals are reported and small at the solution") {
    Rng rng(99);
    BoxQpProblem p = unconstrained(6);
    p.H = random_spd(rng, 6);
    for (int i = 0; i < 6; ++i) p.q[i] = rng.uniform(-2.0, 2.0);
    p.lo.setConstant(-0.3);
    p.hi.setConstant(0.3);
    BoxQpResult r = solve_box_qp(p);
    REQUIRE(r.converged);
    CHECK(r.stationarity <= 1e-10);
    CHECK(r.feasibility <= 1e-10);
    CHECK(r.complementarity <= 1e-10);
}

TEST_CASE("infeasible region is detected") {
    BoxQpProblem p = unconstrained(2);
    p.lo = Eigen::VectorXd::Constant(2, 0.0);
    p.hi = Eigen::VectorXd::Constant(2, 1.0);
    p.M.resize(1, 2);
    p.M << 1.0, 1.0;
    p.rlo.resize(1);
    p.rhi.resize(1);
    p.rlo[0] = 10.0; // x1 + x2 >= 10 cannot meet the box
    p.rhi[0] = kInf;
    BoxQpResult r = solve_box_qp(p);
    CHECK(r.infeasible);
    CHECK(!r.converged);
}

TEST_CASE("an infeasible warm start is projected back onto the feasible set") {
    Rng rng(31);
    BoxQpProblem p = unconstrained(5);
    p.H = random_spd(rng, 5);
    for (int i = 0; i < 5; ++i) p.q[i] = rng.uniform(-1.0, 1.0);
    p.lo.setConstant(-0.5);
    p.hi.setConstant(0.5);
    p.M.resize(1, 5);
    p.M.setOnes();
    p.rlo.resize(1);
    p.rhi.resize(1);
    p.rlo[0] = -1.0;
    p.rhi[0] = 1.0;
    BoxQpOptions opt;
    opt.x0 = Eigen::VectorXd::Constant(5, 7.0); // violates box and row
    BoxQpResult r = solve_box_qp(p, opt);
    REQUIRE(r.converged);
    BoxQpResult cold = solve_box_qp(p);
    REQUIRE(cold.converged);
    CHECK((r.x - cold.x).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("equality bounds (lo == hi) are honoured") {
    BoxQpProblem p = unconstrained(3);
    p.q << 1.0, 1.0, 1.0;
    p.lo[1] = 0.25;
    p.hi[1] = 0.25;
    BoxQpResult r = solve_box_qp(p);
    REQUIRE(r.converged);
    CHECK(r.x[1] == doctest::Approx(0.25));
    CHECK(r.x[0] == doctest::Approx(-1.0));
}

TEST_CASE("oracle enumerates the derived two-sided example") {
    // 1d toy: min 1/2 x'Ix - x'1 with x <= 0.5 box: solution clamps at 0.5
    const int n = 2;
    Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd q = Eigen::VectorXd::Constant(n, -1.0);
    Eigen::VectorXd lo = Eigen::VectorXd::Constant(n, -kInf);
    Eigen::VectorXd hi = Eigen::VectorXd::Constant(n, 0.5);
    auto sols = oracle_active_set_qp(H, q, lo, hi, Eigen::MatrixXd(0, n), Eigen::VectorXd(0),
                                     Eigen::VectorXd(0));
    REQUIRE(sols.size() == 1);
    CHECK(sols[0].x[0] == doctest::Approx(0.5));
    CHECK(sols[0].mu_box[0] == doctest::Approx(0.5)); // positive at the upper bound
}
