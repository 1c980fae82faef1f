#include "doctest.h"

#include <cmath>

#include "vilab/fixtures.hpp"
#include "vilab/oracles.hpp"
#include "vilab/rng.hpp"

using namespace vilab;

TEST_CASE("registry lists the benchmark cases") {
    const auto& reg = fixture_registry();
    CHECK(reg.size() == 4);
    CHECK_NOTHROW(find_fixture("square_smooth"));
    CHECK_NOTHROW(find_fixture("lshape_singular"));
    CHECK_NOTHROW(find_fixture("kinderlehrer_signorini"));
    CHECK_THROWS_AS(find_fixture("nope"), std::invalid_argument);
}

TEST_CASE("least-squares slope recovers an exact power law") {
    AnalyticCase c;
    c.name = "synthetic";
    c.rate_lo = 1.4;
    c.rate_hi = 1.6;
    c.refinements = {4, 8, 16, 32};
    c.exact = [](std::span<const double>) { return 0.0; };
    c.solve_level = [](int n, Grid& gout) {
        gout = Grid::interval(0.0, 1.0, n);
        // plant an error field with e = h^{3/2} at a single interior node
        Field u = Field::zeros(gout);
        const double h = gout.h(0);
        for (std::size_t v = 0; v < gout.num_nodes(); ++v)
            if (!gout.is_boundary(v)) u.values[v] = std::pow(h, 1.5);
        return u;
    };
    ConvergenceStudy s = run_convergence_study(c);
    CHECK(s.observed_order == doctest::Approx(1.5).epsilon(1e-10));
    CHECK(s.within_window);
}

TEST_CASE("study machinery needs three levels") {
    AnalyticCase c = find_fixture("interval_smooth");
    c.refinements = {4, 8};
    CHECK_THROWS_AS(run_convergence_study(c), std::invalid_argument);
}

TEST_CASE("smooth 1d case observes second order") {
    ConvergenceStudy s = run_convergence_study(find_fixture("interval_smooth"));
    CHECK(s.within_window);
    CHECK(s.observed_order >= 1.9);
    CHECK(s.observed_order <= 2.1);
    CHECK(study_table(s).find("observed order") != std::string::npos);
    CHECK(study_csv(s).find("n,h,error,local_order") == 0);
}

TEST_CASE("oracles are deterministic given the same inputs") {
    Rng rng(10);
    const int n = 6;
    Eigen::MatrixXd R(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) R(i, j) = rng.uniform(-1.0, 1.0);
    Eigen::MatrixXd H = R * R.transpose() + n * Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd q(n);
    for (int i = 0; i < n; ++i) q[i] = rng.uniform(-2.0, 2.0);
    Eigen::VectorXd lo = Eigen::VectorXd::Constant(n, -0.2);
    Eigen::VectorXd hi = Eigen::VectorXd::Constant(n, 0.2);
    auto a = oracle_active_set_qp(H, q, lo, hi, Eigen::MatrixXd(0, n), Eigen::VectorXd(0),
                                  Eigen::VectorXd(0));
    auto b = oracle_active_set_qp(H, q, lo, hi, Eigen::MatrixXd(0, n), Eigen::VectorXd(0),
                                  Eigen::VectorXd(0));
    REQUIRE(a.size() == 1);
    REQUIRE(b.size() == 1);
    CHECK((a[0].x - b[0].x).cwiseAbs().maxCoeff() == 0.0);
}
