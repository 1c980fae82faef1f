#include "doctest.h"

#include <cmath>
#include <set>

#include "vilab/grid.hpp"

using namespace vilab;

TEST_CASE("interval grid: uniform spacing and node placement") {
    Grid g = Grid::interval(0.0, 1.0, 3);
    CHECK(g.dim() == 1);
    CHECK(g.h(0) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(g.num_nodes() == 5);
    CHECK(g.num_interior() == 3);
    CHECK(g.num_boundary() == 2);

    std::vector<double> interior;
    for (std::size_t v = 0; v < g.num_nodes(); ++v)
        if (!g.is_boundary(v)) interior.push_back(g.x(v)[0]);
    REQUIRE(interior.size() == 3);
    CHECK(interior[0] == doctest::Approx(0.25));
    CHECK(interior[1] == doctest::Approx(0.5));
    CHECK(interior[2] == doctest::Approx(0.75));
}

TEST_CASE("rectangle grid: interior and boundary counts") {
    Grid g = Grid::rectangle({0.0, 1.0}, {0.0, 1.0}, 2, 2);
    CHECK(g.num_interior() == 4);
    CHECK(g.num_boundary() == 12);
    CHECK(g.num_nodes() == 16);
}

TEST_CASE("l_shape grid: removed quadrant, counts, brute-force match") {
    const int n = 5;
    Grid g = Grid::l_shape({-1.0, 1.0}, {-1.0, 1.0}, n, n);

    // closed-form counts for odd n with the corner on the lattice
    const int c = (n + 1) / 2;
    const std::size_t removed = static_cast<std::size_t>(c) * c;
    const std::size_t interior = static_cast<std::size_t>(n) * n - static_cast<std::size_t>(c) * c;
    const std::size_t total = static_cast<std::size_t>(n + 2) * (n + 2) - removed;
    CHECK(g.num_interior() == interior); // 16 for n=5
    CHECK(g.num_nodes() == total);       // 40 for n=5
    CHECK(g.num_interior() == 16);
    CHECK(g.num_nodes() == 40);

    // brute force over the full square lattice, straight from the set definition
    std::set<std::pair<int, int>> expect_nodes, expect_interior;
    for (int i = 0; i <= n + 1; ++i)
        for (int j = 0; j <= n + 1; ++j) {
            const bool strictly_removed = i > c && j < c;
            if (strictly_removed) continue;
            expect_nodes.insert({i, j});
            const bool inside_square = i >= 1 && i <= n && j >= 1 && j <= n;
            const bool in_open_domain = i < c || j > c; // x1 < 0 or x2 > 0
            if (inside_square && in_open_domain) expect_interior.insert({i, j});
        }
    std::set<std::pair<int, int>> got_nodes, got_interior;
    for (std::size_t v = 0; v < g.num_nodes(); ++v) {
        got_nodes.insert({g.node(v).idx[0], g.node(v).idx[1]});
        if (!g.is_boundary(v)) got_interior.insert({g.node(v).idx[0], g.node(v).idx[1]});
    }
    CHECK(got_nodes == expect_nodes);
    CHECK(got_interior == expect_interior);

    // no node in the open removed quadrant; reentrant corner is a boundary node
    for (std::size_t v = 0; v < g.num_nodes(); ++v)
        CHECK(!(g.x(v)[0] > 1e-12 && g.x(v)[1] < -1e-12));
    const int corner = g.node_at(c, c);
    REQUIRE(corner >= 0);
    CHECK(g.x(corner)[0] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(g.is_boundary(corner));
    CHECK(g.facet_count(corner) >= 2);
}

TEST_CASE("grid build is deterministic") {
    Grid a = Grid::l_shape({-1.0, 1.0}, {-1.0, 1.0}, 7, 7);
    Grid b = Grid::l_shape({-1.0, 1.0}, {-1.0, 1.0}, 7, 7);
    REQUIRE(a.num_nodes() == b.num_nodes());
    for (std::size_t v = 0; v < a.num_nodes(); ++v) {
        CHECK(a.node(v).idx == b.node(v).idx);
        CHECK(a.node(v).x[0] == b.node(v).x[0]); // bit identical
        CHECK(a.node(v).x[1] == b.node(v).x[1]);
        CHECK(a.node(v).boundary == b.node(v).boundary);
    }
}

TEST_CASE("grid build rejects bad input") {
    CHECK_THROWS_AS(Grid::interval(0.0, 1.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(Grid::interval(1.0, 0.0, 3), std::invalid_argument);
    CHECK_THROWS_AS(Grid::rectangle({0.0, 1.0}, {1.0, 0.0}, 3, 3), std::invalid_argument);
    // even n on the symmetric square puts no lattice node at the corner
    CHECK_THROWS_AS(Grid::l_shape({-1.0, 1.0}, {-1.0, 1.0}, 4, 4), std::invalid_argument);
}

TEST_CASE("label_boundary: interval endpoints") {
    Grid g = Grid::interval(0.0, 1.0, 3);
    SegmentRule ends = SegmentRule::dirichlet("ends", [](std::span<const double>) { return true; }, 0.0);
    BoundarySpec b = label_boundary(g, {&ends, 1});
    CHECK(b.segments()[0].count == 2);
    CHECK(b.num_dirichlet() == 2);
}

TEST_CASE("label_boundary: rectangle with one signorini edge") {
    Grid g = Grid::rectangle({0.0, 1.0}, {0.0, 1.0}, 4, 4);
    std::vector<SegmentRule> rules;
    rules.push_back(SegmentRule::signorini(
        "south", [](std::span<const double> x) { return x[1] == 0.0; }, 0.0));
    rules.push_back(SegmentRule::dirichlet(
        "walls", [](std::span<const double> x) { return x[1] > 0.0 || x[0] == 0.0 || x[0] == 1.0; },
        0.0));
    BoundarySpec b = label_boundary(g, rules);
    // the south-edge corners are claimed by both segments; dirichlet wins
    CHECK(b.segments()[0].count == 4);
    CHECK(b.segments()[1].count == 16);
    CHECK(b.segment_nodes("south").size() == 4);
}

TEST_CASE("label_boundary: Kinderlehrer split of the south edge") {
    Grid g = Grid::rectangle({-1.0, 1.0}, {0.0, 1.0}, 7, 3);
    std::vector<SegmentRule> rules;
    rules.push_back(SegmentRule::dirichlet(
        "outer", [](std::span<const double> x) { return x[1] > 0.0 || std::abs(x[0]) >= 1.0; }, 0.0));
    rules.push_back(SegmentRule::signorini(
        "contact", [](std::span<const double> x) { return x[1] == 0.0 && x[0] <= 0.0; }, 0.0,
        SignoriniSense::lower));
    rules.push_back(SegmentRule::neumann(
        "natural", [](std::span<const double> x) { return x[1] == 0.0 && x[0] > 0.0; }, 0.0));
    BoundarySpec b = label_boundary(g, rules);
    // south row has 9 nodes at x1 = -1..1 step 1/4; corners go to dirichlet
    CHECK(b.segment_nodes("contact").size() == 4); // x1 in {-0.75,-0.5,-0.25,0}
    CHECK(b.segment_nodes("natural").size() == 3); // x1 in {0.25,0.5,0.75}
    const auto contact = b.segment_nodes("contact");
    for (int v : contact) CHECK(g.x(v)[0] <= 0.0);
}

TEST_CASE("label_boundary errors") {
    Grid g = Grid::rectangle({0.0, 1.0}, {0.0, 1.0}, 3, 3);
    SUBCASE("uncovered node") {
        SegmentRule west = SegmentRule::dirichlet(
            "west", [](std::span<const double> x) { return x[0] == 0.0; }, 0.0);
        CHECK_THROWS_WITH_AS(label_boundary(g, {&west, 1}), doctest::Contains("uncovered"),
                             std::invalid_argument);
    }
    SUBCASE("overlap at a non-corner node") {
        std::vector<SegmentRule> rules;
        rules.push_back(SegmentRule::dirichlet("a", [](std::span<const double>) { return true; }, 0.0));
        rules.push_back(SegmentRule::dirichlet(
            "b", [](std::span<const double> x) { return x[1] == 0.0; }, 1.0));
        CHECK_THROWS_WITH_AS(label_boundary(g, rules), doctest::Contains("overlap"),
                             std::invalid_argument);
    }
}

TEST_CASE("mesh json dump contains labels") {
    Grid g = Grid::interval(0.0, 1.0, 2);
    SegmentRule ends = SegmentRule::dirichlet("ends", [](std::span<const double>) { return true; }, 0.0);
    BoundarySpec b = label_boundary(g, {&ends, 1});
    const std::string js = mesh_to_json(g, &b);
    CHECK(js.find("\"segment\": \"ends\"") != std::string::npos);
    CHECK(js.find("\"domain_kind\": \"interval\"") != std::string::npos);
}
