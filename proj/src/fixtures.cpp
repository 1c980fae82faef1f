#include "vilab/fixtures.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace vilab {

namespace {

constexpr double pi = std::numbers::pi;

double polar_rho(double x, double y) { return std::hypot(x, y); }

// angle in [0, 2*pi)
double polar_theta(double x, double y) {
    double t = std::atan2(y, x);
    if (t < 0.0) t += 2.0 * pi;
    return t;
}

// rho^{2/3} sin(2 theta / 3): harmonic with unbounded gradient at the
// reentrant corner of the L-shape
double lshape_exact(std::span<const double> x) {
    const double rho = polar_rho(x[0], x[1]);
    if (rho == 0.0) return 0.0;
    return std::pow(rho, 2.0 / 3.0) * std::sin(2.0 / 3.0 * polar_theta(x[0], x[1]));
}

// -rho^{1/2} cos(theta/2): the Signorini benchmark that misses H^2
double kinderlehrer_exact(std::span<const double> x) {
    const double rho = polar_rho(x[0], x[1]);
    if (rho == 0.0) return 0.0;
    double t = std::atan2(x[1], x[0]); // in [0, pi] on the upper half plane
    if (t < 0.0) t = 0.0;
    return -std::sqrt(rho) * std::cos(0.5 * t);
}

double smooth_exact_2d(std::span<const double> x) {
    return std::sin(pi * x[0]) * std::sin(pi * x[1]);
}
double smooth_load_2d(std::span<const double> x) {
    return 2.0 * pi * pi * std::sin(pi * x[0]) * std::sin(pi * x[1]);
}

double smooth_exact_1d(std::span<const double> x) { return std::sin(pi * x[0]); }
double smooth_load_1d(std::span<const double> x) { return pi * pi * std::sin(pi * x[0]); }

std::vector<AnalyticCase> build_registry() {
    std::vector<AnalyticCase> reg;

    {
        AnalyticCase c;
        c.name = "interval_smooth";
        c.description = "-u'' = pi^2 sin(pi x) on (0,1), zero Dirichlet data";
        c.exact = smooth_exact_1d;
        c.load = smooth_load_1d;
        c.refinements = {8, 16, 32, 64};
        c.rate_lo = 1.9;
        c.rate_hi = 2.1;
        c.solve_level = [](int n, Grid& gout) {
            gout = Grid::interval(0.0, 1.0, n);
            SegmentRule all = SegmentRule::dirichlet("ends", [](std::span<const double>) { return true; }, 0.0);
            BoundarySpec b = label_boundary(gout, {&all, 1});
            DiscreteOperator op = assemble(gout, CoefficientField::constant(), b);
            return solve_dirichlet(op, Field::from_function(gout, smooth_load_1d));
        };
        reg.push_back(std::move(c));
    }

    {
        AnalyticCase c;
        c.name = "square_smooth";
        c.description = "-lap u = 2 pi^2 sin(pi x1) sin(pi x2) on the unit square";
        c.exact = smooth_exact_2d;
        c.load = smooth_load_2d;
        c.refinements = {8, 16, 32, 64};
        c.rate_lo = 1.9;
        c.rate_hi = 2.1;
        c.solve_level = [](int n, Grid& gout) {
            gout = Grid::rectangle({0.0, 1.0}, {0.0, 1.0}, n, n);
            SegmentRule all = SegmentRule::dirichlet("boundary", [](std::span<const double>) { return true; }, 0.0);
            BoundarySpec b = label_boundary(gout, {&all, 1});
            DiscreteOperator op = assemble(gout, CoefficientField::constant(), b);
            return solve_dirichlet(op, Field::from_function(gout, smooth_load_2d));
        };
        reg.push_back(std::move(c));
    }

    {
        AnalyticCase c;
        c.name = "lshape_singular";
        c.description = "harmonic rho^{2/3} sin(2 theta/3) on the L-shape; "
                        "Dirichlet data from the exact solution";
        c.exact = lshape_exact;
        c.load = [](std::span<const double>) { return 0.0; };
        // the coarsest level is pre-asymptotic; start at n = 15
        c.refinements = {15, 31, 63, 127};
        c.rate_lo = 0.5;
        c.rate_hi = 1.5;
        c.exclude_singular = true;
        c.singular_point = {0.0, 0.0};
        c.solve_level = [](int n, Grid& gout) {
            gout = Grid::l_shape({-1.0, 1.0}, {-1.0, 1.0}, n, n);
            SegmentRule all = SegmentRule::dirichlet_fn(
                "boundary", [](std::span<const double>) { return true; }, lshape_exact);
            BoundarySpec b = label_boundary(gout, {&all, 1});
            DiscreteOperator op = assemble(gout, CoefficientField::constant(), b);
            return solve_dirichlet(op, Field::zeros(gout));
        };
        reg.push_back(std::move(c));
    }

    {
        AnalyticCase c;
        c.name = "kinderlehrer_signorini";
        c.description = "Signorini contact -rho^{1/2} cos(theta/2) on a half strip: "
                        "unilateral segment on the left of the south edge, natural on the right";
        c.exact = kinderlehrer_exact;
        c.load = [](std::span<const double>) { return 0.0; };
        // the coarsest levels sit before the asymptotic range; start at n = 15
        c.refinements = {15, 31, 63, 127};
        c.rate_lo = 0.25;
        c.rate_hi = 1.5;
        c.exclude_singular = true;
        c.singular_point = {0.0, 0.0};
        c.solve_level = [](int n, Grid& gout) {
            const int n2 = (n - 1) / 2; // keeps the spacing isotropic on [-1,1]x[0,1]
            gout = Grid::rectangle({-1.0, 1.0}, {0.0, 1.0}, n, n2);
            std::vector<SegmentRule> rules;
            rules.push_back(SegmentRule::dirichlet_fn(
                "outer",
                [](std::span<const double> x) { return x[1] > 0.0 || std::abs(x[0]) >= 1.0; },
                kinderlehrer_exact));
            rules.push_back(SegmentRule::signorini(
                "contact",
                [](std::span<const double> x) { return x[1] == 0.0 && x[0] <= 0.0; }, 0.0,
                SignoriniSense::lower));
            rules.push_back(SegmentRule::neumann(
                "natural", [](std::span<const double> x) { return x[1] == 0.0 && x[0] > 0.0; }, 0.0));
            BoundarySpec b = label_boundary(gout, rules);
            DiscreteOperator op = assemble(gout, CoefficientField::constant(), b);
            ObstacleSpec spec = ObstacleSpec::boundary_obstacle(op, "contact");
            ObstacleOptions oo;
            oo.tol = 1e-10;
            MixedSolution sol = solve_signorini(op, Field::zeros(gout), spec, ObstacleMethod::pdas, oo);
            if (!sol.converged)
                throw std::runtime_error("kinderlehrer fixture: contact solve did not converge");
            return sol.u;
        };
        reg.push_back(std::move(c));
    }

    return reg;
}

} // namespace

const std::vector<AnalyticCase>& fixture_registry() {
    static const std::vector<AnalyticCase> reg = build_registry();
    return reg;
}

const AnalyticCase& find_fixture(const std::string& name) {
    for (const auto& c : fixture_registry())
        if (c.name == name) return c;
    throw std::invalid_argument("unknown fixture: " + name);
}

ConvergenceStudy run_convergence_study(const AnalyticCase& acase) {
    if (acase.refinements.size() < 3)
        throw std::invalid_argument("run_convergence_study: need at least 3 refinement levels");

    ConvergenceStudy study;
    study.case_name = acase.name;
    study.rate_lo = acase.rate_lo;
    study.rate_hi = acase.rate_hi;

    for (int n : acase.refinements) {
        Grid grid;
        Field u = acase.solve_level(n, grid);

        double err = 0.0, l2 = 0.0, wsum = 0.0;
        for (std::size_t v = 0; v < grid.num_nodes(); ++v) {
            if (grid.is_boundary(v)) continue;
            if (acase.exclude_singular) {
                // skip the lattice neighbourhood of the singular point
                bool close = true;
                for (int k = 0; k < grid.dim(); ++k)
                    if (std::abs(grid.x(v)[k] - acase.singular_point[k]) > 1.5 * grid.h(k))
                        close = false;
                if (close) continue;
            }
            const double e = std::abs(u.values[v] - acase.exact(grid.x(v)));
            err = std::max(err, e);
            l2 += e * e;
            wsum += 1.0;
        }
        ConvergenceStudy::Level lv;
        lv.n = n;
        lv.h = grid.h(0);
        lv.error = acase.norm == ErrorNorm::nodal_max ? err : std::sqrt(l2 / std::max(wsum, 1.0));
        if (!study.levels.empty()) {
            const auto& pr = study.levels.back();
            lv.local_order = std::log(pr.error / lv.error) / std::log(pr.h / lv.h);
        }
        study.levels.push_back(lv);
    }

    // least-squares slope of log(error) vs log(h)
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(study.levels.size());
    for (const auto& lv : study.levels) {
        const double X = std::log(lv.h), Y = std::log(lv.error);
        sx += X;
        sy += Y;
        sxx += X * X;
        sxy += X * Y;
    }
    study.observed_order = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    study.within_window = study.observed_order >= study.rate_lo && study.observed_order <= study.rate_hi;
    return study;
}

std::string study_table(const ConvergenceStudy& s) {
    std::ostringstream os;
    os << "case: " << s.case_name << "\n";
    os << "  n       h             error         order\n";
    for (const auto& lv : s.levels) {
        char line[128];
        std::snprintf(line, sizeof(line), "  %-6d  %-12.6g  %-12.6g  %.3f\n", lv.n, lv.h, lv.error,
                      lv.local_order);
        os << line;
    }
    char tail[160];
    std::snprintf(tail, sizeof(tail), "  observed order %.4f (window [%.2f, %.2f]) -> %s\n",
                  s.observed_order, s.rate_lo, s.rate_hi, s.within_window ? "ok" : "OUT OF WINDOW");
    os << tail;
    return os.str();
}

std::string study_csv(const ConvergenceStudy& s) {
    std::ostringstream os;
    os << "n,h,error,local_order\n";
    os.precision(17);
    for (const auto& lv : s.levels)
        os << lv.n << "," << lv.h << "," << lv.error << "," << lv.local_order << "\n";
    return os.str();
}

} // namespace vilab
