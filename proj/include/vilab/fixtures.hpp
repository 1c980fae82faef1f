#pragma once

#include <functional>
#include <string>
#include <vector>

#include "vilab/assembly.hpp"
#include "vilab/obstacle.hpp"

namespace vilab {

enum class ErrorNorm { nodal_max, discrete_l2 };

/// Analytic benchmark problem: exact solution, data generators, the expected
/// observed-order window of a refinement study, and the error norm. For
/// singular cases the singular point is a boundary node; it and its
/// immediate lattice neighbours are excluded from the error norm.
struct AnalyticCase {
    std::string name;
    std::string description;
    std::function<double(std::span<const double>)> exact;
    std::function<double(std::span<const double>)> load;
    std::vector<int> refinements;          // primary-axis n per level
    double rate_lo = 0.0, rate_hi = 10.0;  // expected observed-order window
    ErrorNorm norm = ErrorNorm::nodal_max;
    bool exclude_singular = false;
    std::array<double, 2> singular_point{0.0, 0.0};

    // builds (grid, boundary) and solves the case at one refinement level
    std::function<Field(int n, Grid& grid_out)> solve_level;
};

struct ConvergenceStudy {
    struct Level {
        int n = 0;
        double h = 0.0;
        double error = 0.0;
        double local_order = 0.0; // vs previous level
    };
    std::string case_name;
    std::vector<Level> levels;
    double observed_order = 0.0; // least-squares slope of log e vs log h
    double rate_lo = 0.0, rate_hi = 0.0;
    bool within_window = false;
};

/// Least-squares slope of log(error) against log(h); needs >= 3 levels and
/// asserts the slope against the case window.
ConvergenceStudy run_convergence_study(const AnalyticCase& acase);

const std::vector<AnalyticCase>& fixture_registry();
const AnalyticCase& find_fixture(const std::string& name);

std::string study_table(const ConvergenceStudy& s);
std::string study_csv(const ConvergenceStudy& s);

} // namespace vilab
