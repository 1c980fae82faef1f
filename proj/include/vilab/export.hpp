#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "vilab/assembly.hpp"
#include "vilab/friction.hpp"
#include "vilab/gnep.hpp"
#include "vilab/obstacle.hpp"

namespace vilab {

/// Shortest round-trip decimal representation of a double (bit-exact
/// determinism with readable files).
std::string format_double(double v);

void write_text_file(const std::filesystem::path& path, const std::string& content);

/// Plain field: node_id,x1,x2,u
std::string field_csv(const Grid& grid, const Field& u);

/// Mixed solution: node_id,x1,x2,u,lambda,active
std::string mixed_solution_csv(const Grid& grid, const MixedSolution& sol);

/// Friction solution: node_id,x1,x2,u,lambda,active,p,state
std::string friction_solution_csv(const Grid& grid, const FrictionSpec& fspec,
                                  const FrictionSolution& sol);

std::string merit_trace_csv(const ConvergenceReport& rep);

} // namespace vilab
