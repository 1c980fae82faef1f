#pragma once

#include <string>
#include <vector>

namespace vilab {

enum class Termination { converged, max_iter, stalled };

inline const char* to_string(Termination t) {
    switch (t) {
    case Termination::converged: return "converged";
    case Termination::max_iter: return "max_iter";
    case Termination::stalled: return "stalled";
    }
    return "?";
}

/// Iteration trace of a solver: residual or merit value per step, the step
/// length taken, and the reason the loop ended.
struct ConvergenceReport {
    struct Iter {
        int k = 0;
        double value = 0.0;
        double step = 0.0;
    };
    std::vector<Iter> iterations;
    Termination terminated = Termination::converged;
    double wall_time_s = 0.0;

    bool converged() const { return terminated == Termination::converged; }
};

} // namespace vilab
