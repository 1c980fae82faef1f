#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace vilab {

class Grid;

/// Nodal scalar field over a grid. The grid id ties a field to the grid it
/// was built on; 0 means "unchecked" (synthetic operators, test surrogates).
struct Field {
    std::vector<double> values;
    std::uint64_t grid_id = 0;

    Field() = default;
    explicit Field(std::size_t n, double fill = 0.0) : values(n, fill) {}

    std::size_t size() const { return values.size(); }
    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }

    static Field zeros(const Grid& g);
    static Field constant(const Grid& g, double c);
    static Field from_function(const Grid& g, const std::function<double(std::span<const double>)>& fn);
};

inline void check_same_size(const Field& f, std::size_t n, const char* what) {
    if (f.size() != n)
        throw std::invalid_argument(std::string(what) + ": field length mismatch");
}

} // namespace vilab
