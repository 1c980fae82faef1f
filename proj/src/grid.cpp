#include "vilab/grid.hpp"

#include <atomic>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace vilab {

namespace {
std::atomic<std::uint64_t> grid_id_counter{1};

// Index-space tolerance for membership tests near the reentrant axes.
constexpr double kIdxTol = 1e-9;
} // namespace

Field Field::zeros(const Grid& g) {
    Field f(g.num_nodes(), 0.0);
    f.grid_id = g.id();
    return f;
}

Field Field::constant(const Grid& g, double c) {
    Field f(g.num_nodes(), c);
    f.grid_id = g.id();
    return f;
}

Field Field::from_function(const Grid& g, const std::function<double(std::span<const double>)>& fn) {
    Field f(g.num_nodes());
    f.grid_id = g.id();
    for (std::size_t i = 0; i < g.num_nodes(); ++i)
        f.values[i] = fn(g.x(i));
    return f;
}

Grid Grid::build(DomainKind kind, std::span<const Extent> extents, std::span<const int> n) {
    Grid g;
    g.kind_ = kind;
    g.dim_ = (kind == DomainKind::interval) ? 1 : 2;
    if (static_cast<int>(extents.size()) < g.dim_ || static_cast<int>(n.size()) < g.dim_)
        throw std::invalid_argument("build_grid: missing extents or n for the domain dimension");

    for (int k = 0; k < g.dim_; ++k) {
        if (n[k] < 1)
            throw std::invalid_argument("build_grid: n must be >= 1 per axis");
        if (!(extents[k].max > extents[k].min))
            throw std::invalid_argument("build_grid: inverted or degenerate extents");
        g.extents_[k] = extents[k];
        g.n_[k] = n[k];
        g.h_[k] = (extents[k].max - extents[k].min) / (n[k] + 1);
    }
    if (g.dim_ == 1) {
        g.n_[1] = -1; // single lattice row
        g.h_[1] = 0.0;
    }

    if (kind == DomainKind::l_shape) {
        for (int k = 0; k < 2; ++k) {
            if (!(extents[k].min < 0.0 && extents[k].max > 0.0))
                throw std::invalid_argument("build_grid: l_shape extents must straddle the origin");
            double c = (0.0 - extents[k].min) / g.h_[k];
            if (std::abs(c - std::round(c)) > kIdxTol * (n[k] + 2))
                throw std::invalid_argument(
                    "build_grid: l_shape needs a lattice node at the reentrant corner (adjust n)");
            g.corner_idx_[k] = std::round(c);
        }
    }

    const int rows = g.n_[0] + 2;
    const int cols = g.n_[1] + 2;
    g.lattice_.assign(static_cast<std::size_t>(rows) * cols, -1);

    auto strictly_removed = [&](int i, int j) {
        if (kind != DomainKind::l_shape) return false;
        return i > g.corner_idx_[0] + kIdxTol && j < g.corner_idx_[1] - kIdxTol;
    };
    auto interior = [&](int i, int j) {
        bool inside = i >= 1 && i <= g.n_[0] && (g.dim_ == 1 || (j >= 1 && j <= g.n_[1]));
        if (!inside) return false;
        if (kind != DomainKind::l_shape) return true;
        // open domain excludes the closed removed quadrant
        return !(i >= g.corner_idx_[0] - kIdxTol && j <= g.corner_idx_[1] + kIdxTol);
    };

    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            if (g.dim_ == 2 && strictly_removed(i, j)) continue;
            Node nd;
            nd.idx = {i, j};
            nd.x[0] = g.extents_[0].min + i * g.h_[0];
            if (g.dim_ == 2) nd.x[1] = g.extents_[1].min + j * g.h_[1];
            nd.boundary = !interior(i, j);
            g.lattice_[static_cast<std::size_t>(i) * cols + j] = static_cast<int>(g.nodes_.size());
            g.nodes_.push_back(nd);
            if (!nd.boundary) ++g.num_interior_;
        }
    }
    g.id_ = grid_id_counter.fetch_add(1);
    return g;
}

Grid Grid::interval(double a, double b, int n) {
    Extent e{a, b};
    int nn = n;
    return build(DomainKind::interval, {&e, 1}, {&nn, 1});
}

Grid Grid::rectangle(Extent ex0, Extent ex1, int n0, int n1) {
    std::array<Extent, 2> e{ex0, ex1};
    std::array<int, 2> n{n0, n1};
    return build(DomainKind::rectangle, e, n);
}

Grid Grid::l_shape(Extent ex0, Extent ex1, int n0, int n1) {
    std::array<Extent, 2> e{ex0, ex1};
    std::array<int, 2> n{n0, n1};
    return build(DomainKind::l_shape, e, n);
}

int Grid::node_at(int i0, int i1) const {
    if (i0 < 0 || i0 > n_[0] + 1) return -1;
    if (dim_ == 2 && (i1 < 0 || i1 > n_[1] + 1)) return -1;
    if (dim_ == 1) i1 = 0;
    return lattice_[static_cast<std::size_t>(i0) * lattice_cols() + i1];
}

bool Grid::inside_open(double f0, double f1) const {
    if (f0 <= kIdxTol || f0 >= n_[0] + 1 - kIdxTol) return false;
    if (dim_ == 2 && (f1 <= kIdxTol || f1 >= n_[1] + 1 - kIdxTol)) return false;
    if (kind_ == DomainKind::l_shape) {
        if (f0 >= corner_idx_[0] - kIdxTol && f1 <= corner_idx_[1] + kIdxTol) return false;
    }
    return true;
}

int Grid::facet_count(std::size_t node_id) const {
    const Node& nd = nodes_[node_id];
    if (!nd.boundary) return 0;
    int i = nd.idx[0], j = nd.idx[1];
    int count = 0;
    if (dim_ == 1) return 1; // each endpoint is its own facet
    switch (kind_) {
    case DomainKind::rectangle:
        if (i == 0) ++count;
        if (i == n_[0] + 1) ++count;
        if (j == 0) ++count;
        if (j == n_[1] + 1) ++count;
        break;
    case DomainKind::l_shape: {
        const double c0 = corner_idx_[0], c1 = corner_idx_[1];
        if (i == 0) ++count;                                   // west
        if (i == n_[0] + 1 && j >= c1 - kIdxTol) ++count;      // east (upper part)
        if (j == n_[1] + 1) ++count;                           // north
        if (j == 0 && i <= c0 + kIdxTol) ++count;              // south (left part)
        if (std::abs(i - c0) <= kIdxTol && j <= c1 + kIdxTol) ++count; // reentrant vertical
        if (std::abs(j - c1) <= kIdxTol && i >= c0 - kIdxTol) ++count; // reentrant horizontal
        break;
    }
    default:
        break;
    }
    return count;
}

SegmentRule SegmentRule::dirichlet(std::string name, std::function<bool(std::span<const double>)> where,
                                   double value) {
    return {std::move(name), ConditionKind::dirichlet, std::move(where),
            [value](std::span<const double>) { return value; }, SignoriniSense::upper};
}

SegmentRule SegmentRule::dirichlet_fn(std::string name, std::function<bool(std::span<const double>)> where,
                                      std::function<double(std::span<const double>)> value) {
    return {std::move(name), ConditionKind::dirichlet, std::move(where), std::move(value),
            SignoriniSense::upper};
}

SegmentRule SegmentRule::neumann(std::string name, std::function<bool(std::span<const double>)> where,
                                 double flux) {
    return {std::move(name), ConditionKind::neumann, std::move(where),
            [flux](std::span<const double>) { return flux; }, SignoriniSense::upper};
}

SegmentRule SegmentRule::signorini(std::string name, std::function<bool(std::span<const double>)> where,
                                   double gap, SignoriniSense sense) {
    return {std::move(name), ConditionKind::signorini, std::move(where),
            [gap](std::span<const double>) { return gap; }, sense};
}

SegmentRule SegmentRule::signorini_fn(std::string name, std::function<bool(std::span<const double>)> where,
                                      std::function<double(std::span<const double>)> gap,
                                      SignoriniSense sense) {
    return {std::move(name), ConditionKind::signorini, std::move(where), std::move(gap), sense};
}

namespace {
int kind_priority(ConditionKind k) {
    switch (k) {
    case ConditionKind::dirichlet: return 0;
    case ConditionKind::signorini: return 1;
    case ConditionKind::neumann: return 2;
    }
    return 3;
}
} // namespace

BoundarySpec label_boundary(const Grid& grid, std::span<const SegmentRule> rules) {
    if (rules.empty())
        throw std::invalid_argument("label_boundary: no segment rules given");

    BoundarySpec spec;
    for (const auto& r : rules)
        spec.segments_.push_back({r.name, r.kind, r.sense, 0});
    spec.segment_of_node_.assign(grid.num_nodes(), -1);
    spec.value_of_node_.assign(grid.num_nodes(), 0.0);

    for (std::size_t v = 0; v < grid.num_nodes(); ++v) {
        if (!grid.is_boundary(v)) continue;
        auto xv = grid.x(v);
        int chosen = -1;
        int claims = 0;
        for (std::size_t r = 0; r < rules.size(); ++r) {
            if (!rules[r].where(xv)) continue;
            ++claims;
            if (chosen < 0 ||
                kind_priority(rules[r].kind) < kind_priority(rules[chosen].kind))
                chosen = static_cast<int>(r);
        }
        if (claims == 0) {
            std::ostringstream os;
            os << "label_boundary: uncovered boundary node " << v << " at (";
            for (int k = 0; k < grid.dim(); ++k) os << (k ? "," : "") << xv[k];
            os << ")";
            throw std::invalid_argument(os.str());
        }
        if (claims > 1 && grid.facet_count(v) < 2) {
            std::ostringstream os;
            os << "label_boundary: overlapping segment claims at non-corner node " << v;
            throw std::invalid_argument(os.str());
        }
        spec.segment_of_node_[v] = chosen;
        spec.value_of_node_[v] = rules[chosen].data ? rules[chosen].data(xv) : 0.0;
        ++spec.segments_[chosen].count;
    }
    return spec;
}

std::size_t BoundarySpec::num_dirichlet() const {
    std::size_t n = 0;
    for (const auto& s : segments_)
        if (s.kind == ConditionKind::dirichlet) n += s.count;
    return n;
}

int BoundarySpec::find_segment(const std::string& name) const {
    for (std::size_t i = 0; i < segments_.size(); ++i)
        if (segments_[i].name == name) return static_cast<int>(i);
    return -1;
}

std::vector<int> BoundarySpec::segment_nodes(const std::string& name) const {
    int s = find_segment(name);
    if (s < 0)
        throw std::invalid_argument("unknown boundary segment: " + name);
    std::vector<int> out;
    for (std::size_t v = 0; v < segment_of_node_.size(); ++v)
        if (segment_of_node_[v] == s) out.push_back(static_cast<int>(v));
    return out;
}

std::string mesh_to_json(const Grid& grid, const BoundarySpec* boundary) {
    nlohmann::ordered_json j;
    j["domain_kind"] = grid.kind() == DomainKind::interval    ? "interval"
                       : grid.kind() == DomainKind::rectangle ? "rectangle"
                                                              : "l_shape";
    j["dim"] = grid.dim();
    j["n"] = nlohmann::ordered_json::array();
    j["h"] = nlohmann::ordered_json::array();
    for (int k = 0; k < grid.dim(); ++k) {
        j["n"].push_back(grid.n_interior(k));
        j["h"].push_back(grid.h(k));
    }
    auto nodes = nlohmann::ordered_json::array();
    for (std::size_t v = 0; v < grid.num_nodes(); ++v) {
        nlohmann::ordered_json nd;
        nd["id"] = v;
        nd["x"] = nlohmann::ordered_json::array();
        for (int k = 0; k < grid.dim(); ++k) nd["x"].push_back(grid.x(v)[k]);
        nd["boundary"] = grid.is_boundary(v);
        if (boundary && grid.is_boundary(v)) {
            int s = boundary->segment_of_node(v);
            nd["segment"] = s >= 0 ? boundary->segments()[s].name : "";
        }
        nodes.push_back(nd);
    }
    j["nodes"] = nodes;
    return j.dump(2);
}

} // namespace vilab
