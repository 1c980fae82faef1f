#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vilab/field.hpp"

namespace vilab {

enum class DomainKind { interval, rectangle, l_shape };

enum class ConditionKind { dirichlet, neumann, signorini };

/// Orientation of a Signorini constraint: lower means u >= g, upper means u <= g.
enum class SignoriniSense { lower, upper };

struct Extent {
    double min = 0.0;
    double max = 1.0;
};

/// Structured node set over an interval, a rectangle, or an L-shaped domain
/// (bounding square with the closed (+,-) quadrant removed, reentrant corner
/// at the origin). Nodes are ordered lexicographically by lattice index
/// (axis 0 outer), so rebuilding with identical inputs is bit-identical.
/// Immutable after construction.
class Grid {
public:
    struct Node {
        std::array<int, 2> idx{0, 0};
        std::array<double, 2> x{0.0, 0.0};
        bool boundary = false;
    };

    static Grid build(DomainKind kind, std::span<const Extent> extents, std::span<const int> n);

    // convenience factories
    static Grid interval(double a, double b, int n);
    static Grid rectangle(Extent ex0, Extent ex1, int n0, int n1);
    static Grid l_shape(Extent ex0, Extent ex1, int n0, int n1);

    DomainKind kind() const { return kind_; }
    int dim() const { return dim_; }
    std::uint64_t id() const { return id_; }
    double h(int axis) const { return h_[axis]; }
    Extent extent(int axis) const { return extents_[axis]; }
    int n_interior(int axis) const { return n_[axis]; }

    std::size_t num_nodes() const { return nodes_.size(); }
    std::size_t num_interior() const { return num_interior_; }
    std::size_t num_boundary() const { return nodes_.size() - num_interior_; }

    const Node& node(std::size_t i) const { return nodes_[i]; }
    const std::vector<Node>& nodes() const { return nodes_; }
    bool is_boundary(std::size_t i) const { return nodes_[i].boundary; }
    std::span<const double> x(std::size_t i) const { return {nodes_[i].x.data(), static_cast<std::size_t>(dim_)}; }

    /// Node id at lattice index, or -1 when the lattice point is not part of
    /// the domain closure (removed L-shape quadrant, out of range).
    int node_at(int i0, int i1 = 0) const;

    /// Membership of a fractional lattice point in the open domain. Used by
    /// the assembly to size dual-cell faces; tolerant near the reentrant axes.
    bool inside_open(double f0, double f1 = 0.0) const;

    /// Number of boundary facets through a node (>= 2 identifies a corner).
    int facet_count(std::size_t node_id) const;

private:
    DomainKind kind_ = DomainKind::interval;
    int dim_ = 1;
    std::uint64_t id_ = 0;
    std::array<Extent, 2> extents_{};
    std::array<int, 2> n_{0, 0};
    std::array<double, 2> h_{0.0, 0.0};
    std::array<double, 2> corner_idx_{0.0, 0.0}; // fractional lattice index of x=0 (l_shape)
    std::vector<Node> nodes_;
    std::vector<int> lattice_;   // (n0+2)*(n1+2) lattice -> node id or -1
    std::size_t num_interior_ = 0;

    int lattice_cols() const { return n_[1] + 2; }
};

/// Geometric descriptor of one boundary segment: a name, the condition kind,
/// a coordinate predicate claiming boundary nodes, and the condition data
/// (Dirichlet value, Neumann flux, or Signorini gap) sampled at label time.
struct SegmentRule {
    std::string name;
    ConditionKind kind = ConditionKind::dirichlet;
    std::function<bool(std::span<const double>)> where;
    std::function<double(std::span<const double>)> data; // value/flux/gap
    SignoriniSense sense = SignoriniSense::upper;

    static SegmentRule dirichlet(std::string name, std::function<bool(std::span<const double>)> where,
                                 double value = 0.0);
    static SegmentRule dirichlet_fn(std::string name, std::function<bool(std::span<const double>)> where,
                                    std::function<double(std::span<const double>)> value);
    static SegmentRule neumann(std::string name, std::function<bool(std::span<const double>)> where,
                               double flux = 0.0);
    static SegmentRule signorini(std::string name, std::function<bool(std::span<const double>)> where,
                                 double gap, SignoriniSense sense = SignoriniSense::upper);
    static SegmentRule signorini_fn(std::string name, std::function<bool(std::span<const double>)> where,
                                    std::function<double(std::span<const double>)> gap,
                                    SignoriniSense sense = SignoriniSense::upper);
};

/// Total labeling of the boundary nodes of one grid. Condition data is
/// evaluated once at construction; the object is immutable afterwards.
class BoundarySpec {
public:
    struct Segment {
        std::string name;
        ConditionKind kind;
        SignoriniSense sense;
        std::size_t count = 0;
    };

    const std::vector<Segment>& segments() const { return segments_; }
    int segment_of_node(std::size_t node) const { return segment_of_node_[node]; }
    double value_of_node(std::size_t node) const { return value_of_node_[node]; }

    bool is_dirichlet(std::size_t node) const {
        int s = segment_of_node_[node];
        return s >= 0 && segments_[s].kind == ConditionKind::dirichlet;
    }
    bool is_neumann(std::size_t node) const {
        int s = segment_of_node_[node];
        return s >= 0 && segments_[s].kind == ConditionKind::neumann;
    }
    bool is_signorini(std::size_t node) const {
        int s = segment_of_node_[node];
        return s >= 0 && segments_[s].kind == ConditionKind::signorini;
    }
    SignoriniSense sense_of_node(std::size_t node) const {
        return segments_[segment_of_node_[node]].sense;
    }

    std::size_t num_dirichlet() const;
    int find_segment(const std::string& name) const;
    /// Node ids belonging to a segment, in grid order.
    std::vector<int> segment_nodes(const std::string& name) const;

    friend BoundarySpec label_boundary(const Grid& grid, std::span<const SegmentRule> rules);

private:
    std::vector<Segment> segments_;
    std::vector<int> segment_of_node_;     // per grid node, -1 for interior
    std::vector<double> value_of_node_;    // condition datum per boundary node
};

/// Assigns every boundary node to exactly one segment. Nodes claimed by
/// several rules are resolved by condition priority dirichlet > signorini >
/// neumann (ties by rule order) when the node is a geometric corner;
/// elsewhere a multiple claim is an overlap error. Uncovered nodes are
/// errors too.
BoundarySpec label_boundary(const Grid& grid, std::span<const SegmentRule> rules);

/// JSON dump of node coordinates and labels (CLI --dump-mesh).
std::string mesh_to_json(const Grid& grid, const BoundarySpec* boundary);

} // namespace vilab
