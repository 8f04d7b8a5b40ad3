#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "patrolkit/rng.hpp"

namespace patrolkit {

using VertexId = int;

struct Vertex {
    VertexId id = 0;
    double x = 0.0;
    double y = 0.0;
};

struct Edge {
    VertexId u = 0;
    VertexId v = 0;
    double weight = 0.0;
};

// Weighted undirected patrol graph. Construction validates all structural
// invariants (symmetry, connectivity, positive weights, no self-loops, no
// duplicate edges); instances are immutable afterwards and safe to share
// across threads.
class PatrolGraph {
public:
    // Throws std::invalid_argument with a descriptive message on any
    // invariant violation. Edges are canonicalized (u < v, sorted).
    static PatrolGraph build(std::vector<Vertex> vertices, std::vector<Edge> edges);

    int vertex_count() const { return static_cast<int>(vertices_.size()); }
    int edge_count() const { return static_cast<int>(edges_.size()); }

    const std::vector<Vertex>& vertices() const { return vertices_; }
    const std::vector<Edge>& edges() const { return edges_; }

    // Neighbor ids in ascending order.
    const std::vector<VertexId>& neighbors(VertexId v) const { return adjacency_[v]; }

    bool adjacent(VertexId u, VertexId v) const;

    // Throws if (u, v) is not an edge.
    double edge_weight(VertexId u, VertexId v) const;

private:
    PatrolGraph() = default;

    std::vector<Vertex> vertices_;
    std::vector<Edge> edges_;
    std::vector<std::vector<VertexId>> adjacency_;
    std::vector<std::vector<double>> weight_;  // dense lookup, 0 = no edge
};

// All-pairs shortest paths with a first-hop routing table.
struct DistanceMatrix {
    int n = 0;
    std::vector<double> d;        // n*n, symmetric, d[i*n+i] = 0
    std::vector<VertexId> next;   // n*n, first hop from i toward j; next(i,i) = i

    double dist(VertexId i, VertexId j) const { return d[static_cast<size_t>(i) * n + j]; }
    VertexId next_hop(VertexId i, VertexId j) const { return next[static_cast<size_t>(i) * n + j]; }
};

// Exact shortest paths (Dijkstra per source). Ties between equal-length
// first hops are broken toward the lowest VertexId so that routing is
// deterministic and replayable.
DistanceMatrix shortest_paths(const PatrolGraph& graph);

// Connected random graph: uniform random spanning tree (Pruefer decode)
// plus uniformly sampled extra edges, weights uniform in
// [min_edge, max_edge]. Same seed, same graph.
PatrolGraph generate_random_graph(int n_vertices, int n_edges, double min_edge,
                                  double max_edge, uint64_t seed);

std::string graph_to_json(const PatrolGraph& graph);
PatrolGraph graph_from_json(const std::string& text);

PatrolGraph load_graph(const std::string& path);
void save_graph(const PatrolGraph& graph, const std::string& path);

}  // namespace patrolkit
