#include "patrolkit/graph.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <queue>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace patrolkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void fail(const std::string& msg) {
    throw std::invalid_argument("patrol graph: " + msg);
}

}  // namespace

PatrolGraph PatrolGraph::build(std::vector<Vertex> vertices, std::vector<Edge> edges) {
    const int n = static_cast<int>(vertices.size());
    if (n == 0) fail("no vertices");

    std::sort(vertices.begin(), vertices.end(),
              [](const Vertex& a, const Vertex& b) { return a.id < b.id; });
    for (int i = 0; i < n; ++i) {
        if (vertices[i].id != i)
            fail("vertex ids must be consecutive integers from 0 (missing or duplicate id " +
                 std::to_string(i) + ")");
    }

    for (auto& e : edges) {
        if (e.u < 0 || e.u >= n || e.v < 0 || e.v >= n)
            fail("edge (" + std::to_string(e.u) + "," + std::to_string(e.v) +
                 ") references unknown vertex");
        if (e.u == e.v) fail("self-loop at vertex " + std::to_string(e.u));
        if (!(e.weight > 0.0))
            fail("edge (" + std::to_string(e.u) + "," + std::to_string(e.v) +
                 ") has non-positive weight " + std::to_string(e.weight));
        if (e.u > e.v) std::swap(e.u, e.v);
    }
    std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
        return a.u != b.u ? a.u < b.u : a.v < b.v;
    });
    for (size_t i = 1; i < edges.size(); ++i) {
        if (edges[i].u == edges[i - 1].u && edges[i].v == edges[i - 1].v)
            fail("duplicate edge (" + std::to_string(edges[i].u) + "," +
                 std::to_string(edges[i].v) + ")");
    }

    PatrolGraph g;
    g.vertices_ = std::move(vertices);
    g.edges_ = std::move(edges);
    g.adjacency_.assign(n, {});
    g.weight_.assign(n, std::vector<double>(n, 0.0));
    for (const auto& e : g.edges_) {
        g.adjacency_[e.u].push_back(e.v);
        g.adjacency_[e.v].push_back(e.u);
        g.weight_[e.u][e.v] = e.weight;
        g.weight_[e.v][e.u] = e.weight;
    }
    for (auto& nb : g.adjacency_) std::sort(nb.begin(), nb.end());

    // Connectivity (BFS from 0).
    std::vector<char> seen(n, 0);
    std::queue<VertexId> q;
    q.push(0);
    seen[0] = 1;
    while (!q.empty()) {
        VertexId v = q.front();
        q.pop();
        for (VertexId w : g.adjacency_[v])
            if (!seen[w]) {
                seen[w] = 1;
                q.push(w);
            }
    }
    for (int v = 0; v < n; ++v)
        if (!seen[v])
            fail("graph is disconnected: vertex " + std::to_string(v) +
                 " unreachable from vertex 0");

    return g;
}

bool PatrolGraph::adjacent(VertexId u, VertexId v) const {
    return u != v && weight_[u][v] > 0.0;
}

double PatrolGraph::edge_weight(VertexId u, VertexId v) const {
    if (!adjacent(u, v))
        fail("no edge between " + std::to_string(u) + " and " + std::to_string(v));
    return weight_[u][v];
}

DistanceMatrix shortest_paths(const PatrolGraph& graph) {
    const int n = graph.vertex_count();
    DistanceMatrix m;
    m.n = n;
    m.d.assign(static_cast<size_t>(n) * n, kInf);
    m.next.assign(static_cast<size_t>(n) * n, -1);

    // Dijkstra from each source; rows for i < j are mirrored onto (j, i)
    // so the matrix is symmetric by construction.
    std::vector<double> dist(n);
    for (int src = 0; src < n; ++src) {
        std::fill(dist.begin(), dist.end(), kInf);
        dist[src] = 0.0;
        using Item = std::pair<double, VertexId>;
        std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
        heap.emplace(0.0, src);
        while (!heap.empty()) {
            auto [dv, v] = heap.top();
            heap.pop();
            if (dv > dist[v]) continue;
            for (VertexId w : graph.neighbors(v)) {
                const double cand = dv + graph.edge_weight(v, w);
                if (cand < dist[w]) {
                    dist[w] = cand;
                    heap.emplace(cand, w);
                }
            }
        }
        for (int j = 0; j < n; ++j) {
            if (dist[j] == kInf)
                throw std::invalid_argument("patrol graph: no path between vertex " +
                                            std::to_string(src) + " and vertex " +
                                            std::to_string(j));
            if (j >= src) {
                m.d[static_cast<size_t>(src) * n + j] = dist[j];
                m.d[static_cast<size_t>(j) * n + src] = dist[j];
            }
        }
    }

    // First hop toward j: the lowest-id neighbor minimizing
    // w(i, nb) + d(nb, j). Progress is guaranteed because each hop removes
    // at least one positive edge weight from the remaining distance.
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) {
                m.next[static_cast<size_t>(i) * n + j] = i;
                continue;
            }
            VertexId best = -1;
            double best_len = kInf;
            for (VertexId nb : graph.neighbors(i)) {
                const double len = graph.edge_weight(i, nb) + m.dist(nb, j);
                if (len < best_len) {
                    best_len = len;
                    best = nb;
                }
            }
            m.next[static_cast<size_t>(i) * n + j] = best;
        }
    }
    return m;
}

PatrolGraph generate_random_graph(int n_vertices, int n_edges, double min_edge,
                                  double max_edge, uint64_t seed) {
    if (n_vertices < 1) fail("need at least one vertex");
    const long long max_possible =
        static_cast<long long>(n_vertices) * (n_vertices - 1) / 2;
    if (n_edges < n_vertices - 1)
        fail("n_edges=" + std::to_string(n_edges) + " cannot connect " +
             std::to_string(n_vertices) + " vertices (need at least n-1)");
    if (n_edges > max_possible)
        fail("n_edges=" + std::to_string(n_edges) + " exceeds maximum " +
             std::to_string(max_possible) + " for " + std::to_string(n_vertices) +
             " vertices");
    if (!(min_edge > 0.0) || min_edge > max_edge)
        fail("edge length bounds must satisfy 0 < min_edge <= max_edge");

    SimRng rng(seed);

    std::vector<Vertex> vertices(n_vertices);
    for (int i = 0; i < n_vertices; ++i) {
        vertices[i].id = i;
        vertices[i].x = rng.uniform(0.0, 100.0);
        vertices[i].y = rng.uniform(0.0, 100.0);
    }

    std::vector<Edge> edges;
    edges.reserve(n_edges);
    std::vector<std::vector<char>> present(n_vertices, std::vector<char>(n_vertices, 0));
    auto add_edge = [&](VertexId u, VertexId v) {
        edges.push_back({u, v, rng.uniform(min_edge, max_edge)});
        present[u][v] = present[v][u] = 1;
    };

    // Uniform random spanning tree via Pruefer sequence decode.
    if (n_vertices == 2) {
        add_edge(0, 1);
    } else if (n_vertices >= 3) {
        std::vector<int> pruefer(n_vertices - 2);
        for (auto& p : pruefer) p = static_cast<int>(rng.uniform_int(n_vertices));
        std::vector<int> degree(n_vertices, 1);
        for (int p : pruefer) ++degree[p];
        std::priority_queue<int, std::vector<int>, std::greater<>> leaves;
        for (int v = 0; v < n_vertices; ++v)
            if (degree[v] == 1) leaves.push(v);
        for (int p : pruefer) {
            const int leaf = leaves.top();
            leaves.pop();
            add_edge(leaf, p);
            if (--degree[p] == 1) leaves.push(p);
        }
        const int a = leaves.top();
        leaves.pop();
        const int b = leaves.top();
        add_edge(std::min(a, b), std::max(a, b));
    }

    while (static_cast<int>(edges.size()) < n_edges) {
        const auto u = static_cast<VertexId>(rng.uniform_int(n_vertices));
        const auto v = static_cast<VertexId>(rng.uniform_int(n_vertices));
        if (u == v || present[u][v]) continue;
        add_edge(u, v);
    }

    return PatrolGraph::build(std::move(vertices), std::move(edges));
}

std::string graph_to_json(const PatrolGraph& graph) {
    nlohmann::json j;
    j["vertices"] = nlohmann::json::array();
    for (const auto& v : graph.vertices())
        j["vertices"].push_back({{"id", v.id}, {"x", v.x}, {"y", v.y}});
    j["edges"] = nlohmann::json::array();
    for (const auto& e : graph.edges())
        j["edges"].push_back({{"u", e.u}, {"v", e.v}, {"weight", e.weight}});
    return j.dump(2) + "\n";
}

PatrolGraph graph_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("patrol graph: malformed JSON: ") + e.what());
    }
    if (!j.contains("vertices") || !j.contains("edges"))
        throw std::invalid_argument("patrol graph: JSON must contain 'vertices' and 'edges'");

    std::vector<Vertex> vertices;
    std::vector<Edge> edges;
    try {
        for (const auto& jv : j.at("vertices"))
            vertices.push_back({jv.at("id").get<VertexId>(), jv.at("x").get<double>(),
                                jv.at("y").get<double>()});
        for (const auto& je : j.at("edges")) {
            Edge e{je.at("u").get<VertexId>(), je.at("v").get<VertexId>(),
                   je.at("weight").get<double>()};
            // A file may legitimately list one direction only; listing both
            // directions is accepted when they agree and rejected otherwise.
            bool mirrored = false;
            for (const auto& prev : edges) {
                if ((prev.u == e.v && prev.v == e.u) || (prev.u == e.u && prev.v == e.v)) {
                    if (prev.weight != e.weight)
                        throw std::invalid_argument(
                            "patrol graph: edge (" + std::to_string(e.u) + "," +
                            std::to_string(e.v) + ") listed twice with different weights");
                    mirrored = true;
                    break;
                }
            }
            if (!mirrored) edges.push_back(e);
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("patrol graph: malformed field: ") + e.what());
    }
    return PatrolGraph::build(std::move(vertices), std::move(edges));
}

PatrolGraph load_graph(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("patrol graph: cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return graph_from_json(buf.str());
}

void save_graph(const PatrolGraph& graph, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("patrol graph: cannot write " + path);
    out << graph_to_json(graph);
}

}  // namespace patrolkit
