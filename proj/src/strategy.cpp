#include "patrolkit/strategy.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace patrolkit {

AgentBelief AgentBelief::fresh(AgentId self, VertexId start, int n_vertices) {
    AgentBelief b;
    b.self = self;
    b.current_vertex = start;
    b.target_vertex = start;
    b.idleness_estimate.assign(n_vertices, 0.0);
    return b;
}

void AgentBelief::advance(double dt) {
    for (double& v : idleness_estimate) v += dt;
}

void on_broadcast(AgentBelief& belief, const Broadcast& msg) {
    belief.idleness_estimate[msg.current] = 0.0;
    belief.intentions[msg.sender] = msg.next;
}

VertexId pick_target(const AgentBelief& belief, const PatrolGraph& graph,
                     const std::vector<double>& utilities) {
    const auto& nbs = graph.neighbors(belief.current_vertex);
    if (nbs.empty())
        throw std::invalid_argument("strategy: vertex " +
                                    std::to_string(belief.current_vertex) +
                                    " has no neighbors");

    std::set<VertexId> announced;
    for (const auto& [agent, target] : belief.intentions)
        if (agent != belief.self) announced.insert(target);

    const bool all_announced =
        std::all_of(nbs.begin(), nbs.end(),
                    [&](VertexId v) { return announced.count(v) > 0; });

    VertexId best = -1;
    double best_u = 0.0;
    for (VertexId v : nbs) {
        double u = utilities[v];
        if (!all_announced && announced.count(v) > 0) u = 0.0;
        if (best == -1 || u > best_u) {
            best = v;
            best_u = u;
        }
    }
    return best;
}

namespace {

VertexSignal belief_signal(const AgentBelief& belief, const DistanceMatrix& distances) {
    VertexSignal s;
    s.idleness = belief.idleness_estimate;
    s.agent_distance.resize(distances.n);
    for (int v = 0; v < distances.n; ++v)
        s.agent_distance[v] = distances.dist(belief.current_vertex, v);
    return s;
}

}  // namespace

VertexId suns_decide(const AgentBelief& belief, const PatrolGraph& graph,
                     const DistanceMatrix& distances, const SunNetwork& net) {
    const auto utilities = sun_forward(net, graph, belief_signal(belief, distances));
    return pick_target(belief, graph, utilities);
}

VertexId mns_decide(const AgentBelief& belief, const PatrolGraph& graph,
                    const DistanceMatrix& distances, const MnsNetwork& net) {
    const auto utilities = mns_forward(net, belief_signal(belief, distances));
    return pick_target(belief, graph, utilities);
}

VertexId sebs_like_decide(const AgentBelief& belief, const PatrolGraph& graph,
                          const DistanceMatrix& distances) {
    (void)distances;
    std::vector<double> utilities(graph.vertex_count(), 0.0);
    for (VertexId v : graph.neighbors(belief.current_vertex))
        utilities[v] =
            belief.idleness_estimate[v] / graph.edge_weight(belief.current_vertex, v);
    return pick_target(belief, graph, utilities);
}

VertexId random_walk_decide(const AgentBelief& belief, const PatrolGraph& graph,
                            SimRng& rng) {
    const auto& nbs = graph.neighbors(belief.current_vertex);
    if (nbs.empty())
        throw std::invalid_argument("strategy: vertex " +
                                    std::to_string(belief.current_vertex) +
                                    " has no neighbors");
    return nbs[rng.uniform_int(nbs.size())];
}

namespace {

class SunsStrategy final : public Strategy {
public:
    explicit SunsStrategy(SunNetwork net) : net_(std::move(net)) {}
    VertexId decide(const AgentBelief& belief, const PatrolGraph& graph,
                    const DistanceMatrix& distances, SimRng&) const override {
        return suns_decide(belief, graph, distances, net_);
    }
    std::string name() const override { return "suns"; }

private:
    SunNetwork net_;
};

class MnsStrategy final : public Strategy {
public:
    explicit MnsStrategy(MnsNetwork net) : net_(std::move(net)) {}
    VertexId decide(const AgentBelief& belief, const PatrolGraph& graph,
                    const DistanceMatrix& distances, SimRng&) const override {
        return mns_decide(belief, graph, distances, net_);
    }
    std::string name() const override { return "mns"; }

private:
    MnsNetwork net_;
};

class SebsStrategy final : public Strategy {
public:
    VertexId decide(const AgentBelief& belief, const PatrolGraph& graph,
                    const DistanceMatrix& distances, SimRng&) const override {
        return sebs_like_decide(belief, graph, distances);
    }
    std::string name() const override { return "sebs"; }
};

class RandomStrategy final : public Strategy {
public:
    VertexId decide(const AgentBelief& belief, const PatrolGraph& graph,
                    const DistanceMatrix&, SimRng& rng) const override {
        return random_walk_decide(belief, graph, rng);
    }
    std::string name() const override { return "random"; }
};

}  // namespace

std::unique_ptr<Strategy> make_suns_strategy(SunNetwork net) {
    return std::make_unique<SunsStrategy>(std::move(net));
}

std::unique_ptr<Strategy> make_mns_strategy(MnsNetwork net) {
    return std::make_unique<MnsStrategy>(std::move(net));
}

std::unique_ptr<Strategy> make_strategy(const std::string& name,
                                        const std::string& weights_path) {
    if (name == "sebs") return std::make_unique<SebsStrategy>();
    if (name == "random") return std::make_unique<RandomStrategy>();
    if (name == "suns" || name == "mns") {
        if (weights_path.empty())
            throw std::invalid_argument("strategy '" + name +
                                        "' requires a weight file (--weights)");
        if (name == "suns") return make_suns_strategy(load_sun_weights(weights_path));
        return make_mns_strategy(load_mns_weights(weights_path));
    }
    throw std::invalid_argument("unknown strategy '" + name +
                                "' (expected suns|mns|sebs|random)");
}

Broadcast on_arrival(AgentBelief& belief, VertexId vertex, double time,
                     const Strategy& strategy, const PatrolGraph& graph,
                     const DistanceMatrix& distances, SimRng& rng) {
    belief.current_vertex = vertex;
    belief.reset_vertex(vertex);
    const VertexId next = strategy.decide(belief, graph, distances, rng);
    belief.target_vertex = next;
    return Broadcast{belief.self, vertex, next, time};
}

}  // namespace patrolkit
