#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "patrolkit/graph.hpp"
#include "patrolkit/neural.hpp"
#include "patrolkit/rng.hpp"

namespace patrolkit {

using AgentId = int;

struct Broadcast {
    AgentId sender = -1;
    VertexId current = -1;
    VertexId next = -1;
    double timestamp = 0.0;
};

// An agent's private view of the world: believed per-vertex idleness plus
// the targets other agents have announced. Owned by exactly one agent.
struct AgentBelief {
    AgentId self = 0;
    VertexId current_vertex = 0;
    VertexId target_vertex = 0;
    std::vector<double> idleness_estimate;
    std::map<AgentId, VertexId> intentions;

    static AgentBelief fresh(AgentId self, VertexId start, int n_vertices);

    void advance(double dt);
    void reset_vertex(VertexId v) { idleness_estimate[v] = 0.0; }
};

void on_broadcast(AgentBelief& belief, const Broadcast& msg);

// Neighbor selection shared by every utility strategy: vertices announced
// by other agents are zeroed out unless *every* neighbor is announced, in
// which case the raw utilities stand. Argmax over the neighbors of the
// current vertex, ties to the lowest id.
VertexId pick_target(const AgentBelief& belief, const PatrolGraph& graph,
                     const std::vector<double>& utilities);

VertexId suns_decide(const AgentBelief& belief, const PatrolGraph& graph,
                     const DistanceMatrix& distances, const SunNetwork& net);
VertexId mns_decide(const AgentBelief& belief, const PatrolGraph& graph,
                    const DistanceMatrix& distances, const MnsNetwork& net);
VertexId sebs_like_decide(const AgentBelief& belief, const PatrolGraph& graph,
                          const DistanceMatrix& distances);
VertexId random_walk_decide(const AgentBelief& belief, const PatrolGraph& graph,
                            SimRng& rng);

// Runtime-selected decision policy.
class Strategy {
public:
    virtual ~Strategy() = default;
    virtual VertexId decide(const AgentBelief& belief, const PatrolGraph& graph,
                            const DistanceMatrix& distances, SimRng& rng) const = 0;
    virtual std::string name() const = 0;
};

// name: suns | mns | sebs | random. suns/mns require weights_path.
std::unique_ptr<Strategy> make_strategy(const std::string& name,
                                        const std::string& weights_path = "");
std::unique_ptr<Strategy> make_suns_strategy(SunNetwork net);
std::unique_ptr<Strategy> make_mns_strategy(MnsNetwork net);

// Arrival handling: resets the agent's own estimate for the vertex, takes
// the next decision, and returns the broadcast announcing it.
Broadcast on_arrival(AgentBelief& belief, VertexId vertex, double time,
                     const Strategy& strategy, const PatrolGraph& graph,
                     const DistanceMatrix& distances, SimRng& rng);

}  // namespace patrolkit
