#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "patrolkit/graph.hpp"
#include "patrolkit/rng.hpp"
#include "patrolkit/strategy.hpp"

namespace patrolkit {

struct SimConfig {
    std::string graph_file;
    std::string strategy = "sebs";
    std::string weights_file;
    int n_agents = 1;
    double duration = 3600.0;
    double dt = 1.0;
    double agent_speed = 1.0;
    double msg_fail_prob = 0.0;
    uint64_t seed = 0;
    std::vector<VertexId> start_vertices;  // empty: seeded random, distinct

    void validate(int n_vertices) const;  // throws on bad parameters
};

// Config JSON: {"map": ..., "strategy": ..., "weights": ..., "agents": N,
// "duration": S, "dt": S, "speed": V, "msg_fail_prob": P, "seed": K,
// "start_vertices": [...]}. All fields optional except map/strategy.
SimConfig sim_config_from_json(const std::string& text);

// Where an agent is at a logged tick. At a vertex: edge_u == edge_v ==
// vertex and offset == 0; mid-edge: offset meters from edge_u toward
// edge_v.
struct AgentTickState {
    VertexId edge_u = 0;
    VertexId edge_v = 0;
    double offset = 0.0;
    VertexId target = 0;
};

struct VisitEvent {
    double t = 0.0;
    AgentId agent = 0;
    VertexId vertex = 0;
};

// Per-second record of ground truth: instantaneous idleness of every
// vertex, agent positions/targets, and visit events. All analysis runs off
// this structure or its CSV form.
struct SimLog {
    int n_vertices = 0;
    int n_agents = 0;
    double dt = 1.0;
    std::vector<double> times;
    std::vector<std::vector<double>> idleness;        // [tick][vertex]
    std::vector<std::vector<AgentTickState>> agents;  // [tick][agent]
    std::vector<VisitEvent> visits;

    size_t tick_count() const { return times.size(); }

    // Writes idleness.csv, agents.csv, visits.csv into dir.
    void write_csv(const std::string& dir) const;
    static SimLog read_csv(const std::string& dir);
};

// Advances every vertex by dt except those visited this tick, which are
// pinned to zero.
void advance_idleness(std::vector<double>& idleness, const std::vector<VertexId>& visited,
                      double dt);

// Per-receiver delivery flags for one broadcast: independent
// Bernoulli(1 - p_fail) draws in agent order; the sender never receives
// its own message.
std::vector<bool> deliver(const Broadcast& msg, int n_agents, double p_fail, SimRng& rng);

// Runs a full simulation on an already-loaded graph. Deterministic:
// identical config and seed give an identical log.
SimLog run_sim(const PatrolGraph& graph, const DistanceMatrix& distances,
               const Strategy& strategy, const SimConfig& config);

// Convenience overload that loads the graph and strategy named in the
// config.
SimLog run_sim(const SimConfig& config);

// End-of-tick beliefs captured for testing belief consistency.
struct BeliefTrace {
    // [tick][agent][vertex]
    std::vector<std::vector<std::vector<double>>> idleness_estimates;
};

SimLog run_sim_traced(const PatrolGraph& graph, const DistanceMatrix& distances,
                      const Strategy& strategy, const SimConfig& config,
                      BeliefTrace* trace);

}  // namespace patrolkit
