#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "patrolkit/graph.hpp"
#include "patrolkit/sim.hpp"

namespace patrolkit {

// Observables available to the adversary at every tick: vertex idleness
// plus each patrol agent's along-graph distance to the vertex. Velocities
// toward a vertex are the signed rate of change of that distance and are
// derived from consecutive ticks on demand.
class AdversaryFeatures {
public:
    static AdversaryFeatures extract(const SimLog& log, const PatrolGraph& graph,
                                     const DistanceMatrix& distances);

    int n_ticks() const { return n_ticks_; }
    int n_vertices() const { return n_vertices_; }
    int n_agents() const { return n_agents_; }
    double dt() const { return dt_; }

    double idleness(int tick, VertexId v) const;
    double agent_distance(int tick, AgentId a, VertexId v) const;
    // Positive while the agent closes on the vertex; 0 at the first tick.
    double agent_velocity(int tick, AgentId a, VertexId v) const;

    // Nearest agent (lowest id on ties) and its approach velocity.
    double nearest_distance(int tick, VertexId v) const;
    double nearest_velocity(int tick, VertexId v) const;

private:
    int n_ticks_ = 0;
    int n_vertices_ = 0;
    int n_agents_ = 0;
    double dt_ = 1.0;
    std::vector<float> dist_;      // [tick][agent][vertex]
    std::vector<double> idleness_; // [tick][vertex]
};

// Discretized observation: 10 s idleness bins, 5 m nearest-distance bins,
// approach-velocity sign (+1 approaching / 0 static / -1 receding).
struct AttackState {
    int idleness_bin = 0;
    int distance_bin = 0;
    int velocity_bin = 0;

    int64_t key() const;
    static AttackState from_key(int64_t key);
};

AttackState discretize_state(double idleness, double nearest_distance,
                             double nearest_velocity);

struct BinStats {
    int64_t occurrences = 0;
    int64_t successes = 0;  // ticks with no visit for the full attack window
};

// Learned per-vertex tables plus the selected attack states.
struct AttackPolicy {
    double attack_duration = 0.0;
    double dt = 1.0;
    int train_end_tick = 0;  // ticks [0, train_end_tick) were used for fitting
    std::vector<std::map<int64_t, BinStats>> tables;        // per vertex
    std::vector<std::vector<int64_t>> attack_states;        // per vertex

    double success_likelihood(VertexId v, int64_t key) const;
    double state_likelihood(VertexId v, int64_t key) const;
};

// Fits success- and state-likelihood tables on the chronological prefix of
// the log and selects attack states: among bins expected to occur at least
// once per attack window, those with the highest success likelihood.
AttackPolicy fit_attack_policy(const AdversaryFeatures& features, const SimLog& log,
                               double attack_duration, double train_fraction);

struct AdversaryEvalReport {
    std::vector<double> p_s;       // per vertex; meaningful only when attempted
    std::vector<int> attempts;
    std::vector<int> successes;
    std::vector<VertexId> no_attempt;  // vertices excluded from the aggregate
    double aggregate_p_s = 0.0;
};

// Plays the policy against the held-out suffix: within each non-overlapping
// window of one attack duration, the adversary strikes at the first tick
// matching one of its attack states; the patrol team succeeds when the
// vertex is visited before the window runs out.
AdversaryEvalReport evaluate_attack_policy(const AttackPolicy& policy,
                                           const AdversaryFeatures& features,
                                           const SimLog& log);

std::string adversary_report_json(const AdversaryEvalReport& report,
                                  const AttackPolicy& policy);

}  // namespace patrolkit
