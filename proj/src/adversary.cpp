#include "patrolkit/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "json.hpp"

namespace patrolkit {

namespace {

[[noreturn]] void fail(const std::string& msg) {
    throw std::invalid_argument("adversary: " + msg);
}

}  // namespace

AdversaryFeatures AdversaryFeatures::extract(const SimLog& log, const PatrolGraph& graph,
                                             const DistanceMatrix& distances) {
    if (log.n_vertices != graph.vertex_count())
        fail("log and graph disagree on vertex count");
    if (log.tick_count() == 0) fail("empty log");

    AdversaryFeatures f;
    f.n_ticks_ = static_cast<int>(log.tick_count());
    f.n_vertices_ = log.n_vertices;
    f.n_agents_ = log.n_agents;
    f.dt_ = log.dt;
    f.idleness_.reserve(static_cast<size_t>(f.n_ticks_) * f.n_vertices_);
    for (const auto& row : log.idleness)
        f.idleness_.insert(f.idleness_.end(), row.begin(), row.end());

    f.dist_.resize(static_cast<size_t>(f.n_ticks_) * f.n_agents_ * f.n_vertices_);
    for (int t = 0; t < f.n_ticks_; ++t) {
        for (int a = 0; a < f.n_agents_; ++a) {
            const auto& s = log.agents[t][a];
            for (int v = 0; v < f.n_vertices_; ++v) {
                double d;
                if (s.edge_u == s.edge_v) {
                    d = distances.dist(s.edge_u, v);
                } else {
                    const double w = graph.edge_weight(s.edge_u, s.edge_v);
                    d = std::min(s.offset + distances.dist(s.edge_u, v),
                                 (w - s.offset) + distances.dist(s.edge_v, v));
                }
                f.dist_[(static_cast<size_t>(t) * f.n_agents_ + a) * f.n_vertices_ + v] =
                    static_cast<float>(d);
            }
        }
    }
    return f;
}

double AdversaryFeatures::idleness(int tick, VertexId v) const {
    return idleness_[static_cast<size_t>(tick) * n_vertices_ + v];
}

double AdversaryFeatures::agent_distance(int tick, AgentId a, VertexId v) const {
    return dist_[(static_cast<size_t>(tick) * n_agents_ + a) * n_vertices_ + v];
}

double AdversaryFeatures::agent_velocity(int tick, AgentId a, VertexId v) const {
    if (tick == 0) return 0.0;
    return -(agent_distance(tick, a, v) - agent_distance(tick - 1, a, v)) / dt_;
}

double AdversaryFeatures::nearest_distance(int tick, VertexId v) const {
    double best = std::numeric_limits<double>::infinity();
    for (int a = 0; a < n_agents_; ++a)
        best = std::min(best, agent_distance(tick, a, v));
    return best;
}

double AdversaryFeatures::nearest_velocity(int tick, VertexId v) const {
    int best_agent = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int a = 0; a < n_agents_; ++a) {
        const double d = agent_distance(tick, a, v);
        if (d < best) {
            best = d;
            best_agent = a;
        }
    }
    return agent_velocity(tick, best_agent, v);
}

int64_t AttackState::key() const {
    return (static_cast<int64_t>(idleness_bin) << 20) |
           (static_cast<int64_t>(distance_bin) << 4) |
           static_cast<int64_t>(velocity_bin + 1);
}

AttackState AttackState::from_key(int64_t key) {
    AttackState s;
    s.idleness_bin = static_cast<int>(key >> 20);
    s.distance_bin = static_cast<int>((key >> 4) & 0xFFFF);
    s.velocity_bin = static_cast<int>(key & 0xF) - 1;
    return s;
}

AttackState discretize_state(double idleness, double nearest_distance,
                             double nearest_velocity) {
    // Saturating tail bins keep long-untouched vertices and far agents in
    // one catch-all state instead of drifting out of the learned support.
    constexpr int kIdlenessBinCap = 60;   // >= 600 s
    constexpr int kDistanceBinCap = 40;   // >= 200 m
    AttackState s;
    s.idleness_bin = std::min(static_cast<int>(idleness / 10.0), kIdlenessBinCap);
    s.distance_bin = std::min(static_cast<int>(nearest_distance / 5.0), kDistanceBinCap);
    constexpr double eps = 1e-9;
    s.velocity_bin = nearest_velocity > eps ? 1 : (nearest_velocity < -eps ? -1 : 0);
    return s;
}

double AttackPolicy::success_likelihood(VertexId v, int64_t key) const {
    const auto it = tables[v].find(key);
    if (it == tables[v].end() || it->second.occurrences == 0) return 0.0;
    return static_cast<double>(it->second.successes) /
           static_cast<double>(it->second.occurrences);
}

double AttackPolicy::state_likelihood(VertexId v, int64_t key) const {
    const auto it = tables[v].find(key);
    if (it == tables[v].end()) return 0.0;
    int64_t total = 0;
    for (const auto& [k, st] : tables[v]) total += st.occurrences;
    return total > 0 ? static_cast<double>(it->second.occurrences) /
                           static_cast<double>(total)
                     : 0.0;
}

namespace {

// Sorted visit ticks per vertex, for next-visit queries.
std::vector<std::vector<int>> visit_ticks_by_vertex(const SimLog& log) {
    std::vector<std::vector<int>> ticks(log.n_vertices);
    for (const auto& v : log.visits)
        ticks[v.vertex].push_back(static_cast<int>(std::llround(v.t / log.dt)));
    for (auto& t : ticks) std::sort(t.begin(), t.end());
    return ticks;
}

// True when vertex receives no visit in ticks (t, t + window].
bool survives_window(const std::vector<int>& visits, int t, int window) {
    const auto it = std::upper_bound(visits.begin(), visits.end(), t);
    return it == visits.end() || *it > t + window;
}

}  // namespace

AttackPolicy fit_attack_policy(const AdversaryFeatures& features, const SimLog& log,
                               double attack_duration, double train_fraction) {
    if (!(attack_duration > 0.0)) fail("attack_duration must be positive");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        fail("train_fraction must lie in (0, 1)");
    if (features.n_ticks() != static_cast<int>(log.tick_count()))
        fail("features and log disagree on tick count");

    const int window = static_cast<int>(std::llround(attack_duration / log.dt));
    if (window < 1) fail("attack_duration shorter than one tick");

    AttackPolicy policy;
    policy.attack_duration = attack_duration;
    policy.dt = log.dt;
    policy.train_end_tick =
        static_cast<int>(std::floor(train_fraction * features.n_ticks()));

    // Outcomes are adjudicated strictly inside the training prefix, so the
    // last `window` training ticks carry no label.
    const int labelled_end = policy.train_end_tick - window;
    if (labelled_end < 1)
        fail("degenerate log: training prefix shorter than one attack window");

    const auto visits = visit_ticks_by_vertex(log);
    policy.tables.assign(features.n_vertices(), {});
    policy.attack_states.assign(features.n_vertices(), {});

    for (VertexId v = 0; v < features.n_vertices(); ++v) {
        auto& table = policy.tables[v];
        for (int t = 0; t < labelled_end; ++t) {
            const auto key = discretize_state(features.idleness(t, v),
                                              features.nearest_distance(t, v),
                                              features.nearest_velocity(t, v))
                                 .key();
            auto& st = table[key];
            ++st.occurrences;
            if (survives_window(visits[v], t, window)) ++st.successes;
        }

        // Candidate states must be frequent enough to show up within one
        // attack window; fall back to all observed states when nothing is.
        std::vector<int64_t> candidates;
        for (const auto& [key, st] : table) {
            const double freq = static_cast<double>(st.occurrences) /
                                static_cast<double>(labelled_end);
            if (freq * window >= 1.0) candidates.push_back(key);
        }
        if (candidates.empty())
            for (const auto& [key, st] : table) candidates.push_back(key);

        double best = -1.0;
        for (int64_t key : candidates)
            best = std::max(best, policy.success_likelihood(v, key));
        for (int64_t key : candidates)
            if (policy.success_likelihood(v, key) == best)
                policy.attack_states[v].push_back(key);
    }
    return policy;
}

AdversaryEvalReport evaluate_attack_policy(const AttackPolicy& policy,
                                           const AdversaryFeatures& features,
                                           const SimLog& log) {
    const int window = static_cast<int>(std::llround(policy.attack_duration / log.dt));
    const int n_ticks = features.n_ticks();
    const int last_tick = n_ticks - 1;

    const auto visits = visit_ticks_by_vertex(log);

    AdversaryEvalReport report;
    report.p_s.assign(features.n_vertices(), 0.0);
    report.attempts.assign(features.n_vertices(), 0);
    report.successes.assign(features.n_vertices(), 0);

    for (VertexId v = 0; v < features.n_vertices(); ++v) {
        const auto& states = policy.attack_states[v];
        for (int start = policy.train_end_tick; start + window <= n_ticks;
             start += window) {
            // First matching tick within this window, if any.
            for (int t = start; t < start + window; ++t) {
                const auto key = discretize_state(features.idleness(t, v),
                                                  features.nearest_distance(t, v),
                                                  features.nearest_velocity(t, v))
                                     .key();
                if (std::find(states.begin(), states.end(), key) == states.end())
                    continue;
                if (t + window > last_tick) break;  // outcome would run past the log
                ++report.attempts[v];
                if (survives_window(visits[v], t, window)) ++report.successes[v];
                break;
            }
        }
        if (report.attempts[v] > 0)
            report.p_s[v] = 1.0 - static_cast<double>(report.successes[v]) /
                                      static_cast<double>(report.attempts[v]);
        else
            report.no_attempt.push_back(v);
    }

    double sum = 0.0;
    int counted = 0;
    for (VertexId v = 0; v < features.n_vertices(); ++v) {
        if (report.attempts[v] > 0) {
            sum += report.p_s[v];
            ++counted;
        }
    }
    report.aggregate_p_s = counted > 0 ? sum / counted : 0.0;
    return report;
}

std::string adversary_report_json(const AdversaryEvalReport& report,
                                  const AttackPolicy& policy) {
    nlohmann::json j;
    j["attack_duration"] = policy.attack_duration;
    j["train_end_tick"] = policy.train_end_tick;
    j["aggregate_p_s"] = report.aggregate_p_s;
    j["per_vertex"] = nlohmann::json::array();
    for (size_t v = 0; v < report.p_s.size(); ++v) {
        nlohmann::json row{{"vertex", v},
                           {"attempts", report.attempts[v]},
                           {"successes", report.successes[v]}};
        if (report.attempts[v] > 0)
            row["p_s"] = report.p_s[v];
        else
            row["p_s"] = nullptr;
        j["per_vertex"].push_back(row);
    }
    j["no_attempt"] = report.no_attempt;
    return j.dump(2) + "\n";
}

}  // namespace patrolkit
