#include "patrolkit/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace patrolkit {

namespace {

[[noreturn]] void fail(const std::string& msg) {
    throw std::invalid_argument("sim: " + msg);
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

}  // namespace

void SimConfig::validate(int n_vertices) const {
    if (n_agents < 1) fail("n_agents must be >= 1");
    if (!(dt > 0.0)) fail("dt must be positive");
    if (!(duration >= 0.0)) fail("duration must be non-negative");
    const double ticks = duration / dt;
    if (std::abs(ticks - std::round(ticks)) > 1e-9)
        fail("duration must be a multiple of dt");
    if (!(agent_speed > 0.0)) fail("agent_speed must be positive");
    if (msg_fail_prob < 0.0 || msg_fail_prob > 1.0)
        fail("msg_fail_prob must lie in [0, 1]");
    if (!start_vertices.empty()) {
        if (static_cast<int>(start_vertices.size()) != n_agents)
            fail("start_vertices must name one vertex per agent");
        for (VertexId v : start_vertices)
            if (v < 0 || v >= n_vertices)
                fail("start vertex " + std::to_string(v) + " out of range");
    }
}

SimConfig sim_config_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(std::string("malformed config JSON: ") + e.what());
    }
    SimConfig c;
    c.graph_file = j.value("map", c.graph_file);
    c.strategy = j.value("strategy", c.strategy);
    c.weights_file = j.value("weights", c.weights_file);
    c.n_agents = j.value("agents", c.n_agents);
    c.duration = j.value("duration", c.duration);
    c.dt = j.value("dt", c.dt);
    c.agent_speed = j.value("speed", c.agent_speed);
    c.msg_fail_prob = j.value("msg_fail_prob", c.msg_fail_prob);
    c.seed = j.value("seed", c.seed);
    if (j.contains("start_vertices"))
        c.start_vertices = j.at("start_vertices").get<std::vector<VertexId>>();
    return c;
}

void advance_idleness(std::vector<double>& idleness, const std::vector<VertexId>& visited,
                      double dt) {
    for (double& v : idleness) v += dt;
    for (VertexId v : visited) idleness[v] = 0.0;
}

std::vector<bool> deliver(const Broadcast& msg, int n_agents, double p_fail, SimRng& rng) {
    std::vector<bool> delivered(n_agents, false);
    for (AgentId a = 0; a < n_agents; ++a) {
        if (a == msg.sender) continue;
        delivered[a] = rng.uniform() >= p_fail;
    }
    return delivered;
}

namespace {

struct AgentRuntime {
    AgentBelief belief;
    // Position: at a vertex (on_edge == false) or along (from, to).
    bool on_edge = false;
    VertexId vertex = 0;
    VertexId from = 0;
    VertexId to = 0;
    double offset = 0.0;
};

std::vector<VertexId> pick_start_vertices(const SimConfig& config, int n_vertices,
                                          SimRng& rng) {
    if (!config.start_vertices.empty()) return config.start_vertices;
    std::vector<VertexId> starts;
    if (config.n_agents <= n_vertices) {
        // Distinct seeded sample.
        std::vector<VertexId> pool(n_vertices);
        for (int i = 0; i < n_vertices; ++i) pool[i] = i;
        for (int i = 0; i < config.n_agents; ++i) {
            const size_t pick = i + rng.uniform_int(pool.size() - i);
            std::swap(pool[i], pool[pick]);
            starts.push_back(pool[i]);
        }
    } else {
        for (int i = 0; i < config.n_agents; ++i)
            starts.push_back(static_cast<VertexId>(rng.uniform_int(n_vertices)));
    }
    return starts;
}

AgentTickState snapshot(const AgentRuntime& a) {
    if (a.on_edge) return {a.from, a.to, a.offset, a.belief.target_vertex};
    return {a.vertex, a.vertex, 0.0, a.belief.target_vertex};
}

}  // namespace

SimLog run_sim_traced(const PatrolGraph& graph, const DistanceMatrix& distances,
                      const Strategy& strategy, const SimConfig& config,
                      BeliefTrace* trace) {
    const int n = graph.vertex_count();
    config.validate(n);
    SimRng rng(config.seed);

    const auto starts = pick_start_vertices(config, n, rng);
    const int n_ticks = static_cast<int>(std::round(config.duration / config.dt));

    SimLog log;
    log.n_vertices = n;
    log.n_agents = config.n_agents;
    log.dt = config.dt;
    log.times.reserve(n_ticks + 1);
    log.idleness.reserve(n_ticks + 1);
    log.agents.reserve(n_ticks + 1);

    std::vector<double> idleness(n, 0.0);
    std::vector<AgentRuntime> agents(config.n_agents);
    for (AgentId a = 0; a < config.n_agents; ++a) {
        agents[a].belief = AgentBelief::fresh(a, starts[a], n);
        agents[a].vertex = starts[a];
    }

    auto record_tick = [&](double t) {
        log.times.push_back(t);
        log.idleness.push_back(idleness);
        std::vector<AgentTickState> row;
        row.reserve(agents.size());
        for (const auto& a : agents) row.push_back(snapshot(a));
        log.agents.push_back(std::move(row));
        if (trace) {
            std::vector<std::vector<double>> beliefs;
            beliefs.reserve(agents.size());
            for (const auto& a : agents) beliefs.push_back(a.belief.idleness_estimate);
            trace->idleness_estimates.push_back(std::move(beliefs));
        }
    };

    auto dispatch = [&](const std::vector<Broadcast>& outbox) {
        for (const auto& msg : outbox) {
            const auto delivered = deliver(msg, config.n_agents, config.msg_fail_prob, rng);
            for (AgentId a = 0; a < config.n_agents; ++a)
                if (delivered[a]) on_broadcast(agents[a].belief, msg);
        }
    };

    // t = 0: forced initial decision before any broadcasts exist.
    {
        std::vector<Broadcast> outbox;
        for (auto& a : agents) {
            log.visits.push_back({0.0, a.belief.self, a.vertex});
            outbox.push_back(on_arrival(a.belief, a.vertex, 0.0, strategy, graph,
                                        distances, rng));
        }
        dispatch(outbox);
        record_tick(0.0);
    }

    for (int tick = 1; tick <= n_ticks; ++tick) {
        const double t = tick * config.dt;

        // 1. Move agents; collect arrivals. Overshoot past the target is
        //    discarded (the agent waits at the vertex for this tick).
        std::vector<AgentId> arrivals;
        for (auto& a : agents) {
            if (!a.on_edge) {
                if (a.belief.target_vertex == a.vertex) {
                    // Degenerate zero-length leg: immediate re-arrival.
                    arrivals.push_back(a.belief.self);
                    continue;
                }
                a.on_edge = true;
                a.from = a.vertex;
                a.to = a.belief.target_vertex;
                a.offset = 0.0;
            }
            a.offset += config.agent_speed * config.dt;
            if (a.offset >= graph.edge_weight(a.from, a.to)) {
                a.on_edge = false;
                a.vertex = a.to;
                a.offset = 0.0;
                arrivals.push_back(a.belief.self);
            }
        }

        // 2. True idleness: +dt everywhere, visited vertices pinned to 0.
        std::vector<VertexId> visited;
        for (AgentId a : arrivals) visited.push_back(agents[a].vertex);
        advance_idleness(idleness, visited, config.dt);

        // 3. Beliefs advance in lockstep with the ground truth.
        for (auto& a : agents) a.belief.advance(config.dt);

        // 4. Arrivals decide (agent order) and queue their broadcasts;
        //    messages go out only after every decision this tick.
        std::vector<Broadcast> outbox;
        for (AgentId id : arrivals) {
            auto& a = agents[id];
            log.visits.push_back({t, id, a.vertex});
            outbox.push_back(
                on_arrival(a.belief, a.vertex, t, strategy, graph, distances, rng));
        }
        dispatch(outbox);

        record_tick(t);
    }

    return log;
}

SimLog run_sim(const PatrolGraph& graph, const DistanceMatrix& distances,
               const Strategy& strategy, const SimConfig& config) {
    return run_sim_traced(graph, distances, strategy, config, nullptr);
}

SimLog run_sim(const SimConfig& config) {
    const PatrolGraph graph = load_graph(config.graph_file);
    const DistanceMatrix distances = shortest_paths(graph);
    const auto strategy = make_strategy(config.strategy, config.weights_file);
    return run_sim(graph, distances, *strategy, config);
}

void SimLog::write_csv(const std::string& dir) const {
    namespace fs = std::filesystem;
    fs::create_directories(dir);

    {
        std::ofstream out(fs::path(dir) / "idleness.csv");
        if (!out) fail("cannot write idleness.csv in " + dir);
        out << "t";
        for (int v = 0; v < n_vertices; ++v) out << ",v" << v;
        out << "\n";
        for (size_t i = 0; i < times.size(); ++i) {
            out << fmt(times[i]);
            for (int v = 0; v < n_vertices; ++v) out << "," << fmt(idleness[i][v]);
            out << "\n";
        }
    }
    {
        std::ofstream out(fs::path(dir) / "agents.csv");
        if (!out) fail("cannot write agents.csv in " + dir);
        out << "t";
        for (int a = 0; a < n_agents; ++a)
            out << ",a" << a << "_u,a" << a << "_v,a" << a << "_offset,a" << a
                << "_target";
        out << "\n";
        for (size_t i = 0; i < times.size(); ++i) {
            out << fmt(times[i]);
            for (int a = 0; a < n_agents; ++a) {
                const auto& s = agents[i][a];
                out << "," << s.edge_u << "," << s.edge_v << "," << fmt(s.offset) << ","
                    << s.target;
            }
            out << "\n";
        }
    }
    {
        std::ofstream out(fs::path(dir) / "visits.csv");
        if (!out) fail("cannot write visits.csv in " + dir);
        out << "t,agent,vertex\n";
        for (const auto& v : visits)
            out << fmt(v.t) << "," << v.agent << "," << v.vertex << "\n";
    }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(field);
    return out;
}

}  // namespace

SimLog SimLog::read_csv(const std::string& dir) {
    namespace fs = std::filesystem;
    SimLog log;

    {
        std::ifstream in(fs::path(dir) / "idleness.csv");
        if (!in) fail("cannot open idleness.csv in " + dir);
        std::string line;
        if (!std::getline(in, line)) fail("empty idleness.csv");
        log.n_vertices = static_cast<int>(split_csv_line(line).size()) - 1;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto fields = split_csv_line(line);
            if (static_cast<int>(fields.size()) != log.n_vertices + 1)
                fail("ragged idleness.csv row");
            log.times.push_back(std::stod(fields[0]));
            std::vector<double> row(log.n_vertices);
            for (int v = 0; v < log.n_vertices; ++v) row[v] = std::stod(fields[v + 1]);
            log.idleness.push_back(std::move(row));
        }
    }
    if (log.times.size() >= 2) log.dt = log.times[1] - log.times[0];
    {
        std::ifstream in(fs::path(dir) / "agents.csv");
        if (!in) fail("cannot open agents.csv in " + dir);
        std::string line;
        if (!std::getline(in, line)) fail("empty agents.csv");
        log.n_agents = (static_cast<int>(split_csv_line(line).size()) - 1) / 4;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto fields = split_csv_line(line);
            std::vector<AgentTickState> row(log.n_agents);
            for (int a = 0; a < log.n_agents; ++a) {
                row[a].edge_u = std::stoi(fields[1 + 4 * a]);
                row[a].edge_v = std::stoi(fields[2 + 4 * a]);
                row[a].offset = std::stod(fields[3 + 4 * a]);
                row[a].target = std::stoi(fields[4 + 4 * a]);
            }
            log.agents.push_back(std::move(row));
        }
    }
    {
        std::ifstream in(fs::path(dir) / "visits.csv");
        if (!in) fail("cannot open visits.csv in " + dir);
        std::string line;
        std::getline(in, line);  // header
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto fields = split_csv_line(line);
            log.visits.push_back(
                {std::stod(fields[0]), std::stoi(fields[1]), std::stoi(fields[2])});
        }
    }
    return log;
}

}  // namespace patrolkit
