#include "patrolkit/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "patrolkit/analysis.hpp"
#include "patrolkit/sim.hpp"
#include "patrolkit/strategy.hpp"

namespace patrolkit {

TrainConfig TrainConfig::defaults() {
    TrainConfig c;
    for (uint64_t i = 0; i < 10; ++i) c.train_graph_seeds.push_back(101 + i);
    for (uint64_t i = 0; i < 8; ++i) c.val_graph_seeds.push_back(901 + i);
    return c;
}

void TrainConfig::validate() const {
    if (train_graph_seeds.empty()) throw std::invalid_argument("trainer: no training graphs");
    if (val_graph_seeds.empty()) throw std::invalid_argument("trainer: no validation graphs");
    if (restarts < 1) throw std::invalid_argument("trainer: restarts must be >= 1");
    if (!(discount > 0.0 && discount <= 1.0))
        throw std::invalid_argument("trainer: discount must lie in (0, 1]");
    if (episode_length < 1 || episodes_per_graph < 1 || update_horizon < 1)
        throw std::invalid_argument("trainer: episode parameters must be positive");
    if (sun_depth < 1) throw std::invalid_argument("trainer: sun_depth must be >= 1");
}

PatrolGraph training_graph_from_seed(uint64_t seed, const TrainGraphSpec& spec) {
    SimRng rng(SimRng::mix(seed, 0xA11CE));
    const int span = spec.max_vertices - spec.min_vertices + 1;
    const int n_v = spec.min_vertices + static_cast<int>(rng.uniform_int(span));
    const long long cap = static_cast<long long>(n_v) * (n_v - 1) / 2;
    const int max_extra =
        static_cast<int>(std::min<long long>(spec.max_extra_edges, cap - (n_v - 1)));
    const int n_e = n_v - 1 + static_cast<int>(rng.uniform_int(max_extra + 1));
    return generate_random_graph(n_v, n_e, spec.min_edge, spec.max_edge,
                                 SimRng::mix(seed, 0x6EA9));
}

PatrolEnv::PatrolEnv(const PatrolGraph& graph, const DistanceMatrix& distances,
                     double speed)
    : graph_(graph), distances_(distances), speed_(speed) {
    if (!(speed > 0.0)) throw std::invalid_argument("trainer: speed must be positive");
    idleness_.assign(graph.vertex_count(), 0.0);
}

void PatrolEnv::reset(VertexId start) {
    if (start < 0 || start >= graph_.vertex_count())
        throw std::invalid_argument("trainer: start vertex out of range");
    current_ = start;
    time_ = 0.0;
    std::fill(idleness_.begin(), idleness_.end(), 0.0);
}

PatrolEnv::StepResult PatrolEnv::step(VertexId action, double reward_scale) {
    if (action < 0 || action >= graph_.vertex_count())
        throw std::invalid_argument("trainer: action out of range");
    StepResult res;
    if (action == current_) {
        // Zero-length revisit; no time passes.
        res.reward = reward_scale * idleness_[current_];
        res.landed = current_;
        idleness_[current_] = 0.0;
        return res;
    }
    const VertexId hop = distances_.next_hop(current_, action);
    const double elapsed = graph_.edge_weight(current_, hop) / speed_;
    for (double& v : idleness_) v += elapsed;
    res.reward = reward_scale * idleness_[hop];
    res.elapsed = elapsed;
    res.landed = hop;
    idleness_[hop] = 0.0;
    current_ = hop;
    time_ += elapsed;
    return res;
}

VertexSignal PatrolEnv::observe() const {
    VertexSignal s;
    s.idleness = idleness_;
    s.agent_distance.resize(graph_.vertex_count());
    for (int v = 0; v < graph_.vertex_count(); ++v)
        s.agent_distance[v] = distances_.dist(current_, v);
    return s;
}

ActorCritic ActorCritic::random(SimRng& rng, int k, double scale) {
    return {SunNetwork::random(rng, k, scale), SunNetwork::random(rng, k, scale)};
}

std::vector<double> softmax(const std::vector<double>& logits) {
    const double m = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - m);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

double policy_entropy(const std::vector<double>& probs) {
    double h = 0.0;
    for (double p : probs)
        if (p > 0.0) h -= p * std::log(p);
    return h;
}

int sample_index(const std::vector<double>& probs, SimRng& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
}

PolicyEval evaluate_actor_critic(const ActorCritic& ac, const PatrolGraph& graph,
                                 const VertexSignal& signal) {
    PolicyEval ev;
    ev.logits = sun_forward(ac.actor, graph, signal);
    ev.probs = softmax(ev.logits);
    ev.entropy = policy_entropy(ev.probs);
    const auto values = sun_forward(ac.critic, graph, signal);
    ev.value_argmax = static_cast<int>(
        std::max_element(values.begin(), values.end()) - values.begin());
    ev.value = values[ev.value_argmax];
    return ev;
}

double a2c_surrogate_loss(const ActorCritic& ac, const PatrolGraph& graph,
                          const std::vector<Transition>& transitions,
                          const std::vector<double>& advantages,
                          const std::vector<double>& targets, double entropy_coef) {
    const size_t n = transitions.size();
    double loss = 0.0;
    for (size_t t = 0; t < n; ++t) {
        const auto ev = evaluate_actor_critic(ac, graph, transitions[t].signal);
        const double m = *std::max_element(ev.logits.begin(), ev.logits.end());
        double lse = 0.0;
        for (double l : ev.logits) lse += std::exp(l - m);
        const double log_pi = ev.logits[transitions[t].action] - m - std::log(lse);
        const double v_err = ev.value - targets[t];
        loss += -advantages[t] * log_pi - entropy_coef * ev.entropy + v_err * v_err;
    }
    return loss / static_cast<double>(n);
}

void a2c_surrogate_grads(const ActorCritic& ac, const PatrolGraph& graph,
                         const std::vector<Transition>& transitions,
                         const std::vector<double>& advantages,
                         const std::vector<double>& targets, double entropy_coef,
                         SunGrads& actor_grads, SunGrads& critic_grads) {
    const size_t n = transitions.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    for (size_t t = 0; t < n; ++t) {
        const auto& tr = transitions[t];
        const auto ev = evaluate_actor_critic(ac, graph, tr.signal);

        // d/du_i of (-adv * log pi(a) - beta * H):
        //   -adv * (1[i==a] - pi_i) + beta * pi_i * (log pi_i + H)
        std::vector<double> g_logits(ev.probs.size());
        for (size_t i = 0; i < ev.probs.size(); ++i) {
            const double indicator = (static_cast<VertexId>(i) == tr.action) ? 1.0 : 0.0;
            double g = -advantages[t] * (indicator - ev.probs[i]);
            if (ev.probs[i] > 0.0)
                g += entropy_coef * ev.probs[i] * (std::log(ev.probs[i]) + ev.entropy);
            g_logits[i] = g * inv_n;
        }
        actor_grads.add(sun_backward(ac.actor, graph, tr.signal, g_logits));

        // Critic: squared error flows through the max-pool winner only.
        std::vector<double> g_value(ev.probs.size(), 0.0);
        g_value[ev.value_argmax] = 2.0 * (ev.value - targets[t]) * inv_n;
        critic_grads.add(sun_backward(ac.critic, graph, tr.signal, g_value));
    }
}

void compute_advantages(const ActorCritic& ac, const PatrolGraph& graph,
                        const std::vector<Transition>& transitions,
                        const VertexSignal& bootstrap_signal, double discount,
                        std::vector<double>& advantages, std::vector<double>& targets) {
    const size_t n = transitions.size();
    std::vector<double> values(n + 1);
    for (size_t t = 0; t < n; ++t)
        values[t] = evaluate_actor_critic(ac, graph, transitions[t].signal).value;
    values[n] = evaluate_actor_critic(ac, graph, bootstrap_signal).value;

    advantages.resize(n);
    targets.resize(n);
    for (size_t t = 0; t < n; ++t) {
        targets[t] = transitions[t].reward + discount * values[t + 1];
        advantages[t] = targets[t] - values[t];
    }
}

namespace {

double clip_grads(SunGrads& grads, double max_norm) {
    const double norm = std::sqrt(grads.squared_norm());
    if (norm > max_norm && norm > 0.0) grads.scale(max_norm / norm);
    return norm;
}

void sgd_step(SunNetwork& net, const SunGrads& grads, double lr) {
    auto ptrs = sun_param_ptrs(net);
    const auto flat = sun_grad_flat(grads);
    for (size_t i = 0; i < ptrs.size(); ++i) *ptrs[i] -= lr * flat[i];
}

}  // namespace

A2cStats a2c_update(ActorCritic& ac, const PatrolGraph& graph,
                    const std::vector<Transition>& transitions,
                    const VertexSignal& bootstrap_signal, const TrainConfig& config) {
    if (transitions.empty()) throw std::invalid_argument("trainer: empty trajectory");

    std::vector<double> advantages, targets;
    compute_advantages(ac, graph, transitions, bootstrap_signal, config.discount,
                       advantages, targets);

    A2cStats stats;
    stats.loss = a2c_surrogate_loss(ac, graph, transitions, advantages, targets,
                                    config.entropy_coef);
    if (!std::isfinite(stats.loss))
        throw std::runtime_error("trainer: non-finite loss in a2c_update");

    SunGrads ga = SunGrads::zeros_like(ac.actor);
    SunGrads gc = SunGrads::zeros_like(ac.critic);
    a2c_surrogate_grads(ac, graph, transitions, advantages, targets, config.entropy_coef,
                        ga, gc);

    stats.grad_norm_actor = clip_grads(ga, config.grad_clip);
    stats.grad_norm_critic = clip_grads(gc, config.grad_clip);
    if (!std::isfinite(stats.grad_norm_actor) || !std::isfinite(stats.grad_norm_critic))
        throw std::runtime_error("trainer: non-finite gradient in a2c_update");

    sgd_step(ac.actor, ga, config.learning_rate);
    sgd_step(ac.critic, gc, config.learning_rate);

    double ent = 0.0;
    for (const auto& tr : transitions)
        ent += evaluate_actor_critic(ac, graph, tr.signal).entropy;
    stats.mean_entropy = ent / static_cast<double>(transitions.size());
    return stats;
}

double validation_mean_idleness(const SunNetwork& net, const PatrolGraph& graph,
                                double duration, double agent_speed, uint64_t seed) {
    const DistanceMatrix distances = shortest_paths(graph);
    const auto strategy = make_suns_strategy(net);
    SimConfig config;
    config.n_agents = 1;
    config.duration = duration;
    config.agent_speed = agent_speed;
    config.seed = seed;
    const SimLog log = run_sim(graph, distances, *strategy, config);
    return summarize(log).mean_idleness;
}

namespace {

void train_one_restart(ActorCritic& ac, const std::vector<PatrolGraph>& graphs,
                       const std::vector<DistanceMatrix>& distances,
                       const TrainConfig& config, SimRng& rng) {
    for (size_t gi = 0; gi < graphs.size(); ++gi) {
        const PatrolGraph& graph = graphs[gi];
        PatrolEnv env(graph, distances[gi], config.agent_speed);
        for (int ep = 0; ep < config.episodes_per_graph; ++ep) {
            env.reset(static_cast<VertexId>(rng.uniform_int(graph.vertex_count())));
            std::vector<Transition> chunk;
            chunk.reserve(config.update_horizon);
            for (int step = 0; step < config.episode_length; ++step) {
                Transition tr;
                tr.signal = env.observe();
                const auto ev = evaluate_actor_critic(ac, graph, tr.signal);
                tr.action = static_cast<VertexId>(sample_index(ev.probs, rng));
                tr.reward = env.step(tr.action, config.reward_scale).reward;
                chunk.push_back(std::move(tr));
                if (static_cast<int>(chunk.size()) == config.update_horizon ||
                    step + 1 == config.episode_length) {
                    a2c_update(ac, graph, chunk, env.observe(), config);
                    chunk.clear();
                }
            }
        }
    }
}

}  // namespace

TrainResult train(const TrainConfig& config) {
    config.validate();

    std::vector<PatrolGraph> train_graphs, val_graphs;
    std::vector<DistanceMatrix> train_dist;
    for (uint64_t s : config.train_graph_seeds) {
        train_graphs.push_back(training_graph_from_seed(s, config.graph_spec));
        train_dist.push_back(shortest_paths(train_graphs.back()));
    }
    for (uint64_t s : config.val_graph_seeds)
        val_graphs.push_back(training_graph_from_seed(s, config.graph_spec));

    TrainReport report;
    report.train_graph_seeds = config.train_graph_seeds;
    report.val_graph_seeds = config.val_graph_seeds;

    SunNetwork best = SunNetwork::zeros(config.sun_depth);
    for (int r = 0; r < config.restarts; ++r) {
        SimRng rng(SimRng::mix(config.seed, static_cast<uint64_t>(r) + 0x5EED));
        ActorCritic ac = ActorCritic::random(rng, config.sun_depth, config.init_scale);

        RestartReport rr;
        rr.restart = r;
        try {
            train_one_restart(ac, train_graphs, train_dist, config, rng);
            double score = 0.0;
            // Validation conditions are fixed per graph (not per restart) so
            // every restart is scored on identical runs.
            for (size_t vi = 0; vi < val_graphs.size(); ++vi)
                score += validation_mean_idleness(
                    ac.actor, val_graphs[vi], config.validation_duration,
                    config.agent_speed, SimRng::mix(config.seed, 0xBA5E + vi));
            rr.validation_score = score / static_cast<double>(val_graphs.size());
        } catch (const std::runtime_error& e) {
            rr.diverged = true;
            rr.error = e.what();
        }
        if (!rr.diverged &&
            (report.best_restart < 0 || rr.validation_score < report.best_score)) {
            report.best_restart = r;
            report.best_score = rr.validation_score;
            best = ac.actor;
        }
        report.restarts.push_back(std::move(rr));
    }

    if (report.best_restart < 0) {
        std::string detail;
        for (const auto& rr : report.restarts)
            detail += " restart " + std::to_string(rr.restart) + ": " + rr.error + ";";
        throw std::runtime_error("trainer: all restarts diverged:" + detail);
    }
    return {std::move(best), std::move(report)};
}

std::vector<DistillSample> collect_distill_samples(const SunNetwork& net,
                                                   const PatrolGraph& graph,
                                                   const DistanceMatrix& distances,
                                                   const SimLog& log, size_t max_states,
                                                   SimRng& rng) {
    // Decision states: the log rows at visit instants, seen from the
    // visited vertex.
    std::vector<std::pair<size_t, VertexId>> states;
    for (const auto& v : log.visits) {
        const auto tick = static_cast<size_t>(std::llround(v.t / log.dt));
        if (tick < log.tick_count()) states.push_back({tick, v.vertex});
    }
    if (states.size() > max_states) {
        for (size_t i = 0; i < max_states; ++i) {
            const size_t pick = i + rng.uniform_int(states.size() - i);
            std::swap(states[i], states[pick]);
        }
        states.resize(max_states);
    }

    std::vector<DistillSample> samples;
    for (const auto& [tick, vantage] : states) {
        VertexSignal signal;
        signal.idleness = log.idleness[tick];
        signal.agent_distance.resize(graph.vertex_count());
        for (int v = 0; v < graph.vertex_count(); ++v)
            signal.agent_distance[v] = distances.dist(vantage, v);
        const auto utilities = sun_forward(net, graph, signal);
        for (int v = 0; v < graph.vertex_count(); ++v)
            samples.push_back({signal.idleness[v], signal.agent_distance[v], utilities[v]});
    }
    return samples;
}

DistillResult distill_mns(const std::vector<DistillSample>& samples,
                          const DistillOptions& options) {
    if (samples.size() < 4) throw std::invalid_argument("distill: too few samples");

    double target_mean = 0.0;
    for (const auto& s : samples) target_mean += s.target;
    target_mean /= static_cast<double>(samples.size());
    double target_var = 0.0;
    for (const auto& s : samples) {
        const double d = s.target - target_mean;
        target_var += d * d;
    }
    target_var /= static_cast<double>(samples.size());
    if (target_var < 1e-12)
        throw std::invalid_argument("distill: degenerate sample (constant targets)");

    // Fit in a standardized space (whitened inputs, unit-variance targets)
    // and fold both affine maps back into the first and last layers, so the
    // returned net consumes raw values and emits raw utilities.
    double mean[2] = {0.0, 0.0}, var[2] = {0.0, 0.0};
    for (const auto& s : samples) {
        mean[0] += s.idleness;
        mean[1] += s.distance;
    }
    mean[0] /= static_cast<double>(samples.size());
    mean[1] /= static_cast<double>(samples.size());
    for (const auto& s : samples) {
        var[0] += (s.idleness - mean[0]) * (s.idleness - mean[0]);
        var[1] += (s.distance - mean[1]) * (s.distance - mean[1]);
    }
    double sigma[2];
    for (int i = 0; i < 2; ++i)
        sigma[i] = std::max(std::sqrt(var[i] / static_cast<double>(samples.size())), 1e-9);
    const double target_sigma = std::sqrt(target_var);

    const auto raw_mse = [&](const Mlp& net) {
        double mse = 0.0;
        for (const auto& s : samples) {
            const double x[2] = {s.idleness, s.distance};
            const double d = mlp_forward(net, x) - s.target;
            mse += d * d;
        }
        return mse / static_cast<double>(samples.size());
    };

    Mlp best_net;
    double best_mse = std::numeric_limits<double>::infinity();
    for (int restart = 0; restart < options.restarts; ++restart) {
        SimRng rng(SimRng::mix(options.seed, static_cast<uint64_t>(restart)));
        Mlp net = Mlp::random({2, 2, 1}, rng, 0.5);
        auto params = mlp_param_ptrs(net);
        std::vector<double> velocity(params.size(), 0.0);
        bool blew_up = false;
        double std_mse = 0.0;
        for (int it = 0; it < options.iterations && !blew_up; ++it) {
            MlpGrads grads = MlpGrads::zeros_like(net);
            MlpCache cache;
            std_mse = 0.0;
            for (const auto& s : samples) {
                const double x[2] = {(s.idleness - mean[0]) / sigma[0],
                                     (s.distance - mean[1]) / sigma[1]};
                const double err =
                    mlp_forward_cached(net, x, cache)[0] -
                    (s.target - target_mean) / target_sigma;
                std_mse += err * err;
                const double up[1] = {2.0 * err / static_cast<double>(samples.size())};
                mlp_backward(net, cache, up, grads);
            }
            std_mse /= static_cast<double>(samples.size());
            if (!std::isfinite(std_mse)) {
                blew_up = true;
                break;
            }
            const auto flat = mlp_grad_flat(grads);
            for (size_t i = 0; i < params.size(); ++i) {
                velocity[i] =
                    options.momentum * velocity[i] - options.learning_rate * flat[i];
                *params[i] += velocity[i];
            }
        }
        if (blew_up || !std::isfinite(std_mse)) continue;
        if (best_mse == std::numeric_limits<double>::infinity() ||
            std_mse * target_var < best_mse) {
            // Fold the affine maps: layer 0 consumes raw inputs, the linear
            // output layer emits raw-scale utilities.
            Mlp folded = net;
            for (size_t o = 0; o < folded.layers[0].w.size(); ++o) {
                for (int i = 0; i < 2; ++i) {
                    folded.layers[0].b[o] -= folded.layers[0].w[o][i] * mean[i] / sigma[i];
                    folded.layers[0].w[o][i] /= sigma[i];
                }
            }
            auto& out = folded.layers.back();
            for (auto& row : out.w)
                for (double& w : row) w *= target_sigma;
            out.b[0] = out.b[0] * target_sigma + target_mean;
            const double mse = raw_mse(folded);
            if (std::isfinite(mse) && mse < best_mse) {
                best_mse = mse;
                best_net = std::move(folded);
            }
        }
    }
    if (!std::isfinite(best_mse)) throw std::runtime_error("distill: all restarts diverged");

    DistillResult result;
    result.net = MnsNetwork{best_net};
    result.net.validate();
    result.residual_mse = raw_mse(best_net);
    return result;
}

}  // namespace patrolkit
