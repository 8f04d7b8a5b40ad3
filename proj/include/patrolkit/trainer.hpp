#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "patrolkit/graph.hpp"
#include "patrolkit/neural.hpp"
#include "patrolkit/rng.hpp"

namespace patrolkit {

// Parameters for randomly generated training/validation graphs. One graph
// per seed; vertex and edge counts are drawn from these ranges.
struct TrainGraphSpec {
    int min_vertices = 15;
    int max_vertices = 30;
    int max_extra_edges = 15;  // edges beyond the spanning tree
    double min_edge = 2.0;
    double max_edge = 10.0;
};

struct TrainConfig {
    std::vector<uint64_t> train_graph_seeds;  // 10 by default
    std::vector<uint64_t> val_graph_seeds;    // 8 by default
    TrainGraphSpec graph_spec;
    int restarts = 5;
    int episode_length = 200;
    int episodes_per_graph = 10;
    int update_horizon = 20;
    double discount = 0.99;
    double learning_rate = 1e-3;
    double entropy_coef = 1e-2;
    double reward_scale = 0.01;
    double grad_clip = 1.0;
    double init_scale = 0.5;
    int sun_depth = 1;
    double validation_duration = 3600.0;
    double agent_speed = 1.0;
    uint64_t seed = 0;

    static TrainConfig defaults();
    void validate() const;
};

PatrolGraph training_graph_from_seed(uint64_t seed, const TrainGraphSpec& spec);

// Single-agent hop-wise environment: an action names any vertex and the
// agent steps once along the shortest path toward it. Time advances by the
// traversed edge length over the agent speed; landing on a vertex collects
// reward proportional to its idleness and resets it. Choosing the current
// vertex is a zero-length revisit.
class PatrolEnv {
public:
    PatrolEnv(const PatrolGraph& graph, const DistanceMatrix& distances, double speed);

    void reset(VertexId start);

    struct StepResult {
        double reward = 0.0;
        double elapsed = 0.0;
        VertexId landed = 0;
    };
    StepResult step(VertexId action, double reward_scale);

    VertexSignal observe() const;
    VertexId current() const { return current_; }
    double time() const { return time_; }
    const std::vector<double>& idleness() const { return idleness_; }

private:
    const PatrolGraph& graph_;
    const DistanceMatrix& distances_;
    double speed_;
    VertexId current_ = 0;
    double time_ = 0.0;
    std::vector<double> idleness_;
};

// Actor samples a vertex through a softmax over all vertex utilities; the
// critic is an independent network max-pooled over vertices.
struct ActorCritic {
    SunNetwork actor;
    SunNetwork critic;

    static ActorCritic random(SimRng& rng, int k, double scale);
};

struct PolicyEval {
    std::vector<double> logits;
    std::vector<double> probs;
    double entropy = 0.0;
    double value = 0.0;
    int value_argmax = 0;
};

PolicyEval evaluate_actor_critic(const ActorCritic& ac, const PatrolGraph& graph,
                                 const VertexSignal& signal);

std::vector<double> softmax(const std::vector<double>& logits);
double policy_entropy(const std::vector<double>& probs);
int sample_index(const std::vector<double>& probs, SimRng& rng);

struct Transition {
    VertexSignal signal;
    VertexId action = 0;
    double reward = 0.0;
};

// The differentiable objective with advantages and critic targets held
// fixed: mean over steps of
//   -adv * log pi(a|s) - entropy_coef * H(pi(.|s)) + (V(s) - target)^2.
double a2c_surrogate_loss(const ActorCritic& ac, const PatrolGraph& graph,
                          const std::vector<Transition>& transitions,
                          const std::vector<double>& advantages,
                          const std::vector<double>& targets, double entropy_coef);

void a2c_surrogate_grads(const ActorCritic& ac, const PatrolGraph& graph,
                         const std::vector<Transition>& transitions,
                         const std::vector<double>& advantages,
                         const std::vector<double>& targets, double entropy_coef,
                         SunGrads& actor_grads, SunGrads& critic_grads);

// One-step advantages: adv[t] = r[t] + discount * V(s[t+1]) - V(s[t]),
// bootstrapped with V(bootstrap_signal) after the last transition.
void compute_advantages(const ActorCritic& ac, const PatrolGraph& graph,
                        const std::vector<Transition>& transitions,
                        const VertexSignal& bootstrap_signal, double discount,
                        std::vector<double>& advantages, std::vector<double>& targets);

struct A2cStats {
    double loss = 0.0;
    double mean_entropy = 0.0;
    double grad_norm_actor = 0.0;
    double grad_norm_critic = 0.0;
};

// Computes advantages, clips gradients per network, and takes one SGD
// step. Throws std::runtime_error on a non-finite loss.
A2cStats a2c_update(ActorCritic& ac, const PatrolGraph& graph,
                    const std::vector<Transition>& transitions,
                    const VertexSignal& bootstrap_signal, const TrainConfig& config);

struct RestartReport {
    int restart = 0;
    double validation_score = 0.0;  // mean idleness over validation graphs
    bool diverged = false;
    std::string error;
};

struct TrainReport {
    std::vector<RestartReport> restarts;
    int best_restart = -1;
    double best_score = 0.0;
    std::vector<uint64_t> train_graph_seeds;
    std::vector<uint64_t> val_graph_seeds;
};

struct TrainResult {
    SunNetwork best;
    TrainReport report;
};

// Multi-restart A2C training with validation-based selection: each restart
// trains sequentially over the training graphs, is scored by single-agent
// mean idleness over the validation graphs, and the best restart wins.
// Fully determined by config.seed.
TrainResult train(const TrainConfig& config);

// Greedy-policy validation sim: mean idleness of a single agent patrolling
// `graph` for `duration` seconds.
double validation_mean_idleness(const SunNetwork& net, const PatrolGraph& graph,
                                double duration, double agent_speed, uint64_t seed);

struct DistillSample {
    double idleness = 0.0;
    double distance = 0.0;
    double target = 0.0;
};

// Harvests (idleness, distance) -> utility samples from decision states of
// a simulation log.
std::vector<DistillSample> collect_distill_samples(const SunNetwork& net,
                                                   const PatrolGraph& graph,
                                                   const DistanceMatrix& distances,
                                                   const struct SimLog& log,
                                                   size_t max_states, SimRng& rng);

struct DistillOptions {
    int iterations = 3000;
    double learning_rate = 0.05;
    double momentum = 0.9;
    int restarts = 8;
    uint64_t seed = 0;
};

struct DistillResult {
    MnsNetwork net;
    double residual_mse = 0.0;
};

// Fits the 3-neuron network to the sampled utilities by full-batch
// gradient descent (inputs whitened internally, the affine transform folded
// back into the first layer). Throws on a degenerate constant-target
// sample.
DistillResult distill_mns(const std::vector<DistillSample>& samples,
                          const DistillOptions& options);

}  // namespace patrolkit
