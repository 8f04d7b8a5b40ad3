#pragma once

#include <span>
#include <string>
#include <vector>

#include "patrolkit/graph.hpp"
#include "patrolkit/rng.hpp"

namespace patrolkit {

// Hidden-layer activation slope for negative inputs. The derivative at a
// pre-activation of exactly zero is defined as the same slope.
constexpr double kLeakySlope = 0.3;

struct Layer {
    std::vector<std::vector<double>> w;  // [out][in]
    std::vector<double> b;               // [out]
};

// Fully connected perceptron. Leaky-rectifier activation after every layer
// except the last, which is linear.
struct Mlp {
    std::vector<Layer> layers;

    int input_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.front().w[0].size()); }
    int output_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.back().w.size()); }
    std::vector<int> dims() const;
    size_t param_count() const;

    static Mlp zeros(const std::vector<int>& dims);
    static Mlp random(const std::vector<int>& dims, SimRng& rng, double scale = 0.5);
};

// Forward pass; x.size() must equal input_dim.
std::vector<double> mlp_forward_vec(const Mlp& net, std::span<const double> x);
// Convenience for the scalar-output networks used everywhere here.
double mlp_forward(const Mlp& net, std::span<const double> x);

// Saved activations from a forward pass, consumed by mlp_backward.
struct MlpCache {
    std::vector<std::vector<double>> x;  // x[0] = input, x[i] = output of layer i-1
    std::vector<std::vector<double>> z;  // pre-activations per layer
};

std::vector<double> mlp_forward_cached(const Mlp& net, std::span<const double> x, MlpCache& cache);

struct MlpGrads {
    std::vector<Layer> layers;

    static MlpGrads zeros_like(const Mlp& net);
    void scale(double s);
    void add(const MlpGrads& other, double s = 1.0);
    double squared_norm() const;
};

// Backpropagates `upstream` (gradient w.r.t. the network output) through a
// cached forward pass. Parameter gradients are accumulated into `grads`;
// the return value is the gradient w.r.t. the network input.
std::vector<double> mlp_backward(const Mlp& net, const MlpCache& cache,
                                 std::span<const double> upstream, MlpGrads& grads);

// Per-vertex input signal: instantaneous idleness (s) and shortest-path
// distance from the deciding agent (m). Edge inputs come from the graph's
// edge weights.
struct VertexSignal {
    std::vector<double> idleness;
    std::vector<double> agent_distance;
};

// Graph utility network: f1 scores a vertex from its own signal, f2 scores
// each neighbor signal concatenated with the connecting edge weight, and
// the two are summed per vertex. With depth > 1 the utilities are fed back
// into the idleness slot and the pass repeated.
struct SunNetwork {
    Mlp f1;  // 2 -> 4 -> 1
    Mlp f2;  // 3 -> 6 -> 1
    int k = 1;

    static SunNetwork zeros(int k = 1);
    static SunNetwork random(SimRng& rng, int k = 1, double scale = 0.5);
    void validate() const;  // throws on any shape mismatch
};

// Per-vertex neighborhood loop evaluation (the form agents run).
std::vector<double> sun_forward(const SunNetwork& net, const PatrolGraph& graph,
                                const VertexSignal& signal);

// Centralized evaluation: f1/f2 broadcast over the full vertex and pair
// tensors with the adjacency matrix as the shift operator. Same math as
// sun_forward by a different route; kept as a cross-check.
std::vector<double> sun_forward_dense(const SunNetwork& net, const PatrolGraph& graph,
                                      const VertexSignal& signal);

struct SunGrads {
    MlpGrads f1;
    MlpGrads f2;

    static SunGrads zeros_like(const SunNetwork& net);
    void scale(double s);
    void add(const SunGrads& other, double s = 1.0);
    double squared_norm() const;
};

// Gradient of sum_i upstream[i] * u_i w.r.t. all f1/f2 parameters,
// backpropagated through all k passes.
SunGrads sun_backward(const SunNetwork& net, const PatrolGraph& graph,
                      const VertexSignal& signal, std::span<const double> upstream);

// Reduced per-vertex utility: 2 inputs -> 2 hidden -> 1 output, no
// neighbor or edge information.
struct MnsNetwork {
    Mlp net;

    static MnsNetwork zeros();
    static MnsNetwork random(SimRng& rng, double scale = 0.5);
    void validate() const;
};

std::vector<double> mns_forward(const MnsNetwork& net, const VertexSignal& signal);

// Flat parameter access, used by the optimizer and by finite-difference
// checks. Order: layer by layer, weights row-major, then biases.
std::vector<double*> mlp_param_ptrs(Mlp& net);
std::vector<double> mlp_grad_flat(const MlpGrads& grads);
std::vector<double*> sun_param_ptrs(SunNetwork& net);  // f1 then f2
std::vector<double> sun_grad_flat(const SunGrads& grads);

// Weight files: {"arch": "sun"|"mns", ...}. Loading enforces the declared
// architecture shapes.
std::string sun_to_json(const SunNetwork& net);
std::string mns_to_json(const MnsNetwork& net);
SunNetwork sun_from_json(const std::string& text);
MnsNetwork mns_from_json(const std::string& text);

void save_weights(const SunNetwork& net, const std::string& path);
void save_weights(const MnsNetwork& net, const std::string& path);
SunNetwork load_sun_weights(const std::string& path);
MnsNetwork load_mns_weights(const std::string& path);

// Peeks at the "arch" tag of a weight file.
std::string weight_file_arch(const std::string& path);

}  // namespace patrolkit
