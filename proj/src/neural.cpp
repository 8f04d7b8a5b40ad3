#include "patrolkit/neural.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace patrolkit {

namespace {

[[noreturn]] void fail(const std::string& msg) {
    throw std::invalid_argument("neural: " + msg);
}

double leaky(double z) { return z > 0.0 ? z : kLeakySlope * z; }
double leaky_grad(double z) { return z > 0.0 ? 1.0 : kLeakySlope; }

void check_dims(const std::vector<int>& dims) {
    if (dims.size() < 2) fail("network needs at least one layer");
    for (int d : dims)
        if (d < 1) fail("layer dimension must be positive");
}

}  // namespace

std::vector<int> Mlp::dims() const {
    std::vector<int> d;
    if (layers.empty()) return d;
    d.push_back(input_dim());
    for (const auto& l : layers) d.push_back(static_cast<int>(l.w.size()));
    return d;
}

size_t Mlp::param_count() const {
    size_t c = 0;
    for (const auto& l : layers) c += l.w.size() * l.w[0].size() + l.b.size();
    return c;
}

Mlp Mlp::zeros(const std::vector<int>& dims) {
    check_dims(dims);
    Mlp net;
    for (size_t i = 1; i < dims.size(); ++i) {
        Layer l;
        l.w.assign(dims[i], std::vector<double>(dims[i - 1], 0.0));
        l.b.assign(dims[i], 0.0);
        net.layers.push_back(std::move(l));
    }
    return net;
}

Mlp Mlp::random(const std::vector<int>& dims, SimRng& rng, double scale) {
    Mlp net = zeros(dims);
    for (auto& l : net.layers) {
        for (auto& row : l.w)
            for (auto& w : row) w = rng.uniform(-scale, scale);
        for (auto& b : l.b) b = rng.uniform(-scale, scale);
    }
    return net;
}

std::vector<double> mlp_forward_vec(const Mlp& net, std::span<const double> x) {
    if (static_cast<int>(x.size()) != net.input_dim())
        fail("input size " + std::to_string(x.size()) + " does not match input dim " +
             std::to_string(net.input_dim()));
    std::vector<double> cur(x.begin(), x.end());
    for (size_t li = 0; li < net.layers.size(); ++li) {
        const Layer& l = net.layers[li];
        std::vector<double> out(l.w.size());
        for (size_t o = 0; o < l.w.size(); ++o) {
            double z = l.b[o];
            for (size_t i = 0; i < cur.size(); ++i) z += l.w[o][i] * cur[i];
            out[o] = (li + 1 == net.layers.size()) ? z : leaky(z);
        }
        cur = std::move(out);
    }
    return cur;
}

double mlp_forward(const Mlp& net, std::span<const double> x) {
    if (net.output_dim() != 1) fail("scalar forward on network with output dim != 1");
    return mlp_forward_vec(net, x)[0];
}

std::vector<double> mlp_forward_cached(const Mlp& net, std::span<const double> x,
                                       MlpCache& cache) {
    if (static_cast<int>(x.size()) != net.input_dim())
        fail("input size " + std::to_string(x.size()) + " does not match input dim " +
             std::to_string(net.input_dim()));
    cache.x.assign(net.layers.size() + 1, {});
    cache.z.assign(net.layers.size(), {});
    cache.x[0].assign(x.begin(), x.end());
    for (size_t li = 0; li < net.layers.size(); ++li) {
        const Layer& l = net.layers[li];
        const auto& cur = cache.x[li];
        auto& z = cache.z[li];
        z.resize(l.w.size());
        auto& out = cache.x[li + 1];
        out.resize(l.w.size());
        const bool last = li + 1 == net.layers.size();
        for (size_t o = 0; o < l.w.size(); ++o) {
            double s = l.b[o];
            for (size_t i = 0; i < cur.size(); ++i) s += l.w[o][i] * cur[i];
            z[o] = s;
            out[o] = last ? s : leaky(s);
        }
    }
    return cache.x.back();
}

MlpGrads MlpGrads::zeros_like(const Mlp& net) {
    MlpGrads g;
    for (const auto& l : net.layers) {
        Layer gl;
        gl.w.assign(l.w.size(), std::vector<double>(l.w[0].size(), 0.0));
        gl.b.assign(l.b.size(), 0.0);
        g.layers.push_back(std::move(gl));
    }
    return g;
}

void MlpGrads::scale(double s) {
    for (auto& l : layers) {
        for (auto& row : l.w)
            for (auto& w : row) w *= s;
        for (auto& b : l.b) b *= s;
    }
}

void MlpGrads::add(const MlpGrads& other, double s) {
    for (size_t li = 0; li < layers.size(); ++li) {
        for (size_t o = 0; o < layers[li].w.size(); ++o)
            for (size_t i = 0; i < layers[li].w[o].size(); ++i)
                layers[li].w[o][i] += s * other.layers[li].w[o][i];
        for (size_t o = 0; o < layers[li].b.size(); ++o)
            layers[li].b[o] += s * other.layers[li].b[o];
    }
}

double MlpGrads::squared_norm() const {
    double s = 0.0;
    for (const auto& l : layers) {
        for (const auto& row : l.w)
            for (double w : row) s += w * w;
        for (double b : l.b) s += b * b;
    }
    return s;
}

std::vector<double> mlp_backward(const Mlp& net, const MlpCache& cache,
                                 std::span<const double> upstream, MlpGrads& grads) {
    if (upstream.size() != static_cast<size_t>(net.output_dim()))
        fail("upstream size does not match output dim");
    std::vector<double> delta(upstream.begin(), upstream.end());
    for (int li = static_cast<int>(net.layers.size()) - 1; li >= 0; --li) {
        const Layer& l = net.layers[li];
        const auto& x_in = cache.x[li];
        const auto& z = cache.z[li];
        const bool last = li + 1 == static_cast<int>(net.layers.size());
        if (!last)
            for (size_t o = 0; o < delta.size(); ++o) delta[o] *= leaky_grad(z[o]);
        auto& gl = grads.layers[li];
        std::vector<double> prev(x_in.size(), 0.0);
        for (size_t o = 0; o < l.w.size(); ++o) {
            gl.b[o] += delta[o];
            for (size_t i = 0; i < x_in.size(); ++i) {
                gl.w[o][i] += delta[o] * x_in[i];
                prev[i] += delta[o] * l.w[o][i];
            }
        }
        delta = std::move(prev);
    }
    return delta;
}

SunNetwork SunNetwork::zeros(int k) {
    SunNetwork net{Mlp::zeros({2, 4, 1}), Mlp::zeros({3, 6, 1}), k};
    net.validate();
    return net;
}

SunNetwork SunNetwork::random(SimRng& rng, int k, double scale) {
    SunNetwork net{Mlp::random({2, 4, 1}, rng, scale), Mlp::random({3, 6, 1}, rng, scale), k};
    net.validate();
    return net;
}

void SunNetwork::validate() const {
    if (f1.dims() != std::vector<int>{2, 4, 1})
        fail("f1 must be shaped 2 -> 4 -> 1");
    if (f2.dims() != std::vector<int>{3, 6, 1})
        fail("f2 must be shaped 3 -> 6 -> 1");
    if (k < 1) fail("depth k must be >= 1");
}

namespace {

void check_signal(const PatrolGraph& graph, const VertexSignal& signal) {
    const auto n = static_cast<size_t>(graph.vertex_count());
    if (signal.idleness.size() != n || signal.agent_distance.size() != n)
        fail("signal does not cover every vertex (expected " + std::to_string(n) +
             " entries)");
}

}  // namespace

std::vector<double> sun_forward(const SunNetwork& net, const PatrolGraph& graph,
                                const VertexSignal& signal) {
    net.validate();
    check_signal(graph, signal);
    const int n = graph.vertex_count();
    std::vector<double> idl = signal.idleness;
    std::vector<double> u(n, 0.0);
    for (int pass = 0; pass < net.k; ++pass) {
        for (int i = 0; i < n; ++i) {
            const double self[2] = {idl[i], signal.agent_distance[i]};
            double ui = mlp_forward(net.f1, self);
            for (VertexId j : graph.neighbors(i)) {
                const double nb[3] = {idl[j], signal.agent_distance[j],
                                      graph.edge_weight(i, j)};
                ui += mlp_forward(net.f2, nb);
            }
            u[i] = ui;
        }
        idl = u;
    }
    return u;
}

std::vector<double> sun_forward_dense(const SunNetwork& net, const PatrolGraph& graph,
                                      const VertexSignal& signal) {
    net.validate();
    check_signal(graph, signal);
    const int n = graph.vertex_count();
    std::vector<double> idl = signal.idleness;
    std::vector<double> u(n, 0.0);
    for (int pass = 0; pass < net.k; ++pass) {
        std::vector<double> f1col(n);
        for (int i = 0; i < n; ++i) {
            const double self[2] = {idl[i], signal.agent_distance[i]};
            f1col[i] = mlp_forward(net.f1, self);
        }
        // Full pair tensor, masked by the adjacency matrix.
        std::vector<double> f2mat(static_cast<size_t>(n) * n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                const double w = graph.adjacent(i, j) ? graph.edge_weight(i, j) : 0.0;
                const double nb[3] = {idl[j], signal.agent_distance[j], w};
                f2mat[static_cast<size_t>(i) * n + j] = mlp_forward(net.f2, nb);
            }
        }
        for (int i = 0; i < n; ++i) {
            double s = f1col[i];
            for (int j = 0; j < n; ++j) {
                const double a = graph.adjacent(i, j) ? 1.0 : 0.0;
                s += a * f2mat[static_cast<size_t>(i) * n + j];
            }
            u[i] = s;
        }
        idl = u;
    }
    return u;
}

SunGrads SunGrads::zeros_like(const SunNetwork& net) {
    return {MlpGrads::zeros_like(net.f1), MlpGrads::zeros_like(net.f2)};
}

void SunGrads::scale(double s) {
    f1.scale(s);
    f2.scale(s);
}

void SunGrads::add(const SunGrads& other, double s) {
    f1.add(other.f1, s);
    f2.add(other.f2, s);
}

double SunGrads::squared_norm() const { return f1.squared_norm() + f2.squared_norm(); }

SunGrads sun_backward(const SunNetwork& net, const PatrolGraph& graph,
                      const VertexSignal& signal, std::span<const double> upstream) {
    net.validate();
    check_signal(graph, signal);
    const int n = graph.vertex_count();
    if (upstream.size() != static_cast<size_t>(n)) fail("upstream size must equal |V|");

    // Replay all k passes, keeping per-pass caches, then walk them backwards
    // chaining gradients through the idleness slot.
    struct PassCache {
        std::vector<MlpCache> f1c;                 // per vertex
        std::vector<std::vector<MlpCache>> f2c;    // per vertex, per neighbor
    };
    std::vector<PassCache> passes(net.k);
    std::vector<double> idl = signal.idleness;
    for (int pass = 0; pass < net.k; ++pass) {
        auto& pc = passes[pass];
        pc.f1c.resize(n);
        pc.f2c.resize(n);
        std::vector<double> u(n, 0.0);
        for (int i = 0; i < n; ++i) {
            const double self[2] = {idl[i], signal.agent_distance[i]};
            double ui = mlp_forward_cached(net.f1, self, pc.f1c[i])[0];
            const auto& nbs = graph.neighbors(i);
            pc.f2c[i].resize(nbs.size());
            for (size_t l = 0; l < nbs.size(); ++l) {
                const VertexId j = nbs[l];
                const double nb[3] = {idl[j], signal.agent_distance[j],
                                      graph.edge_weight(i, j)};
                ui += mlp_forward_cached(net.f2, nb, pc.f2c[i][l])[0];
            }
            u[i] = ui;
        }
        idl = u;
    }

    SunGrads grads = SunGrads::zeros_like(net);
    std::vector<double> g(upstream.begin(), upstream.end());
    for (int pass = net.k - 1; pass >= 0; --pass) {
        auto& pc = passes[pass];
        std::vector<double> g_idl(n, 0.0);
        for (int i = 0; i < n; ++i) {
            if (g[i] != 0.0) {
                const double up[1] = {g[i]};
                auto gin = mlp_backward(net.f1, pc.f1c[i], up, grads.f1);
                g_idl[i] += gin[0];
                const auto& nbs = graph.neighbors(i);
                for (size_t l = 0; l < nbs.size(); ++l) {
                    auto gnb = mlp_backward(net.f2, pc.f2c[i][l], up, grads.f2);
                    g_idl[nbs[l]] += gnb[0];
                }
            }
        }
        g = std::move(g_idl);
    }
    return grads;
}

MnsNetwork MnsNetwork::zeros() {
    MnsNetwork net{Mlp::zeros({2, 2, 1})};
    return net;
}

MnsNetwork MnsNetwork::random(SimRng& rng, double scale) {
    MnsNetwork net{Mlp::random({2, 2, 1}, rng, scale)};
    return net;
}

void MnsNetwork::validate() const {
    if (net.dims() != std::vector<int>{2, 2, 1})
        fail("minimal network must be shaped 2 -> 2 -> 1");
}

std::vector<double> mns_forward(const MnsNetwork& net, const VertexSignal& signal) {
    net.validate();
    if (signal.idleness.size() != signal.agent_distance.size())
        fail("signal idleness/distance lengths differ");
    std::vector<double> u(signal.idleness.size());
    for (size_t i = 0; i < u.size(); ++i) {
        const double x[2] = {signal.idleness[i], signal.agent_distance[i]};
        u[i] = mlp_forward(net.net, x);
    }
    return u;
}

std::vector<double*> mlp_param_ptrs(Mlp& net) {
    std::vector<double*> ptrs;
    for (auto& l : net.layers) {
        for (auto& row : l.w)
            for (auto& w : row) ptrs.push_back(&w);
        for (auto& b : l.b) ptrs.push_back(&b);
    }
    return ptrs;
}

std::vector<double> mlp_grad_flat(const MlpGrads& grads) {
    std::vector<double> out;
    for (const auto& l : grads.layers) {
        for (const auto& row : l.w)
            for (double w : row) out.push_back(w);
        for (double b : l.b) out.push_back(b);
    }
    return out;
}

std::vector<double*> sun_param_ptrs(SunNetwork& net) {
    auto ptrs = mlp_param_ptrs(net.f1);
    const auto f2 = mlp_param_ptrs(net.f2);
    ptrs.insert(ptrs.end(), f2.begin(), f2.end());
    return ptrs;
}

std::vector<double> sun_grad_flat(const SunGrads& grads) {
    auto out = mlp_grad_flat(grads.f1);
    const auto f2 = mlp_grad_flat(grads.f2);
    out.insert(out.end(), f2.begin(), f2.end());
    return out;
}

namespace {

nlohmann::json mlp_to_json(const Mlp& net) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : net.layers) layers.push_back({{"w", l.w}, {"b", l.b}});
    return {{"layers", layers}};
}

Mlp mlp_from_json(const nlohmann::json& j, const std::vector<int>& expect_dims,
                  const std::string& name) {
    Mlp net;
    try {
        for (const auto& jl : j.at("layers")) {
            Layer l;
            l.w = jl.at("w").get<std::vector<std::vector<double>>>();
            l.b = jl.at("b").get<std::vector<double>>();
            if (l.w.empty() || l.b.size() != l.w.size())
                fail(name + ": layer weight/bias shapes disagree");
            for (const auto& row : l.w)
                if (row.size() != l.w[0].size()) fail(name + ": ragged weight matrix");
            net.layers.push_back(std::move(l));
        }
    } catch (const nlohmann::json::exception& e) {
        fail(name + ": malformed layer data: " + e.what());
    }
    if (net.dims() != expect_dims) {
        std::string want;
        for (int d : expect_dims) want += (want.empty() ? "" : "->") + std::to_string(d);
        fail(name + ": architecture mismatch, expected " + want);
    }
    return net;
}

nlohmann::json parse_weight_json(const std::string& text) {
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(std::string("malformed weight file: ") + e.what());
    }
}

}  // namespace

std::string sun_to_json(const SunNetwork& net) {
    net.validate();
    nlohmann::json j{{"arch", "sun"},
                     {"k", net.k},
                     {"f1", mlp_to_json(net.f1)},
                     {"f2", mlp_to_json(net.f2)}};
    return j.dump(2) + "\n";
}

std::string mns_to_json(const MnsNetwork& net) {
    net.validate();
    nlohmann::json j{{"arch", "mns"}, {"f1", mlp_to_json(net.net)}};
    return j.dump(2) + "\n";
}

SunNetwork sun_from_json(const std::string& text) {
    const auto j = parse_weight_json(text);
    if (j.value("arch", "") != "sun")
        fail("weight file arch is '" + j.value("arch", "<missing>") +
             "', expected 'sun'");
    SunNetwork net;
    net.k = j.value("k", 1);
    net.f1 = mlp_from_json(j.at("f1"), {2, 4, 1}, "f1");
    net.f2 = mlp_from_json(j.at("f2"), {3, 6, 1}, "f2");
    net.validate();
    return net;
}

MnsNetwork mns_from_json(const std::string& text) {
    const auto j = parse_weight_json(text);
    if (j.value("arch", "") != "mns")
        fail("weight file arch is '" + j.value("arch", "<missing>") +
             "', expected 'mns'");
    MnsNetwork net;
    net.net = mlp_from_json(j.at("f1"), {2, 2, 1}, "f1");
    net.validate();
    return net;
}

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) fail("cannot write " + path);
    out << text;
}

}  // namespace

void save_weights(const SunNetwork& net, const std::string& path) {
    write_file(path, sun_to_json(net));
}

void save_weights(const MnsNetwork& net, const std::string& path) {
    write_file(path, mns_to_json(net));
}

SunNetwork load_sun_weights(const std::string& path) { return sun_from_json(read_file(path)); }

MnsNetwork load_mns_weights(const std::string& path) { return mns_from_json(read_file(path)); }

std::string weight_file_arch(const std::string& path) {
    const auto j = parse_weight_json(read_file(path));
    return j.value("arch", "");
}

}  // namespace patrolkit
