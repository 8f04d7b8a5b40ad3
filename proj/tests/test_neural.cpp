#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "patrolkit/graph.hpp"
#include "patrolkit/neural.hpp"

using namespace patrolkit;

namespace {

PatrolGraph make_graph(int n, std::vector<Edge> edges) {
    std::vector<Vertex> vs(n);
    for (int i = 0; i < n; ++i) vs[i] = {i, static_cast<double>(i), 0.0};
    return PatrolGraph::build(std::move(vs), std::move(edges));
}

// Smallest |pre-activation| over the hidden layers; used to keep
// finite-difference probes away from the rectifier kink.
double kink_margin(const Mlp& net, std::span<const double> x) {
    MlpCache cache;
    mlp_forward_cached(net, x, cache);
    double m = 1e18;
    for (size_t li = 0; li + 1 < cache.z.size() + 1; ++li) {
        if (li + 1 == cache.z.size()) break;  // last layer is linear, no kink
        for (double z : cache.z[li]) m = std::min(m, std::abs(z));
    }
    return m;
}

double sun_kink_margin(const SunNetwork& net, const PatrolGraph& graph,
                       const VertexSignal& signal) {
    double m = 1e18;
    std::vector<double> idl = signal.idleness;
    for (int pass = 0; pass < net.k; ++pass) {
        std::vector<double> u(graph.vertex_count(), 0.0);
        for (int i = 0; i < graph.vertex_count(); ++i) {
            const double self[2] = {idl[i], signal.agent_distance[i]};
            m = std::min(m, kink_margin(net.f1, self));
            double ui = mlp_forward(net.f1, self);
            for (VertexId j : graph.neighbors(i)) {
                const double nb[3] = {idl[j], signal.agent_distance[j],
                                      graph.edge_weight(i, j)};
                m = std::min(m, kink_margin(net.f2, nb));
                ui += mlp_forward(net.f2, nb);
            }
            u[i] = ui;
        }
        idl = u;
    }
    return m;
}

double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

}  // namespace

TEST_CASE("zero network maps everything to zero") {
    const auto f1 = Mlp::zeros({2, 4, 1});
    CHECK(mlp_forward(f1, std::vector<double>{3.0, -7.0}) == 0.0);
    CHECK(mlp_forward(f1, std::vector<double>{0.0, 0.0}) == 0.0);
}

TEST_CASE("leaky rectifier slope on a single unit") {
    Mlp net = Mlp::zeros({1, 1, 1});
    net.layers[0].w[0][0] = 1.0;
    net.layers[1].w[0][0] = 1.0;
    CHECK(mlp_forward(net, std::vector<double>{-1.0}) == doctest::Approx(-0.3));
    CHECK(mlp_forward(net, std::vector<double>{2.0}) == doctest::Approx(2.0));
}

TEST_CASE("hand-computed 2-4-1 forward pass") {
    Mlp net = Mlp::zeros({2, 4, 1});
    net.layers[0].w = {{0.1, 0.2}, {0.3, -0.4}, {-0.5, 0.6}, {0.7, 0.8}};
    net.layers[0].b = {0.01, 0.02, 0.03, -0.04};
    net.layers[1].w = {{1.0, -1.0, 0.5, 0.25}};
    net.layers[1].b = {0.1};
    // z = (0.11, 0.32, -0.47, 0.66), act = (0.11, 0.32, -0.141, 0.66)
    // out = 0.11 - 0.32 - 0.0705 + 0.165 + 0.1 = -0.0155
    CHECK(mlp_forward(net, std::vector<double>{1.0, 0.0}) ==
          doctest::Approx(-0.0155).epsilon(1e-12));
}

TEST_CASE("dimension mismatches are rejected") {
    const auto net = Mlp::zeros({2, 4, 1});
    CHECK_THROWS_AS(mlp_forward(net, std::vector<double>{1.0}), std::invalid_argument);
    CHECK_THROWS_AS(mlp_forward(net, std::vector<double>{1.0, 2.0, 3.0}),
                    std::invalid_argument);
}

TEST_CASE("isolated vertex utility is pure self-information") {
    const auto g = make_graph(1, {});
    SimRng rng(3);
    const auto net = SunNetwork::random(rng);
    VertexSignal s{{12.5}, {0.0}};
    const auto u = sun_forward(net, g, s);
    const double self[2] = {12.5, 0.0};
    CHECK(u[0] == doctest::Approx(mlp_forward(net.f1, self)).epsilon(1e-12));
}

TEST_CASE("two-vertex utility follows the self-plus-neighbor sum") {
    const auto g = make_graph(2, {{0, 1, 4.0}});
    SimRng rng(5);
    const auto net = SunNetwork::random(rng);
    VertexSignal s{{10.0, 3.0}, {0.0, 4.0}};
    const auto u = sun_forward(net, g, s);
    const double self0[2] = {10.0, 0.0};
    const double nb0[3] = {3.0, 4.0, 4.0};
    CHECK(u[0] == doctest::Approx(mlp_forward(net.f1, self0) +
                                  mlp_forward(net.f2, nb0))
                      .epsilon(1e-12));
    const double self1[2] = {3.0, 4.0};
    const double nb1[3] = {10.0, 0.0, 4.0};
    CHECK(u[1] == doctest::Approx(mlp_forward(net.f1, self1) +
                                  mlp_forward(net.f2, nb1))
                      .epsilon(1e-12));
}

TEST_CASE("neighborhood loop and centralized form agree") {
    for (uint64_t seed = 0; seed < 25; ++seed) {
        SimRng rng(seed);
        const int n = 2 + static_cast<int>(rng.uniform_int(10));
        const long long cap = static_cast<long long>(n) * (n - 1) / 2;
        const int extra = static_cast<int>(rng.uniform_int(cap - (n - 1) + 1));
        const auto g = generate_random_graph(n, n - 1 + extra, 2.0, 20.0, seed + 1000);
        const int k = 1 + static_cast<int>(rng.uniform_int(3));
        const auto net = SunNetwork::random(rng, k);
        VertexSignal s;
        for (int v = 0; v < n; ++v) {
            s.idleness.push_back(rng.uniform(0.0, 300.0));
            s.agent_distance.push_back(rng.uniform(0.0, 60.0));
        }
        const auto a = sun_forward(net, g, s);
        const auto b = sun_forward_dense(net, g, s);
        for (int v = 0; v < n; ++v) CHECK(std::abs(a[v] - b[v]) < 1e-9);
    }
}

TEST_CASE("signals must cover every vertex") {
    const auto g = make_graph(3, {{0, 1, 1.0}, {1, 2, 1.0}});
    SimRng rng(2);
    const auto net = SunNetwork::random(rng);
    VertexSignal short_signal{{1.0, 2.0}, {0.0, 1.0}};
    CHECK_THROWS_WITH_AS(sun_forward(net, g, short_signal),
                         doctest::Contains("every vertex"), std::invalid_argument);
    CHECK_THROWS_AS(sun_forward_dense(net, g, short_signal), std::invalid_argument);
}

TEST_CASE("utilities are permutation-equivariant") {
    SimRng rng(17);
    const auto g = generate_random_graph(8, 14, 2.0, 9.0, 21);
    const auto net = SunNetwork::random(rng, 2);
    VertexSignal s;
    for (int v = 0; v < 8; ++v) {
        s.idleness.push_back(rng.uniform(0.0, 100.0));
        s.agent_distance.push_back(rng.uniform(0.0, 40.0));
    }
    const auto u = sun_forward(net, g, s);

    // Relabel v -> perm[v].
    const std::vector<int> perm{3, 0, 7, 1, 6, 2, 5, 4};
    std::vector<Vertex> vs(8);
    for (int v = 0; v < 8; ++v) vs[perm[v]] = {perm[v], 0.0, 0.0};
    std::vector<Edge> edges;
    for (const auto& e : g.edges()) edges.push_back({perm[e.u], perm[e.v], e.weight});
    const auto g2 = PatrolGraph::build(vs, edges);
    VertexSignal s2;
    s2.idleness.resize(8);
    s2.agent_distance.resize(8);
    for (int v = 0; v < 8; ++v) {
        s2.idleness[perm[v]] = s.idleness[v];
        s2.agent_distance[perm[v]] = s.agent_distance[v];
    }
    const auto u2 = sun_forward(net, g2, s2);
    for (int v = 0; v < 8; ++v) CHECK(u2[perm[v]] == doctest::Approx(u[v]).epsilon(1e-12));
}

TEST_CASE("depth-k pass equals manual re-stacking") {
    SimRng rng(29);
    const auto g = generate_random_graph(6, 9, 2.0, 8.0, 31);
    auto net = SunNetwork::random(rng, 2);
    VertexSignal s;
    for (int v = 0; v < 6; ++v) {
        s.idleness.push_back(rng.uniform(0.0, 50.0));
        s.agent_distance.push_back(rng.uniform(0.0, 30.0));
    }
    SunNetwork single = net;
    single.k = 1;
    const auto u1 = sun_forward(single, g, s);
    VertexSignal s2{u1, s.agent_distance};
    const auto expected = sun_forward(single, g, s2);
    const auto got = sun_forward(net, g, s);
    for (int v = 0; v < 6; ++v) CHECK(got[v] == doctest::Approx(expected[v]).epsilon(1e-12));
}

TEST_CASE("minimal network evaluates each vertex in isolation") {
    MnsNetwork zero = MnsNetwork::zeros();
    VertexSignal s{{5.0, 80.0, 0.0}, {1.0, 2.0, 3.0}};
    for (double u : mns_forward(zero, s)) CHECK(u == 0.0);

    SimRng rng(7);
    const auto net = MnsNetwork::random(rng);
    const auto batch = mns_forward(net, s);
    for (size_t i = 0; i < 3; ++i) {
        VertexSignal one{{s.idleness[i]}, {s.agent_distance[i]}};
        CHECK(batch[i] == doctest::Approx(mns_forward(net, one)[0]).epsilon(1e-15));
    }
}

TEST_CASE("hand-computed minimal network value") {
    MnsNetwork net = MnsNetwork::zeros();
    net.net.layers[0].w = {{0.05, -0.1}, {-0.02, 0.04}};
    net.net.layers[0].b = {0.0, 0.1};
    net.net.layers[1].w = {{2.0, -1.0}};
    net.net.layers[1].b = {0.5};
    // v = (10, 5): z = (0.5 - 0.5, -0.2 + 0.2 + 0.1) = (0.0, 0.1)
    // act = (0.0, 0.1); out = 0.0 - 0.1 + 0.5 = 0.4
    VertexSignal s{{10.0}, {5.0}};
    CHECK(mns_forward(net, s)[0] == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("derivative at zero pre-activation uses the leaky slope") {
    Mlp net = Mlp::zeros({1, 1, 1});
    net.layers[0].w[0][0] = 1.0;
    net.layers[1].w[0][0] = 1.0;
    MlpCache cache;
    mlp_forward_cached(net, std::vector<double>{0.0}, cache);
    MlpGrads grads = MlpGrads::zeros_like(net);
    const double up[1] = {1.0};
    const auto gin = mlp_backward(net, cache, up, grads);
    CHECK(gin[0] == doctest::Approx(0.3));
    CHECK(grads.layers[0].b[0] == doctest::Approx(0.3));
    CHECK(grads.layers[0].w[0][0] == 0.0);  // input is zero
}

TEST_CASE("zero-input bias gradients match finite differences") {
    SimRng rng(101);
    Mlp net = Mlp::random({2, 4, 1}, rng);
    const std::vector<double> x{0.0, 0.0};
    MlpCache cache;
    mlp_forward_cached(net, x, cache);
    MlpGrads grads = MlpGrads::zeros_like(net);
    const double up[1] = {1.0};
    mlp_backward(net, cache, up, grads);
    const auto flat = mlp_grad_flat(grads);
    auto params = mlp_param_ptrs(net);
    const double h = 1e-5;
    for (size_t p = 0; p < params.size(); ++p) {
        const double save = *params[p];
        *params[p] = save + h;
        const double fp = mlp_forward(net, x);
        *params[p] = save - h;
        const double fm = mlp_forward(net, x);
        *params[p] = save;
        CHECK(rel_err(flat[p], (fp - fm) / (2.0 * h)) < 1e-4);
    }
}

TEST_CASE("full gradients match finite differences on 50 random networks") {
    int tested = 0;
    uint64_t seed = 0;
    while (tested < 50) {
        SimRng rng(seed++);
        const std::vector<std::vector<int>> shapes{{2, 4, 1}, {3, 6, 1}, {2, 2, 1}};
        const auto& dims = shapes[tested % shapes.size()];
        Mlp net = Mlp::random(dims, rng);
        std::vector<double> x(dims[0]);
        for (auto& v : x) v = rng.uniform(-2.0, 2.0);
        if (kink_margin(net, x) < 1e-2) continue;  // resample away from the kink
        ++tested;

        MlpCache cache;
        mlp_forward_cached(net, x, cache);
        MlpGrads grads = MlpGrads::zeros_like(net);
        const double up[1] = {1.0};
        const auto gin = mlp_backward(net, cache, up, grads);
        const auto flat = mlp_grad_flat(grads);
        auto params = mlp_param_ptrs(net);
        const double h = 1e-5;
        for (size_t p = 0; p < params.size(); ++p) {
            const double save = *params[p];
            *params[p] = save + h;
            const double fp = mlp_forward(net, x);
            *params[p] = save - h;
            const double fm = mlp_forward(net, x);
            *params[p] = save;
            CHECK(rel_err(flat[p], (fp - fm) / (2.0 * h)) < 1e-4);
        }
        // Input gradients too.
        for (size_t i = 0; i < x.size(); ++i) {
            const double save = x[i];
            x[i] = save + h;
            const double fp = mlp_forward(net, x);
            x[i] = save - h;
            const double fm = mlp_forward(net, x);
            x[i] = save;
            CHECK(rel_err(gin[i], (fp - fm) / (2.0 * h)) < 1e-4);
        }
    }
}

TEST_CASE("stacked graph-network gradients match finite differences") {
    int tested = 0;
    uint64_t seed = 500;
    while (tested < 6) {
        SimRng rng(seed++);
        const auto g = generate_random_graph(5, 7, 2.0, 6.0, seed);
        const int k = 1 + static_cast<int>(rng.uniform_int(2));
        SunNetwork net = SunNetwork::random(rng, k);
        VertexSignal s;
        std::vector<double> coeff;
        for (int v = 0; v < 5; ++v) {
            s.idleness.push_back(rng.uniform(0.0, 20.0));
            s.agent_distance.push_back(rng.uniform(0.0, 10.0));
            coeff.push_back(rng.uniform(-1.0, 1.0));
        }
        if (sun_kink_margin(net, g, s) < 1e-2) continue;
        ++tested;

        const auto grads = sun_backward(net, g, s, coeff);
        const auto flat = sun_grad_flat(grads);
        auto params = sun_param_ptrs(net);
        auto weighted = [&]() {
            const auto u = sun_forward(net, g, s);
            double sum = 0.0;
            for (int v = 0; v < 5; ++v) sum += coeff[v] * u[v];
            return sum;
        };
        const double h = 1e-5;
        for (size_t p = 0; p < params.size(); ++p) {
            const double save = *params[p];
            *params[p] = save + h;
            const double fp = weighted();
            *params[p] = save - h;
            const double fm = weighted();
            *params[p] = save;
            CHECK(rel_err(flat[p], (fp - fm) / (2.0 * h)) < 1e-4);
        }
    }
}

TEST_CASE("weight files round-trip bit-exactly") {
    SimRng rng(88);
    const auto sun = SunNetwork::random(rng, 1);
    const auto path = std::filesystem::temp_directory_path() / "patrolkit_sun.json";
    save_weights(sun, path.string());
    const auto loaded = load_sun_weights(path.string());
    CHECK(sun_to_json(sun) == sun_to_json(loaded));
    for (size_t li = 0; li < sun.f1.layers.size(); ++li)
        CHECK(sun.f1.layers[li].w == loaded.f1.layers[li].w);

    const auto mns = MnsNetwork::random(rng);
    save_weights(mns, path.string());
    const auto mloaded = load_mns_weights(path.string());
    CHECK(mns_to_json(mns) == mns_to_json(mloaded));
    std::filesystem::remove(path);
}

TEST_CASE("weight loader enforces the declared architecture") {
    SUBCASE("wrong hidden width") {
        std::string text = R"({"arch":"sun","k":1,
            "f1":{"layers":[{"w":[[0,0],[0,0],[0,0],[0,0],[0,0]],"b":[0,0,0,0,0]},
                             {"w":[[0,0,0,0,0]],"b":[0]}]},
            "f2":{"layers":[{"w":[[0,0,0],[0,0,0],[0,0,0],[0,0,0],[0,0,0],[0,0,0]],"b":[0,0,0,0,0,0]},
                             {"w":[[0,0,0,0,0,0]],"b":[0]}]}})";
        CHECK_THROWS_WITH_AS(sun_from_json(text), doctest::Contains("architecture"),
                             std::invalid_argument);
    }
    SUBCASE("mns file loaded as sun") {
        const auto mns = MnsNetwork::zeros();
        CHECK_THROWS_WITH_AS(sun_from_json(mns_to_json(mns)),
                             doctest::Contains("expected 'sun'"), std::invalid_argument);
    }
    SUBCASE("sun file loaded as mns") {
        const auto sun = SunNetwork::zeros();
        CHECK_THROWS_WITH_AS(mns_from_json(sun_to_json(sun)),
                             doctest::Contains("expected 'mns'"), std::invalid_argument);
    }
}
