#include "patrolkit/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace patrolkit {

namespace {

[[noreturn]] void fail(const std::string& msg) {
    throw std::invalid_argument("analysis: " + msg);
}

}  // namespace

IdlenessSummary summarize(const SimLog& log) {
    if (log.tick_count() == 0 || log.n_vertices == 0) fail("empty log");
    IdlenessSummary s;
    s.per_vertex_mean.assign(log.n_vertices, 0.0);
    s.per_vertex_max.assign(log.n_vertices, 0.0);
    for (const auto& row : log.idleness) {
        for (int v = 0; v < log.n_vertices; ++v) {
            s.per_vertex_mean[v] += row[v];
            s.per_vertex_max[v] = std::max(s.per_vertex_max[v], row[v]);
        }
    }
    const double ticks = static_cast<double>(log.tick_count());
    for (int v = 0; v < log.n_vertices; ++v) {
        s.per_vertex_mean[v] /= ticks;
        s.mean_idleness += s.per_vertex_mean[v];
        s.mean_max_idleness += s.per_vertex_max[v];
    }
    s.mean_idleness /= log.n_vertices;
    s.mean_max_idleness /= log.n_vertices;
    return s;
}

std::vector<double> relative_to_best(const std::vector<double>& values) {
    if (values.empty()) fail("relative_to_best: no values");
    const double best = *std::min_element(values.begin(), values.end());
    if (!(best > 0.0)) fail("relative_to_best: best value must be positive");
    std::vector<double> out(values.size());
    for (size_t i = 0; i < values.size(); ++i) out[i] = values[i] / best;
    return out;
}

std::map<double, double> relative_to_baseline(const std::map<double, double>& by_pf) {
    const auto it = by_pf.find(0.0);
    if (it == by_pf.end()) fail("relative_to_baseline: missing p(f)=0 entry");
    if (!(it->second > 0.0)) fail("relative_to_baseline: baseline must be positive");
    std::map<double, double> out;
    for (const auto& [pf, v] : by_pf) out[pf] = v / it->second;
    return out;
}

RankedData rank_groups(const std::vector<std::vector<double>>& groups) {
    RankedData rd;
    rd.ranks.resize(groups.size());
    std::vector<std::pair<double, std::pair<size_t, size_t>>> pooled;  // value, (group, idx)
    for (size_t g = 0; g < groups.size(); ++g) {
        rd.ranks[g].assign(groups[g].size(), 0.0);
        for (size_t i = 0; i < groups[g].size(); ++i)
            pooled.push_back({groups[g][i], {g, i}});
    }
    rd.total = pooled.size();
    std::sort(pooled.begin(), pooled.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    size_t i = 0;
    while (i < pooled.size()) {
        size_t j = i;
        while (j < pooled.size() && pooled[j].first == pooled[i].first) ++j;
        const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        const auto t = static_cast<double>(j - i);
        if (t > 1.0) rd.tie_sum += t * t * t - t;
        for (size_t k = i; k < j; ++k)
            rd.ranks[pooled[k].second.first][pooled[k].second.second] = midrank;
        i = j;
    }
    return rd;
}

KruskalWallisResult kruskal_wallis(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2) fail("kruskal_wallis: need at least 2 groups");
    for (const auto& g : groups)
        if (g.empty()) fail("kruskal_wallis: empty group");

    const RankedData rd = rank_groups(groups);
    const auto n = static_cast<double>(rd.total);

    double sum = 0.0;
    for (size_t g = 0; g < groups.size(); ++g) {
        const double r = std::accumulate(rd.ranks[g].begin(), rd.ranks[g].end(), 0.0);
        sum += r * r / static_cast<double>(groups[g].size());
    }
    double h = 12.0 / (n * (n + 1.0)) * sum - 3.0 * (n + 1.0);

    const double correction = 1.0 - rd.tie_sum / (n * n * n - n);
    // All values tied: zero spread, H is 0 by convention.
    h = correction > 0.0 ? h / correction : 0.0;
    if (std::abs(h) < 1e-12) h = 0.0;

    KruskalWallisResult res;
    res.h = h;
    res.p_value = chi_square_sf(h, static_cast<int>(groups.size()) - 1);
    return res;
}

std::vector<std::vector<double>> dunns_test(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2) fail("dunns_test: need at least 2 groups");
    for (const auto& g : groups)
        if (g.empty()) fail("dunns_test: empty group");

    const RankedData rd = rank_groups(groups);
    const auto n = static_cast<double>(rd.total);
    const size_t m = groups.size();

    std::vector<double> mean_rank(m);
    for (size_t g = 0; g < m; ++g)
        mean_rank[g] = std::accumulate(rd.ranks[g].begin(), rd.ranks[g].end(), 0.0) /
                       static_cast<double>(groups[g].size());

    const double variance_base =
        n * (n + 1.0) / 12.0 - rd.tie_sum / (12.0 * (n - 1.0));

    std::vector<std::vector<double>> p(m, std::vector<double>(m, 1.0));
    for (size_t a = 0; a < m; ++a) {
        for (size_t b = a + 1; b < m; ++b) {
            const double se = std::sqrt(variance_base *
                                        (1.0 / groups[a].size() + 1.0 / groups[b].size()));
            const double z = se > 0.0 ? (mean_rank[a] - mean_rank[b]) / se : 0.0;
            const double pv = normal_two_sided_p(z);
            p[a][b] = pv;
            p[b][a] = pv;
        }
    }
    return p;
}

std::vector<double> holm_bonferroni(const std::vector<double>& pvalues) {
    const size_t m = pvalues.size();
    std::vector<size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return pvalues[a] < pvalues[b]; });

    std::vector<double> adjusted(m, 0.0);
    double running = 0.0;
    for (size_t i = 0; i < m; ++i) {
        const double scaled = pvalues[order[i]] * static_cast<double>(m - i);
        running = std::max(running, std::min(scaled, 1.0));
        adjusted[order[i]] = running;
    }
    return adjusted;
}

double normal_two_sided_p(double z) {
    return std::erfc(std::abs(z) / std::sqrt(2.0));
}

namespace {

// Regularized incomplete gamma, series and continued-fraction branches.
double gamma_p_series(double s, double x) {
    double term = 1.0 / s;
    double sum = term;
    double a = s;
    for (int i = 0; i < 500; ++i) {
        a += 1.0;
        term *= x / a;
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + s * std::log(x) - std::lgamma(s));
}

double gamma_q_cf(double s, double x) {
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - s;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - s);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return h * std::exp(-x + s * std::log(x) - std::lgamma(s));
}

}  // namespace

double chi_square_sf(double x, int dof) {
    if (dof < 1) fail("chi_square_sf: dof must be >= 1");
    if (x <= 0.0) return 1.0;
    const double s = dof / 2.0;
    const double half_x = x / 2.0;
    if (half_x < s + 1.0) return 1.0 - gamma_p_series(s, half_x);
    return gamma_q_cf(s, half_x);
}

}  // namespace patrolkit
