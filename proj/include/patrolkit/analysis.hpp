#pragma once

#include <map>
#include <vector>

#include "patrolkit/sim.hpp"

namespace patrolkit {

// Idleness metrics over a full log: mean of per-tick vertex means, and the
// mean over vertices of each vertex's maximum instantaneous idleness.
// Every tick is counted (no warm-up exclusion), so a vertex left unvisited
// for a long stretch weighs in fully.
struct IdlenessSummary {
    double mean_idleness = 0.0;
    double mean_max_idleness = 0.0;
    std::vector<double> per_vertex_mean;
    std::vector<double> per_vertex_max;
};

IdlenessSummary summarize(const SimLog& log);

// Normalizes a set of per-strategy values within one scenario so the best
// (lowest) becomes 1.0.
std::vector<double> relative_to_best(const std::vector<double>& values);

// Normalizes a failure-probability sweep of one strategy/scenario against
// its value at p(f) = 0.
std::map<double, double> relative_to_baseline(const std::map<double, double>& by_pf);

struct KruskalWallisResult {
    double h = 0.0;
    double p_value = 1.0;
};

// Rank-based H with tie correction; p-value from the chi-square
// distribution with (groups - 1) degrees of freedom.
KruskalWallisResult kruskal_wallis(const std::vector<std::vector<double>>& groups);

// Pairwise Dunn z-tests on mean ranks with tie correction; two-sided
// p-values. Returns a symmetric matrix with 1.0 on the diagonal.
std::vector<std::vector<double>> dunns_test(const std::vector<std::vector<double>>& groups);

// Holm-Bonferroni step-down adjustment, monotone and capped at 1.
std::vector<double> holm_bonferroni(const std::vector<double>& pvalues);

// Upper-tail probability of the chi-square distribution (regularized upper
// incomplete gamma).
double chi_square_sf(double x, int dof);

// Two-sided tail helper for Dunn: P(|Z| >= z) for standard normal Z.
double normal_two_sided_p(double z);

// Midranks of the pooled sample plus the tie-correction sum  Σ(t³ - t).
struct RankedData {
    std::vector<std::vector<double>> ranks;  // same shape as groups
    double tie_sum = 0.0;
    size_t total = 0;
};
RankedData rank_groups(const std::vector<std::vector<double>>& groups);

}  // namespace patrolkit
