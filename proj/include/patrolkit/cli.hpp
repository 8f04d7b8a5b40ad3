#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace patrolkit {

struct RunOptions {
    std::string map;
    std::string strategy = "sebs";
    std::string weights;
    int agents = 1;
    double duration = 3600.0;
    double dt = 1.0;
    double speed = 1.0;
    double msg_fail_prob = 0.0;
    uint64_t seed = 0;
    std::vector<int> start_vertices;
    std::string out = "run_out";
};

// One strategy entry of a sweep: baselines are just a name, neural
// strategies carry their weight file.
struct SweepStrategy {
    std::string name;
    std::string weights;
};

struct SweepSpec {
    std::vector<std::string> maps;
    std::vector<SweepStrategy> strategies;
    std::vector<int> team_sizes;
    std::vector<double> msg_fail_probs;
    int runs_per_cell = 5;
    double duration = 3600.0;
    double dt = 1.0;
    double speed = 1.0;
    uint64_t base_seed = 0;
};

SweepSpec load_sweep_spec(const std::string& path);

struct TrainCliOptions {
    std::string config_file;
    std::string arch = "sun";  // sun | mns (mns = train sun, then distill)
    std::string out = "weights.json";
    std::string report;
    int restarts_override = 0;
    uint64_t seed_override = 0;
    bool has_seed_override = false;
};

struct AdversaryCliOptions {
    std::string log_dir;
    double attack_duration = 60.0;
    double train_fraction = 0.5;
    std::string out = "adversary_report.json";
};

struct AnalyzeCliOptions {
    std::vector<std::string> log_dirs;
    std::string group_by = "none";  // none | map | agents | msg_fail_prob
    std::string out = "analysis_out";
};

int cmd_run(const RunOptions& opts);
int cmd_sweep(const std::string& spec_path, int jobs, const std::string& out_dir);
int cmd_train(const TrainCliOptions& opts);
int cmd_adversary(const AdversaryCliOptions& opts);
int cmd_analyze(const AnalyzeCliOptions& opts);

// Full argv entry point (CLI11 app); returns the process exit code.
int cli_main(int argc, const char* const* argv);

// Stable per-cell seed: base_seed plus a hash of the cell coordinates, so
// extending a sweep never reshuffles existing cells.
uint64_t sweep_cell_seed(uint64_t base_seed, const std::string& map,
                         const std::string& strategy, int agents, double msg_fail_prob,
                         int run);

}  // namespace patrolkit
