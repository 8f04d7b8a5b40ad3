#include "patrolkit/cli.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "patrolkit/adversary.hpp"
#include "patrolkit/analysis.hpp"
#include "patrolkit/graph.hpp"
#include "patrolkit/sim.hpp"
#include "patrolkit/strategy.hpp"
#include "patrolkit/trainer.hpp"

namespace fs = std::filesystem;

namespace patrolkit {

namespace {

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

uint64_t fnv1a(const std::string& s) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

nlohmann::json run_config_echo(const RunOptions& opts) {
    return nlohmann::json{{"command", "run"},
                          {"map", opts.map},
                          {"strategy", opts.strategy},
                          {"weights", opts.weights},
                          {"agents", opts.agents},
                          {"duration", opts.duration},
                          {"dt", opts.dt},
                          {"speed", opts.speed},
                          {"msg_fail_prob", opts.msg_fail_prob},
                          {"seed", opts.seed},
                          {"start_vertices", opts.start_vertices}};
}

// Executes one run and writes the self-contained log directory
// (config echo, graph copy, CSV logs, idleness summary).
IdlenessSummary execute_run(const RunOptions& opts) {
    const PatrolGraph graph = load_graph(opts.map);
    const DistanceMatrix distances = shortest_paths(graph);
    const auto strategy = make_strategy(opts.strategy, opts.weights);

    SimConfig config;
    config.graph_file = opts.map;
    config.strategy = opts.strategy;
    config.weights_file = opts.weights;
    config.n_agents = opts.agents;
    config.duration = opts.duration;
    config.dt = opts.dt;
    config.agent_speed = opts.speed;
    config.msg_fail_prob = opts.msg_fail_prob;
    config.seed = opts.seed;
    config.start_vertices.assign(opts.start_vertices.begin(), opts.start_vertices.end());

    const SimLog log = run_sim(graph, distances, *strategy, config);

    fs::create_directories(opts.out);
    write_text(fs::path(opts.out) / "config.json", run_config_echo(opts).dump(2) + "\n");
    write_text(fs::path(opts.out) / "graph.json", graph_to_json(graph));
    log.write_csv(opts.out);

    const IdlenessSummary summary = summarize(log);
    nlohmann::json js{{"mean_idleness", summary.mean_idleness},
                      {"mean_max_idleness", summary.mean_max_idleness}};
    write_text(fs::path(opts.out) / "summary.json", js.dump(2) + "\n");
    return summary;
}

}  // namespace

uint64_t sweep_cell_seed(uint64_t base_seed, const std::string& map,
                         const std::string& strategy, int agents, double msg_fail_prob,
                         int run) {
    std::ostringstream key;
    key << map << "|" << strategy << "|" << agents << "|" << fmt_double(msg_fail_prob)
        << "|" << run;
    return base_seed + fnv1a(key.str());
}

int cmd_run(const RunOptions& opts) {
    const IdlenessSummary summary = execute_run(opts);
    std::cout << "run complete: mean idleness " << fmt_double(summary.mean_idleness)
              << " s, mean-max " << fmt_double(summary.mean_max_idleness) << " s, logs in "
              << opts.out << "\n";
    return 0;
}

SweepSpec load_sweep_spec(const std::string& path) {
    nlohmann::json j = nlohmann::json::parse(read_text(path));
    SweepSpec spec;
    spec.maps = j.at("maps").get<std::vector<std::string>>();
    for (const auto& js : j.at("strategies")) {
        SweepStrategy s;
        if (js.is_string()) {
            s.name = js.get<std::string>();
        } else {
            s.name = js.at("name").get<std::string>();
            s.weights = js.value("weights", "");
        }
        spec.strategies.push_back(std::move(s));
    }
    spec.team_sizes = j.at("team_sizes").get<std::vector<int>>();
    spec.msg_fail_probs = j.at("msg_fail_probs").get<std::vector<double>>();
    spec.runs_per_cell = j.value("runs_per_cell", 5);
    spec.duration = j.value("duration", 3600.0);
    spec.dt = j.value("dt", 1.0);
    spec.speed = j.value("speed", 1.0);
    spec.base_seed = j.value("base_seed", static_cast<uint64_t>(0));
    return spec;
}

namespace {

struct SweepCell {
    RunOptions opts;
    std::string name;
    std::string map;
    std::string strategy;
    int agents = 0;
    double msg_fail_prob = 0.0;
    int run = 0;
};

std::vector<SweepCell> enumerate_cells(const SweepSpec& spec, const fs::path& out_dir) {
    std::vector<SweepCell> cells;
    for (const auto& map : spec.maps) {
        const std::string stem = fs::path(map).stem().string();
        for (const auto& strat : spec.strategies) {
            for (int agents : spec.team_sizes) {
                for (double pf : spec.msg_fail_probs) {
                    for (int run = 0; run < spec.runs_per_cell; ++run) {
                        SweepCell cell;
                        cell.map = map;
                        cell.strategy = strat.name;
                        cell.agents = agents;
                        cell.msg_fail_prob = pf;
                        cell.run = run;
                        std::ostringstream name;
                        name << stem << "_" << strat.name << "_a" << agents << "_pf"
                             << static_cast<int>(std::lround(pf * 100)) << "_r" << run;
                        cell.name = name.str();
                        cell.opts.map = map;
                        cell.opts.strategy = strat.name;
                        cell.opts.weights = strat.weights;
                        cell.opts.agents = agents;
                        cell.opts.duration = spec.duration;
                        cell.opts.dt = spec.dt;
                        cell.opts.speed = spec.speed;
                        cell.opts.msg_fail_prob = pf;
                        cell.opts.seed = sweep_cell_seed(spec.base_seed, map, strat.name,
                                                         agents, pf, run);
                        cell.opts.out = (out_dir / "cells" / cell.name).string();
                        cells.push_back(std::move(cell));
                    }
                }
            }
        }
    }
    return cells;
}

}  // namespace

int cmd_sweep(const std::string& spec_path, int jobs, const std::string& out_dir) {
    const SweepSpec spec = load_sweep_spec(spec_path);
    if (jobs < 1) jobs = 1;
    fs::create_directories(out_dir);
    write_text(fs::path(out_dir) / "config.json", read_text(spec_path));

    const auto cells = enumerate_cells(spec, out_dir);

    std::atomic<size_t> next{0};
    std::atomic<size_t> completed{0};
    std::mutex io_mutex;
    std::string first_error;

    auto worker = [&]() {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= cells.size()) return;
            const auto& cell = cells[i];
            const fs::path done_marker = fs::path(cell.opts.out) / "summary.json";
            try {
                if (fs::exists(done_marker)) {
                    std::lock_guard<std::mutex> lk(io_mutex);
                    std::cout << "skip " << cell.name << " (already complete)\n";
                } else {
                    execute_run(cell.opts);
                    const size_t done = completed.fetch_add(1) + 1;
                    std::lock_guard<std::mutex> lk(io_mutex);
                    std::cout << "done " << cell.name << " (" << done << " new)\n";
                }
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lk(io_mutex);
                if (first_error.empty())
                    first_error = cell.name + ": " + e.what();
            }
        }
    };

    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    if (!first_error.empty()) {
        std::cerr << "sweep failed at cell " << first_error << "\n";
        return 1;
    }

    // Aggregate table rebuilt from the per-cell summaries so resumed
    // sweeps still produce a complete file.
    std::ofstream agg(fs::path(out_dir) / "aggregate.csv");
    agg << "map,strategy,agents,msg_fail_prob,run,seed,mean_idleness,mean_max_idleness\n";
    for (const auto& cell : cells) {
        const auto js = nlohmann::json::parse(
            read_text(fs::path(cell.opts.out) / "summary.json"));
        agg << fs::path(cell.map).stem().string() << "," << cell.strategy << ","
            << cell.agents << "," << fmt_double(cell.msg_fail_prob) << "," << cell.run
            << "," << cell.opts.seed << ","
            << fmt_double(js.at("mean_idleness").get<double>()) << ","
            << fmt_double(js.at("mean_max_idleness").get<double>()) << "\n";
    }
    std::cout << "sweep complete: " << cells.size() << " cells in " << out_dir << "\n";
    return 0;
}

namespace {

TrainConfig train_config_from_json(const nlohmann::json& j) {
    TrainConfig c = TrainConfig::defaults();
    if (j.contains("train_graph_seeds"))
        c.train_graph_seeds = j.at("train_graph_seeds").get<std::vector<uint64_t>>();
    if (j.contains("val_graph_seeds"))
        c.val_graph_seeds = j.at("val_graph_seeds").get<std::vector<uint64_t>>();
    if (j.contains("graph_spec")) {
        const auto& g = j.at("graph_spec");
        c.graph_spec.min_vertices = g.value("min_vertices", c.graph_spec.min_vertices);
        c.graph_spec.max_vertices = g.value("max_vertices", c.graph_spec.max_vertices);
        c.graph_spec.max_extra_edges =
            g.value("max_extra_edges", c.graph_spec.max_extra_edges);
        c.graph_spec.min_edge = g.value("min_edge", c.graph_spec.min_edge);
        c.graph_spec.max_edge = g.value("max_edge", c.graph_spec.max_edge);
    }
    c.restarts = j.value("restarts", c.restarts);
    c.episode_length = j.value("episode_length", c.episode_length);
    c.episodes_per_graph = j.value("episodes_per_graph", c.episodes_per_graph);
    c.update_horizon = j.value("update_horizon", c.update_horizon);
    c.discount = j.value("discount", c.discount);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.entropy_coef = j.value("entropy_coef", c.entropy_coef);
    c.reward_scale = j.value("reward_scale", c.reward_scale);
    c.grad_clip = j.value("grad_clip", c.grad_clip);
    c.init_scale = j.value("init_scale", c.init_scale);
    c.sun_depth = j.value("sun_depth", c.sun_depth);
    c.validation_duration = j.value("validation_duration", c.validation_duration);
    c.agent_speed = j.value("agent_speed", c.agent_speed);
    c.seed = j.value("seed", c.seed);
    return c;
}

nlohmann::json train_config_echo(const TrainConfig& c) {
    return nlohmann::json{
        {"train_graph_seeds", c.train_graph_seeds},
        {"val_graph_seeds", c.val_graph_seeds},
        {"graph_spec",
         {{"min_vertices", c.graph_spec.min_vertices},
          {"max_vertices", c.graph_spec.max_vertices},
          {"max_extra_edges", c.graph_spec.max_extra_edges},
          {"min_edge", c.graph_spec.min_edge},
          {"max_edge", c.graph_spec.max_edge}}},
        {"restarts", c.restarts},
        {"episode_length", c.episode_length},
        {"episodes_per_graph", c.episodes_per_graph},
        {"update_horizon", c.update_horizon},
        {"discount", c.discount},
        {"learning_rate", c.learning_rate},
        {"entropy_coef", c.entropy_coef},
        {"reward_scale", c.reward_scale},
        {"grad_clip", c.grad_clip},
        {"init_scale", c.init_scale},
        {"sun_depth", c.sun_depth},
        {"validation_duration", c.validation_duration},
        {"agent_speed", c.agent_speed},
        {"seed", c.seed}};
}

}  // namespace

int cmd_train(const TrainCliOptions& opts) {
    TrainConfig config = TrainConfig::defaults();
    if (!opts.config_file.empty())
        config = train_config_from_json(nlohmann::json::parse(read_text(opts.config_file)));
    if (opts.restarts_override > 0) config.restarts = opts.restarts_override;
    if (opts.has_seed_override) config.seed = opts.seed_override;

    const TrainResult result = train(config);

    nlohmann::json report;
    report["arch"] = opts.arch;
    report["config"] = train_config_echo(config);
    report["best_restart"] = result.report.best_restart;
    report["best_validation_score"] = result.report.best_score;
    report["restarts"] = nlohmann::json::array();
    for (const auto& rr : result.report.restarts) {
        report["restarts"].push_back({{"restart", rr.restart},
                                      {"validation_score", rr.validation_score},
                                      {"diverged", rr.diverged},
                                      {"error", rr.error}});
    }

    if (opts.arch == "mns") {
        // Distill the trained network down to the three-neuron form using
        // decision states harvested from its own runs on the training
        // graphs.
        SimRng rng(SimRng::mix(config.seed, 0xD157));
        std::vector<DistillSample> samples;
        for (uint64_t gs : config.train_graph_seeds) {
            const PatrolGraph graph = training_graph_from_seed(gs, config.graph_spec);
            const DistanceMatrix distances = shortest_paths(graph);
            const auto strategy = make_suns_strategy(result.best);
            SimConfig sc;
            sc.n_agents = 1;
            sc.duration = config.validation_duration;
            sc.agent_speed = config.agent_speed;
            sc.seed = SimRng::mix(config.seed, 0xD158 + gs);
            const SimLog log = run_sim(graph, distances, *strategy, sc);
            const auto got = collect_distill_samples(result.best, graph, distances, log,
                                                     100, rng);
            samples.insert(samples.end(), got.begin(), got.end());
        }
        DistillOptions dopts;
        dopts.seed = SimRng::mix(config.seed, 0xD159);
        const DistillResult distilled = distill_mns(samples, dopts);
        save_weights(distilled.net, opts.out);
        report["distill_samples"] = samples.size();
        report["distill_residual_mse"] = distilled.residual_mse;
    } else if (opts.arch == "sun") {
        save_weights(result.best, opts.out);
    } else {
        std::cerr << "unknown arch '" << opts.arch << "' (expected sun|mns)\n";
        return 1;
    }

    const std::string report_path =
        opts.report.empty() ? opts.out + ".report.json" : opts.report;
    write_text(report_path, report.dump(2) + "\n");
    std::cout << "train complete: best restart " << result.report.best_restart
              << " (validation mean idleness "
              << fmt_double(result.report.best_score) << " s), weights in " << opts.out
              << "\n";
    return 0;
}

int cmd_adversary(const AdversaryCliOptions& opts) {
    const SimLog log = SimLog::read_csv(opts.log_dir);
    const PatrolGraph graph =
        graph_from_json(read_text(fs::path(opts.log_dir) / "graph.json"));
    const DistanceMatrix distances = shortest_paths(graph);

    const auto features = AdversaryFeatures::extract(log, graph, distances);
    const auto policy =
        fit_attack_policy(features, log, opts.attack_duration, opts.train_fraction);
    const auto report = evaluate_attack_policy(policy, features, log);

    nlohmann::json j = nlohmann::json::parse(adversary_report_json(report, policy));
    j["config"] = {{"command", "adversary"},
                   {"log", opts.log_dir},
                   {"attack_duration", opts.attack_duration},
                   {"train_fraction", opts.train_fraction}};
    write_text(opts.out, j.dump(2) + "\n");
    std::cout << "adversary evaluation: aggregate p(s) "
              << fmt_double(report.aggregate_p_s) << " ("
              << report.no_attempt.size() << " vertices without attempts), report in "
              << opts.out << "\n";
    return 0;
}

namespace {

struct LogRecord {
    std::string dir;
    std::string map;
    std::string strategy;
    int agents = 0;
    double msg_fail_prob = 0.0;
    uint64_t seed = 0;
    IdlenessSummary summary;
};

std::string group_key(const LogRecord& rec, const std::string& group_by) {
    if (group_by == "map") return rec.map;
    if (group_by == "agents") return "agents=" + std::to_string(rec.agents);
    if (group_by == "msg_fail_prob") return "pf=" + fmt_double(rec.msg_fail_prob);
    return "all";
}

nlohmann::json stats_for_metric(const std::vector<std::string>& strategies,
                                const std::vector<std::vector<double>>& groups) {
    nlohmann::json out;
    const auto kw = kruskal_wallis(groups);
    out["kruskal_wallis"] = {{"H", kw.h}, {"p", kw.p_value}};

    const auto dunn = dunns_test(groups);
    std::vector<double> flat;
    for (size_t a = 0; a < groups.size(); ++a)
        for (size_t b = a + 1; b < groups.size(); ++b) flat.push_back(dunn[a][b]);
    const auto adjusted = holm_bonferroni(flat);
    std::vector<std::vector<double>> adj(groups.size(),
                                         std::vector<double>(groups.size(), 1.0));
    size_t idx = 0;
    for (size_t a = 0; a < groups.size(); ++a)
        for (size_t b = a + 1; b < groups.size(); ++b) {
            adj[a][b] = adjusted[idx];
            adj[b][a] = adjusted[idx];
            ++idx;
        }
    out["strategies"] = strategies;
    out["dunn_raw"] = dunn;
    out["dunn_holm_adjusted"] = adj;
    return out;
}

}  // namespace

int cmd_analyze(const AnalyzeCliOptions& opts) {
    if (opts.log_dirs.empty()) {
        std::cerr << "analyze: no log directories given (--logs)\n";
        return 1;
    }
    std::vector<LogRecord> records;
    for (const auto& dir : opts.log_dirs) {
        LogRecord rec;
        rec.dir = dir;
        const auto cfg = nlohmann::json::parse(read_text(fs::path(dir) / "config.json"));
        rec.map = fs::path(cfg.value("map", std::string("unknown"))).stem().string();
        rec.strategy = cfg.value("strategy", std::string("unknown"));
        rec.agents = cfg.value("agents", 0);
        rec.msg_fail_prob = cfg.value("msg_fail_prob", 0.0);
        rec.seed = cfg.value("seed", static_cast<uint64_t>(0));
        rec.summary = summarize(SimLog::read_csv(dir));
        records.push_back(std::move(rec));
    }

    fs::create_directories(opts.out);
    write_text(fs::path(opts.out) / "config.json",
               nlohmann::json{{"command", "analyze"},
                              {"logs", opts.log_dirs},
                              {"group_by", opts.group_by}}
                       .dump(2) +
                   "\n");
    {
        std::ofstream out(fs::path(opts.out) / "summary.csv");
        out << "dir,map,strategy,agents,msg_fail_prob,seed,mean_idleness,mean_max_"
               "idleness\n";
        for (const auto& r : records)
            out << r.dir << "," << r.map << "," << r.strategy << "," << r.agents << ","
                << fmt_double(r.msg_fail_prob) << "," << r.seed << ","
                << fmt_double(r.summary.mean_idleness) << ","
                << fmt_double(r.summary.mean_max_idleness) << "\n";
    }

    // Relative idleness: per scenario (map, agents, pf), each strategy's
    // mean-of-runs divided by the scenario best.
    {
        std::map<std::string, std::map<std::string, std::vector<double>>> scenarios;
        for (const auto& r : records) {
            const std::string scen =
                r.map + ",agents=" + std::to_string(r.agents) + ",pf=" +
                fmt_double(r.msg_fail_prob);
            scenarios[scen][r.strategy].push_back(r.summary.mean_idleness);
        }
        std::ofstream out(fs::path(opts.out) / "relative.csv");
        out << "scenario,strategy,mean_idleness,relative_idleness\n";
        for (const auto& [scen, by_strategy] : scenarios) {
            std::vector<std::string> names;
            std::vector<double> means;
            for (const auto& [name, runs] : by_strategy) {
                double m = 0.0;
                for (double v : runs) m += v;
                names.push_back(name);
                means.push_back(m / static_cast<double>(runs.size()));
            }
            const auto rel = relative_to_best(means);
            for (size_t i = 0; i < names.size(); ++i)
                out << scen << "," << names[i] << "," << fmt_double(means[i]) << ","
                    << fmt_double(rel[i]) << "\n";
        }
    }

    // Statistical comparison of strategies, pooled or stratified.
    nlohmann::json stats;
    stats["group_by"] = opts.group_by;
    stats["groups"] = nlohmann::json::array();
    std::map<std::string, std::vector<const LogRecord*>> strata;
    for (const auto& r : records) strata[group_key(r, opts.group_by)].push_back(&r);
    for (const auto& [key, recs] : strata) {
        std::map<std::string, std::vector<double>> mean_groups, max_groups;
        for (const auto* r : recs) {
            mean_groups[r->strategy].push_back(r->summary.mean_idleness);
            max_groups[r->strategy].push_back(r->summary.mean_max_idleness);
        }
        nlohmann::json entry;
        entry["key"] = key;
        entry["runs"] = recs.size();
        if (mean_groups.size() >= 2) {
            std::vector<std::string> names;
            std::vector<std::vector<double>> mg, xg;
            for (const auto& [name, vals] : mean_groups) {
                names.push_back(name);
                mg.push_back(vals);
                xg.push_back(max_groups[name]);
            }
            entry["mean_idleness"] = stats_for_metric(names, mg);
            entry["mean_max_idleness"] = stats_for_metric(names, xg);
        } else {
            entry["note"] = "fewer than two strategies in stratum; no test run";
        }
        stats["groups"].push_back(std::move(entry));
    }
    write_text(fs::path(opts.out) / "stats.json", stats.dump(2) + "\n");

    std::cout << "analyze complete: " << records.size() << " runs, reports in "
              << opts.out << "\n";
    return 0;
}

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"patrolkit: multi-agent graph patrol simulation and analysis"};
    app.require_subcommand(1);

    uint64_t default_seed = 0;
    bool env_seed = false;
    if (const char* env = std::getenv("PATROLKIT_SEED")) {
        default_seed = std::strtoull(env, nullptr, 10);
        env_seed = true;
    }

    RunOptions run_opts;
    run_opts.seed = default_seed;
    std::string run_config_path;
    auto* run = app.add_subcommand("run", "Simulate one patrol run and write CSV logs");
    run->add_option("--config", run_config_path,
                    "Config JSON; explicit flags override its fields");
    run->add_option("--map", run_opts.map, "Graph JSON file");
    run->add_option("--strategy", run_opts.strategy, "suns|mns|sebs|random");
    run->add_option("--weights", run_opts.weights, "Weight file (suns/mns)");
    run->add_option("--agents", run_opts.agents, "Team size")->default_val(1);
    run->add_option("--duration", run_opts.duration, "Simulated seconds")
        ->default_val(3600.0);
    run->add_option("--dt", run_opts.dt, "Tick length in seconds")->default_val(1.0);
    run->add_option("--speed", run_opts.speed, "Agent speed m/s")->default_val(1.0);
    run->add_option("--msg-fail-prob", run_opts.msg_fail_prob,
                    "Per-receiver message rejection probability")
        ->default_val(0.0);
    run->add_option("--seed", run_opts.seed, "RNG seed");
    run->add_option("--start-vertices", run_opts.start_vertices,
                    "Explicit start vertices (one per agent)");
    run->add_option("--out", run_opts.out, "Output directory")->required();

    std::string sweep_spec_path, sweep_out;
    int sweep_jobs = 1;
    auto* sweep = app.add_subcommand("sweep", "Run a full scenario grid from a spec file");
    sweep->add_option("--spec", sweep_spec_path, "Sweep spec JSON")->required();
    sweep->add_option("--jobs", sweep_jobs, "Parallel cells")->default_val(1);
    sweep->add_option("--out", sweep_out, "Output directory")->required();

    TrainCliOptions train_opts;
    auto* train_cmd = app.add_subcommand("train", "Train a utility network");
    train_cmd->add_option("--config", train_opts.config_file, "Training config JSON");
    train_cmd->add_option("--arch", train_opts.arch, "sun|mns")->default_val("sun");
    train_cmd->add_option("--out", train_opts.out, "Output weight file")->required();
    train_cmd->add_option("--report", train_opts.report, "Report JSON path");
    train_cmd->add_option("--restarts", train_opts.restarts_override,
                          "Override restart count");
    auto* train_seed =
        train_cmd->add_option("--seed", train_opts.seed_override, "Override seed");

    AdversaryCliOptions adv_opts;
    auto* adv = app.add_subcommand("adversary",
                                   "Fit and score the observing adversary on a log");
    adv->add_option("--log", adv_opts.log_dir, "Log directory from run/sweep")->required();
    adv->add_option("--attack-duration", adv_opts.attack_duration,
                    "Attack duration in seconds")
        ->default_val(60.0);
    adv->add_option("--train-fraction", adv_opts.train_fraction,
                    "Chronological fraction used for fitting")
        ->default_val(0.5);
    adv->add_option("--out", adv_opts.out, "Report JSON path")->required();

    AnalyzeCliOptions an_opts;
    auto* an = app.add_subcommand("analyze", "Summaries and significance tests over logs");
    an->add_option("--logs", an_opts.log_dirs, "Log directories")->required();
    an->add_option("--group-by", an_opts.group_by, "none|map|agents|msg_fail_prob")
        ->default_val("none");
    an->add_option("--out", an_opts.out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (run->parsed()) {
            bool config_has_seed = false;
            if (!run_config_path.empty()) {
                const std::string text = read_text(run_config_path);
                const SimConfig file_cfg = sim_config_from_json(text);
                config_has_seed = nlohmann::json::parse(text).contains("seed");
                if (run->count("--map") == 0) run_opts.map = file_cfg.graph_file;
                if (run->count("--strategy") == 0) run_opts.strategy = file_cfg.strategy;
                if (run->count("--weights") == 0) run_opts.weights = file_cfg.weights_file;
                if (run->count("--agents") == 0) run_opts.agents = file_cfg.n_agents;
                if (run->count("--duration") == 0) run_opts.duration = file_cfg.duration;
                if (run->count("--dt") == 0) run_opts.dt = file_cfg.dt;
                if (run->count("--speed") == 0) run_opts.speed = file_cfg.agent_speed;
                if (run->count("--msg-fail-prob") == 0)
                    run_opts.msg_fail_prob = file_cfg.msg_fail_prob;
                if (run->count("--seed") == 0 && config_has_seed)
                    run_opts.seed = file_cfg.seed;
                if (run->count("--start-vertices") == 0)
                    run_opts.start_vertices.assign(file_cfg.start_vertices.begin(),
                                                   file_cfg.start_vertices.end());
            }
            if (run_opts.map.empty()) {
                std::cerr << "run: --map is required (directly or via --config)\n";
                return 1;
            }
            // Seed priority: explicit flag, then config file, then the
            // PATROLKIT_SEED environment override.
            if (env_seed && run->count("--seed") == 0 && !config_has_seed)
                run_opts.seed = default_seed;
            return cmd_run(run_opts);
        }
        if (sweep->parsed()) return cmd_sweep(sweep_spec_path, sweep_jobs, sweep_out);
        if (train_cmd->parsed()) {
            train_opts.has_seed_override = train_seed->count() > 0;
            if (env_seed && !train_opts.has_seed_override) {
                train_opts.seed_override = default_seed;
                train_opts.has_seed_override = true;
            }
            return cmd_train(train_opts);
        }
        if (adv->parsed()) return cmd_adversary(adv_opts);
        if (an->parsed()) return cmd_analyze(an_opts);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace patrolkit
