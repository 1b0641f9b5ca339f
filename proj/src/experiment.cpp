#include "mlam/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "mlam/checkpoint.hpp"
#include "mlam/trajectory_io.hpp"

namespace mlam {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kKinds = {"mc-obsrate", "mc-rank",    "mc-blind-p",   "mc-mixed",
                                         "gmm-dim",    "gmm-flower", "sweep-tin-tout"};

std::string condition_label(const ExperimentSpec& spec, double condition) {
    if (spec.kind == "mc-obsrate") return "rate=" + format_double(condition);
    if (spec.kind == "mc-rank") return "rank=" + format_double(condition);
    if (spec.kind == "mc-blind-p") return "p=" + format_double(condition);
    if (spec.kind == "mc-mixed") return "p=" + format_double(condition);
    if (spec.kind == "gmm-dim") return "D=" + format_double(condition);
    if (spec.kind == "gmm-flower") return "flower";
    return format_double(condition);
}

std::string file_safe(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '=' || c == ' ') c = '_';
    return s;
}

std::vector<int> mixed_rank_cycle(const ExperimentSpec& spec) {
    int step = std::max<int>(1, static_cast<int>(spec.dim / 10));
    std::vector<int> ranks;
    for (int r = step; r <= static_cast<int>(spec.dim); r += step) ranks.push_back(r);
    return ranks;
}

struct Summary {
    double mean = 0.0, variance = 0.0;
    int n_success = 0, n_aborted = 0;
};

Summary summarize(const std::vector<double>& metrics, int aborted) {
    Summary s;
    s.n_success = static_cast<int>(metrics.size());
    s.n_aborted = aborted;
    if (metrics.empty()) return s;
    for (double m : metrics) s.mean += m;
    s.mean /= static_cast<double>(metrics.size());
    if (metrics.size() > 1) {
        for (double m : metrics) s.variance += (m - s.mean) * (m - s.mean);
        s.variance /= static_cast<double>(metrics.size() - 1);
    }
    return s;
}

void write_baseline_sidecar(const std::string& path, const std::string& method,
                            const BaselineConfig& cfg, uint64_t problem_seed, double lr_used) {
    json j;
    j["method"] = method;
    j["problem_seed"] = problem_seed;
    j["config"] = {{"max_iters", cfg.max_iters},
                   {"lr", lr_used},
                   {"tolerance", cfg.tolerance},
                   {"seed", cfg.seed}};
    std::ofstream out(path);
    if (!out) throw ValueError("cannot write sidecar " + path);
    out << j.dump(1) << "\n";
}

}  // namespace

void ExperimentSpec::apply_scale_presets() {
    const bool paper = scale == "paper";
    if (kind == "mc-obsrate") {
        dim = paper ? 100 : 10;
        rank = paper ? 5 : 2;
        p = rank;
        if (conditions.empty()) conditions = {0.2, 0.4, 0.6, 0.8};
    } else if (kind == "mc-rank") {
        dim = paper ? 100 : 10;
        obs_rate = 0.2;
        if (conditions.empty()) {
            if (paper)
                conditions = {5, 10, 20, 40, 80, 100};
            else
                conditions = {1, 2, 4, 8};
        }
    } else if (kind == "mc-blind-p") {
        dim = paper ? 100 : 10;
        rank = paper ? 10 : 2;
        if (conditions.empty()) {
            if (paper)
                conditions = {10, 20, 40, 80, 100};
            else
                conditions = {2, 4, 8};
        }
    } else if (kind == "mc-mixed") {
        dim = paper ? 100 : 10;
        obs_rate = paper ? 0.2 : 0.4;
        if (conditions.empty()) {
            if (paper)
                conditions = {10, 50, 100};
            else
                conditions = {2, 5, 10};
        }
    } else if (kind == "gmm-dim") {
        gmm_k = 4;
        gmm_g = 500;
        if (conditions.empty()) {
            if (paper)
                conditions = {4, 8, 16, 32, 64};
            else
                conditions = {2, 4};
        }
    } else if (kind == "gmm-flower") {
        flower_g = paper ? 10000 : 2000;
        conditions = {0.0};
    } else if (kind == "sweep-tin-tout") {
        dim = paper ? 100 : 10;
        rank = paper ? 5 : 2;
        p = rank;
        obs_rate = 0.2;
        conditions = {0.0};
        if (sweep_t_in.empty())
            for (int i = 1; i <= 20; ++i) sweep_t_in.push_back(i);
        if (sweep_t_out.empty())
            for (int i = 1; i <= 20; ++i) sweep_t_out.push_back(i);
    }
    if (paper) {
        mlam.hidden_size = 500;
        n_train = 100;
        n_test = 100;
    }
}

void ExperimentSpec::validate() const {
    if (std::find(kKinds.begin(), kKinds.end(), kind) == kKinds.end())
        throw ValueError("unknown experiment kind \"" + kind + "\"");
    if (scale != "desk" && scale != "paper")
        throw ValueError("scale must be \"desk\" or \"paper\"");
    if (n_train < 1 || n_test < 1) throw ValueError("n_train and n_test must be >= 1");
    if (epochs < 1) throw ValueError("epochs must be >= 1");
    if (conditions.empty()) throw ValueError("experiment has no conditions");
    if (kind == "sweep-tin-tout") {
        // per-cell configs replace t_in/t_out and round T; only check the rest
        MLAMConfig cell = mlam;
        cell.t_out = 1;
        cell.omega.clear();
        cell.validate();
    } else {
        mlam.validate();
    }
    sgd.validate();
    als.validate();
    em.validate();
    for (const std::string& m : method_list())
        if (m != "mlam" && m != "sgd" && m != "als" && m != "em")
            throw ValueError("unknown method \"" + m + "\"");
}

std::vector<std::string> ExperimentSpec::method_list() const {
    if (!methods.empty()) return methods;
    if (kind == "gmm-dim" || kind == "gmm-flower") return {"mlam", "em"};
    if (kind == "sweep-tin-tout") return {"mlam"};
    return {"mlam", "sgd", "als"};
}

ExperimentSpec spec_from_json(const std::string& text) {
    json j = json::parse(text);
    ExperimentSpec spec;
    spec.kind = j.at("kind").get<std::string>();
    spec.scale = j.value("scale", spec.scale);
    spec.apply_scale_presets();

    spec.dim = j.value("dim", spec.dim);
    spec.rank = j.value("rank", spec.rank);
    spec.p = j.value("p", spec.p);
    spec.lambda = j.value("lambda", spec.lambda);
    spec.obs_rate = j.value("obs_rate", spec.obs_rate);
    spec.gmm_k = j.value("gmm_k", spec.gmm_k);
    spec.gmm_g = j.value("gmm_g", spec.gmm_g);
    spec.gmm_separation = j.value("gmm_separation", spec.gmm_separation);
    spec.flower_petals = j.value("flower_petals", spec.flower_petals);
    spec.flower_g = j.value("flower_g", spec.flower_g);
    if (j.contains("conditions")) spec.conditions = j.at("conditions").get<std::vector<double>>();
    spec.n_train = j.value("n_train", spec.n_train);
    spec.n_test = j.value("n_test", spec.n_test);
    spec.epochs = j.value("epochs", spec.epochs);
    if (j.contains("mlam")) spec.mlam = config_from_json(j.at("mlam").dump());
    auto read_baseline = [&](const char* key, BaselineConfig& cfg) {
        if (!j.contains(key)) return;
        const json& b = j.at(key);
        cfg.max_iters = b.value("max_iters", cfg.max_iters);
        cfg.lr = b.value("lr", cfg.lr);
        cfg.tolerance = b.value("tolerance", cfg.tolerance);
        cfg.seed = b.value("seed", cfg.seed);
    };
    read_baseline("sgd", spec.sgd);
    read_baseline("als", spec.als);
    read_baseline("em", spec.em);
    if (j.contains("sgd") && j.at("sgd").contains("lr_grid"))
        spec.sgd_lr_grid = j.at("sgd").at("lr_grid").get<std::vector<double>>();
    if (j.contains("methods")) spec.methods = j.at("methods").get<std::vector<std::string>>();
    if (j.contains("sweep_t_in")) spec.sweep_t_in = j.at("sweep_t_in").get<std::vector<int>>();
    if (j.contains("sweep_t_out")) spec.sweep_t_out = j.at("sweep_t_out").get<std::vector<int>>();
    spec.master_seed = j.value("master_seed", spec.master_seed);
    spec.out_dir = j.value("out", spec.out_dir);
    return spec;
}

ExperimentSpec spec_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValueError("cannot open config file " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return spec_from_json(text);
}

std::string spec_to_json(const ExperimentSpec& spec) {
    json j;
    j["kind"] = spec.kind;
    j["scale"] = spec.scale;
    j["dim"] = spec.dim;
    j["rank"] = spec.rank;
    j["p"] = spec.p;
    j["lambda"] = spec.lambda;
    j["obs_rate"] = spec.obs_rate;
    j["gmm_k"] = spec.gmm_k;
    j["gmm_g"] = spec.gmm_g;
    j["gmm_separation"] = spec.gmm_separation;
    j["flower_petals"] = spec.flower_petals;
    j["flower_g"] = spec.flower_g;
    j["conditions"] = spec.conditions;
    j["n_train"] = spec.n_train;
    j["n_test"] = spec.n_test;
    j["epochs"] = spec.epochs;
    j["mlam"] = json::parse(config_to_json(spec.mlam));
    j["sgd"] = {{"max_iters", spec.sgd.max_iters},
                {"lr", spec.sgd.lr},
                {"tolerance", spec.sgd.tolerance},
                {"seed", spec.sgd.seed},
                {"lr_grid", spec.sgd_lr_grid}};
    j["als"] = {{"max_iters", spec.als.max_iters},
                {"lr", spec.als.lr},
                {"tolerance", spec.als.tolerance},
                {"seed", spec.als.seed}};
    j["em"] = {{"max_iters", spec.em.max_iters},
               {"lr", spec.em.lr},
               {"tolerance", spec.em.tolerance},
               {"seed", spec.em.seed}};
    j["methods"] = spec.method_list();
    if (!spec.sweep_t_in.empty()) j["sweep_t_in"] = spec.sweep_t_in;
    if (!spec.sweep_t_out.empty()) j["sweep_t_out"] = spec.sweep_t_out;
    j["master_seed"] = spec.master_seed;
    j["out"] = spec.out_dir;
    return j.dump(1);
}

std::vector<std::unique_ptr<Problem>> make_problem_set(const ExperimentSpec& spec,
                                                       const std::string& condition_label,
                                                       double condition, bool train_set,
                                                       int count) {
    uint64_t tag = mix_seed(spec.master_seed,
                            hash_str((train_set ? "train:" : "test:") + condition_label));
    std::vector<std::unique_ptr<Problem>> out;
    std::vector<int> rank_cycle;
    if (spec.kind == "mc-mixed") rank_cycle = mixed_rank_cycle(spec);
    for (int i = 0; i < count; ++i) {
        uint64_t seed = mix_seed(tag, static_cast<uint64_t>(i));
        if (spec.kind == "gmm-dim") {
            out.push_back(std::make_unique<GmmProblem>(GmmProblem::generate(
                spec.gmm_k, static_cast<int>(condition), spec.gmm_g, spec.gmm_separation, seed)));
        } else if (spec.kind == "gmm-flower") {
            out.push_back(std::make_unique<GmmProblem>(
                GmmProblem::flower(spec.flower_petals, spec.flower_g, seed)));
        } else {
            int rank = spec.rank;
            int p = spec.p;
            double rate = spec.obs_rate;
            if (spec.kind == "mc-obsrate") {
                rate = condition;
            } else if (spec.kind == "mc-rank") {
                rank = static_cast<int>(condition);
                p = rank;
            } else if (spec.kind == "mc-blind-p") {
                p = static_cast<int>(condition);
            } else if (spec.kind == "mc-mixed") {
                p = static_cast<int>(condition);
                rank = rank_cycle[static_cast<size_t>(i) % rank_cycle.size()];
            }
            out.push_back(std::make_unique<MatrixCompletionProblem>(
                MatrixCompletionProblem::generate(spec.dim, spec.dim, rank, rate, p, spec.lambda,
                                                  seed)));
        }
    }
    return out;
}

const ResultCell* ResultTable::find(const std::string& method,
                                    const std::string& condition) const {
    for (const ResultCell& c : cells)
        if (c.method == method && c.condition == condition) return &c;
    return nullptr;
}

void write_result_table(const ResultTable& table) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"method", "condition", "mean_metric", "metric_variance", "n_success",
                    "n_aborted", "trajectory_file"});
    std::vector<std::vector<std::string>> timing_rows;
    timing_rows.push_back({"method", "condition", "wall_ms"});
    for (const ResultCell& c : table.cells) {
        rows.push_back({c.method, c.condition, format_double(c.mean), format_double(c.variance),
                        std::to_string(c.n_success), std::to_string(c.n_aborted),
                        c.trajectory_file});
        timing_rows.push_back({c.method, c.condition, format_double(c.wall_ms)});
    }
    write_csv((fs::path(table.out_dir) / "table.csv").string(), rows);
    write_csv((fs::path(table.out_dir) / "timings.csv").string(), timing_rows);
}

namespace {

struct ConditionArtifacts {
    std::string label;
    std::vector<uint64_t> train_seeds, test_seeds;
    std::string checkpoint_file;
    double sgd_lr_used = 0.0;
    std::vector<std::string> trajectory_files;
};

double now_ms_delta(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}

// mean final metric of SGD over the training problems, for one lr
double sgd_tuning_score(const std::vector<const Problem*>& problems, BaselineConfig cfg,
                        double lr) {
    cfg.lr = lr;
    std::vector<double> metrics;
    for (const Problem* p : problems) {
        const auto& mc = dynamic_cast<const MatrixCompletionProblem&>(*p);
        FactorResult r = sgd_solve(mc, cfg);
        if (!r.aborted && !r.metric_history.empty()) metrics.push_back(r.metric_history.back());
    }
    if (metrics.empty()) return std::numeric_limits<double>::infinity();
    double s = 0.0;
    for (double m : metrics) s += m;
    return s / static_cast<double>(metrics.size());
}

MixtureParams engine_matching_init(const GmmProblem& prob, const MLAMConfig& cfg) {
    Rng rng(mix_seed(cfg.seed, prob.seed()));
    auto vars = prob.init_variables(rng);
    return MixtureParams{vars.at("pi_logits"), vars.at("mu")};
}

void run_condition(const ExperimentSpec& spec, double condition, ResultTable& table,
                   ConditionArtifacts& art) {
    const std::string label = condition_label(spec, condition);
    art.label = label;
    const std::string safe = file_safe(label);
    fs::path out(spec.out_dir);

    auto train_owned = make_problem_set(spec, label, condition, true, spec.n_train);
    auto test_owned = make_problem_set(spec, label, condition, false, spec.n_test);
    std::vector<const Problem*> train, test;
    for (auto& p : train_owned) {
        train.push_back(p.get());
        art.train_seeds.push_back(p->seed());
    }
    for (auto& p : test_owned) {
        test.push_back(p.get());
        art.test_seeds.push_back(p->seed());
    }

    // group test problems for reporting: mc-mixed splits by true rank
    auto cell_key = [&](const Problem& p) -> std::string {
        if (spec.kind != "mc-mixed") return label;
        const auto& mc = dynamic_cast<const MatrixCompletionProblem&>(p);
        return label + ",rank=" + std::to_string(mc.rank());
    };
    std::vector<std::string> group_order;
    for (const Problem* p : test) {
        std::string key = cell_key(*p);
        if (std::find(group_order.begin(), group_order.end(), key) == group_order.end())
            group_order.push_back(key);
    }

    for (const std::string& method : spec.method_list()) {
        auto t0 = std::chrono::steady_clock::now();
        std::map<std::string, std::vector<double>> metrics;
        std::map<std::string, int> aborted;
        std::map<std::string, std::string> traj_file;

        if (method == "mlam") {
            std::vector<const Problem*> train_stream;
            for (int e = 0; e < spec.epochs; ++e)
                train_stream.insert(train_stream.end(), train.begin(), train.end());
            MetaTrainResult tr = meta_train(train_stream, spec.mlam);
            art.checkpoint_file = "checkpoint_" + safe + ".json";
            save_checkpoint((out / art.checkpoint_file).string(), tr.nets,
                            spec.mlam.hidden_size, spec.mlam.seed);

            EvalReport rep = evaluate(test, tr.nets, spec.mlam);
            for (size_t i = 0; i < test.size(); ++i) {
                std::string key = cell_key(*test[i]);
                const Trajectory& t = rep.trajectories[i];
                if (t.aborted) {
                    aborted[key]++;
                } else {
                    metrics[key].push_back(t.final_metric());
                    if (!traj_file.count(key)) {
                        std::string name = "traj_mlam_" + file_safe(key) + ".csv";
                        write_trajectory_csv((out / name).string(), "mlam", t);
                        write_trajectory_sidecar(
                            (out / ("traj_mlam_" + file_safe(key) + ".json")).string(),
                            spec.mlam, test[i]->seed(), "mlam");
                        traj_file[key] = name;
                        art.trajectory_files.push_back(name);
                    }
                }
            }
        } else if (method == "sgd" || method == "als") {
            BaselineConfig cfg = method == "sgd" ? spec.sgd : spec.als;
            cfg.seed = spec.mlam.seed;  // factors start where the engine starts
            if (method == "sgd") {
                double best_lr = spec.sgd_lr_grid.empty() ? cfg.lr : spec.sgd_lr_grid[0];
                double best_score = std::numeric_limits<double>::infinity();
                for (double lr : spec.sgd_lr_grid) {
                    double score = sgd_tuning_score(train, cfg, lr);
                    if (score < best_score) {
                        best_score = score;
                        best_lr = lr;
                    }
                }
                cfg.lr = best_lr;
                art.sgd_lr_used = best_lr;
            }
            for (const Problem* p : test) {
                const auto& mc = dynamic_cast<const MatrixCompletionProblem&>(*p);
                FactorResult r = method == "sgd" ? sgd_solve(mc, cfg) : als_solve(mc, cfg);
                std::string key = cell_key(*p);
                if (r.aborted || r.metric_history.empty()) {
                    aborted[key]++;
                    continue;
                }
                metrics[key].push_back(r.metric_history.back());
                if (!traj_file.count(key)) {
                    std::string name = "traj_" + method + "_" + file_safe(key) + ".csv";
                    write_trajectory_csv((out / name).string(), method, r.loss_history,
                                         r.metric_history);
                    write_baseline_sidecar(
                        (out / ("traj_" + method + "_" + file_safe(key) + ".json")).string(),
                        method, cfg, p->seed(), cfg.lr);
                    traj_file[key] = name;
                    art.trajectory_files.push_back(name);
                }
            }
        } else if (method == "em") {
            BaselineConfig cfg = spec.em;
            cfg.seed = spec.mlam.seed;
            for (const Problem* p : test) {
                const auto& gp = dynamic_cast<const GmmProblem&>(*p);
                EmResult r = em_fit(gp, engine_matching_init(gp, spec.mlam), cfg);
                std::string key = cell_key(*p);
                metrics[key].push_back(r.metric_history.back());
                if (!traj_file.count(key)) {
                    std::string name = "traj_em_" + file_safe(key) + ".csv";
                    write_trajectory_csv((out / name).string(), "em", r.nll_history,
                                         r.metric_history);
                    write_baseline_sidecar(
                        (out / ("traj_em_" + file_safe(key) + ".json")).string(), "em", cfg,
                        p->seed(), cfg.lr);
                    traj_file[key] = name;
                    art.trajectory_files.push_back(name);
                }
            }
        }

        double wall = now_ms_delta(t0);
        for (const std::string& key : group_order) {
            Summary s = summarize(metrics[key], aborted.count(key) ? aborted[key] : 0);
            ResultCell cell;
            cell.method = method;
            cell.condition = key;
            cell.mean = s.mean;
            cell.variance = s.variance;
            cell.n_success = s.n_success;
            cell.n_aborted = s.n_aborted;
            cell.trajectory_file = traj_file.count(key) ? traj_file[key] : "";
            cell.wall_ms = wall;
            if (s.n_success == 0) table.any_empty_cell = true;
            table.cells.push_back(std::move(cell));
        }
    }
}

ResultTable run_sweep(const ExperimentSpec& spec) {
    ResultTable table;
    table.out_dir = spec.out_dir;
    fs::create_directories(spec.out_dir);

    for (int t_out : spec.sweep_t_out)
        for (int t_in : spec.sweep_t_in) {
            MLAMConfig cfg = spec.mlam;
            cfg.t_in = t_in;
            cfg.t_out = t_out;
            int windows = std::max<int>(1, static_cast<int>(std::llround(
                                               static_cast<double>(spec.mlam.T) / t_out)));
            cfg.T = windows * t_out;  // nearest multiple of the update interval
            cfg.omega.clear();

            std::string label = "t_in=" + std::to_string(t_in) +
                                ",t_out=" + std::to_string(t_out) + ",T=" + std::to_string(cfg.T);
            auto train_owned = make_problem_set(spec, label, 0.0, true, spec.n_train);
            auto test_owned = make_problem_set(spec, label, 0.0, false, spec.n_test);
            std::vector<const Problem*> train, test;
            for (auto& p : train_owned) train.push_back(p.get());
            for (auto& p : test_owned) test.push_back(p.get());

            auto t0 = std::chrono::steady_clock::now();
            ResultCell cell;
            cell.method = "mlam";
            cell.condition = label;
            try {
                MetaTrainResult tr = meta_train(train, cfg);
                EvalReport rep = evaluate(test, tr.nets, cfg);
                cell.mean = rep.mean;
                cell.variance = rep.variance;
                cell.n_success = static_cast<int>(rep.per_problem_metric.size());
                cell.n_aborted = static_cast<int>(rep.aborted_indices.size());
            } catch (const ValueError&) {
                cell.n_success = 0;
                cell.n_aborted = spec.n_test;
            }
            cell.wall_ms = now_ms_delta(t0);
            if (cell.n_success == 0) table.any_empty_cell = true;
            table.cells.push_back(std::move(cell));
        }

    write_result_table(table);
    json manifest;
    manifest["version"] = kVersion;
    manifest["spec"] = json::parse(spec_to_json(spec));
    manifest["table"] = "table.csv";
    std::ofstream mf(fs::path(spec.out_dir) / "manifest.json");
    mf << manifest.dump(1) << "\n";
    return table;
}

}  // namespace

ResultTable run_experiment(const ExperimentSpec& spec) {
    spec.validate();
    if (spec.kind == "sweep-tin-tout") return run_sweep(spec);

    ResultTable table;
    table.out_dir = spec.out_dir;
    fs::create_directories(spec.out_dir);

    std::vector<ConditionArtifacts> artifacts;
    for (double condition : spec.conditions) {
        ConditionArtifacts art;
        run_condition(spec, condition, table, art);
        artifacts.push_back(std::move(art));
    }

    write_result_table(table);

    json manifest;
    manifest["version"] = kVersion;
    manifest["spec"] = json::parse(spec_to_json(spec));
    manifest["table"] = "table.csv";
    json conds = json::array();
    for (size_t i = 0; i < artifacts.size(); ++i) {
        const ConditionArtifacts& art = artifacts[i];
        json c;
        c["condition_value"] = spec.conditions[i];
        c["label"] = art.label;
        c["train_seeds"] = art.train_seeds;
        c["test_seeds"] = art.test_seeds;
        if (!art.checkpoint_file.empty()) c["checkpoint"] = art.checkpoint_file;
        if (art.sgd_lr_used != 0.0) c["sgd_lr_used"] = art.sgd_lr_used;
        c["trajectories"] = art.trajectory_files;
        conds.push_back(std::move(c));
    }
    manifest["conditions"] = std::move(conds);
    json cells = json::array();
    for (const ResultCell& c : table.cells)
        cells.push_back({{"method", c.method},
                         {"condition", c.condition},
                         {"mean", c.mean},
                         {"variance", c.variance},
                         {"n_success", c.n_success},
                         {"n_aborted", c.n_aborted}});
    manifest["cells"] = std::move(cells);
    std::ofstream mf(fs::path(spec.out_dir) / "manifest.json");
    if (!mf) throw ValueError("cannot write manifest under " + spec.out_dir);
    mf << manifest.dump(1) << "\n";
    return table;
}

ResultTable eval_from_manifest(const std::string& manifest_path, const std::string& out_dir) {
    std::ifstream in(manifest_path);
    if (!in) throw ValueError("cannot open manifest " + manifest_path);
    json manifest = json::parse(in);
    ExperimentSpec spec = spec_from_json(manifest.at("spec").dump());
    spec.validate();

    ResultTable table;
    table.out_dir = out_dir;
    fs::create_directories(out_dir);

    const fs::path manifest_dir = fs::path(manifest_path).parent_path();
    for (const json& c : manifest.at("conditions")) {
        if (!c.contains("checkpoint")) continue;
        double condition = c.at("condition_value").get<double>();
        std::string label = c.at("label").get<std::string>();
        Checkpoint ck =
            load_checkpoint((manifest_dir / c.at("checkpoint").get<std::string>()).string());

        auto test_owned = make_problem_set(spec, label, condition, false, spec.n_test);
        std::vector<const Problem*> test;
        for (auto& p : test_owned) test.push_back(p.get());
        // verify the regenerated set matches the recorded seeds
        auto recorded = c.at("test_seeds").get<std::vector<uint64_t>>();
        for (size_t i = 0; i < test.size(); ++i)
            if (test[i]->seed() != recorded[i])
                throw ValueError("manifest test seeds do not match regenerated problems");

        EvalReport rep = evaluate(test, ck.nets, spec.mlam);
        auto group_metrics = std::map<std::string, std::vector<double>>{};
        auto group_aborted = std::map<std::string, int>{};
        std::vector<std::string> order;
        for (size_t i = 0; i < test.size(); ++i) {
            std::string key = label;
            if (spec.kind == "mc-mixed") {
                const auto& mc = dynamic_cast<const MatrixCompletionProblem&>(*test[i]);
                key += ",rank=" + std::to_string(mc.rank());
            }
            if (std::find(order.begin(), order.end(), key) == order.end()) order.push_back(key);
            if (rep.trajectories[i].aborted)
                group_aborted[key]++;
            else
                group_metrics[key].push_back(rep.trajectories[i].final_metric());
        }
        for (const std::string& key : order) {
            Summary s = summarize(group_metrics[key],
                                  group_aborted.count(key) ? group_aborted[key] : 0);
            ResultCell cell;
            cell.method = "mlam";
            cell.condition = key;
            cell.mean = s.mean;
            cell.variance = s.variance;
            cell.n_success = s.n_success;
            cell.n_aborted = s.n_aborted;
            table.cells.push_back(std::move(cell));
        }
    }

    std::vector<std::vector<std::string>> rows;
    rows.push_back({"method", "condition", "mean_metric", "metric_variance", "n_success",
                    "n_aborted"});
    for (const ResultCell& c : table.cells)
        rows.push_back({c.method, c.condition, format_double(c.mean), format_double(c.variance),
                        std::to_string(c.n_success), std::to_string(c.n_aborted)});
    write_csv((fs::path(out_dir) / "eval_table.csv").string(), rows);
    return table;
}

}  // namespace mlam
