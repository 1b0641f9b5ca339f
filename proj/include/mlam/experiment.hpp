#pragma once

#include <memory>
#include <string>
#include <vector>

#include "mlam/baselines.hpp"
#include "mlam/engine.hpp"

namespace mlam {

inline constexpr const char* kVersion = "1.0.0";

// One benchmark campaign: problem family, conditions, counts, solver
// configurations and output location.
struct ExperimentSpec {
    std::string kind;  // mc-obsrate | mc-rank | mc-blind-p | mc-mixed |
                       // gmm-dim | gmm-flower | sweep-tin-tout
    std::string scale = "desk";

    // matrix completion dimensions
    int64_t dim = 10;  // square matrices, z = q = dim
    int rank = 2;
    int p = 2;
    double lambda = 0.1;
    double obs_rate = 0.4;

    // gmm dimensions
    int gmm_k = 4;
    int64_t gmm_g = 500;
    double gmm_separation = 3.0;
    int flower_petals = 8;
    int64_t flower_g = 2000;

    // per-kind condition values (rates, ranks, p choices or dimensions)
    std::vector<double> conditions;

    int n_train = 50;
    int n_test = 50;
    int epochs = 1;  // passes over the training set during meta-training

    MLAMConfig mlam;
    BaselineConfig sgd;
    std::vector<double> sgd_lr_grid{0.003, 0.01, 0.03, 0.1};
    BaselineConfig als;
    BaselineConfig em;
    std::vector<std::string> methods;  // empty = defaults for the kind

    std::vector<int> sweep_t_in;   // sweep-tin-tout only
    std::vector<int> sweep_t_out;

    uint64_t master_seed = 0;
    std::string out_dir = "results";

    void apply_scale_presets();  // fills kind defaults for desk/paper scale
    void validate() const;
    std::vector<std::string> method_list() const;
};

ExperimentSpec spec_from_json(const std::string& text);
ExperimentSpec spec_from_json_file(const std::string& path);
std::string spec_to_json(const ExperimentSpec& spec);

struct ResultCell {
    std::string method;
    std::string condition;
    double mean = 0.0;
    double variance = 0.0;
    int n_success = 0;
    int n_aborted = 0;
    std::string trajectory_file;
    double wall_ms = 0.0;
};

struct ResultTable {
    std::vector<ResultCell> cells;
    std::string out_dir;
    bool any_empty_cell = false;  // a (method, condition) pair with no successes

    const ResultCell* find(const std::string& method, const std::string& condition) const;
};

// Generates train/test sets from the master seed, meta-trains per condition,
// evaluates MLAM and the configured baselines on the identical test set, and
// writes table.csv, timings.csv, manifest.json, checkpoints and trajectory
// files under spec.out_dir.
ResultTable run_experiment(const ExperimentSpec& spec);

// Re-evaluates the MLAM cells of a previous run from its manifest; metric
// columns reproduce the original run exactly.
ResultTable eval_from_manifest(const std::string& manifest_path, const std::string& out_dir);

// problem generation used by run_experiment (exposed for the CLI `gen`)
std::vector<std::unique_ptr<Problem>> make_problem_set(const ExperimentSpec& spec,
                                                       const std::string& condition_label,
                                                       double condition, bool train_set,
                                                       int count);

void write_result_table(const ResultTable& table);

}  // namespace mlam
