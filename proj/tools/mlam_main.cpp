// Command-line harness: problem generation, meta-training, evaluation,
// classical baselines, full benchmark tables and the t_in/t_out sweep.

#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mlam/checkpoint.hpp"
#include "mlam/experiment.hpp"
#include "mlam/kernels.hpp"
#include "mlam/problem_io.hpp"
#include "mlam/trajectory_io.hpp"

namespace fs = std::filesystem;
using namespace mlam;

namespace {

struct CommonArgs {
    std::string config;
    std::string out;
    std::string scale;
    int64_t seed = -1;
    int threads = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required = true) {
    cmd->add_option("--config", args.config, "experiment config JSON")
        ->required(config_required);
    cmd->add_option("--out", args.out, "output directory");
    cmd->add_option("--seed", args.seed, "master seed override");
    cmd->add_option("--threads", args.threads, "worker threads (1 = fully deterministic order)");
    cmd->add_option("--scale", args.scale, "desk or paper scale presets")
        ->check(CLI::IsMember({"desk", "paper"}));
}

ExperimentSpec load_spec(const CommonArgs& args) {
    if (!fs::exists(args.config))
        throw ValueError("config file not found: " + args.config);
    std::ifstream in(args.config);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    nlohmann::json j = nlohmann::json::parse(text);
    if (!args.scale.empty()) j["scale"] = args.scale;
    ExperimentSpec spec = spec_from_json(j.dump());
    if (args.seed >= 0) {
        spec.master_seed = static_cast<uint64_t>(args.seed);
        spec.mlam.seed = static_cast<uint64_t>(args.seed);
    }
    if (!args.out.empty()) spec.out_dir = args.out;
    if (args.threads > 0) kernels::set_threads(args.threads);
    return spec;
}

int run_gen(const CommonArgs& args) {
    ExperimentSpec spec = load_spec(args);
    spec.validate();
    fs::create_directories(spec.out_dir);
    for (double condition : spec.conditions) {
        std::string label = spec.kind == "gmm-flower" ? "flower" : format_double(condition);
        for (bool train : {true, false}) {
            auto set = make_problem_set(spec, label, condition, train, train ? spec.n_train
                                                                             : spec.n_test);
            for (size_t i = 0; i < set.size(); ++i) {
                std::string stem = (train ? "train_" : "test_") + label + "_" +
                                   std::to_string(i);
                for (char& c : stem)
                    if (c == '.' || c == ',') c = '_';
                fs::path base = fs::path(spec.out_dir) / stem;
                if (auto* mc = dynamic_cast<const MatrixCompletionProblem*>(set[i].get())) {
                    save_mc_problem(base.string() + ".json", *mc);
                } else if (auto* gp = dynamic_cast<const GmmProblem*>(set[i].get())) {
                    save_gmm_problem(base.string() + ".csv", base.string() + ".json", *gp,
                                     spec.kind == "gmm-flower", spec.flower_petals);
                }
            }
        }
    }
    std::cout << "wrote problem sets to " << spec.out_dir << "\n";
    return 0;
}

int run_train(const CommonArgs& args) {
    ExperimentSpec spec = load_spec(args);
    spec.validate();
    fs::create_directories(spec.out_dir);
    for (double condition : spec.conditions) {
        std::string label = spec.kind == "gmm-flower" ? "flower" : format_double(condition);
        auto owned = make_problem_set(spec, label, condition, true, spec.n_train);
        std::vector<const Problem*> train;
        for (auto& p : owned) train.push_back(p.get());
        std::vector<const Problem*> stream;
        for (int e = 0; e < spec.epochs; ++e)
            stream.insert(stream.end(), train.begin(), train.end());
        MetaTrainResult tr = meta_train(stream, spec.mlam);
        std::string stem = label;
        for (char& c : stem)
            if (c == '.') c = '_';
        std::string ck = (fs::path(spec.out_dir) / ("checkpoint_" + stem + ".json")).string();
        save_checkpoint(ck, tr.nets, spec.mlam.hidden_size, spec.mlam.seed);
        std::cout << "condition " << label << ": trained on " << train.size() << " problems ("
                  << spec.epochs << " pass(es)), " << tr.problems_aborted
                  << " aborted, checkpoint " << ck << "\n";
    }
    return 0;
}

int run_eval(const CommonArgs& args, const std::string& checkpoint,
             const std::string& manifest) {
    if (!manifest.empty()) {
        std::string out = args.out.empty() ? "eval_out" : args.out;
        if (args.threads > 0) kernels::set_threads(args.threads);
        ResultTable table = eval_from_manifest(manifest, out);
        std::cout << "re-evaluated " << table.cells.size() << " cells; eval_table.csv under "
                  << out << "\n";
        return table.any_empty_cell ? 2 : 0;
    }
    ExperimentSpec spec = load_spec(args);
    spec.validate();
    fs::create_directories(spec.out_dir);
    Checkpoint ck = load_checkpoint(checkpoint);
    bool any_empty = false;
    for (double condition : spec.conditions) {
        std::string label = spec.kind == "gmm-flower" ? "flower" : format_double(condition);
        auto owned = make_problem_set(spec, label, condition, false, spec.n_test);
        std::vector<const Problem*> test;
        for (auto& p : owned) test.push_back(p.get());
        EvalReport rep = evaluate(test, ck.nets, spec.mlam);
        if (rep.per_problem_metric.empty()) any_empty = true;
        std::cout << "condition " << label << ": mean metric " << rep.mean << ", variance "
                  << rep.variance << ", " << rep.aborted_indices.size() << " aborted\n";
    }
    return any_empty ? 2 : 0;
}

int run_baseline(const CommonArgs& args, const std::string& method) {
    ExperimentSpec spec = load_spec(args);
    spec.methods = {method};
    spec.validate();
    fs::create_directories(spec.out_dir);
    ResultTable table = run_experiment(spec);
    std::cout << "wrote " << table.cells.size() << " cells to " << table.out_dir << "\n";
    return table.any_empty_cell ? 2 : 0;
}

int run_bench(const CommonArgs& args) {
    ExperimentSpec spec = load_spec(args);
    spec.validate();
    ResultTable table = run_experiment(spec);
    for (const ResultCell& c : table.cells)
        std::cout << c.method << " @ " << c.condition << ": mean " << c.mean << " (var "
                  << c.variance << ", n=" << c.n_success << ", aborted " << c.n_aborted << ")\n";
    std::cout << "table: " << (fs::path(table.out_dir) / "table.csv").string() << "\n";
    return table.any_empty_cell ? 2 : 0;
}

int run_sweep_cmd(const CommonArgs& args) {
    ExperimentSpec spec = load_spec(args);
    if (spec.kind != "sweep-tin-tout")
        throw ValueError("sweep requires a config with kind \"sweep-tin-tout\"");
    spec.validate();
    ResultTable table = run_experiment(spec);
    std::cout << "sweep grid of " << table.cells.size() << " cells written to " << table.out_dir
              << "\n";
    return table.any_empty_cell ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"learned alternating-minimization optimizer benchmark harness"};
    app.require_subcommand(1);

    CommonArgs gen_args, train_args, eval_args, base_args, bench_args, sweep_args;
    std::string eval_checkpoint, eval_manifest, baseline_method;

    add_common(app.add_subcommand("gen", "generate and save problem sets"), gen_args);
    add_common(app.add_subcommand("train", "meta-train and write checkpoints"), train_args);
    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on the test set");
    add_common(eval_cmd, eval_args, false);
    eval_cmd->add_option("--checkpoint", eval_checkpoint, "checkpoint file");
    eval_cmd->add_option("--manifest", eval_manifest,
                         "re-evaluate the MLAM cells of a previous bench run");
    CLI::App* base_cmd = app.add_subcommand("baseline", "run a classical solver on the test set");
    add_common(base_cmd, base_args);
    base_cmd->add_option("--method", baseline_method, "als, sgd or em")
        ->required()
        ->check(CLI::IsMember({"als", "sgd", "em"}));
    add_common(app.add_subcommand("bench", "full benchmark: train, evaluate, baselines"),
               bench_args);
    add_common(app.add_subcommand("sweep", "t_in x t_out hyperparameter grid"), sweep_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp")
            return app.exit(e);
        app.exit(e);
        return 1;
    }

    try {
        if (app.got_subcommand("gen")) return run_gen(gen_args);
        if (app.got_subcommand("train")) return run_train(train_args);
        if (app.got_subcommand("eval")) {
            if (eval_manifest.empty() && eval_checkpoint.empty())
                throw ValueError("eval needs --checkpoint or --manifest");
            if (eval_manifest.empty() && eval_args.config.empty())
                throw ValueError("eval needs --config together with --checkpoint");
            return run_eval(eval_args, eval_checkpoint, eval_manifest);
        }
        if (app.got_subcommand("baseline")) return run_baseline(base_args, baseline_method);
        if (app.got_subcommand("bench")) return run_bench(bench_args);
        if (app.got_subcommand("sweep")) return run_sweep_cmd(sweep_args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
