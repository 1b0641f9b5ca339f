#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mlam/adam.hpp"
#include "mlam/metanet.hpp"
#include "mlam/problem.hpp"

namespace mlam {

// Online mode solves a single problem while updating the MetaNets, the
// training behavior applied outside a meta-training corpus. It is treated
// exactly like Train by the engine.
enum class SolveMode { Train, Eval, Online };

enum class StatePolicy { PersistAcrossProblem, ResetPerOuter, ResetPerInner };

StatePolicy state_policy_from_string(const std::string& s);
std::string to_string(StatePolicy p);

// All hyperparameters of the alternating bi-level loop.
struct MLAMConfig {
    int T = 100;      // outer iterations per problem
    int t_in = 10;    // inner steps per variable
    int t_out = 10;   // outer iterations per meta-update window
    std::vector<double> omega;  // per-outer-step loss weights; empty = all 1
    double lr = 1e-3;
    int hidden_size = 20;
    double out_scale = 0.1;
    double preprocess_p = 10.0;
    bool warm_start = true;
    StatePolicy state_policy = StatePolicy::PersistAcrossProblem;
    std::map<std::string, double> prior_weights;  // keyed by variable name
    uint64_t seed = 0;
    double abort_threshold = 1e12;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    bool record_features = false;  // log preprocessed features (diagnostics/tests)

    int meta_updates_per_problem() const { return T / t_out; }
    double omega_at(int outer_t) const;  // outer_t is 0-based
    void validate() const;               // throws on an invalid combination
};

// Per-problem run record.
struct Trajectory {
    std::vector<double> global_loss;       // per outer iteration, length T
    std::vector<double> accumulated_loss;  // per meta-update window, length T/t_out
    std::vector<double> metric_history;    // per outer iteration
    double initial_loss = 0.0;             // before the first outer iteration
    double initial_metric = 0.0;
    std::map<std::string, Tensor> final_variables;
    double wall_ms = 0.0;
    bool aborted = false;
    std::string abort_reason;
    int abort_outer_t = -1;
    int adam_updates_skipped = 0;
    std::vector<Tensor> feature_log;  // filled when record_features is set

    double final_metric() const { return metric_history.empty() ? initial_metric : metric_history.back(); }
};

// One MetaNet (and its Adam state) per variable role. The two nets of a
// two-variable problem are never shared.
struct MetaNets {
    std::map<std::string, MetaNetParams> nets;
    std::map<std::string, AdamState> adam;

    int64_t meta_update_count(const std::string& var) const { return adam.at(var).t; }
};

MetaNets init_metanets(const Problem& prototype, const MLAMConfig& cfg);

// Raised when a trajectory hits a non-finite or exploding loss.
struct TrajectoryAbort : std::runtime_error {
    TrajectoryAbort(int outer_t, int inner_i, std::string variable, double loss_value);
    int outer_t;
    int inner_i;
    std::string variable;
    double loss_value;
};

// t_in MetaNet steps on one variable, all other variables held fixed. The
// gradient of the local loss is recomputed at every step, preprocessed, and
// fed to the LSTM as a detached input; the additive updates stay on the tape
// so the window loss remains differentiable w.r.t. the lifted parameters.
// Returns the updated variable node; `state` is advanced in place.
NodeId inner_loop(const Problem& problem, const std::string& var_name,
                  std::map<std::string, NodeId>& vars, Tape& tape, const MetaNetNodes& net,
                  LstmStateNodes& state, int t_in, const MLAMConfig& cfg, int outer_t,
                  std::vector<Tensor>* feature_log);

// Mean of omega-weighted losses over one update window, as a differentiable
// node: (1/t_out) * sum_t omega_t * F_t.
NodeId accumulated_loss(Tape& tape, const std::vector<NodeId>& losses,
                        const std::vector<double>& omega);

// Full run of the alternating loop on one problem. Train mode performs one
// Adam meta-update per window and truncates gradients at window boundaries;
// eval mode only records losses and leaves `nets` untouched.
Trajectory solve_problem(const Problem& problem, const MLAMConfig& cfg, MetaNets& nets,
                         SolveMode mode);
// Eval-only entry point usable concurrently with shared frozen nets.
Trajectory solve_problem_eval(const Problem& problem, const MLAMConfig& cfg,
                              const MetaNets& nets);

struct MetaTrainResult {
    MetaNets nets;
    std::vector<Trajectory> trajectories;  // in visit order
    std::vector<size_t> visit_order;       // indices into the problem list
    int problems_aborted = 0;
};

// Upper-level meta-learning: carries MetaNet parameters across the problem
// set in seeded-shuffled order. Aborted problems are skipped and reported;
// fails only if every problem aborts.
MetaTrainResult meta_train(const std::vector<const Problem*>& problems, const MLAMConfig& cfg);
MetaTrainResult meta_train(const std::vector<const Problem*>& problems, const MLAMConfig& cfg,
                           MetaNets initial);

// One update window run from the problem's initial point, exposing the
// accumulated loss, its gradients w.r.t. every MetaNet parameter, and the
// feature sequence that was fed to the LSTMs (diagnostics and gradient
// verification).
struct WindowGradients {
    double loss = 0.0;
    std::map<std::string, MetaNetParams> grads;
    std::vector<Tensor> features;             // in feed order
    std::map<std::string, Tensor> initial_vars;
};

// requires cfg.T == cfg.t_out (exactly one window)
WindowGradients compute_window_gradients(const Problem& problem, const MLAMConfig& cfg,
                                         const MetaNets& nets);

struct EvalReport {
    std::vector<double> per_problem_metric;  // successful problems, in input order
    std::vector<size_t> aborted_indices;
    double mean = 0.0;
    double variance = 0.0;  // sample variance
    std::vector<Trajectory> trajectories;  // all problems, in input order
};

// Eval-mode runs across a problem set; problems are independent and run in
// a worker pool when more than one thread is configured.
EvalReport evaluate(const std::vector<const Problem*>& problems, const MetaNets& nets,
                    const MLAMConfig& cfg);

}  // namespace mlam
