#include "mlam/engine.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mlam/kernels.hpp"

namespace mlam {

StatePolicy state_policy_from_string(const std::string& s) {
    if (s == "persist-across-problem") return StatePolicy::PersistAcrossProblem;
    if (s == "reset-per-outer") return StatePolicy::ResetPerOuter;
    if (s == "reset-per-inner") return StatePolicy::ResetPerInner;
    throw ValueError("unknown state_policy \"" + s + "\"");
}

std::string to_string(StatePolicy p) {
    switch (p) {
        case StatePolicy::PersistAcrossProblem: return "persist-across-problem";
        case StatePolicy::ResetPerOuter: return "reset-per-outer";
        case StatePolicy::ResetPerInner: return "reset-per-inner";
    }
    return "?";
}

double MLAMConfig::omega_at(int outer_t) const {
    if (omega.empty()) return 1.0;
    return omega[static_cast<size_t>(outer_t)];
}

void MLAMConfig::validate() const {
    if (T < 1 || t_in < 1 || t_out < 1)
        throw ValueError("MLAMConfig: T, t_in and t_out must all be >= 1");
    if (T % t_out != 0)
        throw ValueError("MLAMConfig: T (" + std::to_string(T) + ") must be divisible by t_out (" +
                         std::to_string(t_out) + ")");
    if (!omega.empty() && omega.size() != static_cast<size_t>(T))
        throw ValueError("MLAMConfig: omega must be empty or have length T");
    for (double w : omega)
        if (!(w >= 0.0)) throw ValueError("MLAMConfig: omega weights must be >= 0");
    if (hidden_size < 1) throw ValueError("MLAMConfig: hidden_size must be >= 1");
    if (!(lr > 0.0)) throw ValueError("MLAMConfig: lr must be positive");
    if (!(preprocess_p > 0.0)) throw ValueError("MLAMConfig: preprocess_p must be positive");
}

MetaNets init_metanets(const Problem& prototype, const MLAMConfig& cfg) {
    MetaNets nets;
    for (const VariableSpec& v : prototype.variables()) {
        uint64_t s = mix_seed(cfg.seed, hash_str(v.name));
        nets.nets[v.name] = init_params(cfg.hidden_size, s);
        nets.adam[v.name] =
            make_adam_state(nets.nets[v.name], cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
    }
    return nets;
}

TrajectoryAbort::TrajectoryAbort(int outer_t_, int inner_i_, std::string variable_,
                                 double loss_value_)
    : std::runtime_error("trajectory aborted at outer iteration " + std::to_string(outer_t_) +
                         ", variable \"" + variable_ + "\", inner step " +
                         std::to_string(inner_i_) + ", loss " + std::to_string(loss_value_)),
      outer_t(outer_t_),
      inner_i(inner_i_),
      variable(variable_),
      loss_value(loss_value_) {}

namespace {

// gradient of the global loss w.r.t. one variable, all variables fixed at
// their current values; computed on a scratch tape so nothing links back
// into the training graph
Tensor local_gradient(const Problem& problem, const std::string& var_name,
                      const std::map<std::string, Tensor>& values, int outer_t, int inner_i) {
    Tape scratch;
    std::map<std::string, NodeId> ids;
    for (const auto& [name, v] : values) ids[name] = scratch.leaf(v);
    NodeId loss = problem.global_loss(scratch, ids);
    double lv = scratch.value(loss).item();
    if (!std::isfinite(lv)) throw TrajectoryAbort(outer_t, inner_i, var_name, lv);
    GradientMap gm = scratch.backward(loss);
    NodeId vid = ids.at(var_name);
    if (!gm.contains(vid)) return Tensor::zeros(values.at(var_name).shape());
    return gm.at(vid);
}

std::map<std::string, Tensor> node_values(const Tape& tape,
                                          const std::map<std::string, NodeId>& vars) {
    std::map<std::string, Tensor> out;
    for (const auto& [name, id] : vars) out[name] = tape.value(id);
    return out;
}

}  // namespace

NodeId inner_loop(const Problem& problem, const std::string& var_name,
                  std::map<std::string, NodeId>& vars, Tape& tape, const MetaNetNodes& net,
                  LstmStateNodes& state, int t_in, const MLAMConfig& cfg, int outer_t,
                  std::vector<Tensor>* feature_log) {
    const Shape var_shape = tape.value(vars.at(var_name)).shape();
    const int64_t n_coords = shape_numel(var_shape);

    if (cfg.state_policy == StatePolicy::ResetPerInner)
        state = lift_state(tape, zero_state(n_coords, net.hidden_size));

    for (int i = 0; i < t_in; ++i) {
        Tensor grad = local_gradient(problem, var_name, node_values(tape, vars), outer_t, i);
        for (int64_t c = 0; c < grad.numel(); ++c)
            if (!std::isfinite(grad[c]))
                throw TrajectoryAbort(outer_t, i, var_name,
                                      tape.value(vars.at(var_name)).max_abs());
        Tensor feats = features_from_gradient(grad, cfg.preprocess_p);
        if (feature_log) feature_log->push_back(feats);
        NodeId f = tape.leaf(std::move(feats));
        NodeId upd = lstm_step(tape, net, f, state, cfg.out_scale);
        vars[var_name] = tape.add(vars.at(var_name), tape.reshape(upd, var_shape));
    }
    return vars.at(var_name);
}

NodeId accumulated_loss(Tape& tape, const std::vector<NodeId>& losses,
                        const std::vector<double>& omega) {
    if (losses.empty()) throw ValueError("accumulated_loss: empty window");
    if (losses.size() != omega.size())
        throw ValueError("accumulated_loss: " + std::to_string(losses.size()) + " losses vs " +
                         std::to_string(omega.size()) + " weights");
    NodeId stacked = tape.concat(losses, 0);
    NodeId weighted = tape.mul(stacked, tape.leaf(Tensor({static_cast<int64_t>(omega.size())},
                                                         std::vector<double>(omega))));
    return tape.scalar_mul(tape.sum(weighted), 1.0 / static_cast<double>(losses.size()));
}

namespace {

struct VarRuntime {
    MetaNetNodes net;
    LstmStateNodes state;
    NodeId node = -1;
};

Trajectory solve_impl(const Problem& problem, const MLAMConfig& cfg, const MetaNets& nets_in,
                      MetaNets* nets_mut, Trajectory* out_partial = nullptr) {
    cfg.validate();
    const bool training = nets_mut != nullptr;
    const auto specs = problem.variables();
    for (const VariableSpec& v : specs)
        if (!nets_in.nets.count(v.name))
            throw ValueError("solve_problem: no MetaNet for variable \"" + v.name + "\"");

    auto t_start = std::chrono::steady_clock::now();
    Trajectory traj;
    Rng rng(mix_seed(cfg.seed, problem.seed()));

    std::map<std::string, Tensor> values = problem.init_variables(rng);
    std::map<std::string, LstmState> states;
    for (const VariableSpec& v : specs)
        states[v.name] = zero_state(shape_numel(v.shape), cfg.hidden_size);

    traj.initial_loss = problem.loss_value(values);
    traj.initial_metric = problem.metric(values);

    const int S = cfg.meta_updates_per_problem();
    int outer_t = 0;  // 0-based global outer index
    try {
        for (int s = 0; s < S; ++s) {
            Tape tape;
            std::map<std::string, VarRuntime> rt;
            std::map<std::string, NodeId> var_nodes;
            for (const VariableSpec& v : specs) {
                VarRuntime r;
                r.net = lift_params(tape, nets_in.nets.at(v.name));
                r.state = lift_state(tape, states.at(v.name));
                r.node = tape.leaf(values.at(v.name));
                var_nodes[v.name] = r.node;
                rt[v.name] = r;
            }

            std::vector<NodeId> window_losses;
            std::vector<double> window_omega;
            for (int w = 0; w < cfg.t_out; ++w, ++outer_t) {
                for (const VariableSpec& v : specs) {
                    VarRuntime& r = rt.at(v.name);
                    if (cfg.state_policy == StatePolicy::ResetPerOuter)
                        r.state = lift_state(
                            tape, zero_state(shape_numel(v.shape), cfg.hidden_size));
                    if (!cfg.warm_start)
                        var_nodes[v.name] = r.node =
                            tape.leaf(Tensor::randn(v.shape, rng, 0.0, 0.1));
                    r.node = inner_loop(problem, v.name, var_nodes, tape, r.net, r.state,
                                        cfg.t_in, cfg, outer_t,
                                        cfg.record_features ? &traj.feature_log : nullptr);
                }
                NodeId loss = problem.global_loss(tape, var_nodes);
                double lv = tape.value(loss).item();
                if (!std::isfinite(lv) || std::fabs(lv) > cfg.abort_threshold)
                    throw TrajectoryAbort(outer_t, -1, "<global>", lv);
                window_losses.push_back(loss);
                window_omega.push_back(cfg.omega_at(outer_t));
                traj.global_loss.push_back(lv);
                traj.metric_history.push_back(problem.metric(node_values(tape, var_nodes)));
            }

            NodeId acc = accumulated_loss(tape, window_losses, window_omega);
            // prior-augmented objective when reference variables are available
            const auto* refs = problem.prior_references();
            if (refs) {
                for (const auto& [name, weight] : cfg.prior_weights) {
                    if (weight == 0.0 || !refs->count(name)) continue;
                    NodeId diff = tape.sub(var_nodes.at(name), tape.leaf(refs->at(name)));
                    acc = tape.add(acc, tape.scalar_mul(tape.sum(tape.square(diff)), weight));
                }
            }
            traj.accumulated_loss.push_back(tape.value(acc).item());

            if (training) {
                GradientMap gm = tape.backward(acc);
                for (const VariableSpec& v : specs) {
                    MetaNetParams grads =
                        grads_from_map(gm, rt.at(v.name).net, nets_mut->nets.at(v.name));
                    bool ok = adam_update(nets_mut->nets.at(v.name), grads,
                                          nets_mut->adam.at(v.name), cfg.lr);
                    if (!ok) ++traj.adam_updates_skipped;
                }
            }

            // window boundary: detach variables and LSTM states by re-rooting
            // their current values as fresh leaves in the next window's tape
            for (const VariableSpec& v : specs) {
                values[v.name] = tape.value(var_nodes.at(v.name));
                const VarRuntime& r = rt.at(v.name);
                states[v.name] = LstmState{tape.value(r.state.h1), tape.value(r.state.c1),
                                           tape.value(r.state.h2), tape.value(r.state.c2)};
            }
        }
    } catch (const TrajectoryAbort& abort) {
        traj.aborted = true;
        traj.abort_reason = abort.what();
        traj.abort_outer_t = abort.outer_t;
    }

    traj.final_variables = values;
    traj.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                             t_start)
                       .count();
    if (out_partial) *out_partial = traj;
    return traj;
}

}  // namespace

Trajectory solve_problem(const Problem& problem, const MLAMConfig& cfg, MetaNets& nets,
                         SolveMode mode) {
    if (mode == SolveMode::Train || mode == SolveMode::Online) {
        // parameters are frozen within a window; updates land between windows
        return solve_impl(problem, cfg, nets, &nets);
    }
    return solve_impl(problem, cfg, nets, nullptr);
}

Trajectory solve_problem_eval(const Problem& problem, const MLAMConfig& cfg,
                              const MetaNets& nets) {
    return solve_impl(problem, cfg, nets, nullptr);
}

WindowGradients compute_window_gradients(const Problem& problem, const MLAMConfig& cfg,
                                         const MetaNets& nets) {
    cfg.validate();
    if (cfg.T != cfg.t_out)
        throw ValueError("compute_window_gradients: cfg must describe exactly one window");

    WindowGradients out;
    Rng rng(mix_seed(cfg.seed, problem.seed()));
    out.initial_vars = problem.init_variables(rng);

    Tape tape;
    const auto specs = problem.variables();
    std::map<std::string, MetaNetNodes> nets_on_tape;
    std::map<std::string, LstmStateNodes> states;
    std::map<std::string, NodeId> vars;
    for (const VariableSpec& v : specs) {
        nets_on_tape[v.name] = lift_params(tape, nets.nets.at(v.name));
        states[v.name] = lift_state(tape, zero_state(shape_numel(v.shape), cfg.hidden_size));
        vars[v.name] = tape.leaf(out.initial_vars.at(v.name));
    }

    std::vector<NodeId> losses;
    std::vector<double> omega;
    for (int w = 0; w < cfg.t_out; ++w) {
        for (const VariableSpec& v : specs)
            inner_loop(problem, v.name, vars, tape, nets_on_tape.at(v.name),
                       states.at(v.name), cfg.t_in, cfg, w, &out.features);
        losses.push_back(problem.global_loss(tape, vars));
        omega.push_back(cfg.omega_at(w));
    }
    NodeId acc = accumulated_loss(tape, losses, omega);
    out.loss = tape.value(acc).item();
    GradientMap gm = tape.backward(acc);
    for (const VariableSpec& v : specs)
        out.grads[v.name] = grads_from_map(gm, nets_on_tape.at(v.name), nets.nets.at(v.name));
    return out;
}

MetaTrainResult meta_train(const std::vector<const Problem*>& problems, const MLAMConfig& cfg) {
    if (problems.empty()) throw ValueError("meta_train: empty problem set");
    return meta_train(problems, cfg, init_metanets(*problems.front(), cfg));
}

MetaTrainResult meta_train(const std::vector<const Problem*>& problems, const MLAMConfig& cfg,
                           MetaNets initial) {
    cfg.validate();
    if (problems.empty()) throw ValueError("meta_train: empty problem set");
    // all problems must expose the same variable roles
    const auto proto = problems.front()->variables();
    for (const Problem* p : problems) {
        const auto vs = p->variables();
        if (vs.size() != proto.size())
            throw ValueError("meta_train: problems disagree on variable count");
        for (size_t i = 0; i < vs.size(); ++i)
            if (vs[i].name != proto[i].name)
                throw ValueError("meta_train: problems disagree on variable roles");
    }

    MetaTrainResult result;
    result.nets = std::move(initial);
    result.visit_order.resize(problems.size());
    std::iota(result.visit_order.begin(), result.visit_order.end(), size_t{0});
    Rng order_rng(mix_seed(cfg.seed, 0x50f1eULL));
    order_rng.shuffle(result.visit_order);

    for (size_t idx : result.visit_order) {
        Trajectory t = solve_problem(*problems[idx], cfg, result.nets, SolveMode::Train);
        if (t.aborted) ++result.problems_aborted;
        result.trajectories.push_back(std::move(t));
    }
    if (result.problems_aborted == static_cast<int>(problems.size()))
        throw ValueError("meta_train: all problems aborted");
    return result;
}

EvalReport evaluate(const std::vector<const Problem*>& problems, const MetaNets& nets,
                    const MLAMConfig& cfg) {
    cfg.validate();
    EvalReport report;
    report.trajectories.resize(problems.size());

    const int64_t n = static_cast<int64_t>(problems.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) if (kernels::threads() > 1)
#endif
    for (int64_t i = 0; i < n; ++i)
        report.trajectories[static_cast<size_t>(i)] =
            solve_problem_eval(*problems[static_cast<size_t>(i)], cfg, nets);

    for (size_t i = 0; i < problems.size(); ++i) {
        const Trajectory& t = report.trajectories[i];
        if (t.aborted)
            report.aborted_indices.push_back(i);
        else
            report.per_problem_metric.push_back(t.final_metric());
    }
    if (report.per_problem_metric.empty()) throw ValueError("no successful trajectories");

    double n_ok = static_cast<double>(report.per_problem_metric.size());
    double mean = 0.0;
    for (double m : report.per_problem_metric) mean += m;
    mean /= n_ok;
    double var = 0.0;
    for (double m : report.per_problem_metric) var += (m - mean) * (m - mean);
    report.mean = mean;
    report.variance = n_ok > 1 ? var / (n_ok - 1.0) : 0.0;
    return report;
}

}  // namespace mlam
