#include "mlam/trajectory_io.hpp"

#include <charconv>
#include <fstream>

#include <json.hpp>

namespace mlam {

using nlohmann::json;

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

std::string csv_escape(const std::string& field) {
    bool needs_quote = field.find_first_of(",\"\r\n") != std::string::npos;
    if (!needs_quote) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

void write_csv(const std::string& path, const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValueError("cannot write csv file " + path);
    for (const auto& row : rows) {
        for (size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            out << csv_escape(row[i]);
        }
        out << "\r\n";
    }
}

void write_trajectory_csv(const std::string& path, const std::string& method,
                          const Trajectory& traj) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"method", "outer_t", "global_loss", "metric"});
    rows.push_back({method, "0", format_double(traj.initial_loss),
                    format_double(traj.initial_metric)});
    for (size_t t = 0; t < traj.global_loss.size(); ++t)
        rows.push_back({method, std::to_string(t + 1), format_double(traj.global_loss[t]),
                        format_double(traj.metric_history[t])});
    write_csv(path, rows);
}

void write_trajectory_csv(const std::string& path, const std::string& method,
                          const std::vector<double>& losses, const std::vector<double>& metrics) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"method", "outer_t", "global_loss", "metric"});
    for (size_t t = 0; t < losses.size(); ++t) {
        std::string metric = t < metrics.size() ? format_double(metrics[t]) : "";
        rows.push_back({method, std::to_string(t), format_double(losses[t]), metric});
    }
    write_csv(path, rows);
}

static json config_json(const MLAMConfig& cfg) {
    json j;
    j["T"] = cfg.T;
    j["t_in"] = cfg.t_in;
    j["t_out"] = cfg.t_out;
    if (!cfg.omega.empty()) j["omega"] = cfg.omega;
    j["lr"] = cfg.lr;
    j["hidden_size"] = cfg.hidden_size;
    j["out_scale"] = cfg.out_scale;
    j["preprocess_p"] = cfg.preprocess_p;
    j["warm_start"] = cfg.warm_start;
    j["state_policy"] = to_string(cfg.state_policy);
    if (!cfg.prior_weights.empty()) j["prior_weights"] = cfg.prior_weights;
    j["seed"] = cfg.seed;
    j["abort_threshold"] = cfg.abort_threshold;
    j["adam_beta1"] = cfg.adam_beta1;
    j["adam_beta2"] = cfg.adam_beta2;
    j["adam_eps"] = cfg.adam_eps;
    return j;
}

void write_trajectory_sidecar(const std::string& path, const MLAMConfig& cfg,
                              uint64_t problem_seed, const std::string& method) {
    json j;
    j["method"] = method;
    j["problem_seed"] = problem_seed;
    j["config"] = config_json(cfg);
    std::ofstream out(path);
    if (!out) throw ValueError("cannot write sidecar file " + path);
    out << j.dump(1) << "\n";
}

std::string config_to_json(const MLAMConfig& cfg) { return config_json(cfg).dump(1); }

MLAMConfig config_from_json(const std::string& text) {
    json j = json::parse(text);
    MLAMConfig cfg;
    cfg.T = j.value("T", cfg.T);
    cfg.t_in = j.value("t_in", cfg.t_in);
    cfg.t_out = j.value("t_out", cfg.t_out);
    if (j.contains("omega")) cfg.omega = j.at("omega").get<std::vector<double>>();
    cfg.lr = j.value("lr", cfg.lr);
    cfg.hidden_size = j.value("hidden_size", cfg.hidden_size);
    cfg.out_scale = j.value("out_scale", cfg.out_scale);
    cfg.preprocess_p = j.value("preprocess_p", cfg.preprocess_p);
    cfg.warm_start = j.value("warm_start", cfg.warm_start);
    if (j.contains("state_policy"))
        cfg.state_policy = state_policy_from_string(j.at("state_policy").get<std::string>());
    if (j.contains("prior_weights"))
        cfg.prior_weights = j.at("prior_weights").get<std::map<std::string, double>>();
    cfg.seed = j.value("seed", cfg.seed);
    cfg.abort_threshold = j.value("abort_threshold", cfg.abort_threshold);
    cfg.adam_beta1 = j.value("adam_beta1", cfg.adam_beta1);
    cfg.adam_beta2 = j.value("adam_beta2", cfg.adam_beta2);
    cfg.adam_eps = j.value("adam_eps", cfg.adam_eps);
    cfg.validate();
    return cfg;
}

}  // namespace mlam
