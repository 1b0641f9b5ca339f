#include "mlam/problem_io.hpp"

#include <fstream>

#include <json.hpp>

#include "mlam/trajectory_io.hpp"

namespace mlam {

using nlohmann::json;

namespace {
json matrix_json(const Tensor& t) {
    json rows = json::array();
    for (int64_t r = 0; r < t.rows(); ++r) {
        json row = json::array();
        for (int64_t c = 0; c < t.cols(); ++c) row.push_back(t.at(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}
}  // namespace

void save_mc_problem(const std::string& path, const MatrixCompletionProblem& prob) {
    json j;
    j["type"] = "matrix-completion";
    j["z"] = prob.z();
    j["q"] = prob.q();
    j["rank"] = prob.rank();
    j["p"] = prob.p();
    j["obs_rate"] = prob.obs_rate();
    j["lambda"] = prob.lambda();
    j["seed"] = prob.seed();
    j["ground_truth"] = matrix_json(prob.ground_truth());
    j["mask"] = matrix_json(prob.mask());
    std::ofstream out(path);
    if (!out) throw ValueError("cannot write problem file " + path);
    out << j.dump(1) << "\n";
}

void save_gmm_problem(const std::string& csv_path, const std::string& meta_path,
                      const GmmProblem& prob, bool flower, int petals) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header;
    for (int64_t d = 0; d < prob.d(); ++d) header.push_back("x" + std::to_string(d));
    rows.push_back(header);
    for (int64_t s = 0; s < prob.g(); ++s) {
        std::vector<std::string> row;
        for (int64_t d = 0; d < prob.d(); ++d) row.push_back(format_double(prob.samples().at(s, d)));
        rows.push_back(std::move(row));
    }
    write_csv(csv_path, rows);

    json j;
    j["type"] = flower ? "gmm-flower" : "gmm";
    j["K"] = prob.k();
    j["D"] = prob.d();
    j["G"] = prob.g();
    j["seed"] = prob.seed();
    if (flower) j["petals"] = petals;
    j["true_mu"] = matrix_json(prob.true_mu());
    j["true_pi"] = prob.true_pi();
    j["samples_csv"] = csv_path;
    std::ofstream out(meta_path);
    if (!out) throw ValueError("cannot write problem metadata " + meta_path);
    out << j.dump(1) << "\n";
}

}  // namespace mlam
