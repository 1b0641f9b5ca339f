#include "mlam/matrix_completion.hpp"

#include <cmath>

#include "mlam/kernels.hpp"

namespace mlam {

MatrixCompletionProblem MatrixCompletionProblem::generate(int64_t z, int64_t q, int rank,
                                                          double obs_rate, int p, double lambda,
                                                          uint64_t seed) {
    if (rank < 1 || rank > std::min(z, q))
        throw ValueError("generate_problem: rank must be in [1, min(z,q)]");
    if (!(obs_rate > 0.0) || obs_rate > 1.0)
        throw ValueError("generate_problem: obs_rate must be in (0, 1]");
    if (p < 1) throw ValueError("generate_problem: p must be >= 1");
    int64_t count = std::llround(obs_rate * static_cast<double>(z * q));
    if (count == 0)
        throw ValueError("generate_problem: observation rate yields zero observed entries");

    MatrixCompletionProblem prob;
    prob.z_ = z;
    prob.q_ = q;
    prob.rank_ = rank;
    prob.p_ = p;
    prob.obs_rate_ = obs_rate;
    prob.lambda_ = lambda;
    prob.seed_ = seed;

    Rng rng(seed);
    Tensor a = Tensor::randn({z, rank}, rng);
    Tensor b = Tensor::randn({q, rank}, rng);
    prob.ground_truth_ = Tensor({z, q});
    kernels::matmul(a.data(), b.data(), prob.ground_truth_.data(), z, rank, q, false, true);

    std::vector<int64_t> flat(static_cast<size_t>(z * q));
    for (size_t i = 0; i < flat.size(); ++i) flat[i] = static_cast<int64_t>(i);
    rng.shuffle(flat);
    flat.resize(static_cast<size_t>(count));

    prob.mask_ = Tensor::zeros({z, q});
    prob.observed_ = Tensor::zeros({z, q});
    prob.entries_.reserve(flat.size());
    for (int64_t f : flat) {
        prob.mask_[f] = 1.0;
        prob.observed_[f] = prob.ground_truth_[f];
        prob.entries_.emplace_back(f / q, f % q);
    }
    return prob;
}

std::vector<VariableSpec> MatrixCompletionProblem::variables() const {
    return {{"U", {z_, p_}}, {"V", {q_, p_}}};
}

NodeId MatrixCompletionProblem::loss_node(Tape& tape, NodeId u, NodeId v) const {
    const Tensor& tu = tape.value(u);
    const Tensor& tv = tape.value(v);
    if (tu.shape() != Shape{z_, p_} || tv.shape() != Shape{q_, p_})
        throw ShapeError("mc_global_loss: factor shapes " + shape_str(tu.shape()) + ", " +
                         shape_str(tv.shape()) + " do not match problem (" + std::to_string(z_) +
                         "," + std::to_string(q_) + "," + std::to_string(p_) + ")");
    NodeId pred = tape.matmul(u, tape.transpose(v));
    NodeId resid = tape.sub(tape.leaf(observed_), pred);
    NodeId fit = tape.scalar_mul(tape.sum(tape.square(tape.masked_select(resid, mask_))), 0.5);
    if (lambda_ == 0.0) return fit;
    NodeId reg = tape.scalar_mul(
        tape.add(tape.sum(tape.square(u)), tape.sum(tape.square(v))), lambda_ / 2.0);
    return tape.add(fit, reg);
}

NodeId MatrixCompletionProblem::global_loss(Tape& tape,
                                            const std::map<std::string, NodeId>& vars) const {
    return loss_node(tape, vars.at("U"), vars.at("V"));
}

double MatrixCompletionProblem::rmse(const Tensor& u, const Tensor& v) const {
    if (u.shape() != Shape{z_, p_} || v.shape() != Shape{q_, p_})
        throw ShapeError("rmse: factor shapes do not match problem");
    double truth_norm = ground_truth_.frobenius_norm();
    if (truth_norm == 0.0) throw ValueError("rmse: ground truth has zero norm");
    Tensor pred({z_, q_});
    kernels::matmul(u.data(), v.data(), pred.data(), z_, p_, q_, false, true);
    double s = 0.0;
    for (int64_t i = 0; i < pred.numel(); ++i) {
        double d = ground_truth_[i] - pred[i];
        s += d * d;
    }
    return std::sqrt(s) / truth_norm;
}

double MatrixCompletionProblem::metric(const std::map<std::string, Tensor>& vars) const {
    return rmse(vars.at("U"), vars.at("V"));
}

Tensor apply_mask(const Tensor& x, const Tensor& mask) {
    if (!x.same_shape(mask)) throw ShapeError("apply_mask: shape mismatch");
    Tensor out = x;
    for (int64_t i = 0; i < out.numel(); ++i)
        if (mask[i] == 0.0) out[i] = 0.0;
    return out;
}

}  // namespace mlam
