#pragma once

#include <utility>
#include <vector>

#include "mlam/problem.hpp"

namespace mlam {

// Synthetic low-rank completion task. The ground-truth matrix is held out:
// the loss sees only the masked observation, the metric consults the truth.
class MatrixCompletionProblem final : public Problem {
public:
    // R = A B^T with Normal(0,1) factors of the requested rank; the mask is
    // sampled uniformly without replacement to exactly round(obs_rate*z*q)
    // entries. Deterministic per seed.
    static MatrixCompletionProblem generate(int64_t z, int64_t q, int rank, double obs_rate,
                                            int p, double lambda, uint64_t seed);

    std::string kind() const override { return "matrix-completion"; }
    uint64_t seed() const override { return seed_; }
    std::vector<VariableSpec> variables() const override;
    NodeId global_loss(Tape& tape, const std::map<std::string, NodeId>& vars) const override;
    double metric(const std::map<std::string, Tensor>& vars) const override;

    // 0.5*||P_mask(R_S - U V^T)||_F^2 + (lambda/2)*(||U||_F^2 + ||V||_F^2)
    NodeId loss_node(Tape& tape, NodeId u, NodeId v) const;

    // relative reconstruction error ||R - U V^T||_F / ||R||_F
    double rmse(const Tensor& u, const Tensor& v) const;

    int64_t z() const { return z_; }
    int64_t q() const { return q_; }
    int rank() const { return rank_; }
    int p() const { return p_; }
    double lambda() const { return lambda_; }
    double obs_rate() const { return obs_rate_; }
    const Tensor& ground_truth() const { return ground_truth_; }
    const Tensor& observed() const { return observed_; }
    const Tensor& mask() const { return mask_; }
    const std::vector<std::pair<int64_t, int64_t>>& observed_entries() const {
        return entries_;
    }

private:
    MatrixCompletionProblem() = default;

    Tensor ground_truth_;  // z x q, evaluation only
    Tensor observed_;      // R_S = P_mask(R)
    Tensor mask_;          // 0/1
    std::vector<std::pair<int64_t, int64_t>> entries_;
    int64_t z_ = 0, q_ = 0;
    int rank_ = 0, p_ = 0;
    double obs_rate_ = 0.0, lambda_ = 0.0;
    uint64_t seed_ = 0;
};

// P_mask: zero out entries where the mask is 0.
Tensor apply_mask(const Tensor& x, const Tensor& mask);

}  // namespace mlam
