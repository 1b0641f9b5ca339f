#pragma once

#include <vector>

#include "mlam/problem.hpp"

namespace mlam {

// Unconstrained mixture parametrization: the weight simplex is reached
// through a softmax of free logits, so additive updates can never leave it.
struct MixtureParams {
    Tensor logits;  // (K,1)
    Tensor mu;      // (K,D)
};

// softmax over all entries (used on the (K,1) logit vector)
Tensor softmax(const Tensor& logits);

// Fixed-covariance Gaussian mixture likelihood task. Covariances are frozen
// at generation time; the optimized variables are the logits and the means.
class GmmProblem final : public Problem {
public:
    // true means i.i.d. Normal(0, separation^2 I), uniform weights, identity
    // covariances, ancestral sampling; deterministic per seed
    static GmmProblem generate(int k, int d, int64_t g, double separation, uint64_t seed);

    // ring of `petals` anisotropic clusters, each elongated 10:1 along its
    // radial direction, equal weights
    static GmmProblem flower(int petals, int64_t g, uint64_t seed);

    // wrap an existing sample set; identity covariances unless given
    static GmmProblem from_samples(Tensor samples, int k, std::vector<Tensor> sigma = {},
                                   uint64_t seed = 0);

    std::string kind() const override { return "gmm"; }
    uint64_t seed() const override { return seed_; }
    std::vector<VariableSpec> variables() const override;
    NodeId global_loss(Tape& tape, const std::map<std::string, NodeId>& vars) const override;
    // per-sample negative log-likelihood (total / G)
    double metric(const std::map<std::string, Tensor>& vars) const override;
    // means start at K distinct samples, logits at zero (uniform weights)
    std::map<std::string, Tensor> init_variables(Rng& rng) const override;

    // -sum_g log(sum_k pi_k N(x_g | mu_k, Sigma_k) + eps), built with a
    // shifted log-sum-exp so distant samples neither overflow nor hit log(0)
    NodeId nll_node(Tape& tape, NodeId logits, NodeId mu) const;
    double nll_value(const MixtureParams& params) const;

    // posterior membership probabilities, (G,K), rows sum to 1
    Tensor responsibilities(const MixtureParams& params) const;

    int k() const { return k_; }
    int d() const { return d_; }
    int64_t g() const { return g_; }
    const Tensor& samples() const { return samples_; }
    const Tensor& sigma(int k) const { return sigma_[static_cast<size_t>(k)]; }
    const Tensor& sigma_inv(int k) const { return sigma_inv_[static_cast<size_t>(k)]; }
    double log_det_sigma(int k) const { return log_det_[static_cast<size_t>(k)]; }
    const Tensor& true_mu() const { return true_mu_; }
    const std::vector<double>& true_pi() const { return true_pi_; }

    static constexpr double kLogFloor = 1e-12;

private:
    GmmProblem() = default;
    void set_covariances(std::vector<Tensor> sigma);  // also derives inverse/logdet/chol
    void sample_points(Rng& rng);

    Tensor samples_;  // (G,D)
    int k_ = 0, d_ = 0;
    int64_t g_ = 0;
    std::vector<Tensor> sigma_, sigma_inv_, sigma_chol_;
    std::vector<double> log_det_;
    Tensor true_mu_;  // generator metadata, reporting only
    std::vector<double> true_pi_;
    uint64_t seed_ = 0;
};

}  // namespace mlam
