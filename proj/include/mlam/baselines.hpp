#pragma once

#include <string>
#include <vector>

#include "mlam/gmm.hpp"
#include "mlam/matrix_completion.hpp"

namespace mlam {

struct BaselineConfig {
    int max_iters = 100;
    double lr = 0.01;        // SGD only
    double tolerance = 1e-4; // stopping threshold on loss change
    uint64_t seed = 0;

    void validate() const;
};

struct FactorResult {
    Tensor u, v;
    std::vector<double> loss_history;    // objective value per iteration (epoch for SGD)
    std::vector<double> metric_history;  // reconstruction error, evaluation only
    bool aborted = false;
    std::vector<std::string> warnings;
};

// Alternating ridge least squares: each factor row/column is the exact
// minimizer of its sub-problem, so the objective never increases.
FactorResult als_solve(const MatrixCompletionProblem& problem, const BaselineConfig& cfg);

// Entry-wise stochastic gradient descent over a seeded shuffle of the
// observed entries; one epoch = one full pass.
FactorResult sgd_solve(const MatrixCompletionProblem& problem, const BaselineConfig& cfg);

struct EmResult {
    MixtureParams params;
    std::vector<double> nll_history;
    std::vector<double> metric_history;  // per-sample NLL
    std::vector<std::string> events;     // component re-initializations etc.
};

// Expectation-maximization with frozen covariances; stops when the NLL
// change falls below cfg.tolerance or after max_iters.
EmResult em_fit(const GmmProblem& problem, const MixtureParams& init, const BaselineConfig& cfg);

}  // namespace mlam
