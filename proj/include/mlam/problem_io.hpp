#pragma once

#include <string>

#include "mlam/gmm.hpp"
#include "mlam/matrix_completion.hpp"

namespace mlam {

// JSON container: ground truth, mask and generator metadata.
void save_mc_problem(const std::string& path, const MatrixCompletionProblem& prob);

// samples as CSV (one sample per row) plus a JSON metadata sidecar holding
// the generator parameters needed for exact regeneration
void save_gmm_problem(const std::string& csv_path, const std::string& meta_path,
                      const GmmProblem& prob, bool flower, int petals);

}  // namespace mlam
