#pragma once

#include <map>
#include <string>
#include <vector>

#include "mlam/rng.hpp"
#include "mlam/tape.hpp"

namespace mlam {

struct VariableSpec {
    std::string name;
    Shape shape;
};

// One optimization task: a global loss over named variables, buildable on a
// tape, plus an evaluation metric that may consult hidden ground truth.
// Problems are immutable after construction and safe to share across threads.
class Problem {
public:
    virtual ~Problem() = default;

    virtual std::string kind() const = 0;
    virtual uint64_t seed() const = 0;

    // declaration order is the alternation order of the outer loop
    virtual std::vector<VariableSpec> variables() const = 0;

    virtual NodeId global_loss(Tape& tape, const std::map<std::string, NodeId>& vars) const = 0;

    virtual double metric(const std::map<std::string, Tensor>& vars) const = 0;

    // default policy: i.i.d. Normal(0, 0.1^2)
    virtual std::map<std::string, Tensor> init_variables(Rng& rng) const;

    // optional reference variables for the prior-augmented accumulated loss
    virtual const std::map<std::string, Tensor>* prior_references() const { return nullptr; }

    // loss evaluated off-tape (scratch tape), for metrics and baselines
    double loss_value(const std::map<std::string, Tensor>& vars) const;
};

}  // namespace mlam
