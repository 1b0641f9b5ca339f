#include "mlam/problem.hpp"

namespace mlam {

std::map<std::string, Tensor> Problem::init_variables(Rng& rng) const {
    std::map<std::string, Tensor> out;
    for (const VariableSpec& v : variables()) out[v.name] = Tensor::randn(v.shape, rng, 0.0, 0.1);
    return out;
}

double Problem::loss_value(const std::map<std::string, Tensor>& vars) const {
    Tape tape;
    std::map<std::string, NodeId> ids;
    for (const auto& [name, value] : vars) ids[name] = tape.leaf(value);
    return tape.value(global_loss(tape, ids)).item();
}

}  // namespace mlam
