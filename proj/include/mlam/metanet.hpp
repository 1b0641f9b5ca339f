#pragma once

#include <array>
#include <string>
#include <utility>

#include "mlam/tape.hpp"

namespace mlam {

// Per-gate weights of one LSTM layer: x projection (in,H), recurrent
// projection (H,H) and bias (H), for the input/forget/cell/output gates.
struct LstmLayerParams {
    Tensor wx_i, wh_i, b_i;
    Tensor wx_f, wh_f, b_f;
    Tensor wx_g, wh_g, b_g;
    Tensor wx_o, wh_o, b_o;
};

// Weights of the two-layer coordinate-wise LSTM plus the scalar output
// projection. The same parameters are applied to every coordinate of the
// optimized variable; state is per coordinate.
struct MetaNetParams {
    int hidden_size = 0;
    int input_dim = 2;
    LstmLayerParams layer1, layer2;
    Tensor w_out;  // (H,1)
    Tensor b_out;  // (1)
};

constexpr size_t kMetaNetTensorCount = 26;

// Stable enumeration of all parameter tensors; the order defines the flat
// layout used by Adam state, checkpoints and gradient bundles.
std::array<Tensor*, kMetaNetTensorCount> tensor_list(MetaNetParams& p);
std::array<const Tensor*, kMetaNetTensorCount> tensor_list(const MetaNetParams& p);
const std::array<std::string, kMetaNetTensorCount>& tensor_names();

size_t param_count(const MetaNetParams& p);
bool params_all_finite(const MetaNetParams& p);
bool params_bitwise_equal(const MetaNetParams& a, const MetaNetParams& b);

// Weights i.i.d. uniform on [-1/sqrt(H), 1/sqrt(H)], forget bias 1, other
// biases 0, zero output projection so the first emitted update is exactly 0.
MetaNetParams init_params(int hidden_size, uint64_t seed, int input_dim = 2);

// Like init_params but also randomizes the output projection; used when a
// fully generic parameter point is needed (gradient checks).
MetaNetParams random_params(int hidden_size, uint64_t seed, int input_dim = 2);

// log/sign preprocessing of one gradient coordinate
std::pair<double, double> preprocess_gradient(double g, double p);

// (n) or (n,1) gradient -> (n,2) feature matrix; rejects non-finite input
// naming the offending coordinate
Tensor features_from_gradient(const Tensor& grad, double p);

// Per-coordinate hidden/cell state for both layers, shape (n_coords, H).
struct LstmState {
    Tensor h1, c1, h2, c2;
};
LstmState zero_state(int64_t n_coords, int hidden_size);

struct LstmStateNodes {
    NodeId h1 = -1, c1 = -1, h2 = -1, c2 = -1;
};

struct LstmLayerNodes {
    NodeId wx_i, wh_i, b_i;
    NodeId wx_f, wh_f, b_f;
    NodeId wx_g, wh_g, b_g;
    NodeId wx_o, wh_o, b_o;
};

// Parameter tensors lifted onto a tape as leaves, so a backward pass from an
// accumulated loss reaches them.
struct MetaNetNodes {
    int hidden_size = 0;
    LstmLayerNodes layer1, layer2;
    NodeId w_out = -1, b_out = -1;
    std::array<NodeId, kMetaNetTensorCount> flat{};
};

MetaNetNodes lift_params(Tape& tape, const MetaNetParams& p);
LstmStateNodes lift_state(Tape& tape, const LstmState& s);

// One coordinate-wise step: features (n,2) -> additive update (n,1), with the
// state node handles advanced in place. Differentiable w.r.t. the lifted
// parameters and the incoming state.
NodeId lstm_step(Tape& tape, const MetaNetNodes& net, NodeId features, LstmStateNodes& state,
                 double out_scale);

// Value-level convenience wrapper (runs on a scratch tape).
std::pair<Tensor, LstmState> lstm_step_values(const MetaNetParams& p, const Tensor& features,
                                              const LstmState& state, double out_scale);

// Gradient bundle extraction: gradients of the lifted parameter nodes,
// zero-filled where a parameter is unreachable.
MetaNetParams grads_from_map(const GradientMap& gm, const MetaNetNodes& nodes,
                             const MetaNetParams& like);

}  // namespace mlam
