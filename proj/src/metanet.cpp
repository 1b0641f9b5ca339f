#include "mlam/metanet.hpp"

#include <cmath>

namespace mlam {

namespace {
template <typename P, typename T>
std::array<T, kMetaNetTensorCount> list_impl(P& p) {
    return {
        &p.layer1.wx_i, &p.layer1.wh_i, &p.layer1.b_i,
        &p.layer1.wx_f, &p.layer1.wh_f, &p.layer1.b_f,
        &p.layer1.wx_g, &p.layer1.wh_g, &p.layer1.b_g,
        &p.layer1.wx_o, &p.layer1.wh_o, &p.layer1.b_o,
        &p.layer2.wx_i, &p.layer2.wh_i, &p.layer2.b_i,
        &p.layer2.wx_f, &p.layer2.wh_f, &p.layer2.b_f,
        &p.layer2.wx_g, &p.layer2.wh_g, &p.layer2.b_g,
        &p.layer2.wx_o, &p.layer2.wh_o, &p.layer2.b_o,
        &p.w_out, &p.b_out,
    };
}
}  // namespace

std::array<Tensor*, kMetaNetTensorCount> tensor_list(MetaNetParams& p) {
    return list_impl<MetaNetParams, Tensor*>(p);
}

std::array<const Tensor*, kMetaNetTensorCount> tensor_list(const MetaNetParams& p) {
    return list_impl<const MetaNetParams, const Tensor*>(p);
}

const std::array<std::string, kMetaNetTensorCount>& tensor_names() {
    static const std::array<std::string, kMetaNetTensorCount> names = {
        "layer1.wx_i", "layer1.wh_i", "layer1.b_i",
        "layer1.wx_f", "layer1.wh_f", "layer1.b_f",
        "layer1.wx_g", "layer1.wh_g", "layer1.b_g",
        "layer1.wx_o", "layer1.wh_o", "layer1.b_o",
        "layer2.wx_i", "layer2.wh_i", "layer2.b_i",
        "layer2.wx_f", "layer2.wh_f", "layer2.b_f",
        "layer2.wx_g", "layer2.wh_g", "layer2.b_g",
        "layer2.wx_o", "layer2.wh_o", "layer2.b_o",
        "w_out", "b_out",
    };
    return names;
}

size_t param_count(const MetaNetParams& p) {
    size_t n = 0;
    for (const Tensor* t : tensor_list(p)) n += static_cast<size_t>(t->numel());
    return n;
}

bool params_all_finite(const MetaNetParams& p) {
    for (const Tensor* t : tensor_list(p))
        if (!t->all_finite()) return false;
    return true;
}

bool params_bitwise_equal(const MetaNetParams& a, const MetaNetParams& b) {
    auto la = tensor_list(a);
    auto lb = tensor_list(b);
    for (size_t i = 0; i < kMetaNetTensorCount; ++i)
        if (!la[i]->bitwise_equal(*lb[i])) return false;
    return true;
}

namespace {
LstmLayerParams make_layer(int in, int hidden, double bound, Rng& rng) {
    auto w = [&](int64_t r, int64_t c) { return Tensor::rand_uniform({r, c}, rng, -bound, bound); };
    LstmLayerParams l;
    l.wx_i = w(in, hidden);
    l.wh_i = w(hidden, hidden);
    l.b_i = Tensor::zeros({hidden});
    l.wx_f = w(in, hidden);
    l.wh_f = w(hidden, hidden);
    l.b_f = Tensor::full({hidden}, 1.0);
    l.wx_g = w(in, hidden);
    l.wh_g = w(hidden, hidden);
    l.b_g = Tensor::zeros({hidden});
    l.wx_o = w(in, hidden);
    l.wh_o = w(hidden, hidden);
    l.b_o = Tensor::zeros({hidden});
    return l;
}
}  // namespace

MetaNetParams init_params(int hidden_size, uint64_t seed, int input_dim) {
    if (hidden_size < 1) throw ValueError("init_params: hidden_size must be >= 1");
    Rng rng(seed);
    double bound = 1.0 / std::sqrt(static_cast<double>(hidden_size));
    MetaNetParams p;
    p.hidden_size = hidden_size;
    p.input_dim = input_dim;
    p.layer1 = make_layer(input_dim, hidden_size, bound, rng);
    p.layer2 = make_layer(hidden_size, hidden_size, bound, rng);
    p.w_out = Tensor::zeros({hidden_size, 1});
    p.b_out = Tensor::zeros({1});
    return p;
}

MetaNetParams random_params(int hidden_size, uint64_t seed, int input_dim) {
    MetaNetParams p = init_params(hidden_size, seed, input_dim);
    Rng rng(mix_seed(seed, 0xabcdULL));
    double bound = 1.0 / std::sqrt(static_cast<double>(hidden_size));
    p.w_out = Tensor::rand_uniform({hidden_size, 1}, rng, -bound, bound);
    p.b_out = Tensor::rand_uniform({1}, rng, -bound, bound);
    for (Tensor* b : {&p.layer1.b_i, &p.layer1.b_g, &p.layer1.b_o, &p.layer2.b_i, &p.layer2.b_g,
                      &p.layer2.b_o})
        *b = Tensor::rand_uniform(b->shape(), rng, -bound, bound);
    return p;
}

std::pair<double, double> preprocess_gradient(double g, double p) {
    if (!(p > 0.0)) throw ValueError("preprocess_gradient: p must be positive");
    double ag = std::fabs(g);
    if (ag >= std::exp(-p)) {
        double sign = g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0);
        return {std::log(ag) / p, sign};
    }
    return {-1.0, std::exp(p) * g};
}

Tensor features_from_gradient(const Tensor& grad, double p) {
    int64_t n = grad.numel();
    Tensor f({n, 2});
    for (int64_t i = 0; i < n; ++i) {
        if (!std::isfinite(grad[i]))
            throw ValueError("non-finite gradient feature at coordinate " + std::to_string(i));
        auto [a, b] = preprocess_gradient(grad[i], p);
        f.at(i, 0) = a;
        f.at(i, 1) = b;
    }
    return f;
}

LstmState zero_state(int64_t n_coords, int hidden_size) {
    LstmState s;
    s.h1 = Tensor::zeros({n_coords, hidden_size});
    s.c1 = Tensor::zeros({n_coords, hidden_size});
    s.h2 = Tensor::zeros({n_coords, hidden_size});
    s.c2 = Tensor::zeros({n_coords, hidden_size});
    return s;
}

namespace {
LstmLayerNodes lift_layer(Tape& tape, const LstmLayerParams& l) {
    LstmLayerNodes n;
    n.wx_i = tape.leaf(l.wx_i);
    n.wh_i = tape.leaf(l.wh_i);
    n.b_i = tape.leaf(l.b_i);
    n.wx_f = tape.leaf(l.wx_f);
    n.wh_f = tape.leaf(l.wh_f);
    n.b_f = tape.leaf(l.b_f);
    n.wx_g = tape.leaf(l.wx_g);
    n.wh_g = tape.leaf(l.wh_g);
    n.b_g = tape.leaf(l.b_g);
    n.wx_o = tape.leaf(l.wx_o);
    n.wh_o = tape.leaf(l.wh_o);
    n.b_o = tape.leaf(l.b_o);
    return n;
}
}  // namespace

MetaNetNodes lift_params(Tape& tape, const MetaNetParams& p) {
    MetaNetNodes n;
    n.hidden_size = p.hidden_size;
    n.layer1 = lift_layer(tape, p.layer1);
    n.layer2 = lift_layer(tape, p.layer2);
    n.w_out = tape.leaf(p.w_out);
    n.b_out = tape.leaf(p.b_out);
    n.flat = {
        n.layer1.wx_i, n.layer1.wh_i, n.layer1.b_i, n.layer1.wx_f, n.layer1.wh_f, n.layer1.b_f,
        n.layer1.wx_g, n.layer1.wh_g, n.layer1.b_g, n.layer1.wx_o, n.layer1.wh_o, n.layer1.b_o,
        n.layer2.wx_i, n.layer2.wh_i, n.layer2.b_i, n.layer2.wx_f, n.layer2.wh_f, n.layer2.b_f,
        n.layer2.wx_g, n.layer2.wh_g, n.layer2.b_g, n.layer2.wx_o, n.layer2.wh_o, n.layer2.b_o,
        n.w_out,       n.b_out,
    };
    return n;
}

LstmStateNodes lift_state(Tape& tape, const LstmState& s) {
    LstmStateNodes n;
    n.h1 = tape.leaf(s.h1);
    n.c1 = tape.leaf(s.c1);
    n.h2 = tape.leaf(s.h2);
    n.c2 = tape.leaf(s.c2);
    return n;
}

namespace {
// pre-activation for one gate: x Wx + h Wh + b
NodeId gate_pre(Tape& t, NodeId x, NodeId h, NodeId wx, NodeId wh, NodeId b, int64_t n) {
    return t.add(t.add(t.matmul(x, wx), t.matmul(h, wh)), t.broadcast_row(b, n));
}

// standard cell: returns new (h, c)
std::pair<NodeId, NodeId> lstm_cell(Tape& t, NodeId x, NodeId h, NodeId c,
                                    const LstmLayerNodes& l, int64_t n) {
    NodeId i = t.sigmoid(gate_pre(t, x, h, l.wx_i, l.wh_i, l.b_i, n));
    NodeId f = t.sigmoid(gate_pre(t, x, h, l.wx_f, l.wh_f, l.b_f, n));
    NodeId g = t.tanh(gate_pre(t, x, h, l.wx_g, l.wh_g, l.b_g, n));
    NodeId o = t.sigmoid(gate_pre(t, x, h, l.wx_o, l.wh_o, l.b_o, n));
    NodeId c_new = t.add(t.mul(f, c), t.mul(i, g));
    NodeId h_new = t.mul(o, t.tanh(c_new));
    return {h_new, c_new};
}
}  // namespace

NodeId lstm_step(Tape& tape, const MetaNetNodes& net, NodeId features, LstmStateNodes& state,
                 double out_scale) {
    const Tensor& f = tape.value(features);
    if (f.rank() != 2 || f.shape()[1] != 2)
        throw ShapeError("lstm_step: features must be (n,2), got " + shape_str(f.shape()));
    for (int64_t i = 0; i < f.numel(); ++i)
        if (!std::isfinite(f[i]))
            throw ValueError("lstm_step: non-finite feature at coordinate " +
                             std::to_string(i / 2));
    int64_t n = f.shape()[0];
    if (tape.value(state.h1).shape()[0] != n)
        throw ShapeError("lstm_step: state tracks " +
                         std::to_string(tape.value(state.h1).shape()[0]) +
                         " coordinates, features have " + std::to_string(n));

    auto [h1, c1] = lstm_cell(tape, features, state.h1, state.c1, net.layer1, n);
    auto [h2, c2] = lstm_cell(tape, h1, state.h2, state.c2, net.layer2, n);
    state.h1 = h1;
    state.c1 = c1;
    state.h2 = h2;
    state.c2 = c2;
    NodeId raw = tape.add(tape.matmul(h2, net.w_out), tape.broadcast_row(net.b_out, n));
    return tape.scalar_mul(raw, out_scale);
}

std::pair<Tensor, LstmState> lstm_step_values(const MetaNetParams& p, const Tensor& features,
                                              const LstmState& state, double out_scale) {
    Tape tape;
    MetaNetNodes net = lift_params(tape, p);
    LstmStateNodes sn = lift_state(tape, state);
    NodeId upd = lstm_step(tape, net, tape.leaf(features), sn, out_scale);
    LstmState out;
    out.h1 = tape.value(sn.h1);
    out.c1 = tape.value(sn.c1);
    out.h2 = tape.value(sn.h2);
    out.c2 = tape.value(sn.c2);
    return {tape.value(upd), out};
}

MetaNetParams grads_from_map(const GradientMap& gm, const MetaNetNodes& nodes,
                             const MetaNetParams& like) {
    MetaNetParams g = like;  // copy for shapes
    auto dst = tensor_list(g);
    for (size_t i = 0; i < kMetaNetTensorCount; ++i) {
        NodeId id = nodes.flat[i];
        if (gm.contains(id))
            *dst[i] = gm.at(id);
        else
            *dst[i] = Tensor::zeros(dst[i]->shape());
    }
    return g;
}

}  // namespace mlam
