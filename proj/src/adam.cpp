#include "mlam/adam.hpp"

#include <cmath>

namespace mlam {

AdamState make_adam_state(const MetaNetParams& like, double beta1, double beta2, double eps) {
    AdamState s;
    s.m = like;
    s.v = like;
    for (Tensor* t : tensor_list(s.m)) *t = Tensor::zeros(t->shape());
    for (Tensor* t : tensor_list(s.v)) *t = Tensor::zeros(t->shape());
    s.beta1 = beta1;
    s.beta2 = beta2;
    s.eps = eps;
    return s;
}

bool adam_update(MetaNetParams& params, const MetaNetParams& grads, AdamState& state, double lr) {
    if (!params_all_finite(grads)) return false;

    state.t += 1;
    double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));

    auto tp = tensor_list(params);
    auto tg = tensor_list(grads);
    auto tm = tensor_list(state.m);
    auto tv = tensor_list(state.v);
    for (size_t k = 0; k < kMetaNetTensorCount; ++k) {
        Tensor& p = *tp[k];
        const Tensor& g = *tg[k];
        Tensor& m = *tm[k];
        Tensor& v = *tv[k];
        if (!p.same_shape(g))
            throw ShapeError("adam_update: gradient shape " + shape_str(g.shape()) +
                             " does not match parameter " + shape_str(p.shape()));
        for (int64_t i = 0; i < p.numel(); ++i) {
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
            double mhat = m[i] / bc1;
            double vhat = v[i] / bc2;
            p[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
    return true;
}

}  // namespace mlam
