#include "mlam/gmm.hpp"

#include <cmath>

#include "linalg.hpp"

namespace mlam {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;  // log(2*pi)
}

Tensor softmax(const Tensor& logits) {
    Tensor out(logits.shape());
    double m = logits[0];
    for (int64_t i = 1; i < logits.numel(); ++i) m = std::max(m, logits[i]);
    double s = 0.0;
    for (int64_t i = 0; i < logits.numel(); ++i) {
        out[i] = std::exp(logits[i] - m);
        s += out[i];
    }
    for (int64_t i = 0; i < out.numel(); ++i) out[i] /= s;
    return out;
}

void GmmProblem::set_covariances(std::vector<Tensor> sigma) {
    sigma_ = std::move(sigma);
    sigma_inv_.clear();
    sigma_chol_.clear();
    log_det_.clear();
    for (const Tensor& s : sigma_) {
        int64_t n = s.shape()[0];
        std::vector<double> l = s.vec();
        if (!linalg::cholesky(l, n))
            throw ValueError("GmmProblem: covariance is not positive definite");
        double logdet = 0.0;
        for (int64_t i = 0; i < n; ++i) logdet += 2.0 * std::log(l[static_cast<size_t>(i * n + i)]);
        log_det_.push_back(logdet);
        sigma_chol_.push_back(Tensor({n, n}, l));
        // inverse via n solves against identity columns
        Tensor inv({n, n});
        for (int64_t c = 0; c < n; ++c) {
            std::vector<double> x(static_cast<size_t>(n), 0.0);
            x[static_cast<size_t>(c)] = 1.0;
            linalg::cholesky_solve(l, n, x);
            for (int64_t r = 0; r < n; ++r) inv.at(r, c) = x[static_cast<size_t>(r)];
        }
        sigma_inv_.push_back(std::move(inv));
    }
}

void GmmProblem::sample_points(Rng& rng) {
    samples_ = Tensor({g_, d_});
    std::vector<double> noise(static_cast<size_t>(d_));
    for (int64_t s = 0; s < g_; ++s) {
        // ancestral sampling: component then point
        double u = rng.uniform();
        int comp = 0;
        double acc = 0.0;
        for (int c = 0; c < k_; ++c) {
            acc += true_pi_[static_cast<size_t>(c)];
            if (u < acc || c == k_ - 1) {
                comp = c;
                break;
            }
        }
        for (auto& x : noise) x = rng.normal();
        const Tensor& l = sigma_chol_[static_cast<size_t>(comp)];
        for (int64_t r = 0; r < d_; ++r) {
            double v = true_mu_.at(comp, r);
            for (int64_t c = 0; c <= r; ++c) v += l.at(r, c) * noise[static_cast<size_t>(c)];
            samples_.at(s, r) = v;
        }
    }
}

GmmProblem GmmProblem::generate(int k, int d, int64_t g, double separation, uint64_t seed) {
    if (k < 1 || d < 1 || g < k) throw ValueError("generate_gmm: need G >= K >= 1 and D >= 1");
    if (!(separation > 0.0)) throw ValueError("generate_gmm: separation must be positive");
    GmmProblem prob;
    prob.k_ = k;
    prob.d_ = d;
    prob.g_ = g;
    prob.seed_ = seed;
    Rng rng(seed);
    prob.true_mu_ = Tensor::randn({k, d}, rng, 0.0, separation);
    prob.true_pi_.assign(static_cast<size_t>(k), 1.0 / k);
    std::vector<Tensor> sigma;
    for (int c = 0; c < k; ++c) {
        Tensor s = Tensor::zeros({d, d});
        for (int64_t i = 0; i < d; ++i) s.at(i, i) = 1.0;
        sigma.push_back(std::move(s));
    }
    prob.set_covariances(std::move(sigma));
    prob.sample_points(rng);
    return prob;
}

GmmProblem GmmProblem::flower(int petals, int64_t g, uint64_t seed) {
    if (petals < 2) throw ValueError("generate_flower: need at least 2 petals");
    constexpr double kRadius = 5.0;
    constexpr double kRadialVar = 1.0;
    constexpr double kTangentialVar = 0.1;  // 10:1 anisotropy
    GmmProblem prob;
    prob.k_ = petals;
    prob.d_ = 2;
    prob.g_ = g;
    prob.seed_ = seed;
    prob.true_mu_ = Tensor({petals, 2});
    prob.true_pi_.assign(static_cast<size_t>(petals), 1.0 / petals);
    std::vector<Tensor> sigma;
    for (int c = 0; c < petals; ++c) {
        double ang = 2.0 * M_PI * c / petals;
        double cs = std::cos(ang), sn = std::sin(ang);
        prob.true_mu_.at(c, 0) = kRadius * cs;
        prob.true_mu_.at(c, 1) = kRadius * sn;
        // R diag(radial, tangential) R^T with R = [cs -sn; sn cs]
        Tensor s({2, 2});
        s.at(0, 0) = kRadialVar * cs * cs + kTangentialVar * sn * sn;
        s.at(0, 1) = (kRadialVar - kTangentialVar) * cs * sn;
        s.at(1, 0) = s.at(0, 1);
        s.at(1, 1) = kRadialVar * sn * sn + kTangentialVar * cs * cs;
        sigma.push_back(std::move(s));
    }
    prob.set_covariances(std::move(sigma));
    Rng rng(seed);
    prob.sample_points(rng);
    return prob;
}

GmmProblem GmmProblem::from_samples(Tensor samples, int k, std::vector<Tensor> sigma,
                                    uint64_t seed) {
    if (samples.rank() != 2) throw ShapeError("from_samples: samples must be (G,D)");
    GmmProblem prob;
    prob.g_ = samples.shape()[0];
    prob.d_ = static_cast<int>(samples.shape()[1]);
    prob.k_ = k;
    prob.seed_ = seed;
    if (k < 1 || prob.g_ < 1) throw ValueError("from_samples: need K >= 1 and G >= 1");
    prob.samples_ = std::move(samples);
    prob.true_pi_.assign(static_cast<size_t>(k), 1.0 / k);
    prob.true_mu_ = Tensor::zeros({k, prob.d_});
    if (sigma.empty()) {
        for (int c = 0; c < k; ++c) {
            Tensor s = Tensor::zeros({prob.d_, prob.d_});
            for (int64_t i = 0; i < prob.d_; ++i) s.at(i, i) = 1.0;
            sigma.push_back(std::move(s));
        }
    }
    prob.set_covariances(std::move(sigma));
    return prob;
}

std::vector<VariableSpec> GmmProblem::variables() const {
    return {{"pi_logits", {k_, 1}}, {"mu", {k_, d_}}};
}

std::map<std::string, Tensor> GmmProblem::init_variables(Rng& rng) const {
    if (g_ < k_) throw ValueError("init_variables: needs at least K samples");
    // K distinct sample indices, partial Fisher-Yates
    std::vector<int64_t> idx(static_cast<size_t>(g_));
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int64_t>(i);
    for (int c = 0; c < k_; ++c) {
        size_t j = static_cast<size_t>(c) + static_cast<size_t>(rng.below(
                                              static_cast<uint64_t>(g_ - c)));
        std::swap(idx[static_cast<size_t>(c)], idx[j]);
    }
    Tensor mu({k_, d_});
    for (int c = 0; c < k_; ++c)
        for (int64_t j = 0; j < d_; ++j) mu.at(c, j) = samples_.at(idx[static_cast<size_t>(c)], j);
    std::map<std::string, Tensor> out;
    out["pi_logits"] = Tensor::zeros({k_, 1});
    out["mu"] = std::move(mu);
    return out;
}

NodeId GmmProblem::nll_node(Tape& tape, NodeId logits, NodeId mu) const {
    const Tensor& tl = tape.value(logits);
    const Tensor& tm = tape.value(mu);
    if (tl.shape() != Shape{k_, 1})
        throw ShapeError("gmm_nll: logits shape " + shape_str(tl.shape()) + ", expected (" +
                         std::to_string(k_) + ",1)");
    if (tm.shape() != Shape{k_, d_})
        throw ShapeError("gmm_nll: mu shape " + shape_str(tm.shape()) + ", expected (" +
                         std::to_string(k_) + "," + std::to_string(d_) + ")");
    if (!samples_.all_finite()) throw ValueError("gmm_nll: non-finite sample");

    NodeId x = tape.leaf(samples_);

    // log softmax of the logits: logits - c - log sum exp(logits - c)
    double logit_max = tl[0];
    for (int64_t i = 1; i < tl.numel(); ++i) logit_max = std::max(logit_max, tl[i]);
    NodeId shifted = tape.sub(logits, tape.leaf(Tensor::full({k_, 1}, logit_max)));
    NodeId log_norm = tape.log(tape.sum(tape.exp(shifted)));  // (1)
    NodeId log_pi = tape.sub(shifted, tape.broadcast_row(log_norm, k_));  // (K,1)

    // per-component column of log(pi_k) + log N(x_g | mu_k, Sigma_k)
    std::vector<NodeId> columns;
    for (int c = 0; c < k_; ++c) {
        Tensor row_mask = Tensor::zeros({k_, d_});
        for (int64_t j = 0; j < d_; ++j) row_mask.at(c, j) = 1.0;
        NodeId mu_k = tape.masked_select(mu, row_mask);              // (D)
        NodeId diff = tape.sub(x, tape.broadcast_row(mu_k, g_));     // (G,D)
        NodeId quad = tape.matmul(tape.mul(tape.matmul(diff, tape.leaf(sigma_inv_[c])), diff),
                                  tape.leaf(Tensor::ones({d_, 1})));  // (G,1)
        double log_const = -0.5 * (d_ * kLog2Pi + log_det_[static_cast<size_t>(c)]);
        NodeId log_density = tape.add(tape.scalar_mul(quad, -0.5),
                                      tape.leaf(Tensor::full({g_, 1}, log_const)));
        Tensor pick = Tensor::zeros({k_, 1});
        pick[c] = 1.0;
        NodeId w = tape.masked_select(log_pi, pick);  // (1)
        columns.push_back(tape.add(log_density, tape.broadcast_row(w, g_)));
    }
    NodeId weighted = tape.concat(columns, 1);  // (G,K)

    // shifted log-sum-exp with the eps floor folded in:
    //   log(S_g + eps) = c_g + log(sum_k exp(a_gk - c_g) + eps*exp(-c_g)),
    // with c_g = max(max_k a_gk, log eps) so neither term can overflow
    const Tensor& a = tape.value(weighted);
    const double log_eps = std::log(kLogFloor);
    Tensor shift({g_, k_});
    Tensor eps_term({g_, 1});
    double shift_total = 0.0;
    for (int64_t s = 0; s < g_; ++s) {
        double m = a.at(s, 0);
        for (int c = 1; c < k_; ++c) m = std::max(m, a.at(s, c));
        m = std::max(m, log_eps);
        for (int c = 0; c < k_; ++c) shift.at(s, c) = m;
        eps_term[s] = kLogFloor * std::exp(-m);
        shift_total += m;
    }
    NodeId sum_exp = tape.matmul(tape.exp(tape.sub(weighted, tape.leaf(shift))),
                                 tape.leaf(Tensor::ones({k_, 1})));  // (G,1)
    NodeId log_mix = tape.log(tape.add(sum_exp, tape.leaf(eps_term)));
    NodeId total = tape.add(tape.sum(log_mix), tape.leaf(Tensor::scalar(shift_total)));
    return tape.scalar_mul(total, -1.0);
}

NodeId GmmProblem::global_loss(Tape& tape, const std::map<std::string, NodeId>& vars) const {
    return nll_node(tape, vars.at("pi_logits"), vars.at("mu"));
}

double GmmProblem::nll_value(const MixtureParams& params) const {
    Tape tape;
    return tape.value(nll_node(tape, tape.leaf(params.logits), tape.leaf(params.mu))).item();
}

double GmmProblem::metric(const std::map<std::string, Tensor>& vars) const {
    MixtureParams p{vars.at("pi_logits"), vars.at("mu")};
    return nll_value(p) / static_cast<double>(g_);
}

Tensor GmmProblem::responsibilities(const MixtureParams& params) const {
    Tensor log_pi = params.logits;
    {
        Tensor pi = softmax(params.logits);
        for (int64_t i = 0; i < pi.numel(); ++i) log_pi[i] = std::log(pi[i]);
    }
    Tensor gamma({g_, k_});
    std::vector<double> lw(static_cast<size_t>(k_));
    for (int64_t s = 0; s < g_; ++s) {
        for (int c = 0; c < k_; ++c) {
            double quad = 0.0;
            for (int64_t i = 0; i < d_; ++i) {
                double acc = 0.0;
                for (int64_t j = 0; j < d_; ++j)
                    acc += (samples_.at(s, j) - params.mu.at(c, j)) *
                           sigma_inv_[static_cast<size_t>(c)].at(j, i);
                quad += acc * (samples_.at(s, i) - params.mu.at(c, i));
            }
            lw[static_cast<size_t>(c)] =
                log_pi[c] - 0.5 * (quad + d_ * kLog2Pi + log_det_[static_cast<size_t>(c)]);
        }
        double m = lw[0];
        for (int c = 1; c < k_; ++c) m = std::max(m, lw[static_cast<size_t>(c)]);
        if (!std::isfinite(m))
            throw ValueError("responsibilities: underflow across all components at sample " +
                             std::to_string(s));
        double denom = 0.0;
        for (int c = 0; c < k_; ++c) denom += std::exp(lw[static_cast<size_t>(c)] - m);
        for (int c = 0; c < k_; ++c)
            gamma.at(s, c) = std::exp(lw[static_cast<size_t>(c)] - m) / denom;
    }
    return gamma;
}

}  // namespace mlam
