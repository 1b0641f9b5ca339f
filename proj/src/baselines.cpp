#include "mlam/baselines.hpp"

#include <cmath>

#include "linalg.hpp"

namespace mlam {

void BaselineConfig::validate() const {
    if (max_iters < 1) throw ValueError("BaselineConfig: max_iters must be >= 1");
    if (!(lr >= 0.0)) throw ValueError("BaselineConfig: lr must be non-negative");
    if (!(tolerance > 0.0)) throw ValueError("BaselineConfig: tolerance must be positive");
}

namespace {

double mc_loss(const MatrixCompletionProblem& prob, const Tensor& u, const Tensor& v) {
    std::map<std::string, Tensor> vars{{"U", u}, {"V", v}};
    return prob.loss_value(vars);
}

// Exact ridge solve for every row of `out`: rows of `fixed` restricted to the
// observed entries of that row/column form the design matrix.
//   (F^T F + lambda I) x = F^T r
void ridge_rows(const MatrixCompletionProblem& prob, const Tensor& fixed, Tensor& out,
                bool solve_rows, double lambda, std::vector<std::string>& warnings) {
    const int64_t p = fixed.shape()[1];
    const int64_t n_out = out.shape()[0];
    std::vector<double> gram(static_cast<size_t>(p * p));
    std::vector<double> rhs(static_cast<size_t>(p));

    for (int64_t r = 0; r < n_out; ++r) {
        std::fill(gram.begin(), gram.end(), 0.0);
        std::fill(rhs.begin(), rhs.end(), 0.0);
        for (int64_t c = 0; c < (solve_rows ? prob.q() : prob.z()); ++c) {
            double m = solve_rows ? prob.mask().at(r, c) : prob.mask().at(c, r);
            if (m == 0.0) continue;
            double obs = solve_rows ? prob.observed().at(r, c) : prob.observed().at(c, r);
            for (int64_t i = 0; i < p; ++i) {
                double fi = fixed.at(c, i);
                rhs[static_cast<size_t>(i)] += fi * obs;
                for (int64_t j = 0; j < p; ++j)
                    gram[static_cast<size_t>(i * p + j)] += fi * fixed.at(c, j);
            }
        }
        for (int64_t i = 0; i < p; ++i) gram[static_cast<size_t>(i * p + i)] += lambda;
        bool jittered = false;
        if (!linalg::spd_solve(gram, p, rhs, &jittered)) {
            warnings.push_back("singular normal equations at row " + std::to_string(r) +
                               ", row left unchanged");
            continue;
        }
        if (jittered)
            warnings.push_back("added 1e-10 jitter to singular normal equations at row " +
                               std::to_string(r));
        for (int64_t i = 0; i < p; ++i) out.at(r, i) = rhs[static_cast<size_t>(i)];
    }
}

}  // namespace

FactorResult als_solve(const MatrixCompletionProblem& prob, const BaselineConfig& cfg) {
    cfg.validate();
    FactorResult res;
    Rng rng(mix_seed(cfg.seed, prob.seed()));
    res.u = Tensor::randn({prob.z(), prob.p()}, rng, 0.0, 0.1);
    res.v = Tensor::randn({prob.q(), prob.p()}, rng, 0.0, 0.1);
    res.loss_history.push_back(mc_loss(prob, res.u, res.v));
    res.metric_history.push_back(prob.rmse(res.u, res.v));

    for (int it = 0; it < cfg.max_iters; ++it) {
        ridge_rows(prob, res.v, res.u, true, prob.lambda(), res.warnings);
        ridge_rows(prob, res.u, res.v, false, prob.lambda(), res.warnings);
        double loss = mc_loss(prob, res.u, res.v);
        double prev = res.loss_history.back();
        res.loss_history.push_back(loss);
        res.metric_history.push_back(prob.rmse(res.u, res.v));
        if (std::fabs(prev - loss) < cfg.tolerance * std::max(1.0, std::fabs(prev))) break;
    }
    return res;
}

FactorResult sgd_solve(const MatrixCompletionProblem& prob, const BaselineConfig& cfg) {
    cfg.validate();
    FactorResult res;
    Rng rng(mix_seed(cfg.seed, prob.seed()));
    res.u = Tensor::randn({prob.z(), prob.p()}, rng, 0.0, 0.1);
    res.v = Tensor::randn({prob.q(), prob.p()}, rng, 0.0, 0.1);
    res.loss_history.push_back(mc_loss(prob, res.u, res.v));
    res.metric_history.push_back(prob.rmse(res.u, res.v));

    const int64_t p = prob.p();
    std::vector<size_t> order(prob.observed_entries().size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<double> u_old(static_cast<size_t>(p));

    for (int epoch = 0; epoch < cfg.max_iters; ++epoch) {
        rng.shuffle(order);
        for (size_t oi : order) {
            auto [i, j] = prob.observed_entries()[oi];
            double pred = 0.0;
            for (int64_t t = 0; t < p; ++t) pred += res.u.at(i, t) * res.v.at(j, t);
            double e = prob.observed().at(i, j) - pred;
            for (int64_t t = 0; t < p; ++t) u_old[static_cast<size_t>(t)] = res.u.at(i, t);
            for (int64_t t = 0; t < p; ++t)
                res.u.at(i, t) += cfg.lr * (e * res.v.at(j, t) - prob.lambda() * res.u.at(i, t));
            for (int64_t t = 0; t < p; ++t)
                res.v.at(j, t) +=
                    cfg.lr * (e * u_old[static_cast<size_t>(t)] - prob.lambda() * res.v.at(j, t));
        }
        double loss = mc_loss(prob, res.u, res.v);
        res.loss_history.push_back(loss);
        res.metric_history.push_back(prob.rmse(res.u, res.v));
        if (!std::isfinite(loss) || loss > 1e12) {
            res.aborted = true;
            res.warnings.push_back("sgd diverged at epoch " + std::to_string(epoch));
            break;
        }
    }
    return res;
}

EmResult em_fit(const GmmProblem& prob, const MixtureParams& init, const BaselineConfig& cfg) {
    cfg.validate();
    EmResult res;
    res.params = init;
    Rng rng(mix_seed(cfg.seed, prob.seed()));
    const int64_t g = prob.g();
    const int k = prob.k();
    const int d = prob.d();

    res.nll_history.push_back(prob.nll_value(res.params));
    res.metric_history.push_back(res.nll_history.back() / static_cast<double>(g));
    for (int it = 0; it < cfg.max_iters; ++it) {
        Tensor gamma = prob.responsibilities(res.params);

        Tensor mu = Tensor::zeros({k, d});
        std::vector<double> weight(static_cast<size_t>(k), 0.0);
        for (int64_t s = 0; s < g; ++s)
            for (int c = 0; c < k; ++c) {
                double w = gamma.at(s, c);
                weight[static_cast<size_t>(c)] += w;
                for (int64_t j = 0; j < d; ++j) mu.at(c, j) += w * prob.samples().at(s, j);
            }
        for (int c = 0; c < k; ++c) {
            if (weight[static_cast<size_t>(c)] < 1e-12) {
                // empty component: restart its mean at a random sample
                int64_t pick = static_cast<int64_t>(rng.below(static_cast<uint64_t>(g)));
                for (int64_t j = 0; j < d; ++j) mu.at(c, j) = prob.samples().at(pick, j);
                weight[static_cast<size_t>(c)] = 1.0 / static_cast<double>(g);
                res.events.push_back("reinitialized empty component " + std::to_string(c) +
                                     " at iteration " + std::to_string(it));
                continue;
            }
            for (int64_t j = 0; j < d; ++j) mu.at(c, j) /= weight[static_cast<size_t>(c)];
        }
        for (int c = 0; c < k; ++c)
            res.params.logits[c] =
                std::log(std::max(weight[static_cast<size_t>(c)] / static_cast<double>(g), 1e-300));
        res.params.mu = std::move(mu);

        double nll = prob.nll_value(res.params);
        double prev = res.nll_history.back();
        res.nll_history.push_back(nll);
        res.metric_history.push_back(nll / static_cast<double>(g));
        if (std::fabs(prev - nll) < cfg.tolerance) break;
    }
    return res;
}

}  // namespace mlam
