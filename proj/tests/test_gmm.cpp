#include <doctest.h>

#include <cmath>

#include "mlam/gmm.hpp"

using namespace mlam;

TEST_CASE("generator deterministic per seed") {
    auto a = GmmProblem::generate(3, 2, 50, 2.0, 5);
    auto b = GmmProblem::generate(3, 2, 50, 2.0, 5);
    CHECK(a.samples().bitwise_equal(b.samples()));
    auto c = GmmProblem::generate(3, 2, 50, 2.0, 6);
    CHECK_FALSE(a.samples().bitwise_equal(c.samples()));
}

TEST_CASE("single-component sample mean concentrates at the true mean") {
    const int64_t g = 10000;
    auto p = GmmProblem::generate(1, 3, g, 2.0, 17);
    for (int64_t d = 0; d < 3; ++d) {
        double mean = 0.0;
        for (int64_t s = 0; s < g; ++s) mean += p.samples().at(s, d);
        mean /= static_cast<double>(g);
        // sigma = 1, so a 3 sigma/sqrt(G) interval is 0.03
        CHECK(std::fabs(mean - p.true_mu().at(0, d)) < 3.0 / std::sqrt(static_cast<double>(g)));
    }
}

TEST_CASE("flower geometry: means on a circle, rotation-symmetric") {
    auto p = GmmProblem::flower(8, 100, 3);
    REQUIRE(p.k() == 8);
    double r0 = std::hypot(p.true_mu().at(0, 0), p.true_mu().at(0, 1));
    for (int c = 0; c < 8; ++c)
        CHECK(std::hypot(p.true_mu().at(c, 0), p.true_mu().at(c, 1)) ==
              doctest::Approx(r0).epsilon(1e-12));
    // rotation by 2*pi/8 maps the mean set onto itself
    double ang = 2.0 * M_PI / 8.0;
    for (int c = 0; c < 8; ++c) {
        double x = p.true_mu().at(c, 0) * std::cos(ang) - p.true_mu().at(c, 1) * std::sin(ang);
        double y = p.true_mu().at(c, 0) * std::sin(ang) + p.true_mu().at(c, 1) * std::cos(ang);
        double best = 1e9;
        for (int c2 = 0; c2 < 8; ++c2)
            best = std::min(best, std::hypot(x - p.true_mu().at(c2, 0),
                                             y - p.true_mu().at(c2, 1)));
        CHECK(best < 1e-9);
    }
}

TEST_CASE("flower covariance anisotropy ratio is exactly 10") {
    auto p = GmmProblem::flower(8, 10, 4);
    for (int c = 0; c < 8; ++c) {
        const Tensor& s = p.sigma(c);
        double tr = s.at(0, 0) + s.at(1, 1);
        double det = s.at(0, 0) * s.at(1, 1) - s.at(0, 1) * s.at(1, 0);
        double disc = std::sqrt(tr * tr / 4.0 - det);
        double l1 = tr / 2.0 + disc, l2 = tr / 2.0 - disc;
        CHECK(l1 / l2 == doctest::Approx(10.0).epsilon(1e-12));
    }
}

TEST_CASE("NLL closed form: one standard normal sample at its mean") {
    // N(x|mu,1) at x = mu is 1/sqrt(2 pi); NLL = 0.5 log(2 pi)
    Tensor sample({1, 1}, {0.7});
    auto p = GmmProblem::from_samples(sample, 1);
    MixtureParams params{Tensor::zeros({1, 1}), Tensor({1, 1}, {0.7})};
    CHECK(p.nll_value(params) == doctest::Approx(0.5 * std::log(2.0 * M_PI)).epsilon(1e-9));
}

TEST_CASE("duplicating every sample doubles the NLL") {
    Rng rng(21);
    Tensor x = Tensor::randn({6, 2}, rng);
    Tensor xx({12, 2});
    for (int64_t i = 0; i < 6; ++i)
        for (int64_t d = 0; d < 2; ++d) {
            xx.at(i, d) = x.at(i, d);
            xx.at(i + 6, d) = x.at(i, d);
        }
    auto p1 = GmmProblem::from_samples(x, 2);
    auto p2 = GmmProblem::from_samples(xx, 2);
    MixtureParams params{Tensor({2, 1}, {0.3, -0.3}), Tensor({2, 2}, {0.5, 0.1, -0.4, 0.2})};
    CHECK(p2.nll_value(params) == doctest::Approx(2.0 * p1.nll_value(params)).epsilon(1e-12));
}

TEST_CASE("identical components make the NLL independent of the logits") {
    Rng rng(23);
    Tensor x = Tensor::randn({8, 2}, rng);
    auto p = GmmProblem::from_samples(x, 2);
    Tensor mu({2, 2}, {0.2, -0.1, 0.2, -0.1});  // both components equal
    double a = p.nll_value({Tensor({2, 1}, {0.0, 0.0}), mu});
    double b = p.nll_value({Tensor({2, 1}, {2.0, -1.5}), mu});
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
}

TEST_CASE("softmax stays on the simplex") {
    Rng rng(29);
    for (int rep = 0; rep < 50; ++rep) {
        Tensor logits = Tensor::randn({5, 1}, rng, 0.0, 5.0);
        Tensor pi = softmax(logits);
        double s = 0.0;
        for (int64_t i = 0; i < pi.numel(); ++i) {
            CHECK(pi[i] > 0.0);
            s += pi[i];
        }
        CHECK(std::fabs(s - 1.0) <= 1e-15);
    }
}

TEST_CASE("NLL invariant under joint component permutation") {
    auto p = GmmProblem::generate(3, 2, 40, 2.0, 31);
    Rng rng(32);
    Tensor logits = Tensor::randn({3, 1}, rng);
    Tensor mu = Tensor::randn({3, 2}, rng);
    double base = p.nll_value({logits, mu});

    std::vector<int> perm{2, 0, 1};
    Tensor pl({3, 1});
    Tensor pm({3, 2});
    for (int c = 0; c < 3; ++c) {
        pl[c] = logits[perm[static_cast<size_t>(c)]];
        for (int64_t d = 0; d < 2; ++d) pm.at(c, d) = mu.at(perm[static_cast<size_t>(c)], d);
    }
    CHECK(p.nll_value({pl, pm}) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("responsibilities: single component and symmetric pair") {
    auto p1 = GmmProblem::from_samples(Tensor({3, 1}, {0.1, 0.5, -0.2}), 1);
    Tensor g1 = p1.responsibilities({Tensor::zeros({1, 1}), Tensor({1, 1}, {0.0})});
    for (int64_t i = 0; i < 3; ++i) CHECK(g1.at(i, 0) == doctest::Approx(1.0));

    // sample equidistant between two equal-weight components
    auto p2 = GmmProblem::from_samples(Tensor({1, 1}, {1.0}), 2);
    Tensor g2 = p2.responsibilities({Tensor::zeros({2, 1}), Tensor({2, 1}, {0.0, 2.0})});
    CHECK(g2.at(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(g2.at(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("responsibilities Bayes ratio hand case") {
    // pi = (.5,.5), mu = (0,2), sigma = 1, x = 0:
    // gamma_1 = 1 / (1 + exp(-2))
    auto p = GmmProblem::from_samples(Tensor({1, 1}, {0.0}), 2);
    Tensor gamma = p.responsibilities({Tensor::zeros({2, 1}), Tensor({2, 1}, {0.0, 2.0})});
    CHECK(gamma.at(0, 0) == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))).epsilon(1e-12));
}

TEST_CASE("responsibilities rows sum to one") {
    auto p = GmmProblem::generate(4, 3, 60, 2.5, 41);
    Rng rng(42);
    Tensor gamma = p.responsibilities(
        {Tensor::randn({4, 1}, rng), Tensor::randn({4, 3}, rng, 0.0, 2.0)});
    for (int64_t s = 0; s < 60; ++s) {
        double sum = 0.0;
        for (int c = 0; c < 4; ++c) sum += gamma.at(s, c);
        CHECK(std::fabs(sum - 1.0) <= 1e-12);
    }
}

TEST_CASE("metric equals per-sample NLL") {
    auto p = GmmProblem::generate(2, 2, 30, 2.0, 51);
    Rng rng(52);
    auto vars = p.init_variables(rng);
    MixtureParams params{vars.at("pi_logits"), vars.at("mu")};
    CHECK(p.metric(vars) ==
          doctest::Approx(p.nll_value(params) / 30.0).epsilon(1e-15));
}

TEST_CASE("init draws means from distinct samples") {
    auto p = GmmProblem::generate(3, 2, 20, 2.0, 61);
    Rng rng(62);
    auto vars = p.init_variables(rng);
    const Tensor& mu = vars.at("mu");
    // each mean equals some sample row
    for (int c = 0; c < 3; ++c) {
        bool found = false;
        for (int64_t s = 0; s < 20 && !found; ++s)
            found = mu.at(c, 0) == p.samples().at(s, 0) && mu.at(c, 1) == p.samples().at(s, 1);
        CHECK(found);
    }
    // logits start uniform
    for (int64_t i = 0; i < 3; ++i) CHECK(vars.at("pi_logits")[i] == 0.0);
}
