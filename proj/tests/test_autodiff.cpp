#include <doctest.h>

#include "gradcheck_support.hpp"
#include "mlam/grad_check.hpp"
#include "mlam/tape.hpp"

using namespace mlam;

TEST_CASE("matmul shape algebra") {
    Tape t;
    Rng rng(1);
    NodeId a = t.leaf(Tensor::randn({2, 3}, rng));
    NodeId b = t.leaf(Tensor::randn({3, 4}, rng));
    CHECK(t.value(t.matmul(a, b)).shape() == Shape{2, 4});
    NodeId bad = t.leaf(Tensor::randn({2, 2}, rng));
    CHECK_THROWS_AS(t.matmul(a, bad), ShapeError);
}

TEST_CASE("log rejects non-positive input") {
    Tape t;
    NodeId a = t.leaf(Tensor({2}, {1.0, 0.0}));
    CHECK_THROWS_WITH_AS(t.log(a), doctest::Contains("non-positive log argument"), ValueError);
}

TEST_CASE("sum of known matrix") {
    Tape t;
    NodeId a = t.leaf(Tensor({2, 2}, {1, 2, 3, 4}));
    CHECK(t.value(t.sum(a)).item() == 10.0);
}

TEST_CASE("product rule on scalars") {
    Tape t;
    NodeId x = t.leaf(Tensor::scalar(2.0));
    NodeId y = t.leaf(Tensor::scalar(3.0));
    GradientMap gm = t.backward(t.mul(x, y));
    CHECK(gm.at(x).item() == 3.0);
    CHECK(gm.at(y).item() == 2.0);
}

TEST_CASE("gradient of sum of squares") {
    Tape t;
    NodeId x = t.leaf(Tensor({1, 2}, {1.0, 2.0}));
    GradientMap gm = t.backward(t.sum(t.square(x)));
    CHECK(gm.at(x)[0] == 2.0);
    CHECK(gm.at(x)[1] == 4.0);
}

TEST_CASE("backward rejects non-scalar loss") {
    Tape t;
    Rng rng(2);
    NodeId x = t.leaf(Tensor::randn({2, 2}, rng));
    CHECK_THROWS_AS(t.backward(x), ShapeError);
}

TEST_CASE("gradient accumulation equals duplicated-leaf graph") {
    Rng rng(3);
    Tensor xv = Tensor::randn({3, 3}, rng);
    // y = sum(x * x) with the same node used twice
    Tape t1;
    NodeId x1 = t1.leaf(xv);
    GradientMap g1 = t1.backward(t1.sum(t1.mul(x1, x1)));
    // same function with two leaves holding the same value
    Tape t2;
    NodeId xa = t2.leaf(xv);
    NodeId xb = t2.leaf(xv);
    GradientMap g2 = t2.backward(t2.sum(t2.mul(xa, xb)));
    for (int64_t i = 0; i < xv.numel(); ++i)
        CHECK(g1.at(x1)[i] == doctest::Approx(g2.at(xa)[i] + g2.at(xb)[i]).epsilon(1e-14));
}

TEST_CASE("detach: value identical, gradient cut") {
    Tape t;
    Rng rng(4);
    Tensor xv = Tensor::randn({2, 2}, rng);
    NodeId x = t.leaf(xv);
    NodeId d = t.detach(x);
    CHECK(t.value(d).bitwise_equal(xv));
    CHECK(t.node(d).parents.empty());

    GradientMap gm = t.backward(t.sum(t.square(d)));
    CHECK(gm.contains(d));
    CHECK_FALSE(gm.contains(x));
}

TEST_CASE("tape replay determinism") {
    Rng rng(5);
    Tensor a = Tensor::randn({4, 4}, rng);
    Tensor b = Tensor::randn({4, 4}, rng);
    auto run = [&]() {
        Tape t;
        NodeId x = t.leaf(a), y = t.leaf(b);
        NodeId loss = t.sum(t.mul(t.sigmoid(t.matmul(x, y)), t.tanh(x)));
        GradientMap gm = t.backward(loss);
        return std::pair{t.value(loss).item(), gm.at(x)};
    };
    auto [l1, g1] = run();
    auto [l2, g2] = run();
    CHECK(l1 == l2);
    CHECK(g1.bitwise_equal(g2));
}

TEST_CASE("finite difference oracle on known functions") {
    auto sq = [](const Tensor& x) { return x.item() * x.item(); };
    Tensor x0 = Tensor::scalar(3.0);
    CHECK(finite_difference_gradient(sq, x0, 1e-5).item() == doctest::Approx(6.0).epsilon(1e-8));

    auto lsum = [](const Tensor& x) { return x.sum(); };
    Rng rng(6);
    Tensor v = Tensor::randn({5}, rng);
    Tensor g = finite_difference_gradient(lsum, v, 1e-5);
    for (int64_t i = 0; i < g.numel(); ++i) CHECK(g[i] == doctest::Approx(1.0).epsilon(1e-9));

    CHECK_THROWS_AS(finite_difference_gradient(sq, x0, 0.0), ValueError);
}

TEST_CASE("every op kind matches finite differences") {
    Rng rng(7);
    for (const std::string& kind : test::fd_op_kinds()) {
        CAPTURE(kind);
        int misses = 0;
        for (int i = 0; i < 20; ++i)
            misses += test::fd_mismatches(test::make_op_case(kind, rng));
        CHECK(misses == 0);
    }
}

TEST_CASE("random small graphs match finite differences") {
    Rng rng(8);
    for (int rep = 0; rep < 20; ++rep) {
        // five-node graph: matmul -> sigmoid -> mul -> sum
        test::FdCase c;
        c.inputs = {Tensor::randn({3, 3}, rng), Tensor::randn({3, 3}, rng)};
        c.check_inputs = {0, 1};
        c.build = [](Tape& t, const std::vector<NodeId>& ids) {
            return t.sum(t.mul(t.sigmoid(t.matmul(ids[0], ids[1])), ids[0]));
        };
        CHECK(test::fd_mismatches(c) == 0);
    }
}

TEST_CASE("completion and mixture losses match finite differences") {
    Rng rng(9);
    for (int rep = 0; rep < 10; ++rep) {
        CHECK(test::fd_mismatches(test::make_mc_loss_case(rng)) == 0);
        CHECK(test::fd_mismatches(test::make_gmm_loss_case(rng)) == 0);
    }
}

TEST_CASE("masked select gathers row-major") {
    Tape t;
    NodeId a = t.leaf(Tensor({2, 2}, {1, 2, 3, 4}));
    Tensor mask({2, 2}, {1, 0, 0, 1});
    NodeId s = t.masked_select(a, mask);
    CHECK(t.value(s).shape() == Shape{2});
    CHECK(t.value(s)[0] == 1.0);
    CHECK(t.value(s)[1] == 4.0);
}

TEST_CASE("broadcast row repeats and sums back") {
    Tape t;
    NodeId a = t.leaf(Tensor({3}, {1, 2, 3}));
    NodeId b = t.broadcast_row(a, 4);
    CHECK(t.value(b).shape() == Shape{4, 3});
    CHECK(t.value(b).at(2, 1) == 2.0);
    GradientMap gm = t.backward(t.sum(b));
    for (int64_t i = 0; i < 3; ++i) CHECK(gm.at(a)[i] == 4.0);
}
