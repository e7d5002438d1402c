#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "lmsc/ops.hpp"
#include "oracles.hpp"

using namespace lmsc;

namespace {
constexpr double kTol = 1e-4; // finite-difference comparison, 64-bit, h = 1e-5

Tensor trainable_random(std::vector<std::int64_t> shape, std::mt19937_64& rng) {
    Tensor t = oracle::random_tensor(std::move(shape), rng);
    t.set_trainable();
    return t;
}
} // namespace

TEST_CASE("backward of sum gives unit gradients") {
    std::mt19937_64 rng(1);
    Tensor x = trainable_random({3, 5}, rng);
    backward(sum(x));
    for (auto g : x.grad()) CHECK(g == 1.0);
}

TEST_CASE("backward rejects non-scalar roots") {
    Tensor x = Tensor::zeros({2, 2});
    x.set_trainable();
    CHECK_THROWS_AS(backward(relu(x)), ShapeError);
}

TEST_CASE("leaf gradients accumulate across backward calls") {
    std::mt19937_64 rng(2);
    Tensor x = trainable_random({7}, rng);
    Tensor loss = sum(relu(x));
    backward(loss);
    const auto once = x.grad();
    backward(loss);
    for (std::size_t i = 0; i < once.size(); ++i) CHECK(x.grad()[i] == 2.0 * once[i]);
}

TEST_CASE("gradient mass doubles when a leaf feeds two graph paths") {
    std::mt19937_64 rng(3);
    Tensor x = trainable_random({4}, rng);
    backward(sum(add(x, x)));
    for (auto g : x.grad()) CHECK(g == doctest::Approx(2.0));
}

TEST_CASE("finite differences: relu(conv2d) wrt input, weight and bias") {
    std::mt19937_64 rng(10);
    Tensor x = trainable_random({1, 2, 5, 5}, rng);
    Tensor w = trainable_random({3, 2, 3, 3}, rng);
    Tensor b = trainable_random({3}, rng);
    auto r = oracle::check_gradients(
        [&] { return sum(relu(conv2d(x, w, b, 1, 1, 1))); }, {x, w, b});
    CHECK(r.max_rel_err < kTol);
    CHECK(r.checked <= 200 + 54 + 3);
}

TEST_CASE("finite differences: strided dilated conv2d") {
    std::mt19937_64 rng(11);
    Tensor x = trainable_random({1, 2, 8, 8}, rng);
    Tensor w = trainable_random({2, 2, 3, 3}, rng);
    Tensor b = trainable_random({2}, rng);
    auto r = oracle::check_gradients(
        [&] { return sum(conv2d(x, w, b, 2, 1, 2)); }, {x, w, b});
    CHECK(r.max_rel_err < kTol);
}

TEST_CASE("finite differences: conv3d") {
    std::mt19937_64 rng(12);
    Tensor x = trainable_random({1, 2, 3, 4, 4}, rng);
    Tensor w = trainable_random({2, 2, 3, 3, 3}, rng);
    Tensor b = trainable_random({2}, rng);
    auto r = oracle::check_gradients(
        [&] { return sum(relu(conv3d(x, w, b, 1, 1, 1))); }, {x, w, b});
    CHECK(r.max_rel_err < kTol);
}

TEST_CASE("finite differences: dilated conv3d") {
    std::mt19937_64 rng(13);
    Tensor x = trainable_random({1, 1, 5, 5, 5}, rng);
    Tensor w = trainable_random({1, 1, 3, 3, 3}, rng);
    Tensor b = trainable_random({1}, rng);
    auto r = oracle::check_gradients(
        [&] { return sum(conv3d(x, w, b, 1, 2, 2)); }, {x, w, b});
    CHECK(r.max_rel_err < kTol);
}

TEST_CASE("finite differences: conv_transpose2d") {
    std::mt19937_64 rng(14);
    Tensor x = trainable_random({1, 2, 3, 3}, rng);
    Tensor w = trainable_random({2, 3, 2, 2}, rng);
    Tensor b = trainable_random({3}, rng);
    for (int stride : {1, 2}) {
        auto r = oracle::check_gradients(
            [&] { return sum(relu(conv_transpose2d(x, w, b, stride))); }, {x, w, b});
        CHECK(r.max_rel_err < kTol);
    }
}

TEST_CASE("finite differences: maxpool2d over a conv") {
    std::mt19937_64 rng(15);
    Tensor x = trainable_random({1, 1, 6, 6}, rng);
    Tensor w = trainable_random({2, 1, 3, 3}, rng);
    Tensor b = trainable_random({2}, rng);
    auto r = oracle::check_gradients(
        [&] { return sum(maxpool2d(conv2d(x, w, b, 1, 1, 1), 2, 2)); }, {x, w, b});
    CHECK(r.max_rel_err < kTol);
}

TEST_CASE("finite differences: concat of two branches") {
    std::mt19937_64 rng(16);
    Tensor a = trainable_random({1, 2, 3, 3}, rng);
    Tensor b = trainable_random({1, 3, 3, 3}, rng);
    auto r = oracle::check_gradients(
        [&] { return sum(relu(concat({a, b}, 1))); }, {a, b});
    CHECK(r.max_rel_err < kTol);
}

TEST_CASE("finite differences: nearest upsample") {
    std::mt19937_64 rng(17);
    Tensor x = trainable_random({1, 2, 3, 3}, rng);
    auto r = oracle::check_gradients(
        [&] { return sum(relu(nearest_upsample2d(x, 2))); }, {x});
    CHECK(r.max_rel_err < kTol);
}

TEST_CASE("finite differences: reshape and permute pass gradients through") {
    std::mt19937_64 rng(18);
    Tensor x = trainable_random({2, 3, 4}, rng);
    auto r1 = oracle::check_gradients(
        [&] { return sum(relu(reshape(x, {6, 4}))); }, {x});
    CHECK(r1.max_rel_err < kTol);
    auto r2 = oracle::check_gradients(
        [&] { return sum(relu(permute(x, {2, 0, 1}))); }, {x});
    CHECK(r2.max_rel_err < kTol);
}

TEST_CASE("finite differences: add and scale") {
    std::mt19937_64 rng(19);
    Tensor a = trainable_random({5}, rng);
    Tensor b = trainable_random({5}, rng);
    auto r = oracle::check_gradients(
        [&] { return sum(relu(scale(add(a, b), scalar(1.5)))); }, {a, b});
    CHECK(r.max_rel_err < kTol);
}

TEST_CASE("finite differences: weighted masked cross entropy") {
    std::mt19937_64 rng(20);
    Tensor logits = trainable_random({1, 4, 9}, rng);
    std::vector<std::uint16_t> labels = {0, 1, 2, 3, 0, 1, 2, 3, 0};
    std::vector<scalar> w = {0.5, 1.0, 1.5, 2.0};
    std::vector<std::uint8_t> mask = {1, 1, 0, 1, 1, 1, 0, 1, 1};
    auto r = oracle::check_gradients(
        [&] { return weighted_masked_cross_entropy(logits, labels, w, mask); }, {logits});
    CHECK(r.max_rel_err < kTol);
}

TEST_CASE("permute applies the declared index map") {
    Tensor x = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
    Tensor y = permute(x, {1, 0});
    REQUIRE(y.shape() == std::vector<std::int64_t>({3, 2}));
    CHECK(y.data()[0] == 1);
    CHECK(y.data()[1] == 4);
    CHECK(y.data()[2] == 2);
    CHECK(y.data()[3] == 5);
    CHECK(y.data()[4] == 3);
    CHECK(y.data()[5] == 6);
}
