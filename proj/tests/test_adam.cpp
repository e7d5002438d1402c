#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "lmsc/adam.hpp"
#include "oracles.hpp"

using namespace lmsc;

namespace {
std::vector<Parameter> one_scalar(scalar value) {
    Tensor t = Tensor::from_data({1}, {value});
    t.set_trainable();
    return {Parameter{"p", t}};
}
} // namespace

TEST_CASE("zero gradient leaves parameters unchanged") {
    auto params = one_scalar(scalar(0.7));
    params[0].value.zero_grad();
    AdamState st = AdamState::init(params);
    adam_step(params, st, scalar(0.1));
    CHECK(params[0].value.data()[0] == scalar(0.7));
    CHECK(st.step == 1);
}

TEST_CASE("first step with unit gradient moves by almost exactly lr") {
    auto params = one_scalar(scalar(1.0));
    params[0].value.zero_grad();
    params[0].value.grad()[0] = scalar(1.0);
    AdamState st = AdamState::init(params);
    adam_step(params, st, scalar(0.1));
    // Bias-corrected m-hat = v-hat = 1, so the update is lr / (1 + eps).
    const double expect = 1.0 - 0.1 / (1.0 + 1e-8);
    CHECK(std::abs(double(params[0].value.data()[0]) - expect) < 1e-12);
}

TEST_CASE("two identical steps match an independent scalar recurrence") {
    const double g = 0.37, lr = 0.05, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    auto params = one_scalar(scalar(2.0));
    AdamState st = AdamState::init(params, scalar(b1), scalar(b2), scalar(eps));

    double p = 2.0, m = 0.0, v = 0.0;
    for (int t = 1; t <= 2; ++t) {
        params[0].value.zero_grad();
        params[0].value.grad()[0] = scalar(g);
        adam_step(params, st, scalar(lr));

        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        const double mh = m / (1 - std::pow(b1, t));
        const double vh = v / (1 - std::pow(b2, t));
        p -= lr * mh / (std::sqrt(vh) + eps);
        CHECK(std::abs(double(params[0].value.data()[0]) - p) < 1e-12);
    }
    CHECK(st.step == 2);
}

TEST_CASE("moment buffers track parameter shapes") {
    std::mt19937_64 rng(5);
    Tensor t = oracle::random_tensor({3, 4}, rng);
    t.set_trainable();
    std::vector<Parameter> params = {Parameter{"w", t}};
    AdamState st = AdamState::init(params);
    REQUIRE(st.m.size() == 1);
    CHECK(st.m[0].size() == 12);
    CHECK(st.v[0].size() == 12);
}
