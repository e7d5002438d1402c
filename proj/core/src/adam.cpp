#include "lmsc/adam.hpp"

#include <cmath>

namespace lmsc {

AdamState AdamState::init(const std::vector<Parameter>& params,
                          scalar beta1, scalar beta2, scalar eps) {
    AdamState s;
    s.beta1 = beta1;
    s.beta2 = beta2;
    s.eps = eps;
    s.m.reserve(params.size());
    s.v.reserve(params.size());
    for (const auto& p : params) {
        s.m.emplace_back(p.value.data().size(), scalar(0));
        s.v.emplace_back(p.value.data().size(), scalar(0));
    }
    return s;
}

void adam_step(std::vector<Parameter>& params, AdamState& state, scalar lr) {
    if (state.m.size() != params.size() || state.v.size() != params.size())
        throw ShapeError("adam_step: state/parameter count mismatch");
    state.step += 1;
    const accum bc1 = 1.0 - std::pow(static_cast<accum>(state.beta1), static_cast<accum>(state.step));
    const accum bc2 = 1.0 - std::pow(static_cast<accum>(state.beta2), static_cast<accum>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i].value;
        if (state.m[i].size() != p.data().size())
            throw ShapeError("adam_step: moment shape mismatch for " + params[i].name);
        p.impl()->ensure_grad();
        auto& g = p.grad();
        auto& m = state.m[i];
        auto& v = state.v[i];
        for (std::size_t j = 0; j < g.size(); ++j) {
            m[j] = state.beta1 * m[j] + (scalar(1) - state.beta1) * g[j];
            v[j] = state.beta2 * v[j] + (scalar(1) - state.beta2) * g[j] * g[j];
            const accum mhat = static_cast<accum>(m[j]) / bc1;
            const accum vhat = static_cast<accum>(v[j]) / bc2;
            p.data()[j] -= static_cast<scalar>(static_cast<accum>(lr) * mhat /
                                               (std::sqrt(vhat) + static_cast<accum>(state.eps)));
        }
    }
}

} // namespace lmsc
