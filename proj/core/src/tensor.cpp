#include "lmsc/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace lmsc {

Tensor Tensor::zeros(std::vector<std::int64_t> shape) {
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = std::move(shape);
    impl->data.assign(static_cast<std::size_t>(impl->numel()), scalar(0));
    return Tensor(impl);
}

Tensor Tensor::full(std::vector<std::int64_t> shape, scalar value) {
    Tensor t = zeros(std::move(shape));
    std::fill(t.data().begin(), t.data().end(), value);
    return t;
}

Tensor Tensor::from_data(std::vector<std::int64_t> shape, std::vector<scalar> values) {
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = std::move(shape);
    if (static_cast<std::int64_t>(values.size()) != impl->numel())
        throw ShapeError("from_data: value count does not match shape product");
    impl->data = std::move(values);
    return Tensor(impl);
}

scalar Tensor::item() const {
    if (numel() != 1) throw ShapeError("item(): tensor is not scalar");
    return impl_->data[0];
}

namespace {
bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev; }

void backward(const Tensor& root) {
    if (root.numel() != 1) throw ShapeError("backward: root must be scalar");
    auto r = root.impl();

    // iterative post-order DFS
    std::vector<TensorImpl*> topo;
    std::unordered_set<TensorImpl*> seen;
    std::vector<std::pair<TensorImpl*, std::size_t>> stack;
    stack.push_back({r.get(), 0});
    seen.insert(r.get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->inputs.size()) {
            TensorImpl* in = node->inputs[idx++].get();
            if (seen.insert(in).second) stack.push_back({in, 0});
        } else {
            topo.push_back(node);
            stack.pop_back();
        }
    }

    // interior grads are per-call scratch; leaf grads persist and accumulate
    for (TensorImpl* n : topo) {
        if (!n->is_leaf())
            n->grad.assign(n->data.size(), scalar(0));
        else if (n->requires_grad)
            n->ensure_grad();
    }
    r->ensure_grad();
    r->grad[0] += scalar(1);

    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        TensorImpl* n = *it;
        if (n->backward_fn) n->backward_fn(*n);
    }
}

void kaiming_uniform_(Tensor& t, std::int64_t fan_in, std::mt19937_64& rng) {
    const scalar bound = static_cast<scalar>(std::sqrt(6.0 / static_cast<double>(fan_in)));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& v : t.data()) v = static_cast<scalar>(dist(rng));
}

} // namespace lmsc
