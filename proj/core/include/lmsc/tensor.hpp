#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "lmsc/common.hpp"

namespace lmsc {

// Dense N-dimensional array with an optional gradient buffer and an
// optional record of the producing operation for reverse-mode traversal.
struct TensorImpl {
    std::vector<std::int64_t> shape;
    std::vector<scalar> data;
    std::vector<scalar> grad; // sized lazily, same length as data when present
    bool requires_grad = false;
    bool trainable = false; // leaf parameter; grads persist across backward calls

    // graph record (empty for leaves)
    std::vector<std::shared_ptr<TensorImpl>> inputs;
    std::function<void(TensorImpl&)> backward_fn;

    std::int64_t numel() const {
        std::int64_t n = 1;
        for (auto e : shape) n *= e;
        return n;
    }
    bool is_leaf() const { return inputs.empty(); }
    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), scalar(0));
    }
};

class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}

    static Tensor zeros(std::vector<std::int64_t> shape);
    static Tensor full(std::vector<std::int64_t> shape, scalar value);
    static Tensor from_data(std::vector<std::int64_t> shape, std::vector<scalar> values);

    bool defined() const { return impl_ != nullptr; }
    const std::vector<std::int64_t>& shape() const { return impl_->shape; }
    std::int64_t dim(std::size_t i) const { return impl_->shape[i]; }
    std::size_t ndim() const { return impl_->shape.size(); }
    std::int64_t numel() const { return impl_->numel(); }

    std::vector<scalar>& data() { return impl_->data; }
    const std::vector<scalar>& data() const { return impl_->data; }
    std::vector<scalar>& grad() { return impl_->grad; }
    const std::vector<scalar>& grad() const { return impl_->grad; }

    bool requires_grad() const { return impl_->requires_grad; }
    Tensor& set_trainable(bool on = true) {
        impl_->trainable = on;
        impl_->requires_grad = on;
        return *this;
    }
    bool trainable() const { return impl_->trainable; }
    void zero_grad() { impl_->grad.assign(impl_->data.size(), scalar(0)); }

    scalar item() const;

    std::shared_ptr<TensorImpl> impl() const { return impl_; }

private:
    std::shared_ptr<TensorImpl> impl_;
};

// When false, ops do not record graph nodes (inference mode).
bool grad_enabled();

struct NoGradGuard {
    NoGradGuard();
    ~NoGradGuard();
    bool prev;
};

// Reverse topological traversal from a scalar root. Grads of interior
// nodes are recomputed per call; leaf grads accumulate across calls.
void backward(const Tensor& root);

// Trainable leaf with a hierarchical name, e.g. "enc.l1.conv0.weight".
struct Parameter {
    std::string name;
    Tensor value;
};

// Kaiming-style fan-in-scaled uniform fill.
void kaiming_uniform_(Tensor& t, std::int64_t fan_in, std::mt19937_64& rng);

} // namespace lmsc
