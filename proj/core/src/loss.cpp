#include "lmsc/loss.hpp"

#include "lmsc/ops.hpp"

namespace lmsc {

Tensor level_loss(const Tensor& logits, const std::vector<const LabelGrid*>& gt_batch,
                  const std::vector<scalar>& class_weights, int level) {
    if (logits.ndim() != 5) throw ShapeError("level_loss: logits must be [B,C,X,Y,Z]");
    const std::int64_t B = logits.dim(0);
    if (static_cast<std::int64_t>(gt_batch.size()) != B)
        throw ShapeError("level_loss: batch size mismatch between logits and ground truth");
    const int factor = 1 << level;
    const std::int64_t S = logits.dim(2) * logits.dim(3) * logits.dim(4);

    std::vector<std::uint16_t> labels(static_cast<std::size_t>(B * S));
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(B * S));
    for (std::int64_t b = 0; b < B; ++b) {
        const LabelGrid pooled = majority_pool(*gt_batch[static_cast<std::size_t>(b)], factor);
        if (pooled.dims.nx != logits.dim(2) || pooled.dims.ny != logits.dim(3) ||
            pooled.dims.nz != logits.dim(4))
            throw ShapeError("level_loss: pooled ground truth does not match logits extents");
        for (std::int64_t s = 0; s < S; ++s) {
            const std::uint16_t l = pooled.labels[static_cast<std::size_t>(s)];
            labels[static_cast<std::size_t>(b * S + s)] = l;
            mask[static_cast<std::size_t>(b * S + s)] = l != kUnknownLabel;
        }
    }
    return weighted_masked_cross_entropy(logits, labels, class_weights, mask);
}

Tensor total_loss(const std::vector<Tensor>& level_losses, std::array<scalar, 4> alpha,
                  bool singlescale) {
    if (singlescale) alpha = {scalar(1), scalar(0), scalar(0), scalar(0)};
    Tensor total;
    for (std::size_t l = 0; l < 4; ++l) {
        if (alpha[l] == scalar(0)) continue;
        if (l >= level_losses.size() || !level_losses[l].defined())
            throw ConfigError("total_loss: level " + std::to_string(l) +
                              " has positive weight but no loss value");
        Tensor term = alpha[l] == scalar(1) ? level_losses[l] : scale(level_losses[l], alpha[l]);
        total = total.defined() ? add(total, term) : term;
    }
    if (!total.defined()) throw ConfigError("total_loss: all level weights are zero");
    return total;
}

} // namespace lmsc
