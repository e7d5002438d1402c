#pragma once

#include <array>
#include <vector>

#include "lmsc/grid.hpp"
#include "lmsc/tensor.hpp"

namespace lmsc {

// Weighted masked cross-entropy of level-l logits against the full-resolution
// ground truth, majority-pooled to the level's scale. Mask = label != unknown.
Tensor level_loss(const Tensor& logits, const std::vector<const LabelGrid*>& gt_batch,
                  const std::vector<scalar>& class_weights, int level);

// Sum of alpha_l * L_l over defined losses; singlescale forces alpha = (1,0,0,0).
Tensor total_loss(const std::vector<Tensor>& level_losses, std::array<scalar, 4> alpha,
                  bool singlescale = false);

} // namespace lmsc
