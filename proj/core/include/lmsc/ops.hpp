#pragma once

#include <cstdint>
#include <vector>

#include "lmsc/tensor.hpp"

namespace lmsc {

// Unknown-voxel sentinel of label buffers (internal representation).
inline constexpr std::uint16_t kUnknownLabel = 65535;

// 2D cross-correlation (no kernel flip).
// input [B,Cin,H,W], weight [Cout,Cin,kH,kW], bias [Cout].
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              int stride = 1, int padding = 0, int dilation = 1);

// 3D analogue; input [B,Cin,D,H,W], weight [Cout,Cin,kD,kH,kW].
Tensor conv3d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              int stride = 1, int padding = 0, int dilation = 1);

// Adjoint of strided conv2d. input [B,Cin,H,W], weight [Cin,Cout,kH,kW];
// output [B,Cout,(H-1)*stride+kH,(W-1)*stride+kW].
Tensor conv_transpose2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
                        int stride = 1);

// Window max with k == stride; gradient routes to the first argmax in scan order.
Tensor maxpool2d(const Tensor& input, int k = 2, int stride = 2);

Tensor relu(const Tensor& input);

Tensor concat(const std::vector<Tensor>& inputs, int axis);

// Each element replicated into a factor x factor block.
Tensor nearest_upsample2d(const Tensor& input, int factor);

// Same data, new shape (copy with gradient pass-through).
Tensor reshape(const Tensor& input, std::vector<std::int64_t> shape);

// Axis permutation; perm[i] names the source axis of output axis i.
Tensor permute(const Tensor& input, const std::vector<int>& perm);

Tensor add(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, scalar c);
Tensor sum(const Tensor& a); // scalar

// Mean over masked voxels of w_c * (-log softmax(logits)_c).
// logits [B,C,spatial...]; labels and mask are flat over B x spatial in the
// same element order as the logits' spatial layout.
Tensor weighted_masked_cross_entropy(const Tensor& logits,
                                     const std::vector<std::uint16_t>& labels,
                                     const std::vector<scalar>& class_weights,
                                     const std::vector<std::uint8_t>& mask);

} // namespace lmsc
