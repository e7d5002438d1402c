#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "lmsc/grid.hpp"
#include "lmsc/ops.hpp"
#include "lmsc/tensor.hpp"

namespace lmsc {

enum class DecoderMode { multiscale, vanilla };
enum class UpsampleMode { deconv, nearest };

struct ModelConfig {
    int num_classes = 19; // N semantic classes; logits have N+1 channels
    GridDims grid;        // default 256x256x32, 0.2 m
    int levels = 4;
    // Encoder conv widths per level; level 0 must equal nz so the input
    // z-slices act as the initial feature set.
    std::vector<int> channels = {32, 48, 64, 80};
    int head_width = 12;
    std::vector<int> aspp_dilations = {1, 2, 3};
    DecoderMode decoder_mode = DecoderMode::multiscale;
    UpsampleMode upsample_mode = UpsampleMode::deconv;
    bool head_aspp = true;
    std::uint64_t init_seed = 1;

    int num_logits() const { return num_classes + 1; }
    // Decoder output width at level l; doubles as the lifted volume depth.
    std::int64_t level_depth(int l) const { return grid.nz >> l; }
    void validate() const;
};

// Output scale selection; level l corresponds to relative scale 1/2^l.
using ScaleSelection = std::set<int>;

struct Conv2dBlock {
    Tensor w, b;
    int stride = 1, pad = 0, dil = 1;
};
struct Conv3dBlock {
    Tensor w, b;
    int stride = 1, pad = 0, dil = 1;
};
struct Deconv2dBlock {
    Tensor w, b; // [Cin,Cout,k,k]
    int k = 2;   // kernel == stride
};

struct SegmentationHead {
    Conv3dBlock dense0, dense1;      // 1 -> h -> h, 3x3x3
    std::vector<Conv3dBlock> aspp;   // h -> h per dilation, summed
    Conv3dBlock classifier;          // h -> N+1, 1x1x1
};

struct LMSCNetModel {
    ModelConfig config;
    // encoder: two convs per level
    std::vector<Conv2dBlock> enc0, enc1;
    // decoder conv per level (input width depends on mode), output nz/2^l
    std::vector<Conv2dBlock> dec;
    // upsamplers, key (src level, dst level), src > dst; empty in nearest mode
    std::map<std::pair<int, int>, Deconv2dBlock> ups;
    std::vector<SegmentationHead> heads; // one per level

    std::vector<Parameter> parameters(); // stable enumeration order
    void zero_grad();
};

LMSCNetModel build(const ModelConfig& config);

// Logits per requested level, shape [B, N+1, nx/2^l, ny/2^l, nz/2^l].
// Only the subgraph needed for the requested levels is evaluated.
std::map<int, Tensor> forward(LMSCNetModel& model, const Tensor& input, const ScaleSelection& scales);

// [B,C,H,W] -> [B,1,C,H,W]; the channel axis becomes the volume depth.
Tensor lift_to_volume(const Tensor& features2d);

std::int64_t count_params(LMSCNetModel& model);

// Analytic FLOP count for a forward pass at the requested scales.
// Convention: a conv costs 2 * outElems * (Cin * kernelVolume) plus one add
// per output element for bias; a deconv costs 2 * inElems * Cout *
// kernelVolume plus bias adds; pooling, activations and upsampling cost 1
// per output element.
std::int64_t count_flops(const ModelConfig& config, const ScaleSelection& scales);

} // namespace lmsc
