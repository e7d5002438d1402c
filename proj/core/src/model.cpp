#include "lmsc/model.hpp"

#include <algorithm>
#include <cmath>

namespace lmsc {

void ModelConfig::validate() const {
    grid.validate();
    if (levels != 4) throw ConfigError("model: exactly 4 levels are supported");
    if (static_cast<int>(channels.size()) != levels)
        throw ConfigError("model: channel schedule must have one entry per level");
    if (channels[0] != grid.nz)
        throw ConfigError("model: level-0 channel count must equal nz (input z-slices are the features)");
    for (int l = 1; l < levels; ++l)
        if (channels[l] <= channels[l - 1])
            throw ConfigError("model: channel schedule must be strictly increasing");
    if (head_width < 1) throw ConfigError("model: head width must be positive");
    if (aspp_dilations.empty()) throw ConfigError("model: aspp dilation list is empty");
    if (grid.nz % 8 != 0)
        throw ConfigError("model: nz must be divisible by 8 so every level has a positive depth");
    if (num_classes < 1) throw ConfigError("model: need at least one semantic class");
}

namespace {

Tensor make_param(std::vector<std::int64_t> shape, std::int64_t fan_in, std::mt19937_64& rng) {
    Tensor t = Tensor::zeros(std::move(shape));
    kaiming_uniform_(t, fan_in, rng);
    t.set_trainable();
    return t;
}

Conv2dBlock make_conv2d(std::int64_t cin, std::int64_t cout, int k, int pad, int dil,
                        std::mt19937_64& rng) {
    Conv2dBlock c;
    c.w = make_param({cout, cin, k, k}, cin * k * k, rng);
    c.b = Tensor::zeros({cout});
    c.b.set_trainable();
    c.pad = pad;
    c.dil = dil;
    return c;
}

Conv3dBlock make_conv3d(std::int64_t cin, std::int64_t cout, int k, int pad, int dil,
                        std::mt19937_64& rng) {
    Conv3dBlock c;
    c.w = make_param({cout, cin, k, k, k}, cin * k * k * k, rng);
    c.b = Tensor::zeros({cout});
    c.b.set_trainable();
    c.pad = pad;
    c.dil = dil;
    return c;
}

Deconv2dBlock make_deconv2d(std::int64_t ch, int k, std::mt19937_64& rng) {
    Deconv2dBlock d;
    d.w = make_param({ch, ch, k, k}, ch * k * k, rng);
    d.b = Tensor::zeros({ch});
    d.b.set_trainable();
    d.k = k;
    return d;
}

// decoder conv input width at level l
std::int64_t decoder_in_width(const ModelConfig& cfg, int l) {
    if (l == cfg.levels - 1) return cfg.channels[static_cast<std::size_t>(l)];
    std::int64_t w = cfg.channels[static_cast<std::size_t>(l)]; // encoder skip
    if (cfg.decoder_mode == DecoderMode::multiscale) {
        for (int src = l + 1; src < cfg.levels; ++src) w += cfg.level_depth(src);
    } else {
        w += cfg.level_depth(l + 1);
    }
    return w;
}

} // namespace

LMSCNetModel build(const ModelConfig& config) {
    config.validate();
    LMSCNetModel m;
    m.config = config;
    std::mt19937_64 rng(config.init_seed);
    const int L = config.levels;

    for (int l = 0; l < L; ++l) {
        const std::int64_t cin = l == 0 ? config.grid.nz : config.channels[static_cast<std::size_t>(l - 1)];
        const std::int64_t cw = config.channels[static_cast<std::size_t>(l)];
        m.enc0.push_back(make_conv2d(cin, cw, 3, 1, 1, rng));
        m.enc1.push_back(make_conv2d(cw, cw, 3, 1, 1, rng));
    }

    m.dec.resize(static_cast<std::size_t>(L));
    for (int l = L - 1; l >= 0; --l) {
        if (l < L - 1 && config.upsample_mode == UpsampleMode::deconv) {
            if (config.decoder_mode == DecoderMode::multiscale) {
                for (int src = l + 1; src < L; ++src)
                    m.ups[{src, l}] = make_deconv2d(config.level_depth(src), 1 << (src - l), rng);
            } else {
                m.ups[{l + 1, l}] = make_deconv2d(config.level_depth(l + 1), 2, rng);
            }
        }
        m.dec[static_cast<std::size_t>(l)] =
            make_conv2d(decoder_in_width(config, l), config.level_depth(l), 3, 1, 1, rng);
    }

    for (int l = 0; l < L; ++l) {
        SegmentationHead h;
        h.dense0 = make_conv3d(1, config.head_width, 3, 1, 1, rng);
        h.dense1 = make_conv3d(config.head_width, config.head_width, 3, 1, 1, rng);
        if (config.head_aspp)
            for (int d : config.aspp_dilations)
                h.aspp.push_back(make_conv3d(config.head_width, config.head_width, 3, d, d, rng));
        h.classifier = make_conv3d(config.head_width, config.num_logits(), 1, 0, 1, rng);
        m.heads.push_back(std::move(h));
    }
    return m;
}

std::vector<Parameter> LMSCNetModel::parameters() {
    std::vector<Parameter> out;
    auto put = [&out](const std::string& name, const Tensor& t) { out.push_back({name, t}); };
    const int L = config.levels;
    for (int l = 0; l < L; ++l) {
        const std::string p = "enc.l" + std::to_string(l);
        put(p + ".conv0.weight", enc0[static_cast<std::size_t>(l)].w);
        put(p + ".conv0.bias", enc0[static_cast<std::size_t>(l)].b);
        put(p + ".conv1.weight", enc1[static_cast<std::size_t>(l)].w);
        put(p + ".conv1.bias", enc1[static_cast<std::size_t>(l)].b);
    }
    for (int l = L - 1; l >= 0; --l) {
        for (auto& [key, d] : ups)
            if (key.second == l) {
                const std::string p =
                    "dec.l" + std::to_string(l) + ".up_from_l" + std::to_string(key.first);
                put(p + ".weight", d.w);
                put(p + ".bias", d.b);
            }
        const std::string p = "dec.l" + std::to_string(l) + ".conv";
        put(p + ".weight", dec[static_cast<std::size_t>(l)].w);
        put(p + ".bias", dec[static_cast<std::size_t>(l)].b);
    }
    for (int l = 0; l < L; ++l) {
        const std::string p = "head.l" + std::to_string(l);
        put(p + ".dense0.weight", heads[static_cast<std::size_t>(l)].dense0.w);
        put(p + ".dense0.bias", heads[static_cast<std::size_t>(l)].dense0.b);
        put(p + ".dense1.weight", heads[static_cast<std::size_t>(l)].dense1.w);
        put(p + ".dense1.bias", heads[static_cast<std::size_t>(l)].dense1.b);
        for (std::size_t i = 0; i < heads[static_cast<std::size_t>(l)].aspp.size(); ++i) {
            put(p + ".aspp" + std::to_string(i) + ".weight", heads[static_cast<std::size_t>(l)].aspp[i].w);
            put(p + ".aspp" + std::to_string(i) + ".bias", heads[static_cast<std::size_t>(l)].aspp[i].b);
        }
        put(p + ".classifier.weight", heads[static_cast<std::size_t>(l)].classifier.w);
        put(p + ".classifier.bias", heads[static_cast<std::size_t>(l)].classifier.b);
    }
    return out;
}

void LMSCNetModel::zero_grad() {
    for (auto& p : parameters()) p.value.zero_grad();
}

Tensor lift_to_volume(const Tensor& features2d) {
    if (features2d.ndim() != 4) throw ShapeError("lift_to_volume: expected [B,C,H,W]");
    return reshape(features2d,
                   {features2d.dim(0), 1, features2d.dim(1), features2d.dim(2), features2d.dim(3)});
}

namespace {

Tensor apply_head(const SegmentationHead& head, const Tensor& feats2d) {
    Tensor v = lift_to_volume(feats2d);
    Tensor t = relu(conv3d(v, head.dense0.w, head.dense0.b, 1, head.dense0.pad, head.dense0.dil));
    t = relu(conv3d(t, head.dense1.w, head.dense1.b, 1, head.dense1.pad, head.dense1.dil));
    if (!head.aspp.empty()) {
        Tensor fused;
        for (const auto& br : head.aspp) {
            Tensor o = conv3d(t, br.w, br.b, 1, br.pad, br.dil);
            fused = fused.defined() ? add(fused, o) : o;
        }
        t = relu(fused);
    }
    Tensor logits = conv3d(t, head.classifier.w, head.classifier.b, 1, 0, 1);
    // [B,C,z,x,y] -> [B,C,x,y,z]
    return permute(logits, {0, 1, 3, 4, 2});
}

} // namespace

std::map<int, Tensor> forward(LMSCNetModel& m, const Tensor& input, const ScaleSelection& scales) {
    const auto& cfg = m.config;
    if (scales.empty()) throw ConfigError("forward: empty scale selection");
    for (int l : scales)
        if (l < 0 || l >= cfg.levels) throw ConfigError("forward: scale level out of range");
    if (input.ndim() != 4 || input.dim(1) != cfg.grid.nz || input.dim(2) != cfg.grid.nx ||
        input.dim(3) != cfg.grid.ny)
        throw ShapeError("forward: input must be [B,nz,nx,ny] matching the configured grid");

    const int L = cfg.levels;
    std::vector<Tensor> skips(static_cast<std::size_t>(L));
    Tensor t = input;
    for (int l = 0; l < L; ++l) {
        auto& c0 = m.enc0[static_cast<std::size_t>(l)];
        auto& c1 = m.enc1[static_cast<std::size_t>(l)];
        t = relu(conv2d(t, c0.w, c0.b, 1, c0.pad, c0.dil));
        t = relu(conv2d(t, c1.w, c1.b, 1, c1.pad, c1.dil));
        skips[static_cast<std::size_t>(l)] = t;
        if (l < L - 1) t = maxpool2d(t, 2, 2);
    }

    const int lmin = *scales.begin();
    std::vector<Tensor> decoded(static_cast<std::size_t>(L));
    for (int l = L - 1; l >= lmin; --l) {
        Tensor feats;
        if (l == L - 1) {
            feats = skips[static_cast<std::size_t>(l)];
        } else {
            std::vector<Tensor> parts;
            const int src_lo = cfg.decoder_mode == DecoderMode::multiscale ? L - 1 : l + 1;
            for (int src = src_lo; src >= l + 1; --src) {
                const Tensor& d = decoded[static_cast<std::size_t>(src)];
                if (cfg.upsample_mode == UpsampleMode::deconv) {
                    auto& up = m.ups.at({src, l});
                    parts.push_back(conv_transpose2d(d, up.w, up.b, up.k));
                } else {
                    parts.push_back(nearest_upsample2d(d, 1 << (src - l)));
                }
            }
            parts.push_back(skips[static_cast<std::size_t>(l)]);
            feats = concat(parts, 1);
        }
        auto& dc = m.dec[static_cast<std::size_t>(l)];
        decoded[static_cast<std::size_t>(l)] = relu(conv2d(feats, dc.w, dc.b, 1, dc.pad, dc.dil));
    }

    std::map<int, Tensor> out;
    for (int l : scales)
        out[l] = apply_head(m.heads[static_cast<std::size_t>(l)], decoded[static_cast<std::size_t>(l)]);
    return out;
}

std::int64_t count_params(LMSCNetModel& model) {
    std::int64_t n = 0;
    for (const auto& p : model.parameters()) n += p.value.numel();
    return n;
}

namespace {
std::int64_t conv_flops(std::int64_t out_elems, std::int64_t cin, std::int64_t kvol) {
    return 2 * out_elems * cin * kvol + out_elems;
}
} // namespace

std::int64_t count_flops(const ModelConfig& cfg, const ScaleSelection& scales) {
    cfg.validate();
    if (scales.empty()) throw ConfigError("count_flops: empty scale selection");
    const int L = cfg.levels;
    std::int64_t total = 0;

    auto plane = [&](int l) { return (cfg.grid.nx >> l) * (cfg.grid.ny >> l); };

    // encoder runs in full for every selection
    for (int l = 0; l < L; ++l) {
        const std::int64_t cin = l == 0 ? cfg.grid.nz : cfg.channels[static_cast<std::size_t>(l - 1)];
        const std::int64_t cw = cfg.channels[static_cast<std::size_t>(l)];
        total += conv_flops(cw * plane(l), cin, 9) + cw * plane(l);  // conv0 + relu
        total += conv_flops(cw * plane(l), cw, 9) + cw * plane(l);   // conv1 + relu
        if (l < L - 1) total += cw * plane(l + 1);                   // pool
    }

    const int lmin = *scales.begin();
    for (int l = L - 1; l >= lmin; --l) {
        if (l < L - 1) {
            const int src_lo = cfg.decoder_mode == DecoderMode::multiscale ? L - 1 : l + 1;
            for (int src = src_lo; src >= l + 1; --src) {
                const std::int64_t ch = cfg.level_depth(src);
                const std::int64_t k = std::int64_t(1) << (src - l);
                if (cfg.upsample_mode == UpsampleMode::deconv)
                    total += 2 * ch * plane(src) * ch * k * k + ch * plane(l);
                else
                    total += ch * plane(l);
            }
        }
        total += conv_flops(cfg.level_depth(l) * plane(l), decoder_in_width(cfg, l), 9) +
                 cfg.level_depth(l) * plane(l);
    }

    const std::int64_t h = cfg.head_width;
    for (int l : scales) {
        const std::int64_t V = plane(l) * cfg.level_depth(l);
        total += conv_flops(h * V, 1, 27) + h * V;  // dense0 + relu
        total += conv_flops(h * V, h, 27) + h * V;  // dense1 + relu
        if (cfg.head_aspp) {
            total += static_cast<std::int64_t>(cfg.aspp_dilations.size()) * conv_flops(h * V, h, 27);
            total += (static_cast<std::int64_t>(cfg.aspp_dilations.size()) - 1) * h * V; // fusion adds
            total += h * V;                                                              // relu
        }
        total += conv_flops(cfg.num_logits() * V, h, 1);
    }
    return total;
}

} // namespace lmsc
