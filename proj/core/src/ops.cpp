#include "lmsc/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

namespace lmsc {

namespace {

Tensor make_result(std::vector<std::int64_t> shape, std::vector<Tensor> parents) {
    Tensor out = Tensor::zeros(std::move(shape));
    if (!grad_enabled()) return out;
    bool needs = false;
    for (const auto& p : parents) needs = needs || p.impl()->requires_grad;
    if (!needs) return out;
    out.impl()->requires_grad = true;
    for (const auto& p : parents) out.impl()->inputs.push_back(p.impl());
    return out;
}

std::int64_t conv_out_extent(std::int64_t in, int k, int stride, int padding, int dilation,
                             const char* axis) {
    const std::int64_t out = (in + 2 * padding - static_cast<std::int64_t>(dilation) * (k - 1) - 1) / stride + 1;
    if (out < 1)
        throw GeometryError(std::string("convolution output extent is non-positive on axis ") + axis);
    return out;
}

void check_dims(bool ok, const std::string& msg) {
    if (!ok) throw ShapeError(msg);
}

} // namespace

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              int stride, int padding, int dilation) {
    check_dims(input.ndim() == 4, "conv2d: input must be [B,Cin,H,W]");
    check_dims(weight.ndim() == 4, "conv2d: weight must be [Cout,Cin,kH,kW]");
    const std::int64_t B = input.dim(0), Cin = input.dim(1), H = input.dim(2), W = input.dim(3);
    const std::int64_t Cout = weight.dim(0), kH = weight.dim(2), kW = weight.dim(3);
    check_dims(weight.dim(1) == Cin, "conv2d: channel axis mismatch, input Cin=" +
                                         std::to_string(Cin) + " weight Cin=" + std::to_string(weight.dim(1)));
    check_dims(bias.ndim() == 1 && bias.dim(0) == Cout, "conv2d: bias axis mismatch");
    const std::int64_t Ho = conv_out_extent(H, static_cast<int>(kH), stride, padding, dilation, "H");
    const std::int64_t Wo = conv_out_extent(W, static_cast<int>(kW), stride, padding, dilation, "W");

    Tensor out = make_result({B, Cout, Ho, Wo}, {input, weight, bias});
    const scalar* x = input.data().data();
    const scalar* w = weight.data().data();
    const scalar* bs = bias.data().data();
    scalar* y = out.data().data();

#ifdef _OPENMP
#pragma omp parallel for collapse(2) schedule(static)
#endif
    for (std::int64_t b = 0; b < B; ++b)
        for (std::int64_t co = 0; co < Cout; ++co)
            for (std::int64_t oh = 0; oh < Ho; ++oh)
                for (std::int64_t ow = 0; ow < Wo; ++ow) {
                    accum acc = bs[co];
                    for (std::int64_t ci = 0; ci < Cin; ++ci)
                        for (std::int64_t kh = 0; kh < kH; ++kh) {
                            const std::int64_t ih = oh * stride - padding + kh * dilation;
                            if (ih < 0 || ih >= H) continue;
                            const scalar* xrow = x + ((b * Cin + ci) * H + ih) * W;
                            const scalar* wrow = w + ((co * Cin + ci) * kH + kh) * kW;
                            for (std::int64_t kw = 0; kw < kW; ++kw) {
                                const std::int64_t iw = ow * stride - padding + kw * dilation;
                                if (iw < 0 || iw >= W) continue;
                                acc += static_cast<accum>(xrow[iw]) * wrow[kw];
                            }
                        }
                    y[((b * Cout + co) * Ho + oh) * Wo + ow] = static_cast<scalar>(acc);
                }

    if (out.impl()->requires_grad) {
        auto xi = input.impl(), wi = weight.impl(), bi = bias.impl();
        out.impl()->backward_fn = [=](TensorImpl& o) {
            const scalar* go = o.grad.data();
            if (xi->requires_grad) xi->ensure_grad();
            if (wi->requires_grad) wi->ensure_grad();
            if (bi->requires_grad) bi->ensure_grad();
            for (std::int64_t b = 0; b < B; ++b)
                for (std::int64_t co = 0; co < Cout; ++co)
                    for (std::int64_t oh = 0; oh < Ho; ++oh)
                        for (std::int64_t ow = 0; ow < Wo; ++ow) {
                            const scalar g = go[((b * Cout + co) * Ho + oh) * Wo + ow];
                            if (g == scalar(0)) continue;
                            if (bi->requires_grad) bi->grad[co] += g;
                            for (std::int64_t ci = 0; ci < Cin; ++ci)
                                for (std::int64_t kh = 0; kh < kH; ++kh) {
                                    const std::int64_t ih = oh * stride - padding + kh * dilation;
                                    if (ih < 0 || ih >= H) continue;
                                    for (std::int64_t kw = 0; kw < kW; ++kw) {
                                        const std::int64_t iw = ow * stride - padding + kw * dilation;
                                        if (iw < 0 || iw >= W) continue;
                                        const std::int64_t xidx = ((b * Cin + ci) * H + ih) * W + iw;
                                        const std::int64_t widx = ((co * Cin + ci) * kH + kh) * kW + kw;
                                        if (xi->requires_grad) xi->grad[xidx] += g * wi->data[widx];
                                        if (wi->requires_grad) wi->grad[widx] += g * xi->data[xidx];
                                    }
                                }
                        }
        };
    }
    return out;
}

Tensor conv3d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              int stride, int padding, int dilation) {
    check_dims(input.ndim() == 5, "conv3d: input must be [B,Cin,D,H,W]");
    check_dims(weight.ndim() == 5, "conv3d: weight must be [Cout,Cin,kD,kH,kW]");
    const std::int64_t B = input.dim(0), Cin = input.dim(1);
    const std::int64_t D = input.dim(2), H = input.dim(3), W = input.dim(4);
    const std::int64_t Cout = weight.dim(0), kD = weight.dim(2), kH = weight.dim(3), kW = weight.dim(4);
    check_dims(weight.dim(1) == Cin, "conv3d: channel axis mismatch, input Cin=" +
                                         std::to_string(Cin) + " weight Cin=" + std::to_string(weight.dim(1)));
    check_dims(bias.ndim() == 1 && bias.dim(0) == Cout, "conv3d: bias axis mismatch");
    const std::int64_t Do = conv_out_extent(D, static_cast<int>(kD), stride, padding, dilation, "D");
    const std::int64_t Ho = conv_out_extent(H, static_cast<int>(kH), stride, padding, dilation, "H");
    const std::int64_t Wo = conv_out_extent(W, static_cast<int>(kW), stride, padding, dilation, "W");

    Tensor out = make_result({B, Cout, Do, Ho, Wo}, {input, weight, bias});
    const scalar* x = input.data().data();
    const scalar* w = weight.data().data();
    const scalar* bs = bias.data().data();
    scalar* y = out.data().data();

#ifdef _OPENMP
#pragma omp parallel for collapse(2) schedule(static)
#endif
    for (std::int64_t b = 0; b < B; ++b)
        for (std::int64_t co = 0; co < Cout; ++co)
            for (std::int64_t od = 0; od < Do; ++od)
                for (std::int64_t oh = 0; oh < Ho; ++oh)
                    for (std::int64_t ow = 0; ow < Wo; ++ow) {
                        accum acc = bs[co];
                        for (std::int64_t ci = 0; ci < Cin; ++ci)
                            for (std::int64_t kd = 0; kd < kD; ++kd) {
                                const std::int64_t id = od * stride - padding + kd * dilation;
                                if (id < 0 || id >= D) continue;
                                for (std::int64_t kh = 0; kh < kH; ++kh) {
                                    const std::int64_t ih = oh * stride - padding + kh * dilation;
                                    if (ih < 0 || ih >= H) continue;
                                    const scalar* xrow = x + (((b * Cin + ci) * D + id) * H + ih) * W;
                                    const scalar* wrow = w + (((co * Cin + ci) * kD + kd) * kH + kh) * kW;
                                    for (std::int64_t kw = 0; kw < kW; ++kw) {
                                        const std::int64_t iw = ow * stride - padding + kw * dilation;
                                        if (iw < 0 || iw >= W) continue;
                                        acc += static_cast<accum>(xrow[iw]) * wrow[kw];
                                    }
                                }
                            }
                        y[(((b * Cout + co) * Do + od) * Ho + oh) * Wo + ow] = static_cast<scalar>(acc);
                    }

    if (out.impl()->requires_grad) {
        auto xi = input.impl(), wi = weight.impl(), bi = bias.impl();
        out.impl()->backward_fn = [=](TensorImpl& o) {
            const scalar* go = o.grad.data();
            if (xi->requires_grad) xi->ensure_grad();
            if (wi->requires_grad) wi->ensure_grad();
            if (bi->requires_grad) bi->ensure_grad();
            for (std::int64_t b = 0; b < B; ++b)
                for (std::int64_t co = 0; co < Cout; ++co)
                    for (std::int64_t od = 0; od < Do; ++od)
                        for (std::int64_t oh = 0; oh < Ho; ++oh)
                            for (std::int64_t ow = 0; ow < Wo; ++ow) {
                                const scalar g = go[(((b * Cout + co) * Do + od) * Ho + oh) * Wo + ow];
                                if (g == scalar(0)) continue;
                                if (bi->requires_grad) bi->grad[co] += g;
                                for (std::int64_t ci = 0; ci < Cin; ++ci)
                                    for (std::int64_t kd = 0; kd < kD; ++kd) {
                                        const std::int64_t id = od * stride - padding + kd * dilation;
                                        if (id < 0 || id >= D) continue;
                                        for (std::int64_t kh = 0; kh < kH; ++kh) {
                                            const std::int64_t ih = oh * stride - padding + kh * dilation;
                                            if (ih < 0 || ih >= H) continue;
                                            for (std::int64_t kw = 0; kw < kW; ++kw) {
                                                const std::int64_t iw = ow * stride - padding + kw * dilation;
                                                if (iw < 0 || iw >= W) continue;
                                                const std::int64_t xidx =
                                                    (((b * Cin + ci) * D + id) * H + ih) * W + iw;
                                                const std::int64_t widx =
                                                    (((co * Cin + ci) * kD + kd) * kH + kh) * kW + kw;
                                                if (xi->requires_grad) xi->grad[xidx] += g * wi->data[widx];
                                                if (wi->requires_grad) wi->grad[widx] += g * xi->data[xidx];
                                            }
                                        }
                                    }
                            }
        };
    }
    return out;
}

Tensor conv_transpose2d(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride) {
    check_dims(input.ndim() == 4, "conv_transpose2d: input must be [B,Cin,H,W]");
    check_dims(weight.ndim() == 4, "conv_transpose2d: weight must be [Cin,Cout,kH,kW]");
    if (stride < 1) throw GeometryError("conv_transpose2d: stride must be >= 1");
    const std::int64_t B = input.dim(0), Cin = input.dim(1), H = input.dim(2), W = input.dim(3);
    const std::int64_t Cout = weight.dim(1), kH = weight.dim(2), kW = weight.dim(3);
    check_dims(weight.dim(0) == Cin, "conv_transpose2d: channel axis mismatch, input Cin=" +
                                         std::to_string(Cin) + " weight Cin=" + std::to_string(weight.dim(0)));
    check_dims(bias.ndim() == 1 && bias.dim(0) == Cout, "conv_transpose2d: bias axis mismatch");
    const std::int64_t Ho = (H - 1) * stride + kH;
    const std::int64_t Wo = (W - 1) * stride + kW;

    Tensor out = make_result({B, Cout, Ho, Wo}, {input, weight, bias});
    const scalar* x = input.data().data();
    const scalar* w = weight.data().data();
    scalar* y = out.data().data();

    for (std::int64_t b = 0; b < B; ++b)
        for (std::int64_t co = 0; co < Cout; ++co) {
            scalar* plane = y + (b * Cout + co) * Ho * Wo;
            const scalar bv = bias.data()[co];
            for (std::int64_t i = 0; i < Ho * Wo; ++i) plane[i] = bv;
        }
    for (std::int64_t b = 0; b < B; ++b)
        for (std::int64_t ci = 0; ci < Cin; ++ci)
            for (std::int64_t ih = 0; ih < H; ++ih)
                for (std::int64_t iw = 0; iw < W; ++iw) {
                    const scalar v = x[((b * Cin + ci) * H + ih) * W + iw];
                    if (v == scalar(0)) continue;
                    for (std::int64_t co = 0; co < Cout; ++co) {
                        scalar* plane = y + (b * Cout + co) * Ho * Wo;
                        const scalar* wrow = w + (ci * Cout + co) * kH * kW;
                        for (std::int64_t kh = 0; kh < kH; ++kh) {
                            scalar* orow = plane + (ih * stride + kh) * Wo + iw * stride;
                            for (std::int64_t kw = 0; kw < kW; ++kw)
                                orow[kw] += v * wrow[kh * kW + kw];
                        }
                    }
                }

    if (out.impl()->requires_grad) {
        auto xi = input.impl(), wi = weight.impl(), bi = bias.impl();
        out.impl()->backward_fn = [=](TensorImpl& o) {
            const scalar* go = o.grad.data();
            if (xi->requires_grad) xi->ensure_grad();
            if (wi->requires_grad) wi->ensure_grad();
            if (bi->requires_grad) bi->ensure_grad();
            if (bi->requires_grad)
                for (std::int64_t b = 0; b < B; ++b)
                    for (std::int64_t co = 0; co < Cout; ++co) {
                        const scalar* plane = go + (b * Cout + co) * Ho * Wo;
                        accum acc = 0;
                        for (std::int64_t i = 0; i < Ho * Wo; ++i) acc += plane[i];
                        bi->grad[co] += static_cast<scalar>(acc);
                    }
            for (std::int64_t b = 0; b < B; ++b)
                for (std::int64_t ci = 0; ci < Cin; ++ci)
                    for (std::int64_t ih = 0; ih < H; ++ih)
                        for (std::int64_t iw = 0; iw < W; ++iw) {
                            const std::int64_t xidx = ((b * Cin + ci) * H + ih) * W + iw;
                            accum gin = 0;
                            for (std::int64_t co = 0; co < Cout; ++co) {
                                const scalar* plane = go + (b * Cout + co) * Ho * Wo;
                                const scalar* wrow = wi->data.data() + (ci * Cout + co) * kH * kW;
                                for (std::int64_t kh = 0; kh < kH; ++kh)
                                    for (std::int64_t kw = 0; kw < kW; ++kw) {
                                        const scalar g = plane[(ih * stride + kh) * Wo + iw * stride + kw];
                                        gin += static_cast<accum>(g) * wrow[kh * kW + kw];
                                        if (wi->requires_grad)
                                            wi->grad[(ci * Cout + co) * kH * kW + kh * kW + kw] +=
                                                g * xi->data[xidx];
                                    }
                            }
                            if (xi->requires_grad) xi->grad[xidx] += static_cast<scalar>(gin);
                        }
        };
    }
    return out;
}

Tensor maxpool2d(const Tensor& input, int k, int stride) {
    check_dims(input.ndim() == 4, "maxpool2d: input must be [B,C,H,W]");
    if (k != stride) throw GeometryError("maxpool2d: only k == stride windows are supported");
    const std::int64_t B = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
    if (H % stride != 0 || W % stride != 0)
        throw GeometryError("maxpool2d: spatial extents not divisible by stride");
    const std::int64_t Ho = H / stride, Wo = W / stride;

    Tensor out = make_result({B, C, Ho, Wo}, {input});
    auto argmax = std::make_shared<std::vector<std::int64_t>>(static_cast<std::size_t>(out.numel()));
    const scalar* x = input.data().data();
    scalar* y = out.data().data();

    for (std::int64_t bc = 0; bc < B * C; ++bc)
        for (std::int64_t oh = 0; oh < Ho; ++oh)
            for (std::int64_t ow = 0; ow < Wo; ++ow) {
                std::int64_t best = -1;
                scalar bv = 0;
                for (std::int64_t kh = 0; kh < k; ++kh)
                    for (std::int64_t kw = 0; kw < k; ++kw) {
                        const std::int64_t idx = (bc * H + oh * stride + kh) * W + ow * stride + kw;
                        if (best < 0 || x[idx] > bv) {
                            best = idx;
                            bv = x[idx];
                        }
                    }
                const std::int64_t oidx = (bc * Ho + oh) * Wo + ow;
                y[oidx] = bv;
                (*argmax)[static_cast<std::size_t>(oidx)] = best;
            }

    if (out.impl()->requires_grad) {
        auto xi = input.impl();
        out.impl()->backward_fn = [xi, argmax](TensorImpl& o) {
            if (!xi->requires_grad) return;
            xi->ensure_grad();
            for (std::size_t i = 0; i < o.grad.size(); ++i)
                xi->grad[static_cast<std::size_t>((*argmax)[i])] += o.grad[i];
        };
    }
    return out;
}

Tensor relu(const Tensor& input) {
    Tensor out = make_result(input.shape(), {input});
    const scalar* x = input.data().data();
    scalar* y = out.data().data();
    const std::int64_t n = input.numel();
    for (std::int64_t i = 0; i < n; ++i) y[i] = x[i] > scalar(0) ? x[i] : scalar(0);

    if (out.impl()->requires_grad) {
        auto xi = input.impl();
        out.impl()->backward_fn = [xi](TensorImpl& o) {
            if (!xi->requires_grad) return;
            xi->ensure_grad();
            for (std::size_t i = 0; i < o.grad.size(); ++i)
                if (xi->data[i] > scalar(0)) xi->grad[i] += o.grad[i];
        };
    }
    return out;
}

Tensor concat(const std::vector<Tensor>& inputs, int axis) {
    check_dims(!inputs.empty(), "concat: empty input list");
    const auto& s0 = inputs[0].shape();
    check_dims(axis >= 0 && axis < static_cast<int>(s0.size()), "concat: axis out of range");
    std::int64_t axis_total = 0;
    for (const auto& t : inputs) {
        check_dims(t.ndim() == s0.size(), "concat: rank mismatch");
        for (std::size_t d = 0; d < s0.size(); ++d)
            if (static_cast<int>(d) != axis)
                check_dims(t.dim(d) == s0[d], "concat: extent mismatch on axis " + std::to_string(d));
        axis_total += t.dim(static_cast<std::size_t>(axis));
    }
    std::vector<std::int64_t> oshape = s0;
    oshape[static_cast<std::size_t>(axis)] = axis_total;

    Tensor out = make_result(oshape, inputs);
    std::int64_t outer = 1, inner = 1;
    for (int d = 0; d < axis; ++d) outer *= s0[static_cast<std::size_t>(d)];
    for (std::size_t d = static_cast<std::size_t>(axis) + 1; d < s0.size(); ++d) inner *= s0[d];

    std::int64_t offset = 0;
    for (const auto& t : inputs) {
        const std::int64_t chunk = t.dim(static_cast<std::size_t>(axis)) * inner;
        for (std::int64_t o = 0; o < outer; ++o)
            std::memcpy(out.data().data() + o * axis_total * inner + offset,
                        t.data().data() + o * chunk, static_cast<std::size_t>(chunk) * sizeof(scalar));
        offset += chunk;
    }

    if (out.impl()->requires_grad) {
        auto parents = out.impl()->inputs;
        out.impl()->backward_fn = [parents, outer, inner, axis_total](TensorImpl& o) {
            std::int64_t offset = 0;
            for (const auto& p : parents) {
                const std::int64_t chunk =
                    static_cast<std::int64_t>(p->data.size()) / (outer == 0 ? 1 : outer);
                if (p->requires_grad) {
                    p->ensure_grad();
                    for (std::int64_t ob = 0; ob < outer; ++ob)
                        for (std::int64_t i = 0; i < chunk; ++i)
                            p->grad[static_cast<std::size_t>(ob * chunk + i)] +=
                                o.grad[static_cast<std::size_t>(ob * axis_total * inner + offset + i)];
                }
                offset += chunk;
            }
        };
    }
    return out;
}

Tensor nearest_upsample2d(const Tensor& input, int factor) {
    check_dims(input.ndim() == 4, "nearest_upsample2d: input must be [B,C,H,W]");
    if (factor < 1) throw GeometryError("nearest_upsample2d: factor must be >= 1");
    const std::int64_t BC = input.dim(0) * input.dim(1), H = input.dim(2), W = input.dim(3);
    const std::int64_t Ho = H * factor, Wo = W * factor;
    Tensor out = make_result({input.dim(0), input.dim(1), Ho, Wo}, {input});
    const scalar* x = input.data().data();
    scalar* y = out.data().data();
    for (std::int64_t bc = 0; bc < BC; ++bc)
        for (std::int64_t oh = 0; oh < Ho; ++oh)
            for (std::int64_t ow = 0; ow < Wo; ++ow)
                y[(bc * Ho + oh) * Wo + ow] = x[(bc * H + oh / factor) * W + ow / factor];

    if (out.impl()->requires_grad) {
        auto xi = input.impl();
        out.impl()->backward_fn = [xi, BC, H, W, Ho, Wo, factor](TensorImpl& o) {
            if (!xi->requires_grad) return;
            xi->ensure_grad();
            for (std::int64_t bc = 0; bc < BC; ++bc)
                for (std::int64_t oh = 0; oh < Ho; ++oh)
                    for (std::int64_t ow = 0; ow < Wo; ++ow)
                        xi->grad[static_cast<std::size_t>((bc * H + oh / factor) * W + ow / factor)] +=
                            o.grad[static_cast<std::size_t>((bc * Ho + oh) * Wo + ow)];
        };
    }
    return out;
}

Tensor reshape(const Tensor& input, std::vector<std::int64_t> shape) {
    std::int64_t n = 1;
    for (auto e : shape) n *= e;
    check_dims(n == input.numel(), "reshape: element count mismatch");
    Tensor out = make_result(std::move(shape), {input});
    out.data() = input.data();
    if (out.impl()->requires_grad) {
        auto xi = input.impl();
        out.impl()->backward_fn = [xi](TensorImpl& o) {
            if (!xi->requires_grad) return;
            xi->ensure_grad();
            for (std::size_t i = 0; i < o.grad.size(); ++i) xi->grad[i] += o.grad[i];
        };
    }
    return out;
}

Tensor permute(const Tensor& input, const std::vector<int>& perm) {
    const std::size_t nd = input.ndim();
    check_dims(perm.size() == nd, "permute: permutation rank mismatch");
    std::vector<std::int64_t> oshape(nd);
    for (std::size_t i = 0; i < nd; ++i) oshape[i] = input.dim(static_cast<std::size_t>(perm[i]));

    std::vector<std::int64_t> istrides(nd, 1);
    for (std::size_t i = nd - 1; i > 0; --i) istrides[i - 1] = istrides[i] * input.dim(i);
    // stride of output axis i in the input buffer
    std::vector<std::int64_t> map(nd);
    for (std::size_t i = 0; i < nd; ++i) map[i] = istrides[static_cast<std::size_t>(perm[i])];

    Tensor out = make_result(oshape, {input});
    const std::int64_t n = out.numel();
    const scalar* x = input.data().data();
    scalar* y = out.data().data();
    auto src_index = [oshape, map, nd](std::int64_t oidx) {
        std::int64_t rem = oidx, src = 0;
        for (std::size_t d = 0; d < nd; ++d) {
            std::int64_t extent = oshape[d];
            std::int64_t block = 1;
            for (std::size_t e = d + 1; e < nd; ++e) block *= oshape[e];
            const std::int64_t coord = (rem / block) % extent;
            rem -= coord * block;
            src += coord * map[d];
        }
        return src;
    };
    for (std::int64_t i = 0; i < n; ++i) y[i] = x[src_index(i)];

    if (out.impl()->requires_grad) {
        auto xi = input.impl();
        out.impl()->backward_fn = [xi, src_index, n](TensorImpl& o) {
            if (!xi->requires_grad) return;
            xi->ensure_grad();
            for (std::int64_t i = 0; i < n; ++i)
                xi->grad[static_cast<std::size_t>(src_index(i))] += o.grad[static_cast<std::size_t>(i)];
        };
    }
    return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
    check_dims(a.shape() == b.shape(), "add: shape mismatch");
    Tensor out = make_result(a.shape(), {a, b});
    const std::int64_t n = a.numel();
    for (std::int64_t i = 0; i < n; ++i) out.data()[static_cast<std::size_t>(i)] =
        a.data()[static_cast<std::size_t>(i)] + b.data()[static_cast<std::size_t>(i)];
    if (out.impl()->requires_grad) {
        auto ai = a.impl(), bi = b.impl();
        out.impl()->backward_fn = [ai, bi](TensorImpl& o) {
            for (auto& p : {ai, bi}) {
                if (!p->requires_grad) continue;
                p->ensure_grad();
                for (std::size_t i = 0; i < o.grad.size(); ++i) p->grad[i] += o.grad[i];
            }
        };
    }
    return out;
}

Tensor scale(const Tensor& a, scalar c) {
    Tensor out = make_result(a.shape(), {a});
    const std::int64_t n = a.numel();
    for (std::int64_t i = 0; i < n; ++i)
        out.data()[static_cast<std::size_t>(i)] = a.data()[static_cast<std::size_t>(i)] * c;
    if (out.impl()->requires_grad) {
        auto ai = a.impl();
        out.impl()->backward_fn = [ai, c](TensorImpl& o) {
            if (!ai->requires_grad) return;
            ai->ensure_grad();
            for (std::size_t i = 0; i < o.grad.size(); ++i) ai->grad[i] += o.grad[i] * c;
        };
    }
    return out;
}

Tensor sum(const Tensor& a) {
    Tensor out = make_result({1}, {a});
    accum acc = 0;
    for (scalar v : a.data()) acc += v;
    out.data()[0] = static_cast<scalar>(acc);
    if (out.impl()->requires_grad) {
        auto ai = a.impl();
        out.impl()->backward_fn = [ai](TensorImpl& o) {
            if (!ai->requires_grad) return;
            ai->ensure_grad();
            for (auto& g : ai->grad) g += o.grad[0];
        };
    }
    return out;
}

Tensor weighted_masked_cross_entropy(const Tensor& logits,
                                     const std::vector<std::uint16_t>& labels,
                                     const std::vector<scalar>& class_weights,
                                     const std::vector<std::uint8_t>& mask) {
    check_dims(logits.ndim() >= 2, "cross_entropy: logits must be [B,C,...]");
    const std::int64_t B = logits.dim(0), C = logits.dim(1);
    const std::int64_t S = logits.numel() / (B * C); // spatial extent per sample
    check_dims(static_cast<std::int64_t>(labels.size()) == B * S, "cross_entropy: label count mismatch");
    check_dims(static_cast<std::int64_t>(mask.size()) == B * S, "cross_entropy: mask size mismatch");
    check_dims(static_cast<std::int64_t>(class_weights.size()) == C,
               "cross_entropy: weight count must equal class count");

    const scalar* x = logits.data().data();
    accum total = 0;
    std::int64_t m_count = 0;
    for (std::int64_t b = 0; b < B; ++b)
        for (std::int64_t s = 0; s < S; ++s) {
            if (!mask[static_cast<std::size_t>(b * S + s)]) continue;
            const std::uint16_t y = labels[static_cast<std::size_t>(b * S + s)];
            if (y >= C)
                throw DataError("cross_entropy: label " + std::to_string(y) +
                                " out of range at voxel index " + std::to_string(b * S + s));
            accum mx = x[(b * C) * S + s];
            for (std::int64_t c = 1; c < C; ++c) mx = std::max(mx, static_cast<accum>(x[(b * C + c) * S + s]));
            accum lse = 0;
            for (std::int64_t c = 0; c < C; ++c) lse += std::exp(static_cast<accum>(x[(b * C + c) * S + s]) - mx);
            lse = std::log(lse) + mx;
            total += class_weights[y] * (lse - static_cast<accum>(x[(b * C + y) * S + s]));
            ++m_count;
        }

    Tensor out = make_result({1}, {logits});
    out.data()[0] = m_count > 0 ? static_cast<scalar>(total / static_cast<accum>(m_count)) : scalar(0);

    if (out.impl()->requires_grad) {
        auto xi = logits.impl();
        out.impl()->backward_fn = [xi, labels, class_weights, mask, B, C, S, m_count](TensorImpl& o) {
            if (!xi->requires_grad || m_count == 0) return;
            xi->ensure_grad();
            const scalar go = o.grad[0];
            const scalar* x = xi->data.data();
            for (std::int64_t b = 0; b < B; ++b)
                for (std::int64_t s = 0; s < S; ++s) {
                    if (!mask[static_cast<std::size_t>(b * S + s)]) continue;
                    const std::uint16_t y = labels[static_cast<std::size_t>(b * S + s)];
                    accum mx = x[(b * C) * S + s];
                    for (std::int64_t c = 1; c < C; ++c)
                        mx = std::max(mx, static_cast<accum>(x[(b * C + c) * S + s]));
                    accum denom = 0;
                    for (std::int64_t c = 0; c < C; ++c)
                        denom += std::exp(static_cast<accum>(x[(b * C + c) * S + s]) - mx);
                    const accum wf = static_cast<accum>(class_weights[y]) * go / static_cast<accum>(m_count);
                    for (std::int64_t c = 0; c < C; ++c) {
                        const accum p = std::exp(static_cast<accum>(x[(b * C + c) * S + s]) - mx) / denom;
                        const accum onehot = (c == y) ? 1.0 : 0.0;
                        xi->grad[static_cast<std::size_t>((b * C + c) * S + s)] +=
                            static_cast<scalar>(wf * (p - onehot));
                    }
                }
        };
    }
    return out;
}

} // namespace lmsc
