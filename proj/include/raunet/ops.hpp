// Primitive tensor ops. Every op is a pure function with an explicit
// forward evaluation and a matching vector-Jacobian (backward) evaluation.
// Layout is always B x C x H x W for 4-d values, row-major.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>

#include "raunet/tensor.hpp"

namespace raunet {

template <typename S>
TensorT<S> zeros_like(const TensorT<S>& t) {
    return TensorT<S>(t.shape());
}

namespace detail {
inline void check_bchw(const Shape& s, const char* what) {
    RAUNET_CHECK(s.size() == 4, what << " must be 4-d, got " << shape_str(s));
}
}  // namespace detail

// ---------------------------------------------------------------------------
// conv2d — cross-correlation, no kernel flip.
// ---------------------------------------------------------------------------

template <typename S>
struct Conv2dGrads {
    TensorT<S> input;
    TensorT<S> weight;
    TensorT<S> bias;
};

inline std::size_t conv_out_extent(std::size_t in, std::size_t k, std::size_t stride, std::size_t pad) {
    RAUNET_CHECK(k % 2 == 1, "kernel extent must be odd, got " << k);
    RAUNET_CHECK(in + 2 * pad >= k,
                 "input extent " << in << " with padding " << pad << " smaller than kernel " << k);
    const std::size_t span = in + 2 * pad - k;
    RAUNET_CHECK(span % stride == 0,
                 "non-integer conv output extent: (" << in << " + 2*" << pad << " - " << k << ") % " << stride);
    return span / stride + 1;
}

template <typename S>
void conv2d_check(const TensorT<S>& x, const TensorT<S>& w, const TensorT<S>& b) {
    detail::check_bchw(x.shape(), "conv2d input");
    detail::check_bchw(w.shape(), "conv2d weight");
    RAUNET_CHECK(b.rank() == 1 && b.extent(0) == w.extent(0),
                 "conv2d bias " << shape_str(b.shape()) << " does not match weight " << shape_str(w.shape()));
    RAUNET_CHECK(x.extent(1) == w.extent(1),
                 "conv2d channel mismatch: input " << shape_str(x.shape()) << " has Cin=" << x.extent(1)
                                                   << ", weight " << shape_str(w.shape()) << " expects Cin="
                                                   << w.extent(1));
}

template <typename S>
TensorT<S> conv2d_forward(const TensorT<S>& x, const TensorT<S>& w, const TensorT<S>& b,
                          std::size_t stride, std::size_t pad) {
    conv2d_check(x, w, b);
    RAUNET_CHECK(stride >= 1, "stride must be positive");
    const std::size_t B = x.extent(0), Cin = x.extent(1), H = x.extent(2), W = x.extent(3);
    const std::size_t Cout = w.extent(0), kH = w.extent(2), kW = w.extent(3);
    const std::size_t Ho = conv_out_extent(H, kH, stride, pad);
    const std::size_t Wo = conv_out_extent(W, kW, stride, pad);

    TensorT<S> y({B, Cout, Ho, Wo});
    const S* xd = x.data();
    const S* wd = w.data();
    S* yd = y.data();

    if (stride == 1) {
        // Shift-and-accumulate: for each weight scalar add a shifted input row.
        for (std::size_t n = 0; n < B; ++n) {
            for (std::size_t co = 0; co < Cout; ++co) {
                S* yp = yd + ((n * Cout + co) * Ho) * Wo;
                const S bias = b[co];
                for (std::size_t i = 0; i < Ho * Wo; ++i) yp[i] = bias;
                for (std::size_t ci = 0; ci < Cin; ++ci) {
                    const S* xp = xd + ((n * Cin + ci) * H) * W;
                    const S* wp = wd + ((co * Cin + ci) * kH) * kW;
                    for (std::size_t kh = 0; kh < kH; ++kh) {
                        const std::size_t oh0 = (pad > kh) ? pad - kh : 0;
                        const std::size_t oh1 = std::min(Ho, H + pad - kh);
                        for (std::size_t kw = 0; kw < kW; ++kw) {
                            const S wv = wp[kh * kW + kw];
                            if (wv == S(0)) continue;
                            const std::size_t ow0 = (pad > kw) ? pad - kw : 0;
                            const std::size_t ow1 = std::min(Wo, W + pad - kw);
                            for (std::size_t oh = oh0; oh < oh1; ++oh) {
                                const S* xrow = xp + (oh + kh - pad) * W + (ow0 + kw - pad);
                                S* yrow = yp + oh * Wo + ow0;
                                for (std::size_t i = 0; i < ow1 - ow0; ++i) yrow[i] += wv * xrow[i];
                            }
                        }
                    }
                }
            }
        }
    } else {
        for (std::size_t n = 0; n < B; ++n)
            for (std::size_t co = 0; co < Cout; ++co)
                for (std::size_t oh = 0; oh < Ho; ++oh)
                    for (std::size_t ow = 0; ow < Wo; ++ow) {
                        S acc = b[co];
                        for (std::size_t ci = 0; ci < Cin; ++ci)
                            for (std::size_t kh = 0; kh < kH; ++kh)
                                for (std::size_t kw = 0; kw < kW; ++kw) {
                                    const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh * stride + kh) -
                                                              static_cast<std::ptrdiff_t>(pad);
                                    const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(ow * stride + kw) -
                                                              static_cast<std::ptrdiff_t>(pad);
                                    if (ih < 0 || iw < 0 || ih >= static_cast<std::ptrdiff_t>(H) ||
                                        iw >= static_cast<std::ptrdiff_t>(W))
                                        continue;
                                    acc += w.at4(co, ci, static_cast<std::size_t>(kh), static_cast<std::size_t>(kw)) *
                                           xd[((n * Cin + ci) * H + ih) * W + iw];
                                }
                        yd[((n * Cout + co) * Ho + oh) * Wo + ow] = acc;
                    }
    }
    return y;
}

template <typename S>
Conv2dGrads<S> conv2d_backward(const TensorT<S>& x, const TensorT<S>& w, std::size_t stride,
                               std::size_t pad, const TensorT<S>& gy) {
    const std::size_t B = x.extent(0), Cin = x.extent(1), H = x.extent(2), W = x.extent(3);
    const std::size_t Cout = w.extent(0), kH = w.extent(2), kW = w.extent(3);
    const std::size_t Ho = gy.extent(2), Wo = gy.extent(3);
    RAUNET_CHECK(gy.extent(0) == B && gy.extent(1) == Cout, "conv2d backward: upstream shape "
                                                                 << shape_str(gy.shape()) << " mismatch");

    Conv2dGrads<S> g{TensorT<S>({B, Cin, H, W}), TensorT<S>({Cout, Cin, kH, kW}), TensorT<S>({Cout})};
    const S* xd = x.data();
    const S* wd = w.data();
    const S* gyd = gy.data();

    for (std::size_t co = 0; co < Cout; ++co) {
        S acc = 0;
        for (std::size_t n = 0; n < B; ++n) {
            const S* gp = gyd + ((n * Cout + co) * Ho) * Wo;
            for (std::size_t i = 0; i < Ho * Wo; ++i) acc += gp[i];
        }
        g.bias[co] = acc;
    }

    if (stride == 1) {
        for (std::size_t n = 0; n < B; ++n) {
            for (std::size_t co = 0; co < Cout; ++co) {
                const S* gp = gyd + ((n * Cout + co) * Ho) * Wo;
                for (std::size_t ci = 0; ci < Cin; ++ci) {
                    const S* xp = xd + ((n * Cin + ci) * H) * W;
                    S* gxp = g.input.data() + ((n * Cin + ci) * H) * W;
                    const S* wp = wd + ((co * Cin + ci) * kH) * kW;
                    S* gwp = g.weight.data() + ((co * Cin + ci) * kH) * kW;
                    for (std::size_t kh = 0; kh < kH; ++kh) {
                        const std::size_t oh0 = (pad > kh) ? pad - kh : 0;
                        const std::size_t oh1 = std::min(Ho, H + pad - kh);
                        for (std::size_t kw = 0; kw < kW; ++kw) {
                            const std::size_t ow0 = (pad > kw) ? pad - kw : 0;
                            const std::size_t ow1 = std::min(Wo, W + pad - kw);
                            const S wv = wp[kh * kW + kw];
                            S wacc = 0;
                            for (std::size_t oh = oh0; oh < oh1; ++oh) {
                                const std::size_t xoff = (oh + kh - pad) * W + (ow0 + kw - pad);
                                const S* xrow = xp + xoff;
                                S* gxrow = gxp + xoff;
                                const S* grow = gp + oh * Wo + ow0;
                                const std::size_t len = ow1 - ow0;
                                for (std::size_t i = 0; i < len; ++i) {
                                    wacc += grow[i] * xrow[i];
                                    gxrow[i] += wv * grow[i];
                                }
                            }
                            gwp[kh * kW + kw] += wacc;
                        }
                    }
                }
            }
        }
    } else {
        for (std::size_t n = 0; n < B; ++n)
            for (std::size_t co = 0; co < Cout; ++co)
                for (std::size_t oh = 0; oh < Ho; ++oh)
                    for (std::size_t ow = 0; ow < Wo; ++ow) {
                        const S gv = gyd[((n * Cout + co) * Ho + oh) * Wo + ow];
                        if (gv == S(0)) continue;
                        for (std::size_t ci = 0; ci < Cin; ++ci)
                            for (std::size_t kh = 0; kh < kH; ++kh)
                                for (std::size_t kw = 0; kw < kW; ++kw) {
                                    const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh * stride + kh) -
                                                              static_cast<std::ptrdiff_t>(pad);
                                    const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(ow * stride + kw) -
                                                              static_cast<std::ptrdiff_t>(pad);
                                    if (ih < 0 || iw < 0 || ih >= static_cast<std::ptrdiff_t>(H) ||
                                        iw >= static_cast<std::ptrdiff_t>(W))
                                        continue;
                                    const std::size_t xi = ((n * Cin + ci) * H + ih) * W + iw;
                                    g.input[xi] += w.at4(co, ci, kh, kw) * gv;
                                    g.weight.at4(co, ci, kh, kw) += xd[xi] * gv;
                                }
                    }
    }
    return g;
}

// ---------------------------------------------------------------------------
// maxpool2d — fixed 2x2 window, stride 2. Ties break toward the first
// element in row-major window order so the backward route is deterministic.
// ---------------------------------------------------------------------------

template <typename S>
struct MaxPoolOut {
    TensorT<S> output;
    std::vector<std::uint32_t> argmax;  // flat input index per output element
};

template <typename S>
MaxPoolOut<S> maxpool2d_forward(const TensorT<S>& x) {
    detail::check_bchw(x.shape(), "maxpool2d input");
    const std::size_t B = x.extent(0), C = x.extent(1), H = x.extent(2), W = x.extent(3);
    RAUNET_CHECK(H % 2 == 0 && W % 2 == 0, "maxpool2d requires even extents, got " << shape_str(x.shape()));
    RAUNET_CHECK(x.numel() <= UINT32_MAX, "tensor too large for pooling index record");

    MaxPoolOut<S> out{TensorT<S>({B, C, H / 2, W / 2}), {}};
    out.argmax.resize(out.output.numel());
    const S* xd = x.data();
    S* yd = out.output.data();
    std::size_t oi = 0;
    for (std::size_t nc = 0; nc < B * C; ++nc) {
        const S* plane = xd + nc * H * W;
        for (std::size_t oh = 0; oh < H / 2; ++oh)
            for (std::size_t ow = 0; ow < W / 2; ++ow, ++oi) {
                const std::size_t base = (2 * oh) * W + 2 * ow;
                std::size_t best = base;
                S bv = plane[base];
                const std::size_t cand[3] = {base + 1, base + W, base + W + 1};
                for (std::size_t k = 0; k < 3; ++k)
                    if (plane[cand[k]] > bv) {
                        bv = plane[cand[k]];
                        best = cand[k];
                    }
                yd[oi] = bv;
                out.argmax[oi] = static_cast<std::uint32_t>(nc * H * W + best);
            }
    }
    return out;
}

template <typename S>
TensorT<S> maxpool2d_backward(const Shape& in_shape, const std::vector<std::uint32_t>& argmax,
                              const TensorT<S>& gy) {
    TensorT<S> gx(in_shape);
    for (std::size_t i = 0; i < gy.numel(); ++i) gx[argmax[i]] += gy[i];
    return gx;
}

// ---------------------------------------------------------------------------
// upsample_bilinear2x — corner-aligned: output corners reproduce input
// corners, source coordinate i*(H-1)/(2H-1).
// ---------------------------------------------------------------------------

namespace detail {
struct LerpAxis {
    std::vector<std::size_t> i0, i1;
    std::vector<double> f;  // fraction toward i1
};

inline LerpAxis lerp_axis(std::size_t in, std::size_t out) {
    LerpAxis a;
    a.i0.resize(out);
    a.i1.resize(out);
    a.f.resize(out);
    for (std::size_t o = 0; o < out; ++o) {
        const double src = static_cast<double>(o) * static_cast<double>(in - 1) / static_cast<double>(out - 1);
        const std::size_t lo = std::min(static_cast<std::size_t>(src), in - 1);
        a.i0[o] = lo;
        a.i1[o] = std::min(lo + 1, in - 1);
        a.f[o] = src - static_cast<double>(lo);
    }
    return a;
}
}  // namespace detail

template <typename S>
TensorT<S> upsample_bilinear2x_forward(const TensorT<S>& x) {
    detail::check_bchw(x.shape(), "upsample input");
    const std::size_t B = x.extent(0), C = x.extent(1), H = x.extent(2), W = x.extent(3);
    RAUNET_CHECK(H >= 2 && W >= 2, "upsample_bilinear2x requires H,W >= 2, got " << shape_str(x.shape()));
    const std::size_t Ho = 2 * H, Wo = 2 * W;
    const auto ay = detail::lerp_axis(H, Ho);
    const auto ax = detail::lerp_axis(W, Wo);

    TensorT<S> y({B, C, Ho, Wo});
    const S* xd = x.data();
    S* yd = y.data();
    for (std::size_t nc = 0; nc < B * C; ++nc) {
        const S* plane = xd + nc * H * W;
        S* out = yd + nc * Ho * Wo;
        for (std::size_t oh = 0; oh < Ho; ++oh) {
            const S* r0 = plane + ay.i0[oh] * W;
            const S* r1 = plane + ay.i1[oh] * W;
            const double fy = ay.f[oh];
            for (std::size_t ow = 0; ow < Wo; ++ow) {
                const double fx = ax.f[ow];
                const double v = (1 - fy) * ((1 - fx) * r0[ax.i0[ow]] + fx * r0[ax.i1[ow]]) +
                                 fy * ((1 - fx) * r1[ax.i0[ow]] + fx * r1[ax.i1[ow]]);
                out[oh * Wo + ow] = static_cast<S>(v);
            }
        }
    }
    return y;
}

template <typename S>
TensorT<S> upsample_bilinear2x_backward(const Shape& in_shape, const TensorT<S>& gy) {
    const std::size_t B = in_shape[0], C = in_shape[1], H = in_shape[2], W = in_shape[3];
    const std::size_t Ho = 2 * H, Wo = 2 * W;
    const auto ay = detail::lerp_axis(H, Ho);
    const auto ax = detail::lerp_axis(W, Wo);

    TensorT<S> gx(in_shape);
    const S* gd = gy.data();
    for (std::size_t nc = 0; nc < B * C; ++nc) {
        S* plane = gx.data() + nc * H * W;
        const S* gin = gd + nc * Ho * Wo;
        for (std::size_t oh = 0; oh < Ho; ++oh) {
            const double fy = ay.f[oh];
            S* r0 = plane + ay.i0[oh] * W;
            S* r1 = plane + ay.i1[oh] * W;
            for (std::size_t ow = 0; ow < Wo; ++ow) {
                const double fx = ax.f[ow];
                const S g = gin[oh * Wo + ow];
                r0[ax.i0[ow]] += static_cast<S>((1 - fy) * (1 - fx)) * g;
                r0[ax.i1[ow]] += static_cast<S>((1 - fy) * fx) * g;
                r1[ax.i0[ow]] += static_cast<S>(fy * (1 - fx)) * g;
                r1[ax.i1[ow]] += static_cast<S>(fy * fx) * g;
            }
        }
    }
    return gx;
}

// ---------------------------------------------------------------------------
// reduce_channel_stats — per-channel spatial mean and max.
// ---------------------------------------------------------------------------

template <typename S>
struct ChannelStats {
    TensorT<S> avg;                   // [B,C]
    TensorT<S> max;                   // [B,C]
    std::vector<std::uint32_t> argmax;  // flat input index per (b,c)
};

template <typename S>
ChannelStats<S> reduce_channel_stats(const TensorT<S>& x) {
    detail::check_bchw(x.shape(), "reduce_channel_stats input");
    const std::size_t B = x.extent(0), C = x.extent(1), HW = x.extent(2) * x.extent(3);
    ChannelStats<S> out{TensorT<S>({B, C}), TensorT<S>({B, C}), {}};
    out.argmax.resize(B * C);
    const S* xd = x.data();
    for (std::size_t nc = 0; nc < B * C; ++nc) {
        const S* plane = xd + nc * HW;
        S sum = 0, best = plane[0];
        std::size_t bi = 0;
        for (std::size_t i = 0; i < HW; ++i) {
            sum += plane[i];
            if (plane[i] > best) {
                best = plane[i];
                bi = i;
            }
        }
        out.avg[nc] = sum / static_cast<S>(HW);
        out.max[nc] = best;
        out.argmax[nc] = static_cast<std::uint32_t>(nc * HW + bi);
    }
    return out;
}

template <typename S>
TensorT<S> channel_avg_backward(const Shape& in_shape, const TensorT<S>& g_avg) {
    TensorT<S> gx(in_shape);
    const std::size_t HW = in_shape[2] * in_shape[3];
    const S inv = S(1) / static_cast<S>(HW);
    for (std::size_t nc = 0; nc < g_avg.numel(); ++nc) {
        const S g = g_avg[nc] * inv;
        S* plane = gx.data() + nc * HW;
        for (std::size_t i = 0; i < HW; ++i) plane[i] += g;
    }
    return gx;
}

template <typename S>
TensorT<S> channel_max_backward(const Shape& in_shape, const std::vector<std::uint32_t>& argmax,
                                const TensorT<S>& g_max) {
    TensorT<S> gx(in_shape);
    for (std::size_t nc = 0; nc < g_max.numel(); ++nc) gx[argmax[nc]] += g_max[nc];
    return gx;
}

// ---------------------------------------------------------------------------
// reduce_spatial_stats — per-pixel channel mean (plane 0) and max (plane 1).
// ---------------------------------------------------------------------------

template <typename S>
struct SpatialStats {
    TensorT<S> planes;                  // [B,2,H,W]
    std::vector<std::uint32_t> argmax;  // winning channel per (b,h,w)
};

template <typename S>
SpatialStats<S> reduce_spatial_stats(const TensorT<S>& x) {
    detail::check_bchw(x.shape(), "reduce_spatial_stats input");
    const std::size_t B = x.extent(0), C = x.extent(1), H = x.extent(2), W = x.extent(3);
    const std::size_t HW = H * W;
    SpatialStats<S> out{TensorT<S>({B, std::size_t(2), H, W}), {}};
    out.argmax.resize(B * HW);
    const S* xd = x.data();
    for (std::size_t n = 0; n < B; ++n) {
        const S* batch = xd + n * C * HW;
        S* mean_plane = out.planes.data() + (n * 2) * HW;
        S* max_plane = mean_plane + HW;
        for (std::size_t i = 0; i < HW; ++i) {
            S sum = 0, best = batch[i];
            std::size_t bc = 0;
            for (std::size_t c = 0; c < C; ++c) {
                const S v = batch[c * HW + i];
                sum += v;
                if (v > best) {
                    best = v;
                    bc = c;
                }
            }
            mean_plane[i] = sum / static_cast<S>(C);
            max_plane[i] = best;
            out.argmax[n * HW + i] = static_cast<std::uint32_t>(bc);
        }
    }
    return out;
}

template <typename S>
TensorT<S> spatial_stats_backward(const Shape& in_shape, const std::vector<std::uint32_t>& argmax,
                                  const TensorT<S>& g_planes) {
    const std::size_t B = in_shape[0], C = in_shape[1], HW = in_shape[2] * in_shape[3];
    TensorT<S> gx(in_shape);
    const S inv = S(1) / static_cast<S>(C);
    for (std::size_t n = 0; n < B; ++n) {
        const S* g_mean = g_planes.data() + (n * 2) * HW;
        const S* g_max = g_mean + HW;
        S* gb = gx.data() + n * C * HW;
        for (std::size_t i = 0; i < HW; ++i) {
            const S gm = g_mean[i] * inv;
            for (std::size_t c = 0; c < C; ++c) gb[c * HW + i] += gm;
            gb[argmax[n * HW + i] * HW + i] += g_max[i];
        }
    }
    return gx;
}

// ---------------------------------------------------------------------------
// elementwise
// ---------------------------------------------------------------------------

template <typename S>
TensorT<S> leaky_relu_forward(const TensorT<S>& x, S alpha) {
    TensorT<S> y(x.shape());
    for (std::size_t i = 0; i < x.numel(); ++i) y[i] = x[i] >= S(0) ? x[i] : alpha * x[i];
    return y;
}

template <typename S>
TensorT<S> leaky_relu_backward(const TensorT<S>& x, S alpha, const TensorT<S>& gy) {
    TensorT<S> gx(x.shape());
    for (std::size_t i = 0; i < x.numel(); ++i) gx[i] = x[i] >= S(0) ? gy[i] : alpha * gy[i];
    return gx;
}

template <typename S>
TensorT<S> sigmoid_forward(const TensorT<S>& x) {
    TensorT<S> y(x.shape());
    for (std::size_t i = 0; i < x.numel(); ++i) {
        const S v = x[i];
        if (v >= S(0)) {
            y[i] = S(1) / (S(1) + std::exp(-v));
        } else {
            const S e = std::exp(v);
            y[i] = e / (S(1) + e);
        }
    }
    return y;
}

template <typename S>
TensorT<S> sigmoid_backward(const TensorT<S>& y, const TensorT<S>& gy) {
    TensorT<S> gx(y.shape());
    for (std::size_t i = 0; i < y.numel(); ++i) gx[i] = gy[i] * y[i] * (S(1) - y[i]);
    return gx;
}

template <typename S>
TensorT<S> add_forward(const TensorT<S>& a, const TensorT<S>& b) {
    RAUNET_CHECK(a.same_shape(b),
                 "add shape mismatch: " << shape_str(a.shape()) << " vs " << shape_str(b.shape()));
    TensorT<S> y(a.shape());
    for (std::size_t i = 0; i < a.numel(); ++i) y[i] = a[i] + b[i];
    return y;
}

enum class MulMode {
    Same,         // identical shapes
    ChannelGate,  // [B,C] against [B,C,H,W]
    SpatialGate,  // [B,1,H,W] against [B,C,H,W]
};

// Returns the broadcast mode for mul(a, b) where a is the (possibly smaller)
// gate; throws outside the sanctioned broadcasts.
template <typename S>
MulMode mul_mode(const TensorT<S>& gate, const TensorT<S>& x) {
    if (gate.same_shape(x)) return MulMode::Same;
    if (x.rank() == 4 && gate.rank() == 2 && gate.extent(0) == x.extent(0) && gate.extent(1) == x.extent(1))
        return MulMode::ChannelGate;
    if (x.rank() == 4 && gate.rank() == 4 && gate.extent(0) == x.extent(0) && gate.extent(1) == 1 &&
        gate.extent(2) == x.extent(2) && gate.extent(3) == x.extent(3))
        return MulMode::SpatialGate;
    RAUNET_CHECK(false, "mul shapes " << shape_str(gate.shape()) << " x " << shape_str(x.shape())
                                      << " outside sanctioned broadcasts");
    return MulMode::Same;  // unreachable
}

template <typename S>
TensorT<S> mul_forward(const TensorT<S>& gate, const TensorT<S>& x, MulMode mode) {
    TensorT<S> y(x.shape());
    switch (mode) {
        case MulMode::Same:
            for (std::size_t i = 0; i < x.numel(); ++i) y[i] = gate[i] * x[i];
            break;
        case MulMode::ChannelGate: {
            const std::size_t BC = gate.numel(), HW = x.extent(2) * x.extent(3);
            for (std::size_t nc = 0; nc < BC; ++nc) {
                const S g = gate[nc];
                const S* xi = x.data() + nc * HW;
                S* yi = y.data() + nc * HW;
                for (std::size_t i = 0; i < HW; ++i) yi[i] = g * xi[i];
            }
            break;
        }
        case MulMode::SpatialGate: {
            const std::size_t B = x.extent(0), C = x.extent(1), HW = x.extent(2) * x.extent(3);
            for (std::size_t n = 0; n < B; ++n) {
                const S* g = gate.data() + n * HW;
                for (std::size_t c = 0; c < C; ++c) {
                    const S* xi = x.data() + (n * C + c) * HW;
                    S* yi = y.data() + (n * C + c) * HW;
                    for (std::size_t i = 0; i < HW; ++i) yi[i] = g[i] * xi[i];
                }
            }
            break;
        }
    }
    return y;
}

template <typename S>
struct MulGrads {
    TensorT<S> gate;
    TensorT<S> x;
};

template <typename S>
MulGrads<S> mul_backward(const TensorT<S>& gate, const TensorT<S>& x, MulMode mode, const TensorT<S>& gy) {
    MulGrads<S> g{TensorT<S>(gate.shape()), TensorT<S>(x.shape())};
    switch (mode) {
        case MulMode::Same:
            for (std::size_t i = 0; i < x.numel(); ++i) {
                g.gate[i] = gy[i] * x[i];
                g.x[i] = gy[i] * gate[i];
            }
            break;
        case MulMode::ChannelGate: {
            const std::size_t BC = gate.numel(), HW = x.extent(2) * x.extent(3);
            for (std::size_t nc = 0; nc < BC; ++nc) {
                const S gv = gate[nc];
                const S* xi = x.data() + nc * HW;
                const S* gyi = gy.data() + nc * HW;
                S* gxi = g.x.data() + nc * HW;
                S acc = 0;
                for (std::size_t i = 0; i < HW; ++i) {
                    acc += gyi[i] * xi[i];
                    gxi[i] = gv * gyi[i];
                }
                g.gate[nc] = acc;
            }
            break;
        }
        case MulMode::SpatialGate: {
            const std::size_t B = x.extent(0), C = x.extent(1), HW = x.extent(2) * x.extent(3);
            for (std::size_t n = 0; n < B; ++n) {
                const S* gv = gate.data() + n * HW;
                S* gg = g.gate.data() + n * HW;
                for (std::size_t c = 0; c < C; ++c) {
                    const S* xi = x.data() + (n * C + c) * HW;
                    const S* gyi = gy.data() + (n * C + c) * HW;
                    S* gxi = g.x.data() + (n * C + c) * HW;
                    for (std::size_t i = 0; i < HW; ++i) {
                        gg[i] += gyi[i] * xi[i];
                        gxi[i] = gv[i] * gyi[i];
                    }
                }
            }
            break;
        }
    }
    return g;
}

template <typename S>
TensorT<S> concat_channels_forward(const TensorT<S>& a, const TensorT<S>& b) {
    detail::check_bchw(a.shape(), "concat lhs");
    detail::check_bchw(b.shape(), "concat rhs");
    RAUNET_CHECK(a.extent(0) == b.extent(0) && a.extent(2) == b.extent(2) && a.extent(3) == b.extent(3),
                 "concat_channels B/H/W mismatch: " << shape_str(a.shape()) << " vs " << shape_str(b.shape()));
    const std::size_t B = a.extent(0), Ca = a.extent(1), Cb = b.extent(1);
    const std::size_t HW = a.extent(2) * a.extent(3);
    TensorT<S> y({B, Ca + Cb, a.extent(2), a.extent(3)});
    for (std::size_t n = 0; n < B; ++n) {
        std::copy_n(a.data() + n * Ca * HW, Ca * HW, y.data() + n * (Ca + Cb) * HW);
        std::copy_n(b.data() + n * Cb * HW, Cb * HW, y.data() + (n * (Ca + Cb) + Ca) * HW);
    }
    return y;
}

template <typename S>
std::pair<TensorT<S>, TensorT<S>> split_channels(const TensorT<S>& x, std::size_t c_first) {
    detail::check_bchw(x.shape(), "split input");
    const std::size_t B = x.extent(0), C = x.extent(1);
    RAUNET_CHECK(c_first >= 1 && c_first < C, "split boundary " << c_first << " out of range for C=" << C);
    const std::size_t HW = x.extent(2) * x.extent(3);
    TensorT<S> a({B, c_first, x.extent(2), x.extent(3)});
    TensorT<S> b({B, C - c_first, x.extent(2), x.extent(3)});
    for (std::size_t n = 0; n < B; ++n) {
        std::copy_n(x.data() + n * C * HW, c_first * HW, a.data() + n * c_first * HW);
        std::copy_n(x.data() + (n * C + c_first) * HW, (C - c_first) * HW,
                    b.data() + n * (C - c_first) * HW);
    }
    return {std::move(a), std::move(b)};
}

// ---------------------------------------------------------------------------
// linear — affine map over [B,Cin].
// ---------------------------------------------------------------------------

template <typename S>
struct LinearGrads {
    TensorT<S> input;
    TensorT<S> weight;
    TensorT<S> bias;
};

template <typename S>
TensorT<S> linear_forward(const TensorT<S>& x, const TensorT<S>& w, const TensorT<S>& b) {
    RAUNET_CHECK(x.rank() == 2 && w.rank() == 2 && b.rank() == 1, "linear expects x[B,Cin], w[Cout,Cin], b[Cout]");
    RAUNET_CHECK(x.extent(1) == w.extent(1), "linear inner extent mismatch: x " << shape_str(x.shape())
                                                                                << " vs w " << shape_str(w.shape()));
    RAUNET_CHECK(b.extent(0) == w.extent(0), "linear bias mismatch");
    const std::size_t B = x.extent(0), Cin = x.extent(1), Cout = w.extent(0);
    TensorT<S> y({B, Cout});
    for (std::size_t n = 0; n < B; ++n)
        for (std::size_t o = 0; o < Cout; ++o) {
            S acc = b[o];
            const S* xr = x.data() + n * Cin;
            const S* wr = w.data() + o * Cin;
            for (std::size_t i = 0; i < Cin; ++i) acc += xr[i] * wr[i];
            y[n * Cout + o] = acc;
        }
    return y;
}

template <typename S>
LinearGrads<S> linear_backward(const TensorT<S>& x, const TensorT<S>& w, const TensorT<S>& gy) {
    const std::size_t B = x.extent(0), Cin = x.extent(1), Cout = w.extent(0);
    LinearGrads<S> g{TensorT<S>({B, Cin}), TensorT<S>({Cout, Cin}), TensorT<S>({Cout})};
    for (std::size_t n = 0; n < B; ++n)
        for (std::size_t o = 0; o < Cout; ++o) {
            const S gv = gy[n * Cout + o];
            g.bias[o] += gv;
            const S* xr = x.data() + n * Cin;
            const S* wr = w.data() + o * Cin;
            S* gxr = g.input.data() + n * Cin;
            S* gwr = g.weight.data() + o * Cin;
            for (std::size_t i = 0; i < Cin; ++i) {
                gxr[i] += gv * wr[i];
                gwr[i] += gv * xr[i];
            }
        }
    return g;
}

}  // namespace raunet
