// CBAM: channel attention followed by spatial attention, applied as
// multiplicative gates. F' = M_c(F) (x) F, F'' = M_s(F') (x) F'.
#pragma once

#include <string>

#include "raunet/nn.hpp"

namespace raunet {

// Reduction ratio clamped so narrow stages keep a hidden width >= 1.
inline std::size_t effective_ratio(std::size_t channels, std::size_t ratio) {
    return std::min(ratio, channels);
}

// Shared two-layer perceptron (C -> C/r -> C) over the pooled avg and max
// channel descriptors; the same weights process both descriptors.
template <typename S>
struct ChannelAttentionT {
    ParamId w1, b1, w2, b2;
    std::size_t channels = 0, hidden = 0;
    S slope = S(0.01);

    ChannelAttentionT() = default;

    ChannelAttentionT(ParameterStoreT<S>& store, Rng& rng, const std::string& name,
                      std::size_t c, std::size_t ratio, S alpha)
        : channels(c), slope(alpha) {
        const std::size_t r = effective_ratio(c, ratio);
        RAUNET_CHECK(c % r == 0, "channel attention: C=" << c << " not divisible by ratio " << r);
        hidden = c / r;
        TensorT<S> weight1({hidden, c});
        he_fill(rng, weight1, c);
        w1 = store.add(name + ".mlp1.w", std::move(weight1));
        b1 = store.add(name + ".mlp1.b", TensorT<S>({hidden}));
        TensorT<S> weight2({c, hidden});
        he_fill(rng, weight2, hidden);
        w2 = store.add(name + ".mlp2.w", std::move(weight2));
        b2 = store.add(name + ".mlp2.b", TensorT<S>({c}));
    }

    // M_c = sigmoid(MLP(avg_c(F)) + MLP(max_c(F))), shape [B,C].
    typename TapeT<S>::Var forward(TapeT<S>& tape, const ParameterStoreT<S>& store,
                                   typename TapeT<S>::Var f) const {
        auto [avg, mx] = tape.channel_stats(f);
        auto mlp = [&](typename TapeT<S>::Var d) {
            auto h = tape.leaky_relu(tape.linear(d, tape.param(store, w1), tape.param(store, b1)), slope);
            return tape.linear(h, tape.param(store, w2), tape.param(store, b2));
        };
        return tape.sigmoid(tape.add(mlp(avg), mlp(mx)));
    }

    std::size_t parameter_count() const { return hidden * channels + hidden + channels * hidden + channels; }
};

// Single conv over the [mean, max] cross-channel planes; gate shape [B,1,H,W].
template <typename S>
struct SpatialAttentionT {
    ParamId w, b;
    std::size_t ksize = 0;

    SpatialAttentionT() = default;

    SpatialAttentionT(ParameterStoreT<S>& store, Rng& rng, const std::string& name, std::size_t k)
        : ksize(k) {
        TensorT<S> weight({std::size_t(1), std::size_t(2), k, k});
        he_fill(rng, weight, 2 * k * k);
        w = store.add(name + ".conv.w", std::move(weight));
        b = store.add(name + ".conv.b", TensorT<S>({1}));
    }

    // M_s = sigmoid(conv_k(reduce_spatial_stats(F'))).
    typename TapeT<S>::Var forward(TapeT<S>& tape, const ParameterStoreT<S>& store,
                                   typename TapeT<S>::Var f) const {
        auto stats = tape.spatial_stats(f);
        auto conv = tape.conv2d(stats, tape.param(store, w), tape.param(store, b), 1, ksize / 2);
        return tape.sigmoid(conv);
    }

    std::size_t parameter_count() const { return 2 * ksize * ksize + 1; }
};

// Channel-then-spatial, never reversed.
template <typename S>
struct CbamT {
    ChannelAttentionT<S> channel;
    SpatialAttentionT<S> spatial;

    CbamT() = default;

    CbamT(ParameterStoreT<S>& store, Rng& rng, const std::string& name, std::size_t c,
          std::size_t ratio, std::size_t spatial_k, S alpha)
        : channel(store, rng, name + ".ca", c, ratio, alpha), spatial(store, rng, name + ".sa", spatial_k) {}

    typename TapeT<S>::Var forward(TapeT<S>& tape, const ParameterStoreT<S>& store,
                                   typename TapeT<S>::Var f) const {
        auto refined = tape.mul(channel.forward(tape, store, f), f);
        return tape.mul(spatial.forward(tape, store, refined), refined);
    }

    std::size_t parameter_count() const { return channel.parameter_count() + spatial.parameter_count(); }
};

using ChannelAttention = ChannelAttentionT<float>;
using SpatialAttention = SpatialAttentionT<float>;
using Cbam = CbamT<float>;

}  // namespace raunet
