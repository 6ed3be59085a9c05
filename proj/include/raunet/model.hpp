// ResAttUNet assembly: CBAM-gated downsampling stages, a residual CBAM
// bottleneck, CBAM-gated upsampling stages with skip concatenation, and a
// final 1x1 classifier conv emitting raw logits.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "raunet/attention.hpp"

namespace raunet {

struct ModelConfig {
    std::size_t in_bands = 11;
    std::size_t num_classes = 15;
    std::vector<std::size_t> stage_widths = {32, 64, 128, 256, 512};
    std::size_t cbam_ratio = 16;
    std::size_t spatial_kernel = 7;
    double activation_slope = 0.01;
    std::size_t residual_blocks = 3;

    std::size_t downsamplings() const { return stage_widths.size() - 1; }

    void validate() const {
        RAUNET_CHECK(in_bands >= 1, "in_bands must be positive");
        RAUNET_CHECK(num_classes >= 1, "num_classes must be positive");
        RAUNET_CHECK(!stage_widths.empty(), "stage_widths must be nonempty");
        for (std::size_t i = 1; i < stage_widths.size(); ++i)
            RAUNET_CHECK(stage_widths[i] > stage_widths[i - 1], "stage_widths must be strictly increasing");
        RAUNET_CHECK(spatial_kernel % 2 == 1, "spatial_kernel must be odd");
        RAUNET_CHECK(residual_blocks >= 1, "residual_blocks must be positive");
        RAUNET_CHECK(cbam_ratio >= 1, "cbam_ratio must be positive");
    }
};

ModelConfig model_config_from_json_file(const std::filesystem::path& path);
std::string model_config_to_json(const ModelConfig& cfg);

// Two ConvBlocks widen C -> C', CBAM gates the result (the skip output),
// then a 2x2 max-pool halves the spatial extents.
template <typename S>
struct DownBlockT {
    ConvBlockT<S> conv1, conv2;
    CbamT<S> cbam;

    DownBlockT() = default;
    DownBlockT(ParameterStoreT<S>& store, Rng& rng, const std::string& name, std::size_t in,
               std::size_t out, const ModelConfig& cfg)
        : conv1(store, rng, name + ".conv1", in, out, 3, static_cast<S>(cfg.activation_slope)),
          conv2(store, rng, name + ".conv2", out, out, 3, static_cast<S>(cfg.activation_slope)),
          cbam(store, rng, name + ".cbam", out, cfg.cbam_ratio, cfg.spatial_kernel,
               static_cast<S>(cfg.activation_slope)) {}

    // Returns (skip, pooled).
    std::pair<typename TapeT<S>::Var, typename TapeT<S>::Var> forward(
        TapeT<S>& tape, const ParameterStoreT<S>& store, typename TapeT<S>::Var x) const {
        auto f = conv2.forward(tape, store, conv1.forward(tape, store, x));
        auto skip = cbam.forward(tape, store, f);
        return {skip, tape.maxpool2d(skip)};
    }
};

// x + CBAM(ConvBlock(ConvBlock(x))); no activation after the addition, so
// zeroing the branch weights makes the block the exact identity.
template <typename S>
struct ResidualBlockT {
    ConvBlockT<S> conv1, conv2;
    CbamT<S> cbam;

    ResidualBlockT() = default;
    ResidualBlockT(ParameterStoreT<S>& store, Rng& rng, const std::string& name, std::size_t width,
                   const ModelConfig& cfg)
        : conv1(store, rng, name + ".conv1", width, width, 3, static_cast<S>(cfg.activation_slope)),
          conv2(store, rng, name + ".conv2", width, width, 3, static_cast<S>(cfg.activation_slope)),
          cbam(store, rng, name + ".cbam", width, cfg.cbam_ratio, cfg.spatial_kernel,
               static_cast<S>(cfg.activation_slope)) {}

    typename TapeT<S>::Var forward(TapeT<S>& tape, const ParameterStoreT<S>& store,
                                   typename TapeT<S>::Var x) const {
        auto branch = cbam.forward(tape, store, conv2.forward(tape, store, conv1.forward(tape, store, x)));
        return tape.add(x, branch);
    }
};

// Bilinear-upsample the deep map, reduce its channels with a 1x1 conv,
// concatenate the skip, fuse with two ConvBlocks, gate with CBAM.
template <typename S>
struct UpBlockT {
    ParamId halve_w, halve_b;  // plain 1x1 conv, no activation
    ConvBlockT<S> conv1, conv2;
    CbamT<S> cbam;
    std::size_t deep_ch = 0, skip_ch = 0, out_ch = 0;

    UpBlockT() = default;
    UpBlockT(ParameterStoreT<S>& store, Rng& rng, const std::string& name, std::size_t deep,
             std::size_t skip, std::size_t out, const ModelConfig& cfg)
        : deep_ch(deep), skip_ch(skip), out_ch(out) {
        TensorT<S> hw({out, deep, std::size_t(1), std::size_t(1)});
        he_fill(rng, hw, deep);
        halve_w = store.add(name + ".halve.w", std::move(hw));
        halve_b = store.add(name + ".halve.b", TensorT<S>({out}));
        conv1 = ConvBlockT<S>(store, rng, name + ".conv1", out + skip, out, 3,
                              static_cast<S>(cfg.activation_slope));
        conv2 = ConvBlockT<S>(store, rng, name + ".conv2", out, out, 3, static_cast<S>(cfg.activation_slope));
        cbam = CbamT<S>(store, rng, name + ".cbam", out, cfg.cbam_ratio, cfg.spatial_kernel,
                        static_cast<S>(cfg.activation_slope));
    }

    typename TapeT<S>::Var forward(TapeT<S>& tape, const ParameterStoreT<S>& store,
                                   typename TapeT<S>::Var deep, typename TapeT<S>::Var skip) const {
        const Shape& ds = tape.val(deep).shape();
        const Shape& ss = tape.val(skip).shape();
        RAUNET_CHECK(ss[2] == 2 * ds[2] && ss[3] == 2 * ds[3],
                     "up_block: skip extents " << shape_str(ss) << " must double deep " << shape_str(ds));
        RAUNET_CHECK(ds[1] == deep_ch && ss[1] == skip_ch,
                     "up_block channel mismatch: deep " << shape_str(ds) << " skip " << shape_str(ss)
                                                        << " expected " << deep_ch << "/" << skip_ch);
        auto up = tape.upsample_bilinear2x(deep);
        auto reduced = tape.conv2d(up, tape.param(store, halve_w), tape.param(store, halve_b), 1, 0);
        auto fused = conv2.forward(tape, store, conv1.forward(tape, store, tape.concat_channels(reduced, skip)));
        return cbam.forward(tape, store, fused);
    }
};

template <typename S>
class ResAttUNetT {
public:
    using Var = typename TapeT<S>::Var;

    explicit ResAttUNetT(ModelConfig cfg, std::uint64_t seed = 0) : cfg_(std::move(cfg)) {
        cfg_.validate();
        Rng rng(seed);
        const auto& w = cfg_.stage_widths;
        stem_ = ConvBlockT<S>(params_, rng, "stem", cfg_.in_bands, w[0], 3,
                              static_cast<S>(cfg_.activation_slope));
        for (std::size_t i = 0; i + 1 < w.size(); ++i)
            downs_.emplace_back(params_, rng, "down" + std::to_string(i), w[i], w[i + 1], cfg_);
        for (std::size_t i = 0; i < cfg_.residual_blocks; ++i)
            bottleneck_.emplace_back(params_, rng, "res" + std::to_string(i), w.back(), cfg_);
        for (std::size_t i = w.size() - 1; i-- > 0;)
            ups_.emplace_back(params_, rng, "up" + std::to_string(i), w[i + 1], w[i + 1], w[i], cfg_);
        TensorT<S> head_weight({cfg_.num_classes, w[0], std::size_t(1), std::size_t(1)});
        he_fill(rng, head_weight, w[0]);
        head_w_ = params_.add("head.w", std::move(head_weight));
        head_b_ = params_.add("head.b", TensorT<S>({cfg_.num_classes}));
    }

    Var forward(TapeT<S>& tape, Var input) const {
        const Shape& s = tape.val(input).shape();
        RAUNET_CHECK(s.size() == 4 && s[1] == cfg_.in_bands,
                     "model input must be [B," << cfg_.in_bands << ",H,W], got " << shape_str(s));
        const std::size_t div = std::size_t(1) << cfg_.downsamplings();
        RAUNET_CHECK(s[2] % div == 0 && s[3] % div == 0,
                     "input extents " << shape_str(s) << " not divisible by 2^" << cfg_.downsamplings());

        Var x = stem_.forward(tape, params_, input);
        std::vector<Var> skips;
        skips.reserve(downs_.size());
        for (const auto& down : downs_) {
            auto [skip, pooled] = down.forward(tape, params_, x);
            skips.push_back(skip);
            x = pooled;
        }
        for (const auto& block : bottleneck_) x = block.forward(tape, params_, x);
        for (std::size_t i = 0; i < ups_.size(); ++i)
            x = ups_[i].forward(tape, params_, x, skips[skips.size() - 1 - i]);
        return tape.conv2d(x, tape.param(params_, head_w_), tape.param(params_, head_b_), 1, 0);
    }

    // Convenience forward on a fresh tape.
    TensorT<S> forward(const TensorT<S>& input) const {
        TapeT<S> tape;
        return tape.val(forward(tape, tape.leaf(input)));
    }

    const ModelConfig& config() const { return cfg_; }
    ParameterStoreT<S>& params() { return params_; }
    const ParameterStoreT<S>& params() const { return params_; }
    std::size_t parameter_count() const { return params_.total_parameters(); }

private:
    ModelConfig cfg_;
    ParameterStoreT<S> params_;
    ConvBlockT<S> stem_;
    std::vector<DownBlockT<S>> downs_;
    std::vector<ResidualBlockT<S>> bottleneck_;
    std::vector<UpBlockT<S>> ups_;
    ParamId head_w_, head_b_;
};

using ResAttUNet = ResAttUNetT<float>;

}  // namespace raunet
