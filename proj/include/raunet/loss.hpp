// Class-imbalance-aware objectives. All losses consume raw logits
// [B,K,H,W] and an integer label raster [B,H,W] where 0 is the ignore
// index and 1..K are classes. Softmax lives in here, computed through
// log-sum-exp.
#pragma once

#include <span>
#include <string>
#include <vector>

#include "raunet/tape.hpp"

namespace raunet {

// Per-class positive weights for classes 1..K (index c-1 holds class c).
struct ClassWeights {
    std::vector<double> w;

    static ClassWeights uniform(std::size_t k, double value = 1.0) {
        return ClassWeights{std::vector<double>(k, value)};
    }
    std::size_t num_classes() const { return w.size(); }
};

// w_c = 1 / ln(1.02 + f_c) with f_c the pixel fraction of class c; a class
// with zero count gets the f=0 weight 1/ln(1.02). Depends only on
// fractions, so it is invariant to scaling all counts.
ClassWeights class_weights_from_counts(const std::vector<std::uint64_t>& counts);

// The binary-form scalar weight (N - sum p) / (sum p). Kept for fidelity
// and testing; the trainer uses per-class weights.
double omega_weight(std::span<const double> predictions);

// JSON map class-name -> weight, insertion-ordered.
std::string class_weights_to_json(const std::vector<std::string>& class_names, const ClassWeights& w);
ClassWeights class_weights_from_json(const std::string& text, const std::vector<std::string>& class_names);

struct LossValue {
    double value = 0.0;
    std::size_t valid_pixels = 0;
};

template <typename S>
struct LossResult {
    LossValue loss;
    TensorT<S> grad_logits;  // empty unless requested
};

enum class LossKind { WeightedXent, Focal, Dice, XentPlusDice };

LossKind loss_kind_from_string(const std::string& s);
std::string loss_kind_to_string(LossKind k);

namespace detail {

template <typename S>
void check_loss_inputs(const TensorT<S>& logits, const U8Raster& labels) {
    RAUNET_CHECK(logits.rank() == 4, "loss logits must be [B,K,H,W], got " << shape_str(logits.shape()));
    RAUNET_CHECK(labels.shape.size() == 3, "labels must be [B,H,W], got " << shape_str(labels.shape));
    RAUNET_CHECK(labels.shape[0] == logits.extent(0) && labels.shape[1] == logits.extent(2) &&
                     labels.shape[2] == logits.extent(3),
                 "labels " << shape_str(labels.shape) << " do not match logits " << shape_str(logits.shape()));
    const std::size_t k = logits.extent(1);
    for (std::size_t i = 0; i < labels.data.size(); ++i)
        RAUNET_CHECK(labels.data[i] <= k,
                     "label " << int(labels.data[i]) << " exceeds K=" << k << " at flat index " << i);
}

// log-sum-exp over the K channel values of one pixel.
template <typename S>
inline double pixel_lse(const S* z, std::size_t k, std::size_t stride) {
    double m = static_cast<double>(z[0]);
    for (std::size_t c = 1; c < k; ++c) m = std::max(m, static_cast<double>(z[c * stride]));
    double s = 0;
    for (std::size_t c = 0; c < k; ++c) s += std::exp(static_cast<double>(z[c * stride]) - m);
    return m + std::log(s);
}

}  // namespace detail

// Weighted mean of per-pixel negative log-likelihoods: sum(w_c * nll) /
// sum(w_c) over valid pixels. Uniform weights of 1.0 make it the plain
// (unweighted) cross-entropy, bit for bit.
template <typename S>
LossResult<S> weighted_xent(const TensorT<S>& logits, const U8Raster& labels, const ClassWeights& weights,
                            bool want_grad) {
    detail::check_loss_inputs(logits, labels);
    const std::size_t B = logits.extent(0), K = logits.extent(1);
    const std::size_t HW = logits.extent(2) * logits.extent(3);
    RAUNET_CHECK(weights.num_classes() == K,
                 "class weights size " << weights.num_classes() << " != K=" << K);

    LossResult<S> out;
    if (want_grad) out.grad_logits = TensorT<S>(logits.shape());
    double num = 0, den = 0;
    for (std::size_t n = 0; n < B; ++n) {
        const S* batch = logits.data() + n * K * HW;
        for (std::size_t i = 0; i < HW; ++i) {
            const std::uint8_t label = labels.data[n * HW + i];
            if (label == 0) continue;
            const std::size_t c = label - 1;
            const double lse = detail::pixel_lse(batch + i, K, HW);
            const double nll = lse - static_cast<double>(batch[c * HW + i]);
            const double w = weights.w[c];
            num += w * nll;
            den += w;
            ++out.loss.valid_pixels;
            if (want_grad) {
                S* g = out.grad_logits.data() + n * K * HW + i;
                for (std::size_t cc = 0; cc < K; ++cc) {
                    const double p = std::exp(static_cast<double>(batch[cc * HW + i]) - lse);
                    g[cc * HW] = static_cast<S>(w * (p - (cc == c ? 1.0 : 0.0)));
                }
            }
        }
    }
    RAUNET_CHECK(out.loss.valid_pixels > 0, "all pixels carry the ignore label");
    out.loss.value = num / den;
    if (want_grad) {
        const S inv = static_cast<S>(1.0 / den);
        for (std::size_t i = 0; i < out.grad_logits.numel(); ++i) out.grad_logits[i] *= inv;
    }
    return out;
}

// -(1-p_t)^gamma * log(p_t), unweighted mean over valid pixels. gamma=0
// reduces to the unweighted cross-entropy bit for bit.
template <typename S>
LossResult<S> focal_loss(const TensorT<S>& logits, const U8Raster& labels, double gamma, bool want_grad) {
    detail::check_loss_inputs(logits, labels);
    RAUNET_CHECK(gamma >= 0, "focal gamma must be >= 0");
    const std::size_t B = logits.extent(0), K = logits.extent(1);
    const std::size_t HW = logits.extent(2) * logits.extent(3);

    LossResult<S> out;
    if (want_grad) out.grad_logits = TensorT<S>(logits.shape());
    double num = 0;
    for (std::size_t n = 0; n < B; ++n) {
        const S* batch = logits.data() + n * K * HW;
        for (std::size_t i = 0; i < HW; ++i) {
            const std::uint8_t label = labels.data[n * HW + i];
            if (label == 0) continue;
            const std::size_t c = label - 1;
            const double lse = detail::pixel_lse(batch + i, K, HW);
            const double nll = lse - static_cast<double>(batch[c * HW + i]);
            const double pt = std::exp(-nll);
            const double mod = std::pow(1.0 - pt, gamma);
            num += mod * nll;
            ++out.loss.valid_pixels;
            if (want_grad) {
                // dphi/dp_t with phi = -(1-p)^gamma log p
                const double dphi_dp =
                    (gamma > 0 ? gamma * std::pow(1.0 - pt, gamma - 1.0) * nll : 0.0) - mod / pt;
                S* g = out.grad_logits.data() + n * K * HW + i;
                for (std::size_t cc = 0; cc < K; ++cc) {
                    const double p = std::exp(static_cast<double>(batch[cc * HW + i]) - lse);
                    const double dpt_dz = pt * ((cc == c ? 1.0 : 0.0) - p);
                    g[cc * HW] = static_cast<S>(dphi_dp * dpt_dz);
                }
            }
        }
    }
    RAUNET_CHECK(out.loss.valid_pixels > 0, "all pixels carry the ignore label");
    const double den = static_cast<double>(out.loss.valid_pixels);
    out.loss.value = num / den;
    if (want_grad) {
        const S inv = static_cast<S>(1.0 / den);
        for (std::size_t i = 0; i < out.grad_logits.numel(); ++i) out.grad_logits[i] *= inv;
    }
    return out;
}

// Soft dice over valid pixels, averaged over classes present in the labels:
// d_c = 1 - (2*sum(p_c y_c) + eps) / (sum(p_c) + sum(y_c) + eps).
template <typename S>
LossResult<S> dice_loss(const TensorT<S>& logits, const U8Raster& labels, double eps, bool want_grad) {
    detail::check_loss_inputs(logits, labels);
    const std::size_t B = logits.extent(0), K = logits.extent(1);
    const std::size_t HW = logits.extent(2) * logits.extent(3);

    LossResult<S> out;
    std::vector<double> inter(K, 0.0), pred_sum(K, 0.0);
    std::vector<std::uint64_t> label_sum(K, 0);
    // Keep per-pixel probabilities for the backward pass.
    std::vector<double> probs;
    if (want_grad) probs.assign(logits.numel(), 0.0);

    for (std::size_t n = 0; n < B; ++n) {
        const S* batch = logits.data() + n * K * HW;
        for (std::size_t i = 0; i < HW; ++i) {
            const std::uint8_t label = labels.data[n * HW + i];
            if (label == 0) continue;
            ++out.loss.valid_pixels;
            const std::size_t c = label - 1;
            const double lse = detail::pixel_lse(batch + i, K, HW);
            ++label_sum[c];
            for (std::size_t cc = 0; cc < K; ++cc) {
                const double p = std::exp(static_cast<double>(batch[cc * HW + i]) - lse);
                pred_sum[cc] += p;
                if (cc == c) inter[cc] += p;
                if (want_grad) probs[n * K * HW + cc * HW + i] = p;
            }
        }
    }
    RAUNET_CHECK(out.loss.valid_pixels > 0, "all pixels carry the ignore label");

    std::size_t present = 0;
    double total = 0;
    for (std::size_t c = 0; c < K; ++c) {
        if (label_sum[c] == 0) continue;
        ++present;
        total += 1.0 - (2.0 * inter[c] + eps) / (pred_sum[c] + static_cast<double>(label_sum[c]) + eps);
    }
    out.loss.value = total / static_cast<double>(present);

    if (want_grad) {
        out.grad_logits = TensorT<S>(logits.shape());
        const double inv_present = 1.0 / static_cast<double>(present);
        std::vector<double> g_p(K);
        for (std::size_t n = 0; n < B; ++n) {
            for (std::size_t i = 0; i < HW; ++i) {
                const std::uint8_t label = labels.data[n * HW + i];
                if (label == 0) continue;
                const std::size_t c = label - 1;
                const double* p = probs.data() + n * K * HW + i;
                double dot = 0;
                for (std::size_t cc = 0; cc < K; ++cc) {
                    if (label_sum[cc] == 0) {
                        g_p[cc] = 0;
                        continue;
                    }
                    const double denom = pred_sum[cc] + static_cast<double>(label_sum[cc]) + eps;
                    const double y = (cc == c) ? 1.0 : 0.0;
                    g_p[cc] = -inv_present * (2.0 * y * denom - (2.0 * inter[cc] + eps)) / (denom * denom);
                    dot += g_p[cc] * p[cc * HW];
                }
                S* g = out.grad_logits.data() + n * K * HW + i;
                for (std::size_t cc = 0; cc < K; ++cc)
                    g[cc * HW] = static_cast<S>(p[cc * HW] * (g_p[cc] - dot));
            }
        }
    }
    return out;
}

// --- tape integration -------------------------------------------------------

template <typename S>
struct TapeLoss {
    typename TapeT<S>::Var var;
    LossValue value;
};

template <typename S>
TapeLoss<S> record_loss(TapeT<S>& tape, typename TapeT<S>::Var logits, LossResult<S> result) {
    auto y = tape.track(TensorT<S>::of({1}, {static_cast<S>(result.loss.value)}));
    tape.record([logits, y, g = std::move(result.grad_logits)](TapeT<S>& t) {
        if (!t.has_grad(y)) return;
        const S scale = t.grad(y)[0];
        TensorT<S> gx(g.shape());
        for (std::size_t i = 0; i < g.numel(); ++i) gx[i] = scale * g[i];
        t.add_grad(logits, gx);
    });
    return {y, result.loss};
}

template <typename S>
TapeLoss<S> weighted_xent_op(TapeT<S>& tape, typename TapeT<S>::Var logits, const U8Raster& labels,
                             const ClassWeights& weights) {
    return record_loss(tape, logits, weighted_xent(tape.val(logits), labels, weights, true));
}

template <typename S>
TapeLoss<S> focal_loss_op(TapeT<S>& tape, typename TapeT<S>::Var logits, const U8Raster& labels,
                          double gamma) {
    return record_loss(tape, logits, focal_loss(tape.val(logits), labels, gamma, true));
}

template <typename S>
TapeLoss<S> dice_loss_op(TapeT<S>& tape, typename TapeT<S>::Var logits, const U8Raster& labels,
                         double eps = 1.0) {
    return record_loss(tape, logits, dice_loss(tape.val(logits), labels, eps, true));
}

}  // namespace raunet
