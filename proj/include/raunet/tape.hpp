// OpTape: ordered record of executed ops with enough captured state to
// replay the backward pass in exact reverse execution order. Gradients
// accumulate additively when a value feeds multiple consumers. One tape
// per training step, never shared between threads.
#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "raunet/ops.hpp"
#include "raunet/params.hpp"

namespace raunet {

template <typename S>
class TapeT {
public:
    struct Var {
        std::int32_t id = -1;
        bool valid() const { return id >= 0; }
    };

    // --- value tracking ------------------------------------------------

    Var leaf(TensorT<S> value) { return track(std::move(value)); }

    // One Var per store entry per tape: a parameter used twice feeds the
    // same Var, so its gradient accumulates across both uses.
    Var param(const ParameterStoreT<S>& store, ParamId id) {
        if (store_ == nullptr) {
            store_ = &store;
            param_vars_.assign(store.size(), Var{});
        } else {
            RAUNET_CHECK(store_ == &store, "tape bound to a different parameter store");
        }
        Var& slot = param_vars_.at(id.index);
        if (!slot.valid()) slot = track(store.value(id));
        return slot;
    }

    const TensorT<S>& val(Var v) const { return vals_.at(v.id); }

    bool has_grad(Var v) const { return !grads_.at(v.id).empty(); }

    const TensorT<S>& grad(Var v) const {
        RAUNET_CHECK(has_grad(v), "no gradient recorded for var " << v.id);
        return grads_.at(v.id);
    }

    void add_grad(Var v, const TensorT<S>& g) {
        TensorT<S>& slot = grads_.at(v.id);
        if (slot.empty()) {
            slot = g;
        } else {
            RAUNET_CHECK(slot.same_shape(g), "gradient shape mismatch");
            for (std::size_t i = 0; i < g.numel(); ++i) slot[i] += g[i];
        }
    }

    void seed_grad(Var v, TensorT<S> g) {
        RAUNET_CHECK(g.same_shape(val(v)), "seed gradient shape mismatch");
        add_grad(v, g);
    }

    // Runs every recorded op backward in reverse execution order. The root's
    // gradient is seeded with ones unless some gradient is already present.
    void backward(Var root) {
        if (!has_grad(root)) add_grad(root, TensorT<S>::full(val(root).shape(), S(1)));
        for (std::size_t i = nodes_.size(); i-- > 0;) nodes_[i](*this);
    }

    // Adds this tape's parameter gradients into the store's grad buffers.
    void accumulate_param_grads(ParameterStoreT<S>& store) const {
        RAUNET_CHECK(store_ == &store, "tape was not bound to this store");
        for (std::size_t i = 0; i < param_vars_.size(); ++i) {
            const Var v = param_vars_[i];
            if (!v.valid() || !has_grad(v)) continue;
            const TensorT<S>& g = grads_[v.id];
            TensorT<S>& dst = store.grad(i);
            for (std::size_t k = 0; k < g.numel(); ++k) dst[k] += g[k];
        }
    }

    std::size_t num_ops() const { return nodes_.size(); }
    std::size_t num_vars() const { return vals_.size(); }

    // --- recorded ops ----------------------------------------------------

    Var conv2d(Var x, Var w, Var b, std::size_t stride, std::size_t pad) {
        Var y = track(conv2d_forward(val(x), val(w), val(b), stride, pad));
        record([=](TapeT& t) {
            if (!t.has_grad(y)) return;
            auto g = conv2d_backward(t.val(x), t.val(w), stride, pad, t.grad(y));
            t.add_grad(x, g.input);
            t.add_grad(w, g.weight);
            t.add_grad(b, g.bias);
        });
        return y;
    }

    Var linear(Var x, Var w, Var b) {
        Var y = track(linear_forward(val(x), val(w), val(b)));
        record([=](TapeT& t) {
            if (!t.has_grad(y)) return;
            auto g = linear_backward(t.val(x), t.val(w), t.grad(y));
            t.add_grad(x, g.input);
            t.add_grad(w, g.weight);
            t.add_grad(b, g.bias);
        });
        return y;
    }

    Var maxpool2d(Var x) {
        auto out = maxpool2d_forward(val(x));
        Var y = track(std::move(out.output));
        record([x, y, idx = std::move(out.argmax)](TapeT& t) {
            if (!t.has_grad(y)) return;
            t.add_grad(x, maxpool2d_backward(t.val(x).shape(), idx, t.grad(y)));
        });
        return y;
    }

    Var upsample_bilinear2x(Var x) {
        Var y = track(upsample_bilinear2x_forward(val(x)));
        record([=](TapeT& t) {
            if (!t.has_grad(y)) return;
            t.add_grad(x, upsample_bilinear2x_backward(t.val(x).shape(), t.grad(y)));
        });
        return y;
    }

    // Per-channel spatial (avg, max) pair.
    std::pair<Var, Var> channel_stats(Var x) {
        auto st = reduce_channel_stats(val(x));
        Var avg = track(std::move(st.avg));
        Var mx = track(std::move(st.max));
        record([x, avg, mx, idx = std::move(st.argmax)](TapeT& t) {
            const Shape& in_shape = t.val(x).shape();
            if (t.has_grad(avg)) t.add_grad(x, channel_avg_backward(in_shape, t.grad(avg)));
            if (t.has_grad(mx)) t.add_grad(x, channel_max_backward(in_shape, idx, t.grad(mx)));
        });
        return {avg, mx};
    }

    // [B,2,H,W]: plane 0 channel mean, plane 1 channel max.
    Var spatial_stats(Var x) {
        auto st = reduce_spatial_stats(val(x));
        Var y = track(std::move(st.planes));
        record([x, y, idx = std::move(st.argmax)](TapeT& t) {
            if (!t.has_grad(y)) return;
            t.add_grad(x, spatial_stats_backward(t.val(x).shape(), idx, t.grad(y)));
        });
        return y;
    }

    Var leaky_relu(Var x, S alpha) {
        Var y = track(leaky_relu_forward(val(x), alpha));
        record([=](TapeT& t) {
            if (!t.has_grad(y)) return;
            t.add_grad(x, leaky_relu_backward(t.val(x), alpha, t.grad(y)));
        });
        return y;
    }

    Var sigmoid(Var x) {
        Var y = track(sigmoid_forward(val(x)));
        record([=](TapeT& t) {
            if (!t.has_grad(y)) return;
            t.add_grad(x, sigmoid_backward(t.val(y), t.grad(y)));
        });
        return y;
    }

    Var add(Var a, Var b) {
        Var y = track(add_forward(val(a), val(b)));
        record([=](TapeT& t) {
            if (!t.has_grad(y)) return;
            t.add_grad(a, t.grad(y));
            t.add_grad(b, t.grad(y));
        });
        return y;
    }

    // mul(gate, x): same-shape product or one of the two sanctioned gate
    // broadcasts ([B,C] or [B,1,H,W] against [B,C,H,W]).
    Var mul(Var gate, Var x) {
        const MulMode mode = mul_mode(val(gate), val(x));
        Var y = track(mul_forward(val(gate), val(x), mode));
        record([=](TapeT& t) {
            if (!t.has_grad(y)) return;
            auto g = mul_backward(t.val(gate), t.val(x), mode, t.grad(y));
            t.add_grad(gate, g.gate);
            t.add_grad(x, g.x);
        });
        return y;
    }

    Var concat_channels(Var a, Var b) {
        Var y = track(concat_channels_forward(val(a), val(b)));
        record([=](TapeT& t) {
            if (!t.has_grad(y)) return;
            auto parts = split_channels(t.grad(y), t.val(a).extent(1));
            t.add_grad(a, parts.first);
            t.add_grad(b, parts.second);
        });
        return y;
    }

    // Scalar projection sum(x * coeffs); the workhorse for VJP testing.
    Var sum_weighted(Var x, TensorT<S> coeffs) {
        RAUNET_CHECK(coeffs.same_shape(val(x)), "sum_weighted coefficient shape mismatch");
        S acc = 0;
        const TensorT<S>& v = val(x);
        for (std::size_t i = 0; i < v.numel(); ++i) acc += v[i] * coeffs[i];
        Var y = track(TensorT<S>::of({1}, {acc}));
        record([x, y, c = std::move(coeffs)](TapeT& t) {
            if (!t.has_grad(y)) return;
            const S g = t.grad(y)[0];
            TensorT<S> gx(c.shape());
            for (std::size_t i = 0; i < c.numel(); ++i) gx[i] = g * c[i];
            t.add_grad(x, gx);
        });
        return y;
    }

    // For modules that implement their own fused forward/backward (losses).
    Var track(TensorT<S> value) {
        vals_.push_back(std::move(value));
        grads_.emplace_back();
        return Var{static_cast<std::int32_t>(vals_.size() - 1)};
    }

    void record(std::function<void(TapeT&)> backward_fn) { nodes_.push_back(std::move(backward_fn)); }

private:
    std::vector<TensorT<S>> vals_;
    std::vector<TensorT<S>> grads_;
    std::vector<std::function<void(TapeT&)>> nodes_;
    const ParameterStoreT<S>* store_ = nullptr;
    std::vector<Var> param_vars_;
};

using Tape = TapeT<float>;
using Tape64 = TapeT<double>;

}  // namespace raunet
