// Trainable-layer building blocks over the tensor kernel.
#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "raunet/tape.hpp"

namespace raunet {

// Deterministic normal sampler. Box-Muller over explicitly generated
// 53-bit uniforms so the sequence is fully pinned by the seed, independent
// of any library's distribution implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform01() {  // [0,1)
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double normal() {
        const double u1 = 1.0 - uniform01();  // (0,1], keeps log finite
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform integer in [0, n) without distribution-object variance.
    std::uint64_t below(std::uint64_t n) { return engine_() % n; }

private:
    std::mt19937_64 engine_;
};

template <typename S>
void he_fill(Rng& rng, TensorT<S>& t, std::size_t fan_in) {
    RAUNET_CHECK(fan_in >= 1, "fan_in must be positive");
    const double std_dev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (std::size_t i = 0; i < t.numel(); ++i) t[i] = static_cast<S>(rng.normal() * std_dev);
}

// Zero-mean normal with std sqrt(2/fan_in); biases are initialized to zero
// separately (plain zero tensors).
template <typename S>
TensorT<S> he_init(Shape shape, std::size_t fan_in, std::uint64_t seed) {
    Rng rng(seed);
    TensorT<S> t(std::move(shape));
    he_fill(rng, t, fan_in);
    return t;
}

// Conv (stride 1, same padding) followed by LeakyReLU. Spatial extents are
// preserved.
template <typename S>
struct ConvBlockT {
    ParamId w, b;
    std::size_t in_ch = 0, out_ch = 0, ksize = 0;
    S slope = S(0.01);

    ConvBlockT() = default;

    ConvBlockT(ParameterStoreT<S>& store, Rng& rng, const std::string& name, std::size_t in,
               std::size_t out, std::size_t k, S alpha)
        : in_ch(in), out_ch(out), ksize(k), slope(alpha) {
        TensorT<S> weight({out, in, k, k});
        he_fill(rng, weight, in * k * k);
        w = store.add(name + ".w", std::move(weight));
        b = store.add(name + ".b", TensorT<S>({out}));
    }

    typename TapeT<S>::Var forward(TapeT<S>& tape, const ParameterStoreT<S>& store,
                                   typename TapeT<S>::Var x) const {
        auto y = tape.conv2d(x, tape.param(store, w), tape.param(store, b), 1, ksize / 2);
        return tape.leaky_relu(y, slope);
    }

    std::size_t parameter_count() const { return out_ch * in_ch * ksize * ksize + out_ch; }
};

using ConvBlock = ConvBlockT<float>;

}  // namespace raunet
