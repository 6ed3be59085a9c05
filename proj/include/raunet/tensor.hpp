// Dense row-major N-d array. The single value type for activations,
// weights and gradients. float is the compute precision, double the
// verification precision for finite-difference checks.
#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <numeric>
#include <vector>

#include "raunet/common.hpp"

namespace raunet {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) n *= e;
    return n;
}

inline std::string shape_str(const Shape& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

template <typename S>
class TensorT {
public:
    TensorT() = default;

    explicit TensorT(Shape shape) : shape_(std::move(shape)) {
        validate_shape();
        data_.assign(shape_numel(shape_), S(0));
    }

    TensorT(Shape shape, std::vector<S> data) : shape_(std::move(shape)), data_(std::move(data)) {
        validate_shape();
        RAUNET_CHECK(data_.size() == shape_numel(shape_),
                     "element count " << data_.size() << " != product of extents for " << shape_str(shape_));
    }

    static TensorT full(Shape shape, S v) {
        TensorT t(std::move(shape));
        for (S& x : t.data_) x = v;
        return t;
    }

    static TensorT of(Shape shape, std::initializer_list<S> values) {
        return TensorT(std::move(shape), std::vector<S>(values));
    }

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t extent(std::size_t axis) const { return shape_.at(axis); }
    std::size_t numel() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    S* data() { return data_.data(); }
    const S* data() const { return data_.data(); }
    std::vector<S>& storage() { return data_; }
    const std::vector<S>& storage() const { return data_; }

    S& operator[](std::size_t i) { return data_[i]; }
    const S& operator[](std::size_t i) const { return data_[i]; }

    // 4-D accessor for tests and cold paths; hot kernels index manually.
    S& at4(std::size_t b, std::size_t c, std::size_t h, std::size_t w) {
        return data_[((b * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
    }
    const S& at4(std::size_t b, std::size_t c, std::size_t h, std::size_t w) const {
        return data_[((b * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
    }

    bool same_shape(const TensorT& other) const { return shape_ == other.shape_; }

    bool all_finite() const {
        for (S v : data_)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    void check_finite(const char* what) const {
        RAUNET_CHECK(all_finite(), "non-finite value in " << what << " " << shape_str(shape_));
    }

    template <typename T>
    TensorT<T> cast() const {
        std::vector<T> out(data_.size());
        for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<T>(data_[i]);
        return TensorT<T>(shape_, std::move(out));
    }

    bool operator==(const TensorT& other) const { return shape_ == other.shape_ && data_ == other.data_; }

private:
    void validate_shape() const {
        for (std::size_t e : shape_)
            RAUNET_CHECK(e > 0, "zero extent in shape " << shape_str(shape_));
    }

    Shape shape_;
    std::vector<S> data_;
};

using Tensor = TensorT<float>;
using Tensor64 = TensorT<double>;

// Integer raster for labels/masks: value 0 is the ignore index, 1..K are classes.
struct U8Raster {
    Shape shape;
    std::vector<std::uint8_t> data;

    U8Raster() = default;
    explicit U8Raster(Shape s) : shape(std::move(s)), data(shape_numel(shape), 0) {}
    U8Raster(Shape s, std::vector<std::uint8_t> d) : shape(std::move(s)), data(std::move(d)) {
        RAUNET_CHECK(data.size() == shape_numel(shape), "raster size mismatch for " << shape_str(shape));
    }
    std::size_t numel() const { return data.size(); }
    bool operator==(const U8Raster& other) const { return shape == other.shape && data == other.data; }
};

// "TSR1" container: u8 rank, rank x u32 little-endian extents, row-major
// little-endian f32 payload.
void save_tensor(const Tensor& t, const std::filesystem::path& path);
Tensor load_tensor(const std::filesystem::path& path);

// Stream-level variants so other containers can embed tensors.
void write_tensor(std::ostream& os, const Tensor& t);
Tensor read_tensor(std::istream& is);

}  // namespace raunet
