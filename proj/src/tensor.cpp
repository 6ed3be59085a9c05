#include "raunet/tensor.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace raunet {

namespace {

static_assert(std::endian::native == std::endian::little,
              "serialization assumes a little-endian host");

constexpr char kTensorMagic[4] = {'T', 'S', 'R', '1'};

void write_u32(std::ostream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), 4);
}

std::uint32_t read_u32(std::istream& is, const char* what) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 4);
    if (!is) throw IoError(IoErrorKind::Truncated, std::string("truncated while reading ") + what);
    return v;
}

}  // namespace

void write_tensor(std::ostream& os, const Tensor& t) {
    os.write(kTensorMagic, 4);
    const std::uint8_t rank = static_cast<std::uint8_t>(t.rank());
    RAUNET_CHECK(t.rank() <= 255, "rank too large to serialize");
    os.write(reinterpret_cast<const char*>(&rank), 1);
    for (std::size_t i = 0; i < t.rank(); ++i) {
        RAUNET_CHECK(t.extent(i) <= UINT32_MAX, "extent too large to serialize");
        write_u32(os, static_cast<std::uint32_t>(t.extent(i)));
    }
    os.write(reinterpret_cast<const char*>(t.data()),
             static_cast<std::streamsize>(t.numel() * sizeof(float)));
}

Tensor read_tensor(std::istream& is) {
    char magic[4] = {};
    is.read(magic, 4);
    if (!is) throw IoError(IoErrorKind::Truncated, "truncated tensor header");
    if (std::memcmp(magic, kTensorMagic, 4) != 0)
        throw IoError(IoErrorKind::BadMagic, "bad tensor magic, expected TSR1");
    std::uint8_t rank = 0;
    is.read(reinterpret_cast<char*>(&rank), 1);
    if (!is) throw IoError(IoErrorKind::Truncated, "truncated tensor rank");
    Shape shape(rank);
    for (std::size_t i = 0; i < rank; ++i) {
        shape[i] = read_u32(is, "tensor extent");
        if (shape[i] == 0) throw IoError(IoErrorKind::BadValue, "zero extent in serialized tensor");
    }
    std::vector<float> payload(shape_numel(shape));
    is.read(reinterpret_cast<char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(float)));
    if (!is) throw IoError(IoErrorKind::Truncated, "truncated tensor payload");
    return Tensor(std::move(shape), std::move(payload));
}

void save_tensor(const Tensor& t, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    RAUNET_CHECK(os.good(), "cannot open " << path.string() << " for writing");
    write_tensor(os, t);
    RAUNET_CHECK(os.good(), "write failed for " << path.string());
}

Tensor load_tensor(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is.good()) throw IoError(IoErrorKind::NotFound, "cannot open " + path.string());
    return read_tensor(is);
}

}  // namespace raunet
