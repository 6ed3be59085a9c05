#include "raunet/params.hpp"

#include <cstring>
#include <fstream>

namespace raunet {

namespace {
constexpr char kCkptMagic[4] = {'C', 'K', 'P', 'T'};
}

void write_ckpt(const std::filesystem::path& path,
                const std::vector<std::pair<std::string, const Tensor*>>& records) {
    std::ofstream os(path, std::ios::binary);
    RAUNET_CHECK(os.good(), "cannot open " << path.string() << " for writing");
    os.write(kCkptMagic, 4);
    const std::uint32_t count = static_cast<std::uint32_t>(records.size());
    os.write(reinterpret_cast<const char*>(&count), 4);
    for (const auto& [name, tensor] : records) {
        const std::uint32_t len = static_cast<std::uint32_t>(name.size());
        os.write(reinterpret_cast<const char*>(&len), 4);
        os.write(name.data(), len);
        write_tensor(os, *tensor);
    }
    RAUNET_CHECK(os.good(), "write failed for " << path.string());
}

std::vector<std::pair<std::string, Tensor>> read_ckpt(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is.good()) throw IoError(IoErrorKind::NotFound, "cannot open " + path.string());
    char magic[4] = {};
    is.read(magic, 4);
    if (!is) throw IoError(IoErrorKind::Truncated, "truncated checkpoint header");
    if (std::memcmp(magic, kCkptMagic, 4) != 0)
        throw IoError(IoErrorKind::BadMagic, "bad checkpoint magic, expected CKPT");
    std::uint32_t count = 0;
    is.read(reinterpret_cast<char*>(&count), 4);
    if (!is) throw IoError(IoErrorKind::Truncated, "truncated checkpoint count");

    std::vector<std::pair<std::string, Tensor>> records;
    records.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        std::uint32_t len = 0;
        is.read(reinterpret_cast<char*>(&len), 4);
        if (!is) throw IoError(IoErrorKind::Truncated, "truncated record name length");
        std::string name(len, '\0');
        is.read(name.data(), len);
        if (!is) throw IoError(IoErrorKind::Truncated, "truncated record name");
        records.emplace_back(std::move(name), read_tensor(is));
    }
    return records;
}

void save_checkpoint(const ParameterStore& store, const std::filesystem::path& path) {
    std::vector<std::pair<std::string, const Tensor*>> records;
    records.reserve(store.size());
    for (std::size_t i = 0; i < store.size(); ++i) records.emplace_back(store.name(i), &store.value(i));
    write_ckpt(path, records);
}

void load_checkpoint(ParameterStore& store, const std::filesystem::path& path) {
    auto records = read_ckpt(path);
    RAUNET_CHECK(records.size() == store.size(), "checkpoint has " << records.size()
                                                                   << " records, store expects " << store.size());
    // Validate everything first so a bad file leaves the store untouched.
    for (const auto& [name, tensor] : records) {
        const ParamId id = store.find(name);
        RAUNET_CHECK(tensor.shape() == store.value(id).shape(),
                     "checkpoint shape " << shape_str(tensor.shape()) << " mismatches parameter " << name);
    }
    for (auto& [name, tensor] : records) store.value(store.find(name)) = std::move(tensor);
}

}  // namespace raunet
