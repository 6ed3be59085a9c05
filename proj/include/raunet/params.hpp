// Named, ordered registry of trainable tensors with paired gradient buffers.
#pragma once

#include <filesystem>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "raunet/tensor.hpp"

namespace raunet {

struct ParamId {
    std::size_t index = static_cast<std::size_t>(-1);
    bool valid() const { return index != static_cast<std::size_t>(-1); }
};

template <typename S>
class ParameterStoreT {
public:
    ParamId add(std::string name, TensorT<S> value) {
        RAUNET_CHECK(!by_name_.count(name), "duplicate parameter name: " << name);
        TensorT<S> grad(value.shape());
        by_name_.emplace(name, entries_.size());
        entries_.push_back(Entry{std::move(name), std::move(value), std::move(grad)});
        return ParamId{entries_.size() - 1};
    }

    std::size_t size() const { return entries_.size(); }

    std::size_t total_parameters() const {
        std::size_t n = 0;
        for (const auto& e : entries_) n += e.value.numel();
        return n;
    }

    const std::string& name(std::size_t i) const { return entries_.at(i).name; }
    TensorT<S>& value(std::size_t i) { return entries_.at(i).value; }
    const TensorT<S>& value(std::size_t i) const { return entries_.at(i).value; }
    TensorT<S>& grad(std::size_t i) { return entries_.at(i).grad; }
    const TensorT<S>& grad(std::size_t i) const { return entries_.at(i).grad; }

    TensorT<S>& value(ParamId id) { return value(id.index); }
    const TensorT<S>& value(ParamId id) const { return value(id.index); }
    TensorT<S>& grad(ParamId id) { return grad(id.index); }
    const TensorT<S>& grad(ParamId id) const { return grad(id.index); }

    bool contains(const std::string& name) const { return by_name_.count(name) != 0; }
    ParamId find(const std::string& name) const {
        auto it = by_name_.find(name);
        RAUNET_CHECK(it != by_name_.end(), "unknown parameter: " << name);
        return ParamId{it->second};
    }

    void zero_grads() {
        for (auto& e : entries_)
            std::fill(e.grad.storage().begin(), e.grad.storage().end(), S(0));
    }

private:
    struct Entry {
        std::string name;
        TensorT<S> value;
        TensorT<S> grad;
    };
    std::vector<Entry> entries_;
    std::unordered_map<std::string, std::size_t> by_name_;
};

using ParameterStore = ParameterStoreT<float>;

// "CKPT" container: u32 record count, then per record a u32-length-prefixed
// UTF-8 name followed by a TSR1 tensor.
void write_ckpt(const std::filesystem::path& path,
                const std::vector<std::pair<std::string, const Tensor*>>& records);
std::vector<std::pair<std::string, Tensor>> read_ckpt(const std::filesystem::path& path);

// Whole-store save/load. Loading matches by name against the already
// constructed store; any mismatch rejects the file before touching the store.
void save_checkpoint(const ParameterStore& store, const std::filesystem::path& path);
void load_checkpoint(ParameterStore& store, const std::filesystem::path& path);

}  // namespace raunet
