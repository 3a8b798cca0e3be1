#pragma once

#include <cstdint>
#include <cstring>
#include <map>
#include <string>
#include <vector>

#include "adex/errors.hpp"
#include "adex/nn/tensor.hpp"

namespace adex::nn {

enum class Dtype : std::uint8_t { f32 = 0, f64 = 1, u16 = 2, i64 = 3 };

inline std::size_t dtype_size(Dtype d) {
    switch (d) {
        case Dtype::f32: return 4;
        case Dtype::f64: return 8;
        case Dtype::u16: return 2;
        case Dtype::i64: return 8;
    }
    throw IoError("unknown dtype");
}

struct CkptEntry {
    Dtype dtype = Dtype::f32;
    std::vector<long> shape;
    std::vector<unsigned char> bytes;

    long numel() const { return Tensor<float>::numel_of(shape); }
};

// Named-array container, magic "ADEXCK1\0", with an FNV-1a64 trailer over
// the entry block. Save/load roundtrips are bit-exact.
class Checkpoint {
public:
    void put_raw(const std::string& name, Dtype dtype, std::vector<long> shape,
                 const void* data) {
        CkptEntry e;
        e.dtype = dtype;
        e.shape = std::move(shape);
        e.bytes.resize(static_cast<std::size_t>(e.numel()) * dtype_size(dtype));
        std::memcpy(e.bytes.data(), data, e.bytes.size());
        entries_[name] = std::move(e);
    }

    template <class S>
    void put_array(const std::string& name, const std::vector<long>& shape,
                   const std::vector<S>& values) {
        static_assert(std::is_same_v<S, float> || std::is_same_v<S, double>);
        put_raw(name, std::is_same_v<S, float> ? Dtype::f32 : Dtype::f64, shape, values.data());
    }

    void put_scalar_i64(const std::string& name, std::int64_t v) {
        put_raw(name, Dtype::i64, {1}, &v);
    }
    void put_scalar_f64(const std::string& name, double v) { put_raw(name, Dtype::f64, {1}, &v); }

    bool has(const std::string& name) const { return entries_.count(name) != 0; }

    const CkptEntry& at(const std::string& name) const {
        auto it = entries_.find(name);
        if (it == entries_.end()) throw IoError("checkpoint entry '" + name + "' missing");
        return it->second;
    }

    template <class S>
    std::vector<S> get_array(const std::string& name) const {
        static_assert(std::is_same_v<S, float> || std::is_same_v<S, double>);
        const CkptEntry& e = at(name);
        const Dtype want = std::is_same_v<S, float> ? Dtype::f32 : Dtype::f64;
        if (e.dtype != want) throw IoError("checkpoint entry '" + name + "' has wrong dtype");
        std::vector<S> out(static_cast<std::size_t>(e.numel()));
        std::memcpy(out.data(), e.bytes.data(), e.bytes.size());
        return out;
    }

    std::int64_t get_scalar_i64(const std::string& name) const {
        const CkptEntry& e = at(name);
        if (e.dtype != Dtype::i64 || e.numel() != 1)
            throw IoError("checkpoint entry '" + name + "' is not an i64 scalar");
        std::int64_t v;
        std::memcpy(&v, e.bytes.data(), 8);
        return v;
    }
    double get_scalar_f64(const std::string& name) const {
        const CkptEntry& e = at(name);
        if (e.dtype != Dtype::f64 || e.numel() != 1)
            throw IoError("checkpoint entry '" + name + "' is not an f64 scalar");
        double v;
        std::memcpy(&v, e.bytes.data(), 8);
        return v;
    }

    const std::map<std::string, CkptEntry>& entries() const { return entries_; }

    void save(const std::string& path) const;
    static Checkpoint load(const std::string& path);

private:
    std::map<std::string, CkptEntry> entries_;
};

// Param (de)serialization, including optimizer state.
template <class S>
void put_param(Checkpoint& ck, const Param<S>& p, bool with_adam_state = true) {
    ck.put_array(p.name, p.shape, p.value);
    if (with_adam_state) {
        ck.put_array(p.name + ".adam_m", p.shape, p.adam_m);
        ck.put_array(p.name + ".adam_v", p.shape, p.adam_v);
    }
}

template <class S>
void get_param(const Checkpoint& ck, Param<S>& p) {
    const CkptEntry& e = ck.at(p.name);
    if (e.shape != p.shape) throw IoError("checkpoint entry '" + p.name + "' has wrong shape");
    p.value = ck.get_array<S>(p.name);
    if (ck.has(p.name + ".adam_m")) {
        p.adam_m = ck.get_array<S>(p.name + ".adam_m");
        p.adam_v = ck.get_array<S>(p.name + ".adam_v");
    }
}

}  // namespace adex::nn
