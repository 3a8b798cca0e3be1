#include "adex/nn/checkpoint.hpp"

#include <fstream>

#include "adex/kvfile.hpp"

namespace adex::nn {

namespace {
constexpr char kMagic[8] = {'A', 'D', 'E', 'X', 'C', 'K', '1', '\0'};

template <class T>
void append(std::vector<unsigned char>& buf, const T& v) {
    const auto* p = reinterpret_cast<const unsigned char*>(&v);
    buf.insert(buf.end(), p, p + sizeof(T));
}

template <class T>
T read_pod(std::ifstream& in, const std::string& path) {
    T v;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw TruncatedFileError(path);
    return v;
}
}  // namespace

void Checkpoint::save(const std::string& path) const {
    std::vector<unsigned char> body;
    append(body, static_cast<std::uint32_t>(entries_.size()));
    for (const auto& [name, e] : entries_) {
        append(body, static_cast<std::uint32_t>(name.size()));
        body.insert(body.end(), name.begin(), name.end());
        append(body, static_cast<std::uint8_t>(e.dtype));
        append(body, static_cast<std::uint32_t>(e.shape.size()));
        for (long d : e.shape) append(body, static_cast<std::uint64_t>(d));
        body.insert(body.end(), e.bytes.begin(), e.bytes.end());
    }
    const std::uint64_t checksum = fnv1a64(body.data(), body.size());

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(kMagic, sizeof(kMagic));
    out.write(reinterpret_cast<const char*>(body.data()), static_cast<std::streamsize>(body.size()));
    out.write(reinterpret_cast<const char*>(&checksum), 8);
    if (!out) throw IoError("write failed for '" + path + "'");
}

Checkpoint Checkpoint::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");

    char magic[8];
    if (!in.read(magic, 8)) throw TruncatedFileError(path);
    if (std::memcmp(magic, kMagic, 8) != 0) throw BadMagicError(path);

    in.seekg(0, std::ios::end);
    const auto file_size = static_cast<std::size_t>(in.tellg());
    if (file_size < 8 + 8) throw TruncatedFileError(path);
    const std::size_t body_size = file_size - 8 - 8;
    in.seekg(8, std::ios::beg);
    std::vector<unsigned char> body(body_size);
    if (!in.read(reinterpret_cast<char*>(body.data()), static_cast<std::streamsize>(body_size)))
        throw TruncatedFileError(path);
    std::uint64_t stored;
    if (!in.read(reinterpret_cast<char*>(&stored), 8)) throw TruncatedFileError(path);
    if (stored != fnv1a64(body.data(), body.size())) throw ChecksumError(path);

    Checkpoint ck;
    std::size_t pos = 0;
    auto take = [&](void* dst, std::size_t n) {
        if (pos + n > body.size()) throw TruncatedFileError(path);
        std::memcpy(dst, body.data() + pos, n);
        pos += n;
    };
    std::uint32_t count;
    take(&count, 4);
    for (std::uint32_t i = 0; i < count; ++i) {
        std::uint32_t name_len;
        take(&name_len, 4);
        std::string name(name_len, '\0');
        take(name.data(), name_len);
        std::uint8_t dtype_raw;
        take(&dtype_raw, 1);
        if (dtype_raw > 3) throw IoError("bad dtype in " + path);
        std::uint32_t ndim;
        take(&ndim, 4);
        CkptEntry e;
        e.dtype = static_cast<Dtype>(dtype_raw);
        e.shape.resize(ndim);
        for (std::uint32_t d = 0; d < ndim; ++d) {
            std::uint64_t dim;
            take(&dim, 8);
            e.shape[d] = static_cast<long>(dim);
        }
        e.bytes.resize(static_cast<std::size_t>(e.numel()) * dtype_size(e.dtype));
        take(e.bytes.data(), e.bytes.size());
        ck.entries_[name] = std::move(e);
    }
    return ck;
}

}  // namespace adex::nn
