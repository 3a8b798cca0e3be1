#include "adex/dataset.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>

#include "adex/errors.hpp"
#include "adex/kvfile.hpp"
#include "adex/parallel.hpp"
#include "adex/rng.hpp"

namespace adex {

namespace {
constexpr char kMagic[8] = {'A', 'D', 'E', 'X', 'D', 'S', '1', '\0'};
}

DigitalParams Dataset::digital_params(std::int64_t i) const {
    const std::uint16_t* c = codes(i);
    return DigitalParams{c[0], c[1], c[2], c[3]};
}

void Dataset::validate() const {
    if (traces.size() != static_cast<std::size_t>(rows) * kTraceLen)
        throw ShapeError("trace block size does not match row count");
    if (params.size() != static_cast<std::size_t>(rows) * kParamCount)
        throw ShapeError("param block size does not match row count");
    for (float v : traces)
        if (!(v >= 0.0f && v <= 1.0f)) throw RangeError("trace value outside [0,1]");
    for (std::uint16_t c : params)
        if (c > kCodeMax) throw RangeError("param code outside [0,1022]");
}

void SplitSpec::validate() const {
    if (!(train > 0) || !(val > 0) || !(test > 0))
        throw ConfigError("split ratios must be positive");
    if (std::abs(train + val + test - 1.0) > 1e-9)
        throw ConfigError("split ratios must sum to 1");
}

Dataset generate(std::int64_t n, const DeviceConfig& config, std::uint64_t master_seed) {
    if (n < 1) throw RangeError("dataset size must be at least 1");
    config.validate();

    Dataset ds;
    ds.rows = n;
    ds.traces.resize(static_cast<std::size_t>(n) * kTraceLen);
    ds.params.resize(static_cast<std::size_t>(n) * kParamCount);
    ds.config_hash = config.hash();
    ds.master_seed = master_seed;

    std::atomic<std::int64_t> failed_row{-1};
    parallel_for(n, [&](long i) {
        if (failed_row.load(std::memory_order_relaxed) >= 0) return;
        const std::uint64_t row_seed = Rng::split(master_seed, static_cast<std::uint64_t>(i));
        Rng code_rng(Rng::split(row_seed, 0));
        DigitalParams codes;
        codes.a_code = static_cast<int>(code_rng.uniform_int(kCodeMax + 1));
        codes.b_code = static_cast<int>(code_rng.uniform_int(kCodeMax + 1));
        codes.g_tauw_code = static_cast<int>(code_rng.uniform_int(kCodeMax + 1));
        codes.v_r_code = static_cast<int>(code_rng.uniform_int(kCodeMax + 1));
        try {
            NormalizedTrace trace = run_experiment(codes, config, Rng::split(row_seed, 1));
            std::memcpy(ds.traces.data() + static_cast<std::size_t>(i) * kTraceLen, trace.data(),
                        kTraceLen * sizeof(float));
        } catch (const std::exception&) {
            std::int64_t expected = -1;
            failed_row.compare_exchange_strong(expected, i);
            return;
        }
        std::uint16_t* p = ds.params.data() + static_cast<std::size_t>(i) * kParamCount;
        p[0] = static_cast<std::uint16_t>(codes.a_code);
        p[1] = static_cast<std::uint16_t>(codes.b_code);
        p[2] = static_cast<std::uint16_t>(codes.g_tauw_code);
        p[3] = static_cast<std::uint16_t>(codes.v_r_code);
    });
    if (failed_row.load() >= 0)
        throw StageError("generate", "simulation failed at record " + std::to_string(failed_row.load()));
    return ds;
}

SplitSizes split_sizes(std::int64_t n, const SplitSpec& spec) {
    spec.validate();
    if (n < 1) throw RangeError("cannot split an empty dataset");
    SplitSizes s;
    s.val = static_cast<std::int64_t>(std::floor(n * spec.val));
    s.test = static_cast<std::int64_t>(std::floor(n * spec.test));
    s.train = n - s.val - s.test;  // remainder goes to train
    return s;
}

namespace {

Dataset take_rows(const Dataset& ds, const std::vector<std::int64_t>& idx) {
    Dataset out;
    out.rows = static_cast<std::int64_t>(idx.size());
    out.config_hash = ds.config_hash;
    out.master_seed = ds.master_seed;
    out.traces.resize(idx.size() * kTraceLen);
    out.params.resize(idx.size() * kParamCount);
    for (std::size_t j = 0; j < idx.size(); ++j) {
        std::memcpy(out.traces.data() + j * kTraceLen, ds.trace(idx[j]), kTraceLen * sizeof(float));
        std::memcpy(out.params.data() + j * kParamCount, ds.codes(idx[j]),
                    kParamCount * sizeof(std::uint16_t));
    }
    return out;
}

}  // namespace

SplitResult split(const Dataset& ds, const SplitSpec& spec) {
    const SplitSizes sizes = split_sizes(ds.rows, spec);
    std::vector<std::int64_t> order(ds.rows);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(spec.shuffle_seed);
    shuffle(order, rng);

    SplitResult out;
    out.train_idx.assign(order.begin(), order.begin() + sizes.train);
    out.val_idx.assign(order.begin() + sizes.train, order.begin() + sizes.train + sizes.val);
    out.test_idx.assign(order.begin() + sizes.train + sizes.val, order.end());
    out.train = take_rows(ds, out.train_idx);
    out.val = take_rows(ds, out.val_idx);
    out.test = take_rows(ds, out.test_idx);
    return out;
}

void save(const Dataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(kMagic, sizeof(kMagic));
    const std::uint64_t rows = static_cast<std::uint64_t>(ds.rows);
    const std::uint32_t trace_len = kTraceLen, param_count = kParamCount;
    out.write(reinterpret_cast<const char*>(&rows), 8);
    out.write(reinterpret_cast<const char*>(&trace_len), 4);
    out.write(reinterpret_cast<const char*>(&param_count), 4);
    out.write(reinterpret_cast<const char*>(&ds.config_hash), 8);
    out.write(reinterpret_cast<const char*>(&ds.master_seed), 8);
    out.write(reinterpret_cast<const char*>(ds.traces.data()), ds.traces.size() * sizeof(float));
    out.write(reinterpret_cast<const char*>(ds.params.data()),
              ds.params.size() * sizeof(std::uint16_t));
    std::uint64_t checksum = fnv1a64(ds.traces.data(), ds.traces.size() * sizeof(float));
    checksum = fnv1a64(ds.params.data(), ds.params.size() * sizeof(std::uint16_t), checksum);
    out.write(reinterpret_cast<const char*>(&checksum), 8);
    if (!out) throw IoError("write failed for '" + path + "'");
}

Dataset load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    char magic[8];
    if (!in.read(magic, 8)) throw TruncatedFileError(path);
    if (std::memcmp(magic, kMagic, 8) != 0) throw BadMagicError(path);

    std::uint64_t rows;
    std::uint32_t trace_len, param_count;
    Dataset ds;
    if (!in.read(reinterpret_cast<char*>(&rows), 8) ||
        !in.read(reinterpret_cast<char*>(&trace_len), 4) ||
        !in.read(reinterpret_cast<char*>(&param_count), 4) ||
        !in.read(reinterpret_cast<char*>(&ds.config_hash), 8) ||
        !in.read(reinterpret_cast<char*>(&ds.master_seed), 8))
        throw TruncatedFileError(path);
    if (trace_len != kTraceLen || param_count != kParamCount)
        throw IoError("unsupported dataset geometry in " + path);

    ds.rows = static_cast<std::int64_t>(rows);
    ds.traces.resize(rows * kTraceLen);
    ds.params.resize(rows * kParamCount);
    if (!in.read(reinterpret_cast<char*>(ds.traces.data()), ds.traces.size() * sizeof(float)))
        throw TruncatedFileError(path);
    if (!in.read(reinterpret_cast<char*>(ds.params.data()), ds.params.size() * sizeof(std::uint16_t)))
        throw TruncatedFileError(path);
    std::uint64_t stored;
    if (!in.read(reinterpret_cast<char*>(&stored), 8)) throw TruncatedFileError(path);

    std::uint64_t checksum = fnv1a64(ds.traces.data(), ds.traces.size() * sizeof(float));
    checksum = fnv1a64(ds.params.data(), ds.params.size() * sizeof(std::uint16_t), checksum);
    if (stored != checksum) throw ChecksumError(path);
    return ds;
}

}  // namespace adex
