#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adex/device.hpp"
#include "adex/neuron.hpp"

namespace adex {

// Rows of (normalized trace, digital codes). Traces are stored in the final
// preprocessed form (kTraceLen float32 in [0,1]); codes as uint16 in
// [0, 1022].
struct Dataset {
    std::int64_t rows = 0;
    std::vector<float> traces;          // rows * kTraceLen, row-major
    std::vector<std::uint16_t> params;  // rows * kParamCount, row-major

    std::uint64_t config_hash = 0;
    std::uint64_t master_seed = 0;

    const float* trace(std::int64_t i) const { return traces.data() + i * kTraceLen; }
    const std::uint16_t* codes(std::int64_t i) const { return params.data() + i * kParamCount; }
    DigitalParams digital_params(std::int64_t i) const;
    void validate() const;
};

struct SplitSpec {
    double train = 0.8, val = 0.1, test = 0.1;
    std::uint64_t shuffle_seed = 0;
    void validate() const;  // ratios positive, sum to 1 within 1e-9
};

// Uniform codes over {0..1022}^4, one simulation per row. Rows parallelize
// over split seeds, so the result is independent of scheduling.
Dataset generate(std::int64_t n, const DeviceConfig& config, std::uint64_t master_seed);

// Floor-based split sizes; the remainder goes to train.
struct SplitSizes {
    std::int64_t train, val, test;
};
SplitSizes split_sizes(std::int64_t n, const SplitSpec& spec);

struct SplitResult {
    Dataset train, val, test;
    std::vector<std::int64_t> train_idx, val_idx, test_idx;  // into the source dataset
};
SplitResult split(const Dataset& ds, const SplitSpec& spec);

// Binary format: magic "ADEXDS1\0", little-endian header (rows u64,
// trace_len u32, param_count u32, config_hash u64, master_seed u64),
// traces as float32, params as uint16, FNV-1a64 checksum of the payload.
void save(const Dataset& ds, const std::string& path);
Dataset load(const std::string& path);

}  // namespace adex
