#pragma once

#include <string>

#include "adex/dataset.hpp"
#include "adex/device.hpp"
#include "adex/nn/optim.hpp"
#include "adex/snpe/snpe.hpp"

namespace adex::pipe {

// Full run configuration, parsed from a flat key=value file with section
// prefixes (device., dataset., ae., snpe., analysis., pipeline.). A
// device.file key pulls in a separate device config; inline device.* keys
// override it. Seeds are explicit, never wall-clock: stage seeds must be
// present in the file (or supplied as flag overrides) before the stage runs.
struct RunConfig {
    DeviceConfig device;

    std::int64_t dataset_n = 5000;
    std::uint64_t dataset_seed = 0;
    SplitSpec split;

    int ae_epochs = 150;
    int ae_batch = 32;
    nn::LrSchedule ae_schedule;
    std::uint64_t ae_seed = 0;

    snpe::RoundConfig snpe_cfg;
    DigitalParams target_codes{500, 500, 500, 500};
    std::uint64_t snpe_seed = 0;
    std::uint64_t target_seed = 0;  // trial seed for generating x_star

    long analysis_samples = 500;
    int analysis_predictive = 4;  // posterior draws simulated for the overlay
    int analysis_trials = 10;     // repeated target-code trials for the baseline
    double spike_threshold = 0.70;
    std::uint64_t analysis_seed = 0;

    std::string out_dir = "out";

    static RunConfig from_kv(const KvFile& kv);
    static RunConfig from_file(const std::string& path);

    KvFile to_kv() const;
    std::uint64_t hash() const { return to_kv().hash(); }

    // cumulative per-stage config hashes for resume decisions
    std::uint64_t stage_hash(const std::string& stage) const;
};

// Stages with randomness refuse to run off an implicit seed: the parsed
// config (plus flag overrides) must name one.
void require_explicit_seed(const KvFile& parsed, const std::string& stage);

}  // namespace adex::pipe
