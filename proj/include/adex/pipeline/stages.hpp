#pragma once

#include <string>
#include <vector>

#include "adex/pipeline/analyze.hpp"
#include "adex/pipeline/config.hpp"

namespace adex::pipe {

// Thin wrapper over run_experiment: writes the normalized trace as CSV
// (time, value) and, when spikes_path is set, the spike times.
void cmd_simulate(const RunConfig& cfg, const DigitalParams& codes, std::uint64_t seed,
                  const std::string& trace_path, const std::string& spikes_path = "");

struct StageStatus {
    std::string name;
    bool skipped = false;
    double seconds = 0;
};

struct PipelineResult {
    std::vector<StageStatus> stages;
    bool analyzed = false;
    PredictiveReport report;
};

// Full run: gen-dataset -> train-ae -> infer -> analyze, with a manifest of
// per-stage config hashes, artifact file hashes and timings. Stages whose
// artifacts exist under a matching config hash are skipped; any stage that
// reruns forces the stages after it to rerun too.
PipelineResult cmd_pipeline(const RunConfig& cfg, bool verbose = false);

// Individual stage entry points (used by the CLI subcommands).
void stage_gen_dataset(const RunConfig& cfg, bool verbose);
void stage_train_ae(const RunConfig& cfg, bool verbose);
void stage_infer(const RunConfig& cfg, bool verbose);
PredictiveReport stage_analyze(const RunConfig& cfg, bool verbose);

// The target observation is a deterministic function of the config.
NormalizedTrace make_target_observation(const RunConfig& cfg);

std::uint64_t file_hash(const std::string& path);  // FNV-1a64 of the bytes

}  // namespace adex::pipe
