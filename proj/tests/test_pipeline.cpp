#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "adex/pipeline/csv.hpp"
#include "adex/pipeline/metrics.hpp"
#include "adex/pipeline/stages.hpp"
#include "helpers.hpp"

using namespace adex;
using namespace adex::pipe;
namespace fs = std::filesystem;

namespace {

std::string mini_config_text(const std::string& out_dir) {
    return "device.duration_ms = 100\n"
           "device.dt_ms = 0.01\n"
           "device.stim_duration_ms = 100\n"
           "device.noise_current_sigma_pA = 2\n"
           "device.noise_param_jitter_rel = 0.002\n"
           "dataset.n = 40\n"
           "dataset.seed = 1\n"
           "dataset.split_seed = 2\n"
           "ae.epochs = 2\n"
           "ae.batch = 16\n"
           "ae.warmup_batches = 4\n"
           "ae.base_lr = 0.001\n"
           "ae.seed = 3\n"
           "snpe.rounds = 1\n"
           "snpe.sims_per_round = 20\n"
           "snpe.batch = 5\n"
           "snpe.n_atoms = 5\n"
           "snpe.max_epochs = 2\n"
           "snpe.patience = 1\n"
           "snpe.seed = 4\n"
           "snpe.target_a = 300\n"
           "snpe.target_b = 500\n"
           "snpe.target_g_tauw = 400\n"
           "snpe.target_v_r = 300\n"
           "snpe.target_seed = 5\n"
           "analysis.n_samples = 30\n"
           "analysis.n_predictive = 2\n"
           "analysis.n_trials = 10\n"
           "analysis.seed = 6\n"
           "pipeline.out_dir = " + out_dir + "\n";
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("trace metric examples") {
    NormalizedTrace a(kTraceLen, 0.5f), b = a;
    TraceMetrics same = trace_metrics(a, b, 0.70, 1000.0);
    CHECK(same.mse == 0.0);
    CHECK(same.spike_count_delta == 0);
    CHECK(same.spike_time_deltas_ms.empty());

    for (auto& v : b) v += 1.0f / 1023.0f;  // one ADC code everywhere
    TraceMetrics offset = trace_metrics(a, b, 0.70, 1000.0);
    CHECK(offset.mse == doctest::Approx(9.56e-7).epsilon(1e-3));
}

TEST_CASE("spike detection matches the integrator's spike count on clean traces") {
    DeviceConfig cfg = test::quiet_config();
    ExperimentResult r = run_experiment_full({200, 300, 500, 300}, cfg, 3);
    REQUIRE(!r.spike_times_ms.empty());
    const std::vector<int> detected = detect_spikes(r.normalized, 0.70);
    CHECK(detected.size() == r.spike_times_ms.size());
}

TEST_CASE("repeated trials at the same codes have a small spike-count delta") {
    DeviceConfig cfg = test::quiet_config();
    cfg.noise.current_sigma_pA = 5.0;
    cfg.noise.param_jitter_rel = 0.005;
    NormalizedTrace t1 = run_experiment({300, 500, 400, 300}, cfg, 8);
    NormalizedTrace t2 = run_experiment({300, 500, 400, 300}, cfg, 9);
    TraceMetrics m = trace_metrics(t1, t2, 0.70, cfg.duration_ms);
    CHECK(m.spike_count_delta <= 2);
    CHECK(m.mse < 0.05);
}

TEST_CASE("csv round-trips losslessly") {
    CsvTable t;
    t.comments = {"a comment"};
    t.header = {"x", "y"};
    t.rows = {{1.0, 2.5}, {3.25, -4.0}, {1e-6, 9.5e8}};
    const std::string path = (fs::temp_directory_path() / "adex_test.csv").string();
    write_csv(path, t);
    CsvTable back = read_csv(path);
    CHECK(back.header == t.header);
    REQUIRE(back.rows.size() == t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i)
        for (std::size_t j = 0; j < t.rows[i].size(); ++j)
            CHECK(back.rows[i][j] == doctest::Approx(t.rows[i][j]).epsilon(1e-9));
    CHECK(back.comments.size() == 1);
    fs::remove(path);
}

TEST_CASE("pearson correlation sanity") {
    std::vector<double> x{1, 2, 3, 4, 5}, y{2, 4, 6, 8, 10}, z{5, 4, 3, 2, 1};
    CHECK(pearson(x, y) == doctest::Approx(1.0));
    CHECK(pearson(x, z) == doctest::Approx(-1.0));
}

TEST_CASE("simulate subcommand: 1024 rows, deterministic, hash in header") {
    const std::string dir = (fs::temp_directory_path() / "adex_sim_test").string();
    fs::create_directories(dir);
    RunConfig cfg = RunConfig::from_kv(KvFile::parse_text(mini_config_text(dir)));

    const std::string p1 = dir + "/t1.csv", p2 = dir + "/t2.csv";
    cmd_simulate(cfg, cfg.target_codes, 5, p1, dir + "/spikes.csv");
    cmd_simulate(cfg, cfg.target_codes, 5, p2);
    CHECK(slurp(p1) == slurp(p2));

    CsvTable t = read_csv(p1);
    CHECK(t.rows.size() == 1024);
    CHECK(t.header == std::vector<std::string>{"time_ms", "value"});
    bool has_hash = false;
    for (const auto& c : t.comments) has_hash = has_hash || c.find("device_config_hash") != std::string::npos;
    CHECK(has_hash);
    CHECK(read_csv(dir + "/spikes.csv").header == std::vector<std::string>{"spike_time_ms"});
    fs::remove_all(dir);
}

TEST_CASE("stage hashes change exactly with their config sections") {
    const std::string dir = (fs::temp_directory_path() / "adex_hash_test").string();
    RunConfig a = RunConfig::from_kv(KvFile::parse_text(mini_config_text(dir)));
    RunConfig b = a;
    CHECK(a.stage_hash("gen-dataset") == b.stage_hash("gen-dataset"));
    CHECK(a.hash() == b.hash());

    b.analysis_samples = 60;  // analysis-only change
    CHECK(a.stage_hash("gen-dataset") == b.stage_hash("gen-dataset"));
    CHECK(a.stage_hash("infer") == b.stage_hash("infer"));
    CHECK(a.stage_hash("analyze") != b.stage_hash("analyze"));
    CHECK(a.hash() != b.hash());

    RunConfig c = a;
    c.dataset_n = 50;  // upstream change propagates to every later stage
    CHECK(a.stage_hash("gen-dataset") != c.stage_hash("gen-dataset"));
    CHECK(a.stage_hash("train-ae") != c.stage_hash("train-ae"));
    CHECK(a.stage_hash("analyze") != c.stage_hash("analyze"));
}

TEST_CASE("seeds must be explicit for stages with randomness") {
    KvFile kv = KvFile::parse_text("dataset.n = 10\n");
    CHECK_THROWS_AS(require_explicit_seed(kv, "gen-dataset"), ConfigError);
    kv.set("dataset.seed", "7");
    CHECK_NOTHROW(require_explicit_seed(kv, "gen-dataset"));
}

TEST_CASE("pipeline runs, resumes idempotently and redoes downstream stages") {
    const std::string dir = (fs::temp_directory_path() / "adex_pipe_test").string();
    fs::remove_all(dir);
    fs::create_directories(dir);
    RunConfig cfg = RunConfig::from_kv(KvFile::parse_text(mini_config_text(dir)));

    PipelineResult r1 = cmd_pipeline(cfg);
    REQUIRE(r1.stages.size() == 4);
    for (const auto& s : r1.stages) CHECK(!s.skipped);
    CHECK(r1.analyzed);
    CHECK(fs::exists(dir + "/manifest.json"));
    CHECK(fs::exists(dir + "/dataset.bin"));
    CHECK(fs::exists(dir + "/ae_best.ckpt"));
    CHECK(fs::exists(dir + "/posterior.ckpt"));
    CHECK(fs::exists(dir + "/predictive_report.json"));
    CHECK(fs::exists(dir + "/posterior_samples.csv"));

    // sample CSV: n rows x 4 columns plus header
    CsvTable samples = read_csv(dir + "/posterior_samples.csv");
    CHECK(samples.rows.size() == 30);
    CHECK(samples.header.size() == 4);

    // identical rerun skips every stage
    PipelineResult r2 = cmd_pipeline(cfg);
    for (const auto& s : r2.stages) CHECK(s.skipped);

    // deleting the flow checkpoint redoes only inference and analysis
    fs::remove(dir + "/posterior.ckpt");
    PipelineResult r3 = cmd_pipeline(cfg);
    CHECK(r3.stages[0].skipped);
    CHECK(r3.stages[1].skipped);
    CHECK(!r3.stages[2].skipped);
    CHECK(!r3.stages[3].skipped);

    fs::remove_all(dir);
}
