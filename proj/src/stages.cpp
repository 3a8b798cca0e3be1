#include "adex/pipeline/stages.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "adex/nn/train.hpp"
#include "adex/pipeline/csv.hpp"
#include "adex/pipeline/svg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace adex::pipe {

namespace {

std::string hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

double now_seconds() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

struct Manifest {
    json root;

    static Manifest load_or_empty(const std::string& path) {
        Manifest m;
        std::ifstream in(path);
        if (in) {
            try {
                in >> m.root;
            } catch (const json::exception&) {
                m.root = json::object();
            }
        }
        if (!m.root.is_object()) m.root = json::object();
        if (!m.root.contains("stages")) m.root["stages"] = json::object();
        return m;
    }

    void record(const std::string& stage, std::uint64_t config_hash,
                const std::vector<std::string>& files, const std::string& out_dir, double seconds) {
        json entry;
        entry["config_hash"] = hex(config_hash);
        entry["seconds"] = seconds;
        for (const auto& f : files) entry["files"][f] = hex(file_hash(out_dir + "/" + f));
        root["stages"][stage] = entry;
    }

    bool up_to_date(const std::string& stage, std::uint64_t config_hash,
                    const std::vector<std::string>& files, const std::string& out_dir) const {
        if (!root["stages"].contains(stage)) return false;
        const json& entry = root["stages"][stage];
        if (entry.value("config_hash", "") != hex(config_hash)) return false;
        for (const auto& f : files)
            if (!fs::exists(out_dir + "/" + f)) return false;
        return true;
    }

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::trunc);
        if (!out) throw IoError("cannot write manifest '" + path + "'");
        out << root.dump(2) << "\n";
    }
};

const std::vector<std::string>& stage_files(const std::string& stage) {
    static const std::map<std::string, std::vector<std::string>> files = {
        {"gen-dataset", {"dataset.bin"}},
        {"train-ae", {"ae_best.ckpt", "ae_loss.csv"}},
        {"infer", {"posterior.ckpt", "rounds.jsonl", "x_star.csv"}},
        {"analyze", {"predictive_report.json", "posterior_samples.csv", "predictive_traces.csv"}},
    };
    return files.at(stage);
}

void write_trace_csv(const std::string& path, const NormalizedTrace& trace,
                     const DeviceConfig& device, std::uint64_t config_hash) {
    CsvTable t;
    t.comments.push_back("units: time_ms biological time; value: membrane normalized to [0,1]");
    t.comments.push_back("device_config_hash: " + hex(config_hash));
    t.header = {"time_ms", "value"};
    for (int q = 0; q < kTraceLen; ++q)
        t.rows.push_back({sample_time_ms(q, device.duration_ms), static_cast<double>(trace[q])});
    write_csv(path, t);
}

}  // namespace

std::uint64_t file_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot hash missing file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string bytes = ss.str();
    return fnv1a64(bytes.data(), bytes.size());
}

NormalizedTrace make_target_observation(const RunConfig& cfg) {
    return run_experiment(cfg.target_codes, cfg.device, cfg.target_seed);
}

void cmd_simulate(const RunConfig& cfg, const DigitalParams& codes, std::uint64_t seed,
                  const std::string& trace_path, const std::string& spikes_path) {
    const ExperimentResult r = run_experiment_full(codes, cfg.device, seed);
    write_trace_csv(trace_path, r.normalized, cfg.device, cfg.device.hash());
    if (!spikes_path.empty()) {
        CsvTable t;
        t.header = {"spike_time_ms"};
        for (double s : r.spike_times_ms) t.rows.push_back({s});
        write_csv(spikes_path, t);
    }
}

void stage_gen_dataset(const RunConfig& cfg, bool verbose) {
    if (verbose) std::fprintf(stderr, "[gen-dataset] %lld rows\n", (long long)cfg.dataset_n);
    Dataset ds = generate(cfg.dataset_n, cfg.device, cfg.dataset_seed);
    save(ds, cfg.out_dir + "/dataset.bin");
}

void stage_train_ae(const RunConfig& cfg, bool verbose) {
    Dataset ds = load(cfg.out_dir + "/dataset.bin");
    SplitResult sp = split(ds, cfg.split);
    nn::Autoencoder<float> model = nn::Autoencoder<float>::build(Rng::split(cfg.ae_seed, 42));
    nn::TrainOptions opt;
    opt.epochs = cfg.ae_epochs;
    opt.batch = cfg.ae_batch;
    opt.schedule = cfg.ae_schedule;
    opt.seed = cfg.ae_seed;
    opt.best_ckpt_path = cfg.out_dir + "/ae_best.ckpt";
    opt.loss_csv_path = cfg.out_dir + "/ae_loss.csv";
    opt.verbose = verbose;
    nn::TrainReport report = train_autoencoder(model, sp.train, sp.val, &sp.test, opt);

    std::vector<double> epochs(report.train_loss.size());
    for (std::size_t i = 0; i < epochs.size(); ++i) epochs[i] = static_cast<double>(i + 1);
    SvgSeries train_s{epochs, report.train_loss, "#2040c0", "train"};
    SvgSeries val_s{epochs, report.val_loss, "#c02020", "val"};
    svg_line_plot(cfg.out_dir + "/ae_loss.svg", {train_s, val_s}, "autoencoder training loss",
                  "epoch", "mse");
}

void stage_infer(const RunConfig& cfg, bool verbose) {
    nn::Autoencoder<float> encoder = nn::Autoencoder<float>::build();
    encoder.load_state(nn::Checkpoint::load(cfg.out_dir + "/ae_best.ckpt"));

    const NormalizedTrace x_star = make_target_observation(cfg);
    write_trace_csv(cfg.out_dir + "/x_star.csv", x_star, cfg.device, cfg.device.hash());

    const DeviceConfig device = cfg.device;
    snpe::Simulator sim = [device](const DigitalParams& codes, std::uint64_t seed) {
        return run_experiment(codes, device, seed);
    };
    snpe::PriorBox prior;
    snpe::InferOptions opt;
    opt.artifact_dir = cfg.out_dir;
    opt.verbose = verbose;
    snpe::Posterior posterior =
        snpe::infer(sim, prior, x_star, encoder, cfg.snpe_cfg, cfg.snpe_seed, opt);
    posterior.save(cfg.out_dir + "/posterior.ckpt");
}

PredictiveReport stage_analyze(const RunConfig& cfg, bool verbose) {
    if (verbose) std::fprintf(stderr, "[analyze] %ld posterior samples\n", cfg.analysis_samples);
    snpe::Posterior posterior = snpe::Posterior::load(cfg.out_dir + "/posterior.ckpt");
    const NormalizedTrace x_star = make_target_observation(cfg);
    return analyze_posterior(posterior, cfg, x_star, cfg.out_dir);
}

PipelineResult cmd_pipeline(const RunConfig& cfg, bool verbose) {
    fs::create_directories(cfg.out_dir);
    const std::string manifest_path = cfg.out_dir + "/manifest.json";
    Manifest manifest = Manifest::load_or_empty(manifest_path);
    manifest.root["config_hash"] = hex(cfg.hash());

    PipelineResult result;
    bool upstream_rerun = false;
    const std::vector<std::string> order = {"gen-dataset", "train-ae", "infer", "analyze"};
    for (const auto& stage : order) {
        const std::uint64_t h = cfg.stage_hash(stage);
        StageStatus status;
        status.name = stage;
        if (!upstream_rerun && manifest.up_to_date(stage, h, stage_files(stage), cfg.out_dir)) {
            status.skipped = true;
            if (verbose) std::fprintf(stderr, "[pipeline] %s: up to date, skipping\n", stage.c_str());
            result.stages.push_back(status);
            continue;
        }
        upstream_rerun = true;
        const double t0 = now_seconds();
        try {
            if (stage == "gen-dataset") stage_gen_dataset(cfg, verbose);
            else if (stage == "train-ae") stage_train_ae(cfg, verbose);
            else if (stage == "infer") stage_infer(cfg, verbose);
            else {
                result.report = stage_analyze(cfg, verbose);
                result.analyzed = true;
            }
        } catch (const StageError&) {
            throw;
        } catch (const std::exception& e) {
            throw StageError(stage, e.what());
        }
        status.seconds = now_seconds() - t0;
        manifest.record(stage, h, stage_files(stage), cfg.out_dir, status.seconds);
        manifest.save(manifest_path);
        if (verbose)
            std::fprintf(stderr, "[pipeline] %s: done in %.1fs\n", stage.c_str(), status.seconds);
        result.stages.push_back(status);
    }
    manifest.save(manifest_path);
    return result;
}

}  // namespace adex::pipe
