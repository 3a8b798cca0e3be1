#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "adex/errors.hpp"
#include "adex/pipeline/stages.hpp"

using namespace adex;

namespace {

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides;  // key=value
    std::string seed;                    // stage seed override
    std::string out_dir;
    bool verbose = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("-c,--config", args.config_path, "run configuration file (key=value)")
        ->required();
    cmd->add_option("--set", args.overrides, "override a config key, e.g. --set snpe.rounds=5");
    cmd->add_option("--seed", args.seed, "seed for this stage (overrides the config key)");
    cmd->add_option("-o,--out", args.out_dir, "output directory (overrides pipeline.out_dir)");
    cmd->add_flag("-v,--verbose", args.verbose, "progress output on stderr");
}

const char* seed_key_for(const std::string& stage) {
    if (stage == "gen-dataset") return "dataset.seed";
    if (stage == "train-ae") return "ae.seed";
    if (stage == "infer") return "snpe.seed";
    if (stage == "analyze") return "analysis.seed";
    if (stage == "simulate") return "snpe.target_seed";
    return nullptr;
}

KvFile parsed_config(const CommonArgs& args, const std::string& stage) {
    KvFile kv = KvFile::load(args.config_path);
    for (const auto& ov : args.overrides) {
        const std::size_t eq = ov.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + ov + "'");
        kv.set(ov.substr(0, eq), ov.substr(eq + 1));
    }
    if (!args.seed.empty()) {
        const char* key = seed_key_for(stage);
        if (key) kv.set(key, args.seed);
    }
    if (!args.out_dir.empty()) kv.set("pipeline.out_dir", args.out_dir);
    if (stage == "pipeline") {
        for (const char* st : {"gen-dataset", "train-ae", "infer", "analyze"})
            pipe::require_explicit_seed(kv, st);
    } else {
        pipe::require_explicit_seed(kv, stage);
    }
    return kv;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"virtual AdEx device, autoencoder embedding and SNPE inference"};
    app.require_subcommand(1);

    CommonArgs sim_args, gen_args, ae_args, infer_args, analyze_args, pipe_args;
    std::vector<int> sim_codes;
    std::string sim_trace_out = "trace.csv", sim_spikes_out;

    CLI::App* sim = app.add_subcommand("simulate", "run one experiment and write the trace CSV");
    add_common(sim, sim_args);
    sim->add_option("--codes", sim_codes, "digital codes: a b g_tauw v_r (defaults to snpe.target_*)")
        ->expected(4);
    sim->add_option("--trace-out", sim_trace_out, "trace CSV path");
    sim->add_option("--spikes-out", sim_spikes_out, "spike-time CSV path (optional)");

    CLI::App* gen = app.add_subcommand("gen-dataset", "generate the trace/parameter dataset");
    add_common(gen, gen_args);
    CLI::App* ae = app.add_subcommand("train-ae", "train the autoencoder on the dataset");
    add_common(ae, ae_args);
    CLI::App* infer = app.add_subcommand("infer", "multi-round SNPE against the target observation");
    add_common(infer, infer_args);
    CLI::App* analyze = app.add_subcommand("analyze", "posterior samples and predictive checks");
    add_common(analyze, analyze_args);
    CLI::App* pipeline = app.add_subcommand("pipeline", "full run: generate, train, infer, analyze");
    add_common(pipeline, pipe_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            const KvFile kv = parsed_config(sim_args, "simulate");
            const pipe::RunConfig cfg = pipe::RunConfig::from_kv(kv);
            DigitalParams codes = cfg.target_codes;
            if (sim_codes.size() == 4) codes = {sim_codes[0], sim_codes[1], sim_codes[2], sim_codes[3]};
            pipe::cmd_simulate(cfg, codes, cfg.target_seed, sim_trace_out, sim_spikes_out);
            if (sim_args.verbose) std::fprintf(stderr, "wrote %s\n", sim_trace_out.c_str());
            return 0;
        }

        const CommonArgs& args = gen->parsed()       ? gen_args
                                 : ae->parsed()      ? ae_args
                                 : infer->parsed()   ? infer_args
                                 : analyze->parsed() ? analyze_args
                                                     : pipe_args;
        const std::string stage = gen->parsed()       ? "gen-dataset"
                                  : ae->parsed()      ? "train-ae"
                                  : infer->parsed()   ? "infer"
                                  : analyze->parsed() ? "analyze"
                                                      : "pipeline";
        const KvFile kv = parsed_config(args, stage);
        const pipe::RunConfig cfg = pipe::RunConfig::from_kv(kv);
        std::filesystem::create_directories(cfg.out_dir);

        if (stage == "gen-dataset") pipe::stage_gen_dataset(cfg, args.verbose);
        else if (stage == "train-ae") pipe::stage_train_ae(cfg, args.verbose);
        else if (stage == "infer") pipe::stage_infer(cfg, args.verbose);
        else if (stage == "analyze") pipe::stage_analyze(cfg, args.verbose);
        else pipe::cmd_pipeline(cfg, args.verbose);
        return 0;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    }
}
