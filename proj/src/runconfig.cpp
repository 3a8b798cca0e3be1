#include "adex/pipeline/config.hpp"

#include <set>
#include <sstream>

#include "adex/errors.hpp"

namespace adex::pipe {

namespace {

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "device.file",
        "dataset.n", "dataset.seed", "dataset.split_train", "dataset.split_val",
        "dataset.split_test", "dataset.split_seed",
        "ae.epochs", "ae.batch", "ae.base_lr", "ae.warmup_start", "ae.warmup_batches",
        "ae.decay_start_epoch", "ae.decay_factor", "ae.seed",
        "snpe.rounds", "snpe.sims_per_round", "snpe.n_atoms", "snpe.batch",
        "snpe.val_fraction", "snpe.patience", "snpe.max_epochs", "snpe.lr_flow",
        "snpe.lr_encoder", "snpe.freeze_encoder", "snpe.accumulate", "snpe.seed",
        "snpe.target_a", "snpe.target_b", "snpe.target_g_tauw", "snpe.target_v_r",
        "snpe.target_seed",
        "analysis.n_samples", "analysis.n_predictive", "analysis.n_trials",
        "analysis.spike_threshold", "analysis.seed",
        "pipeline.out_dir",
    };
    return keys;
}

std::string fmt(double x) {
    std::ostringstream ss;
    ss.precision(17);
    ss << x;
    return ss.str();
}

}  // namespace

RunConfig RunConfig::from_kv(const KvFile& kv_in) {
    KvFile kv = kv_in;
    if (kv.has("device.file")) {
        KvFile device_file = KvFile::load(kv.get_string("device.file"));
        for (const auto& [k, v] : device_file.entries()) {
            if (k.rfind("device.", 0) != 0)
                throw ConfigError("device file may only contain device.* keys, got '" + k + "'");
            if (!kv.has(k)) kv.set(k, v);  // inline keys win
        }
    }

    for (const auto& [k, v] : kv.entries()) {
        (void)v;
        if (k.rfind("device.", 0) == 0) continue;  // validated by DeviceConfig::from_kv
        if (!known_keys().count(k)) throw ConfigError("unknown key '" + k + "'");
    }

    RunConfig c;
    {
        KvFile device_only;
        for (const auto& [k, v] : kv.entries())
            if (k.rfind("device.", 0) == 0 && k != "device.file") device_only.set(k, v);
        c.device = DeviceConfig::from_kv(device_only);
    }

    c.dataset_n = kv.get_long("dataset.n", c.dataset_n);
    if (kv.has("dataset.seed")) c.dataset_seed = kv.get_u64("dataset.seed");
    c.split.train = kv.get_double("dataset.split_train", c.split.train);
    c.split.val = kv.get_double("dataset.split_val", c.split.val);
    c.split.test = kv.get_double("dataset.split_test", c.split.test);
    c.split.shuffle_seed = kv.get_u64("dataset.split_seed", c.split.shuffle_seed);

    c.ae_epochs = static_cast<int>(kv.get_long("ae.epochs", c.ae_epochs));
    c.ae_batch = static_cast<int>(kv.get_long("ae.batch", c.ae_batch));
    c.ae_schedule.base_lr = kv.get_double("ae.base_lr", c.ae_schedule.base_lr);
    c.ae_schedule.warmup_start = kv.get_double("ae.warmup_start", c.ae_schedule.warmup_start);
    c.ae_schedule.warmup_batches = kv.get_long("ae.warmup_batches", c.ae_schedule.warmup_batches);
    c.ae_schedule.decay_start_epoch =
        static_cast<int>(kv.get_long("ae.decay_start_epoch", c.ae_schedule.decay_start_epoch));
    c.ae_schedule.decay_factor = kv.get_double("ae.decay_factor", c.ae_schedule.decay_factor);
    if (kv.has("ae.seed")) c.ae_seed = kv.get_u64("ae.seed");

    auto& s = c.snpe_cfg;
    s.rounds = static_cast<int>(kv.get_long("snpe.rounds", s.rounds));
    s.sims_per_round = static_cast<int>(kv.get_long("snpe.sims_per_round", s.sims_per_round));
    s.n_atoms = static_cast<int>(kv.get_long("snpe.n_atoms", s.n_atoms));
    s.batch = static_cast<int>(kv.get_long("snpe.batch", s.batch));
    s.val_fraction = kv.get_double("snpe.val_fraction", s.val_fraction);
    s.patience = static_cast<int>(kv.get_long("snpe.patience", s.patience));
    s.max_epochs = static_cast<int>(kv.get_long("snpe.max_epochs", s.max_epochs));
    s.lr_flow = kv.get_double("snpe.lr_flow", s.lr_flow);
    s.lr_encoder = kv.get_double("snpe.lr_encoder", s.lr_encoder);
    s.freeze_encoder = kv.get_bool("snpe.freeze_encoder", s.freeze_encoder);
    s.accumulate = kv.get_bool("snpe.accumulate", s.accumulate);
    if (kv.has("snpe.seed")) c.snpe_seed = kv.get_u64("snpe.seed");
    c.target_codes.a_code = static_cast<int>(kv.get_long("snpe.target_a", c.target_codes.a_code));
    c.target_codes.b_code = static_cast<int>(kv.get_long("snpe.target_b", c.target_codes.b_code));
    c.target_codes.g_tauw_code =
        static_cast<int>(kv.get_long("snpe.target_g_tauw", c.target_codes.g_tauw_code));
    c.target_codes.v_r_code =
        static_cast<int>(kv.get_long("snpe.target_v_r", c.target_codes.v_r_code));
    if (kv.has("snpe.target_seed")) c.target_seed = kv.get_u64("snpe.target_seed");

    c.analysis_samples = kv.get_long("analysis.n_samples", c.analysis_samples);
    c.analysis_predictive = static_cast<int>(kv.get_long("analysis.n_predictive", c.analysis_predictive));
    c.analysis_trials = static_cast<int>(kv.get_long("analysis.n_trials", c.analysis_trials));
    c.spike_threshold = kv.get_double("analysis.spike_threshold", c.spike_threshold);
    if (kv.has("analysis.seed")) c.analysis_seed = kv.get_u64("analysis.seed");

    c.out_dir = kv.get_string("pipeline.out_dir", c.out_dir);

    c.split.validate();
    c.snpe_cfg.validate();
    c.target_codes.validate();
    return c;
}

void require_explicit_seed(const KvFile& parsed, const std::string& stage) {
    static const std::map<std::string, std::string> seed_key = {
        {"gen-dataset", "dataset.seed"},
        {"train-ae", "ae.seed"},
        {"infer", "snpe.seed"},
        {"analyze", "analysis.seed"},
        {"simulate", "snpe.target_seed"},
    };
    auto it = seed_key.find(stage);
    if (it == seed_key.end()) return;
    if (!parsed.has(it->second))
        throw ConfigError("stage '" + stage + "' needs an explicit seed: set " + it->second +
                          " (or pass --seed)");
}

RunConfig RunConfig::from_file(const std::string& path) { return from_kv(KvFile::load(path)); }

KvFile RunConfig::to_kv() const {
    KvFile kv = device.to_kv();
    kv.set("dataset.n", std::to_string(dataset_n));
    kv.set("dataset.seed", std::to_string(dataset_seed));
    kv.set("dataset.split_train", fmt(split.train));
    kv.set("dataset.split_val", fmt(split.val));
    kv.set("dataset.split_test", fmt(split.test));
    kv.set("dataset.split_seed", std::to_string(split.shuffle_seed));
    kv.set("ae.epochs", std::to_string(ae_epochs));
    kv.set("ae.batch", std::to_string(ae_batch));
    kv.set("ae.base_lr", fmt(ae_schedule.base_lr));
    kv.set("ae.warmup_start", fmt(ae_schedule.warmup_start));
    kv.set("ae.warmup_batches", std::to_string(ae_schedule.warmup_batches));
    kv.set("ae.decay_start_epoch", std::to_string(ae_schedule.decay_start_epoch));
    kv.set("ae.decay_factor", fmt(ae_schedule.decay_factor));
    kv.set("ae.seed", std::to_string(ae_seed));
    kv.set("snpe.rounds", std::to_string(snpe_cfg.rounds));
    kv.set("snpe.sims_per_round", std::to_string(snpe_cfg.sims_per_round));
    kv.set("snpe.n_atoms", std::to_string(snpe_cfg.n_atoms));
    kv.set("snpe.batch", std::to_string(snpe_cfg.batch));
    kv.set("snpe.val_fraction", fmt(snpe_cfg.val_fraction));
    kv.set("snpe.patience", std::to_string(snpe_cfg.patience));
    kv.set("snpe.max_epochs", std::to_string(snpe_cfg.max_epochs));
    kv.set("snpe.lr_flow", fmt(snpe_cfg.lr_flow));
    kv.set("snpe.lr_encoder", fmt(snpe_cfg.lr_encoder));
    kv.set("snpe.freeze_encoder", snpe_cfg.freeze_encoder ? "1" : "0");
    kv.set("snpe.accumulate", snpe_cfg.accumulate ? "1" : "0");
    kv.set("snpe.seed", std::to_string(snpe_seed));
    kv.set("snpe.target_a", std::to_string(target_codes.a_code));
    kv.set("snpe.target_b", std::to_string(target_codes.b_code));
    kv.set("snpe.target_g_tauw", std::to_string(target_codes.g_tauw_code));
    kv.set("snpe.target_v_r", std::to_string(target_codes.v_r_code));
    kv.set("snpe.target_seed", std::to_string(target_seed));
    kv.set("analysis.n_samples", std::to_string(analysis_samples));
    kv.set("analysis.n_predictive", std::to_string(analysis_predictive));
    kv.set("analysis.n_trials", std::to_string(analysis_trials));
    kv.set("analysis.spike_threshold", fmt(spike_threshold));
    kv.set("analysis.seed", std::to_string(analysis_seed));
    kv.set("pipeline.out_dir", out_dir);
    return kv;
}

std::uint64_t RunConfig::stage_hash(const std::string& stage) const {
    const KvFile kv = to_kv();
    auto section_hash = [&](std::initializer_list<const char*> prefixes, std::uint64_t seed) {
        std::string text;
        for (const auto& [k, v] : kv.entries())
            for (const char* p : prefixes)
                if (k.rfind(p, 0) == 0) text += k + "=" + v + "\n";
        return fnv1a64(text.data(), text.size(), seed);
    };
    const std::uint64_t h_gen = section_hash({"device.", "dataset."}, 0xCBF29CE484222325ull);
    if (stage == "gen-dataset") return h_gen;
    const std::uint64_t h_ae = section_hash({"ae."}, h_gen);
    if (stage == "train-ae") return h_ae;
    const std::uint64_t h_snpe = section_hash({"snpe."}, h_ae);
    if (stage == "infer") return h_snpe;
    const std::uint64_t h_an = section_hash({"analysis."}, h_snpe);
    if (stage == "analyze") return h_an;
    throw ConfigError("unknown stage '" + stage + "'");
}

}  // namespace adex::pipe
