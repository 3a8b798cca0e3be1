#include "adex/snpe/snpe.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "adex/dataset.hpp"
#include "adex/errors.hpp"
#include "adex/nn/optim.hpp"
#include "adex/parallel.hpp"

namespace adex::snpe {

using flow::MafConfig;

void PriorBox::validate() const {
    for (int j = 0; j < kParamCount; ++j)
        if (!(lo[j] < hi[j])) throw ConfigError("prior box must have lo < hi");
}

void RoundConfig::validate() const {
    if (rounds < 1) throw ConfigError("rounds must be >= 1");
    if (sims_per_round < batch) throw ConfigError("sims_per_round must be >= batch size");
    if (n_atoms < 1 || n_atoms > batch) throw ConfigError("n_atoms must lie in [1, batch]");
    if (!(val_fraction > 0 && val_fraction < 0.5)) throw ConfigError("val_fraction must be in (0, 0.5)");
    if (batch < 2) throw ConfigError("batch must be >= 2 (encoder batchnorm)");
    if (!(lr_flow > 0) || !(lr_encoder > 0)) throw ConfigError("learning rates must be positive");
}

Tensor<float> embed_traces(Autoencoder<float>& encoder, const float* traces, long n, bool training) {
    Tensor<float> x({n, 1, kTraceLen});
    std::copy_n(traces, n * kTraceLen, x.ptr());
    Tensor<float> latent = encoder.encode(x, training);  // [n, 1, 32]
    Tensor<float> out({n, latent.dim(2)});
    std::copy_n(latent.ptr(), out.numel(), out.ptr());
    return out;
}

double atomic_loss(Maf<float>& flow, const Tensor<float>& theta_batch,
                   const Tensor<float>& context_batch, int n_atoms, std::uint64_t atom_seed,
                   bool proposal_corrected, Tensor<float>* dcontext) {
    const long B = theta_batch.dim(0);
    const int D = theta_batch.dim(1);
    const int ctx_dim = context_batch.dim(1);
    if (context_batch.dim(0) != B) throw ShapeError("atomic_loss: batch size mismatch");

    if (!proposal_corrected) {
        // plain negative log likelihood
        std::vector<double> logp = flow.log_prob(theta_batch, context_batch);
        double loss = 0;
        for (double v : logp) loss -= v;
        loss /= static_cast<double>(B);
        if (dcontext) {
            std::vector<double> dlogp(B, -1.0 / static_cast<double>(B));
            *dcontext = flow.backward(dlogp);
        }
        return loss;
    }

    if (n_atoms > B) throw ConfigError("n_atoms exceeds batch size");
    const int A = n_atoms;

    // atom 0 is the item's own theta; the rest come from other batch items
    Rng rng(atom_seed);
    std::vector<long> atom_idx(static_cast<std::size_t>(B) * A);
    std::vector<long> others(B - 1);
    for (long j = 0; j < B; ++j) {
        atom_idx[j * A] = j;
        long k = 0;
        for (long i = 0; i < B; ++i)
            if (i != j) others[k++] = i;
        for (int a = 1; a < A; ++a) {
            const long pick = a - 1 + static_cast<long>(rng.uniform_int(B - a));
            std::swap(others[a - 1], others[pick]);
            atom_idx[j * A + a] = others[a - 1];
        }
    }

    Tensor<float> theta_big({B * A, D}), ctx_big({B * A, ctx_dim});
    for (long j = 0; j < B; ++j) {
        for (int a = 0; a < A; ++a) {
            const long r = j * A + a;
            std::copy_n(theta_batch.ptr() + atom_idx[r] * D, D, theta_big.ptr() + r * D);
            std::copy_n(context_batch.ptr() + j * ctx_dim, ctx_dim, ctx_big.ptr() + r * ctx_dim);
        }
    }

    std::vector<double> logp = flow.log_prob(theta_big, ctx_big);

    // L_j = -log softmax over the item's atoms, evaluated at atom 0
    double loss = 0;
    std::vector<double> dlogp(static_cast<std::size_t>(B) * A, 0.0);
    for (long j = 0; j < B; ++j) {
        double mx = logp[j * A];
        for (int a = 1; a < A; ++a) mx = std::max(mx, logp[j * A + a]);
        double denom = 0;
        for (int a = 0; a < A; ++a) denom += std::exp(logp[j * A + a] - mx);
        const double lse = mx + std::log(denom);
        loss += lse - logp[j * A];
        for (int a = 0; a < A; ++a) {
            const double soft = std::exp(logp[j * A + a] - lse);
            dlogp[j * A + a] = (soft - (a == 0 ? 1.0 : 0.0)) / static_cast<double>(B);
        }
    }
    loss /= static_cast<double>(B);

    if (dcontext) {
        Tensor<float> dctx_big = flow.backward(dlogp);
        *dcontext = Tensor<float>({B, ctx_dim});
        for (long j = 0; j < B; ++j)
            for (int a = 0; a < A; ++a)
                for (int c = 0; c < ctx_dim; ++c)
                    dcontext->ptr()[j * ctx_dim + c] += dctx_big.ptr()[(j * A + a) * ctx_dim + c];
    }
    return loss;
}

namespace {

// Rejection sampling from the flow restricted to the prior box.
Tensor<float> rejection_sample(Maf<float>& flow, const Tensor<float>& context, const PriorBox& box,
                               long n, std::uint64_t seed, long budget, double min_rate,
                               double* acceptance_out) {
    Tensor<float> out({n, kParamCount});
    long accepted = 0, proposed = 0;
    Rng rng(seed);
    const long chunk = std::min<long>(4096, std::max<long>(n, 256));
    while (accepted < n) {
        Tensor<float> draw = flow.sample(chunk, context, rng);
        for (long r = 0; r < chunk && accepted < n; ++r) {
            ++proposed;
            const float* theta = draw.ptr() + r * kParamCount;
            bool ok = box.contains(theta);
            for (int j = 0; ok && j < kParamCount; ++j)
                if (!std::isfinite(theta[j])) ok = false;
            if (ok) {
                std::copy_n(theta, kParamCount, out.ptr() + accepted * kParamCount);
                ++accepted;
            }
        }
        if (proposed >= budget && static_cast<double>(accepted) / proposed < min_rate)
            throw LeakageError("acceptance rate " + std::to_string(static_cast<double>(accepted) / proposed) +
                               " after " + std::to_string(proposed) + " proposals");
    }
    if (acceptance_out) *acceptance_out = static_cast<double>(accepted) / static_cast<double>(proposed);
    return out;
}

DigitalParams round_codes(const float* theta) {
    DigitalParams c;
    auto q = [](float v) {
        long r = std::lround(v);
        if (r < 0) r = 0;
        if (r > kCodeMax) r = kCodeMax;
        return static_cast<int>(r);
    };
    c.a_code = q(theta[0]);
    c.b_code = q(theta[1]);
    c.g_tauw_code = q(theta[2]);
    c.v_r_code = q(theta[3]);
    return c;
}

struct PairStore {
    std::vector<float> theta;  // rows * 4, continuous codes
    std::vector<float> x;      // rows * kTraceLen
    long rows = 0;

    void append(const float* th, const float* trace) {
        theta.insert(theta.end(), th, th + kParamCount);
        x.insert(x.end(), trace, trace + kTraceLen);
        ++rows;
    }
};

void write_round_archive(const std::string& path, const PairStore& pairs, std::uint64_t config_hash,
                         std::uint64_t seed) {
    Dataset ds;
    ds.rows = pairs.rows;
    ds.config_hash = config_hash;
    ds.master_seed = seed;
    ds.traces = pairs.x;
    ds.params.resize(static_cast<std::size_t>(pairs.rows) * kParamCount);
    for (long i = 0; i < pairs.rows; ++i) {
        DigitalParams c = round_codes(pairs.theta.data() + i * kParamCount);
        for (int j = 0; j < kParamCount; ++j)
            ds.params[i * kParamCount + j] = static_cast<std::uint16_t>(c[j]);
    }
    save(ds, path);
}

}  // namespace

Tensor<float> Posterior::sample_continuous(long n, std::uint64_t seed, long leakage_budget,
                                           double leakage_min_rate) {
    Tensor<float> ctx({1, static_cast<long>(target_embedding.size())});
    std::copy(target_embedding.begin(), target_embedding.end(), ctx.ptr());
    return rejection_sample(flow, ctx, box, n, seed, leakage_budget, leakage_min_rate, nullptr);
}

std::vector<DigitalParams> Posterior::propose(long n, std::uint64_t seed) {
    Tensor<float> theta = sample_continuous(n, seed);
    std::vector<DigitalParams> out;
    out.reserve(n);
    for (long i = 0; i < n; ++i) out.push_back(round_codes(theta.ptr() + i * kParamCount));
    return out;
}

double Posterior::log_prob(const std::array<double, kParamCount>& theta) {
    Tensor<float> th({1, kParamCount}), ctx({1, static_cast<long>(target_embedding.size())});
    for (int j = 0; j < kParamCount; ++j) th.ptr()[j] = static_cast<float>(theta[j]);
    std::copy(target_embedding.begin(), target_embedding.end(), ctx.ptr());
    return flow.log_prob(th, ctx)[0];
}

void Posterior::save(const std::string& path) {
    Checkpoint ck;
    const auto& mc = flow.config();
    ck.put_scalar_i64("maf.dim", mc.dim);
    ck.put_scalar_i64("maf.context_dim", mc.context_dim);
    ck.put_scalar_i64("maf.n_transforms", mc.n_transforms);
    ck.put_scalar_i64("maf.hidden", mc.hidden);
    ck.put_scalar_i64("maf.hidden_layers", mc.hidden_layers);
    ck.put_scalar_f64("maf.alpha_clamp", mc.alpha_clamp);
    ck.put_scalar_i64("posterior.round", round);
    std::vector<float> lo(box.lo.begin(), box.lo.end()), hi(box.hi.begin(), box.hi.end());
    ck.put_array("prior.lo", {kParamCount}, lo);
    ck.put_array("prior.hi", {kParamCount}, hi);
    ck.put_array("target.embedding", {static_cast<long>(target_embedding.size())}, target_embedding);
    flow.save_state(ck);
    encoder.save_state(ck);
    ck.save(path);
}

Posterior Posterior::load(const std::string& path) {
    Checkpoint ck = Checkpoint::load(path);
    MafConfig mc;
    mc.dim = static_cast<int>(ck.get_scalar_i64("maf.dim"));
    mc.context_dim = static_cast<int>(ck.get_scalar_i64("maf.context_dim"));
    mc.n_transforms = static_cast<int>(ck.get_scalar_i64("maf.n_transforms"));
    mc.hidden = static_cast<int>(ck.get_scalar_i64("maf.hidden"));
    mc.hidden_layers = static_cast<int>(ck.get_scalar_i64("maf.hidden_layers"));
    mc.alpha_clamp = ck.get_scalar_f64("maf.alpha_clamp");

    Posterior p;
    p.flow = Maf<float>(mc);
    p.encoder = Autoencoder<float>::build();
    p.round = static_cast<int>(ck.get_scalar_i64("posterior.round"));
    auto lo = ck.get_array<float>("prior.lo");
    auto hi = ck.get_array<float>("prior.hi");
    for (int j = 0; j < kParamCount; ++j) {
        p.box.lo[j] = lo[j];
        p.box.hi[j] = hi[j];
    }
    p.target_embedding = ck.get_array<float>("target.embedding");
    p.flow.load_state(ck);
    p.encoder.load_state(ck);
    return p;
}

Posterior infer(const Simulator& simulator, const PriorBox& prior, const NormalizedTrace& x_star,
                Autoencoder<float>& encoder_init, const RoundConfig& cfg, std::uint64_t seed,
                const InferOptions& opt) {
    prior.validate();
    cfg.validate();
    if (x_star.size() != static_cast<std::size_t>(kTraceLen))
        throw ShapeError("x_star must have length 1024");

    Autoencoder<float> encoder = Autoencoder<float>::build();
    {
        Checkpoint tmp;
        encoder_init.save_state(tmp);
        encoder.load_state(tmp);
    }
    // fresh optimizer state: pretraining momenta must not keep moving weights
    for (auto* p : encoder.params()) {
        std::fill(p->adam_m.begin(), p->adam_m.end(), 0.0f);
        std::fill(p->adam_v.begin(), p->adam_v.end(), 0.0f);
    }

    MafConfig mc;
    mc.dim = kParamCount;
    mc.context_dim = 32;
    Maf<float> maf(mc, Rng::split(seed, 0));

    auto embed_xstar = [&]() {
        Tensor<float> e = embed_traces(encoder, x_star.data(), 1, false);
        return std::vector<float>(e.ptr(), e.ptr() + e.numel());
    };
    std::vector<float> target_embedding = embed_xstar();

    PairStore pairs;
    bool standardized = false;

    std::ofstream metrics_file;
    if (!opt.artifact_dir.empty())
        metrics_file.open(opt.artifact_dir + "/rounds.jsonl", std::ios::trunc);

    for (int round = 1; round <= cfg.rounds; ++round) {
        const auto t_start = std::chrono::steady_clock::now();
        const std::uint64_t round_seed = Rng::split(seed, 1000 + static_cast<std::uint64_t>(round));
        RoundMetrics rm;
        rm.round = round;

        // --- draw parameters ---
        const long n = cfg.sims_per_round;
        Tensor<float> theta({n, kParamCount});
        if (round == 1) {
            Rng rng(Rng::split(round_seed, 1));
            for (long i = 0; i < n; ++i) prior.sample(rng, theta.ptr() + i * kParamCount);
        } else {
            Tensor<float> ctx({1, 32});
            std::copy(target_embedding.begin(), target_embedding.end(), ctx.ptr());
            theta = rejection_sample(maf, ctx, prior, n, Rng::split(round_seed, 1),
                                     cfg.leakage_budget, cfg.leakage_min_rate, &rm.acceptance_rate);
        }

        // --- simulate ---
        std::vector<float> xs(static_cast<std::size_t>(n) * kTraceLen);
        std::vector<std::uint8_t> ok(n, 0);
        const std::uint64_t sim_seed = Rng::split(round_seed, 2);
        std::atomic<long> failures{0};
        parallel_for(n, [&](long i) {
            try {
                NormalizedTrace x = simulator(round_codes(theta.ptr() + i * kParamCount),
                                              Rng::split(sim_seed, static_cast<std::uint64_t>(i)));
                std::copy(x.begin(), x.end(), xs.begin() + static_cast<std::size_t>(i) * kTraceLen);
                ok[i] = 1;
            } catch (const std::exception&) {
                failures.fetch_add(1);
            }
        });
        rm.sim_failures = failures.load();
        if (rm.sim_failures * 10 > n)
            throw StageError("snpe", "more than 10% of simulations failed in round " +
                                         std::to_string(round));

        if (!cfg.accumulate) pairs = PairStore{};
        for (long i = 0; i < n; ++i)
            if (ok[i]) pairs.append(theta.ptr() + i * kParamCount,
                                    xs.data() + static_cast<std::size_t>(i) * kTraceLen);

        // --- freeze standardization from the first round's parameters ---
        if (!standardized) {
            std::vector<float> mean(kParamCount, 0), scale(kParamCount, 0);
            for (long i = 0; i < pairs.rows; ++i)
                for (int j = 0; j < kParamCount; ++j) mean[j] += pairs.theta[i * kParamCount + j];
            for (int j = 0; j < kParamCount; ++j) mean[j] /= static_cast<float>(pairs.rows);
            for (long i = 0; i < pairs.rows; ++i)
                for (int j = 0; j < kParamCount; ++j) {
                    const float d = pairs.theta[i * kParamCount + j] - mean[j];
                    scale[j] += d * d;
                }
            for (int j = 0; j < kParamCount; ++j) {
                scale[j] = std::sqrt(scale[j] / static_cast<float>(pairs.rows - 1));
                if (!(scale[j] > 1e-6f)) scale[j] = 1.0f;
            }
            maf.set_standardization(mean, scale);
            standardized = true;
        }

        // --- train/val split of the accumulated pairs ---
        std::vector<std::int64_t> order(pairs.rows);
        std::iota(order.begin(), order.end(), 0);
        Rng split_rng(Rng::split(round_seed, 3));
        shuffle(order, split_rng);
        long n_val = static_cast<long>(std::floor(cfg.val_fraction * static_cast<double>(pairs.rows)));
        if (n_val < 1) n_val = 1;
        std::vector<std::int64_t> val_idx(order.begin(), order.begin() + n_val);
        std::vector<std::int64_t> train_idx(order.begin() + n_val, order.end());
        rm.n_train = static_cast<long>(train_idx.size());
        rm.n_val = n_val;

        auto gather = [&](const std::vector<std::int64_t>& idx, std::size_t begin, std::size_t count,
                          Tensor<float>& th, Tensor<float>& tx) {
            th = Tensor<float>({static_cast<long>(count), kParamCount});
            tx = Tensor<float>({static_cast<long>(count), kTraceLen});
            for (std::size_t j = 0; j < count; ++j) {
                const long row = idx[begin + j];
                std::copy_n(pairs.theta.data() + row * kParamCount, kParamCount,
                            th.ptr() + j * kParamCount);
                std::copy_n(pairs.x.data() + static_cast<std::size_t>(row) * kTraceLen, kTraceLen,
                            tx.ptr() + j * kTraceLen);
            }
        };

        const bool corrected = round > 1;
        auto eval_val = [&]() {
            double total = 0;
            long count = 0;
            for (std::size_t b = 0; b < val_idx.size(); b += cfg.batch) {
                const std::size_t cnt = std::min<std::size_t>(cfg.batch, val_idx.size() - b);
                Tensor<float> th, tx;
                gather(val_idx, b, cnt, th, tx);
                Tensor<float> ctx = embed_traces(encoder, tx.ptr(), cnt, false);
                const int atoms = std::min<int>(cfg.n_atoms, static_cast<int>(cnt));
                total += atomic_loss(maf, th, ctx, atoms, Rng::split(round_seed, 777),
                                     corrected && atoms > 1, nullptr) *
                         static_cast<double>(cnt);
                count += cnt;
            }
            return total / static_cast<double>(count);
        };

        auto flow_params = maf.params();
        auto enc_params = encoder.encoder.params();  // only the encoder half retrains
        nn::Adam<float> adam_flow, adam_enc;

        double best_val = std::numeric_limits<double>::infinity();
        int best_epoch = 0, epochs_run = 0;
        Checkpoint best_state;
        auto snapshot = [&]() {
            best_state = Checkpoint{};
            maf.save_state(best_state);
            encoder.save_state(best_state);
        };
        snapshot();

        double last_train_loss = 0;
        for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
            Rng shuffle_rng(Rng::split(round_seed, 10000 + static_cast<std::uint64_t>(epoch)));
            shuffle(train_idx, shuffle_rng);
            const long n_batches = static_cast<long>(train_idx.size()) / cfg.batch;
            if (n_batches < 1) throw ConfigError("training split smaller than one batch");
            double epoch_loss = 0;
            for (long b = 0; b < n_batches; ++b) {
                Tensor<float> th, tx;
                gather(train_idx, static_cast<std::size_t>(b) * cfg.batch, cfg.batch, th, tx);
                Tensor<float> ctx = embed_traces(encoder, tx.ptr(), cfg.batch, true);

                maf.zero_grad();
                for (auto* p : enc_params) p->zero_grad();
                Tensor<float> dctx;
                const double loss =
                    atomic_loss(maf, th, ctx, cfg.n_atoms,
                                Rng::split(round_seed, 20000 + static_cast<std::uint64_t>(epoch) * 1000 +
                                                          static_cast<std::uint64_t>(b)),
                                corrected, &dctx);
                if (!std::isfinite(loss))
                    throw NumericError("non-finite SNPE loss in round " + std::to_string(round) +
                                       " epoch " + std::to_string(epoch));
                epoch_loss += loss;

                if (!cfg.freeze_encoder) {
                    Tensor<float> dlatent({static_cast<long>(cfg.batch), 1, 32});
                    std::copy_n(dctx.ptr(), dctx.numel(), dlatent.ptr());
                    encoder.encoder.backward(dlatent);
                }
                adam_flow.step(flow_params, cfg.lr_flow);
                if (!cfg.freeze_encoder) adam_enc.step(enc_params, cfg.lr_encoder);
            }
            last_train_loss = epoch_loss / static_cast<double>(n_batches);
            epochs_run = epoch;

            const double val = eval_val();
            if (val < best_val - 1e-9) {
                best_val = val;
                best_epoch = epoch;
                snapshot();
            } else if (epoch - best_epoch >= cfg.patience) {
                break;
            }
        }
        maf.load_state(best_state);
        encoder.load_state(best_state);

        rm.epochs = epochs_run;
        rm.train_loss = last_train_loss;
        rm.best_val_loss = best_val;

        target_embedding = embed_xstar();

        rm.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
        if (opt.verbose)
            std::fprintf(stderr,
                         "[snpe] round %d/%d: %ld pairs, %d epochs, val %.4f, accept %.3f (%.1fs)\n",
                         round, cfg.rounds, pairs.rows, rm.epochs, rm.best_val_loss,
                         rm.acceptance_rate, rm.seconds);
        if (opt.metrics_out) opt.metrics_out->push_back(rm);

        if (!opt.artifact_dir.empty()) {
            const std::string tag = opt.artifact_dir + "/round_" + std::to_string(round);
            Checkpoint ck;
            maf.save_state(ck);
            encoder.save_state(ck);
            ck.put_scalar_i64("round", round);
            ck.save(tag + ".ckpt");
            write_round_archive(tag + "_pairs.bin", pairs, 0, seed);
            if (metrics_file.is_open()) {
                nlohmann::json j{{"round", rm.round},
                                 {"n_train", rm.n_train},
                                 {"n_val", rm.n_val},
                                 {"epochs", rm.epochs},
                                 {"train_loss", rm.train_loss},
                                 {"val_loss", rm.best_val_loss},
                                 {"acceptance_rate", rm.acceptance_rate},
                                 {"sim_failures", rm.sim_failures},
                                 {"seconds", rm.seconds}};
                metrics_file << j.dump() << "\n";
                metrics_file.flush();
            }
        }
    }

    Posterior posterior;
    posterior.flow = std::move(maf);
    posterior.encoder = std::move(encoder);
    posterior.target_embedding = target_embedding;
    posterior.box = prior;
    posterior.round = cfg.rounds;
    return posterior;
}

}  // namespace adex::snpe
