#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "adex/device.hpp"
#include "adex/flow/maf.hpp"
#include "adex/neuron.hpp"
#include "adex/nn/autoencoder.hpp"

namespace adex::snpe {

using adex::flow::Maf;
using adex::nn::Autoencoder;
using adex::nn::Checkpoint;
using adex::nn::Tensor;

// Uniform prior over the device's configurable code range; the flow trains
// on the continuous relaxation and simulation rounds to the integer grid.
struct PriorBox {
    std::array<double, kParamCount> lo{0, 0, 0, 0};
    std::array<double, kParamCount> hi{kCodeMax, kCodeMax, kCodeMax, kCodeMax};

    bool contains(const float* theta) const {
        for (int j = 0; j < kParamCount; ++j)
            if (theta[j] < lo[j] || theta[j] > hi[j]) return false;
        return true;
    }
    void sample(Rng& rng, float* out) const {
        for (int j = 0; j < kParamCount; ++j)
            out[j] = static_cast<float>(rng.uniform(lo[j], hi[j]));
    }
    void validate() const;
};

struct RoundConfig {
    int rounds = 20;
    int sims_per_round = 1000;
    int n_atoms = 10;
    int batch = 50;
    double val_fraction = 0.1;
    int patience = 20;
    int max_epochs = 200;
    double lr_flow = 5e-4;
    double lr_encoder = 5e-4;
    bool freeze_encoder = false;
    bool accumulate = true;  // train on all rounds' pairs, not just the latest
    long leakage_budget = 1000000;
    double leakage_min_rate = 1e-3;

    void validate() const;
};

// Proposal-corrected (atomic) objective. Each batch item contrasts its true
// theta against n_atoms-1 alternatives resampled from the batch without
// replacement; with proposal_corrected=false this is the plain NLL used in
// round 1. Flow parameter gradients are accumulated when dcontext is
// non-null; dcontext receives the per-item gradient wrt the context.
double atomic_loss(Maf<float>& flow, const Tensor<float>& theta_batch,
                   const Tensor<float>& context_batch, int n_atoms, std::uint64_t atom_seed,
                   bool proposal_corrected, Tensor<float>* dcontext = nullptr);

using Simulator = std::function<NormalizedTrace(const DigitalParams&, std::uint64_t seed)>;

// Trained flow + encoder snapshot conditioned on one target observation.
struct Posterior {
    Maf<float> flow;
    Autoencoder<float> encoder;
    std::vector<float> target_embedding;
    PriorBox box;
    int round = 0;

    // Rejection samples inside the prior box, continuous coordinates.
    Tensor<float> sample_continuous(long n, std::uint64_t seed, long leakage_budget = 1000000,
                                    double leakage_min_rate = 1e-3);
    // Integer codes in [0,1022]^4 (the public sampling surface).
    std::vector<DigitalParams> propose(long n, std::uint64_t seed);

    double log_prob(const std::array<double, kParamCount>& theta);

    void save(const std::string& path);
    static Posterior load(const std::string& path);
};

struct RoundMetrics {
    int round = 0;
    long n_train = 0, n_val = 0;
    int epochs = 0;
    double train_loss = 0, best_val_loss = 0;
    double acceptance_rate = 1.0;  // of the proposal sampling for this round
    long sim_failures = 0;
    double seconds = 0;
};

struct InferOptions {
    std::string artifact_dir;  // per-round checkpoint/archive/metrics when set
    bool verbose = false;
    std::vector<RoundMetrics>* metrics_out = nullptr;
};

// Multi-round SNPE with joint encoder fine-tuning: round 1 samples the
// prior, later rounds sample the current posterior at the target embedding;
// the flow and encoder train on the accumulated pairs with the atomic
// objective (plain NLL in round 1) and early stopping on a held-out split.
Posterior infer(const Simulator& simulator, const PriorBox& prior, const NormalizedTrace& x_star,
                Autoencoder<float>& encoder_init, const RoundConfig& cfg, std::uint64_t seed,
                const InferOptions& opt = {});

// Helper shared by training and analysis: encoder embeddings for a block of
// traces, [N, kTraceLen] -> [N, 32].
Tensor<float> embed_traces(Autoencoder<float>& encoder, const float* traces, long n, bool training);

}  // namespace adex::snpe
