#pragma once

#include <string>
#include <vector>

#include "adex/dataset.hpp"
#include "adex/nn/autoencoder.hpp"
#include "adex/nn/optim.hpp"

namespace adex::nn {

struct TrainOptions {
    int epochs = 150;
    int batch = 32;
    LrSchedule schedule;
    std::uint64_t seed = 0;
    std::string best_ckpt_path;  // checkpoint written on every val-loss improvement (optional)
    std::string loss_csv_path;   // per-epoch CSV log (optional)
    bool verbose = false;
};

struct TrainReport {
    std::vector<double> train_loss;  // per-epoch mean over train batches
    std::vector<double> val_loss;    // per-epoch mean over val batches
    std::vector<double> val_std;     // std of per-batch val losses
    std::vector<double> test_loss;   // only filled when a test set is given
    std::vector<double> lr;          // lr at the last batch of the epoch
    int best_epoch = 0;              // 1-indexed
    double best_val = 0.0;
    std::string best_checkpoint_path;
};

// MSE reconstruction training: seeded shuffling, fixed-size batches (the
// last short batch is dropped), checkpoint whenever the epoch-mean
// validation loss improves.
TrainReport train_autoencoder(Autoencoder<float>& model, const Dataset& train_set,
                              const Dataset& val_set, const Dataset* test_set,
                              const TrainOptions& opt);

// Mean reconstruction MSE of the model over a dataset (eval mode).
double eval_autoencoder(Autoencoder<float>& model, const Dataset& ds, int batch = 32,
                        std::vector<double>* per_batch = nullptr);

// Copies dataset rows [idx] into a [B,1,1024] batch tensor.
Tensor<float> make_batch(const Dataset& ds, const std::vector<std::int64_t>& idx, std::size_t begin,
                         std::size_t count);

}  // namespace adex::nn
