#include "adex/nn/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include "adex/nn/loss.hpp"

namespace adex::nn {

Tensor<float> make_batch(const Dataset& ds, const std::vector<std::int64_t>& idx, std::size_t begin,
                         std::size_t count) {
    Tensor<float> x({static_cast<long>(count), 1, kTraceLen});
    for (std::size_t j = 0; j < count; ++j)
        std::copy_n(ds.trace(idx[begin + j]), kTraceLen, x.ptr() + j * kTraceLen);
    return x;
}

double eval_autoencoder(Autoencoder<float>& model, const Dataset& ds, int batch,
                        std::vector<double>* per_batch) {
    std::vector<std::int64_t> idx(ds.rows);
    std::iota(idx.begin(), idx.end(), 0);
    double total_se = 0;
    long total_n = 0;
    for (std::size_t b = 0; b < idx.size(); b += batch) {
        const std::size_t count = std::min<std::size_t>(batch, idx.size() - b);
        Tensor<float> x = make_batch(ds, idx, b, count);
        Tensor<float> y = model.forward(x, false);
        auto [loss, grad] = mse_loss(y, x);
        (void)grad;
        if (per_batch) per_batch->push_back(loss);
        total_se += loss * static_cast<double>(x.numel());
        total_n += x.numel();
    }
    return total_n ? total_se / total_n : 0.0;
}

TrainReport train_autoencoder(Autoencoder<float>& model, const Dataset& train_set,
                              const Dataset& val_set, const Dataset* test_set,
                              const TrainOptions& opt) {
    if (train_set.rows < 1 || val_set.rows < 1)
        throw ConfigError("train and val sets must be nonempty");
    if (train_set.rows < opt.batch)
        throw ConfigError("training set smaller than one batch");

    TrainReport report;
    report.best_val = std::numeric_limits<double>::infinity();

    std::ofstream csv;
    if (!opt.loss_csv_path.empty()) {
        csv.open(opt.loss_csv_path, std::ios::trunc);
        if (!csv) throw IoError("cannot open loss log '" + opt.loss_csv_path + "'");
        csv << "epoch,train_loss,val_loss,val_std,lr";
        if (test_set) csv << ",test_loss";
        csv << "\n";
    }

    auto params = model.params();
    Adam<float> adam;
    std::vector<std::int64_t> order(train_set.rows);
    std::iota(order.begin(), order.end(), 0);

    long global_batch = 0;
    for (int epoch = 1; epoch <= opt.epochs; ++epoch) {
        Rng shuffle_rng(Rng::split(opt.seed, static_cast<std::uint64_t>(epoch)));
        shuffle(order, shuffle_rng);

        const long n_batches = train_set.rows / opt.batch;  // drop the last short batch
        double epoch_loss = 0;
        double lr = opt.schedule.base_lr;
        for (long b = 0; b < n_batches; ++b) {
            Tensor<float> x = make_batch(train_set, order, b * opt.batch, opt.batch);
            Tensor<float> y = model.forward(x, true);
            auto [loss, grad] = mse_loss(y, x);
            if (!std::isfinite(loss))
                throw NumericError("non-finite training loss at epoch " + std::to_string(epoch) +
                                   " batch " + std::to_string(b));
            epoch_loss += loss;
            for (auto* p : params) p->zero_grad();
            model.backward(grad);
            lr = opt.schedule.lr_at(global_batch, epoch);
            adam.step(params, lr);
            ++global_batch;
        }
        epoch_loss /= static_cast<double>(n_batches);

        std::vector<double> val_batches;
        const double val = eval_autoencoder(model, val_set, opt.batch, &val_batches);
        double mean_b = 0, var_b = 0;
        for (double v : val_batches) mean_b += v;
        mean_b /= static_cast<double>(val_batches.size());
        for (double v : val_batches) var_b += (v - mean_b) * (v - mean_b);
        const double val_std =
            val_batches.size() > 1 ? std::sqrt(var_b / static_cast<double>(val_batches.size() - 1)) : 0.0;

        report.train_loss.push_back(epoch_loss);
        report.val_loss.push_back(val);
        report.val_std.push_back(val_std);
        report.lr.push_back(lr);

        double test = 0;
        if (test_set) {
            test = eval_autoencoder(model, *test_set, opt.batch);
            report.test_loss.push_back(test);
        }

        if (val < report.best_val) {
            report.best_val = val;
            report.best_epoch = epoch;
            if (!opt.best_ckpt_path.empty()) {
                Checkpoint ck;
                model.save_state(ck);
                ck.put_scalar_i64("adam.t", adam.t());
                ck.put_scalar_i64("epoch", epoch);
                ck.put_scalar_f64("val_loss", val);
                ck.save(opt.best_ckpt_path);
                report.best_checkpoint_path = opt.best_ckpt_path;
            }
        }

        if (csv.is_open()) {
            csv << epoch << ',' << epoch_loss << ',' << val << ',' << val_std << ',' << lr;
            if (test_set) csv << ',' << test;
            csv << "\n";
            csv.flush();
        }
        if (opt.verbose)
            std::fprintf(stderr, "[train-ae] epoch %3d/%d train %.6f val %.6f lr %.3g\n", epoch,
                         opt.epochs, epoch_loss, val, lr);
    }
    return report;
}

}  // namespace adex::nn
