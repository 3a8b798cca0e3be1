#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "adex/dataset.hpp"
#include "adex/nn/autoencoder.hpp"
#include "adex/nn/loss.hpp"
#include "adex/nn/train.hpp"
#include "helpers.hpp"

using namespace adex;
using namespace adex::nn;

namespace {

DeviceConfig fast_config() {
    DeviceConfig c = test::quiet_config();
    c.duration_ms = 100.0;
    c.dt_ms = 0.01;
    c.stimulus.duration_ms = 100.0;
    return c;
}

}  // namespace

TEST_CASE("autoencoder has exactly the published parameter budget") {
    auto model = Autoencoder<float>::build(1);
    CHECK(model.param_count() == 240258);

    // per-row audit of the trainable-parameter column
    const std::vector<long> expected = {192, 64,  1552,   32,   11328, 106624,
                                        385, 512, 106560, 11280, 1568,  161};
    std::vector<long> actual;
    auto tally = [&](Sequential<float>& seq) {
        for (auto* layer : seq.layers()) {
            std::vector<Param<float>*> ps;
            layer->collect_params(ps);
            long n = 0;
            for (auto* p : ps) n += p->numel();
            if (n > 0) actual.push_back(n);
        }
    };
    tally(model.encoder);
    tally(model.decoder);
    CHECK(actual == expected);
}

TEST_CASE("shape probe reproduces the output-shape column") {
    auto model = Autoencoder<float>::build(1);
    const std::vector<std::vector<long>> expected = {
        {32, 1024}, {32, 1024}, {32, 512}, {16, 512}, {16, 512}, {16, 256},
        {64, 256},  {64, 128},  {128, 128}, {128, 64}, {1, 64},   {1, 32},
        {128, 32},  {128, 64},  {64, 64},  {64, 128}, {16, 128}, {16, 256},
        {32, 256},  {32, 512},  {1, 512},  {1, 1024}};
    auto rows = model.shape_probe();
    REQUIRE(rows.size() == expected.size());
    for (std::size_t i = 0; i < rows.size(); ++i) CHECK(rows[i].second == expected[i]);
}

TEST_CASE("encode is a deterministic 32-vector that separates regimes") {
    auto model = Autoencoder<float>::build(2);
    const DeviceConfig cfg = fast_config();
    NormalizedTrace low = run_experiment({200, 200, 500, 100}, cfg, 5);
    NormalizedTrace high = run_experiment({200, 200, 500, 900}, cfg, 5);

    Tensor<float> x({1, 1, kTraceLen});
    std::copy(low.begin(), low.end(), x.ptr());
    Tensor<float> e1 = model.encode(x, false);
    Tensor<float> e2 = model.encode(x, false);
    CHECK(e1.numel() == 32);
    CHECK(e1.data == e2.data);
    for (float v : e1.data) CHECK(std::isfinite(v));

    std::copy(high.begin(), high.end(), x.ptr());
    Tensor<float> e3 = model.encode(x, false);
    double dist = 0;
    for (int i = 0; i < 32; ++i)
        dist += (e1.data[i] - e3.data[i]) * (e1.data[i] - e3.data[i]);
    CHECK(dist > 0.0);
}

TEST_CASE("untrained reconstruction is finite and shaped like the input") {
    auto model = Autoencoder<float>::build(3);
    Tensor<float> x({2, 1, kTraceLen});
    Rng rng(4);
    test::fill_uniform(x, rng, 0.0, 1.0);
    Tensor<float> y = model.forward(x, false);
    CHECK(y.shape == x.shape);
    for (float v : y.data) CHECK(std::isfinite(v));
}

TEST_CASE("no NaN/Inf across 1000 random eval passes") {
    auto model = Autoencoder<float>::build(5);
    Rng rng(6);
    for (int it = 0; it < 250; ++it) {
        Tensor<float> x({4, 1, kTraceLen});
        test::fill_uniform(x, rng, 0.0, 1.0);
        Tensor<float> y = model.forward(x, false);
        bool finite = true;
        for (float v : y.data) finite = finite && std::isfinite(v);
        REQUIRE(finite);
    }
}

TEST_CASE("checkpoint save/load round-trips encode bit-exactly") {
    auto model = Autoencoder<float>::build(7);
    // give running stats non-default values
    Tensor<float> warm({4, 1, kTraceLen});
    Rng rng(8);
    test::fill_uniform(warm, rng, 0.0, 1.0);
    model.forward(warm, true);

    Tensor<float> x({1, 1, kTraceLen});
    test::fill_uniform(x, rng, 0.0, 1.0);
    Tensor<float> before = model.encode(x, false);

    const std::string path =
        (std::filesystem::temp_directory_path() / "adex_test_ae.ckpt").string();
    Checkpoint ck;
    model.save_state(ck);
    ck.save(path);

    auto restored = Autoencoder<float>::build(9);  // different init
    restored.load_state(Checkpoint::load(path));
    Tensor<float> after = restored.encode(x, false);
    CHECK(before.data == after.data);
    std::filesystem::remove(path);
}

TEST_CASE("full autoencoder gradient check in 64-bit mode") {
    auto model = Autoencoder<double>::build(11);
    Rng rng(12);
    Tensor<double> x({2, 1, kTraceLen});
    test::fill_uniform(x, rng, 0.0, 1.0);

    auto loss = [&]() {
        Tensor<double> y = model.forward(x, true);
        return mse_loss(y, x).loss;
    };
    for (auto* p : model.params()) p->zero_grad();
    Tensor<double> y = model.forward(x, true);
    auto [l, grad] = mse_loss(y, x);
    (void)l;
    model.backward(grad);

    test::FdStats fd;
    for (auto* p : model.params()) {
        std::vector<double> analytic = p->grad;
        test::check_coords(p->value, analytic, loss, fd, rng, 5, 1e-6);
    }
    CHECK(fd.failed == 0);
    CHECK(fd.checked >= 100);
    CHECK(fd.max_rel < 1e-4);
}

TEST_CASE("two training runs with equal seeds produce equal loss curves") {
    Dataset ds = generate(72, fast_config(), 21);
    SplitSpec spec;
    spec.shuffle_seed = 1;
    SplitResult sp = split(ds, spec);

    auto run = [&]() {
        auto model = Autoencoder<float>::build(31);
        TrainOptions opt;
        opt.epochs = 3;
        opt.batch = 16;
        opt.seed = 99;
        opt.schedule.base_lr = 1e-3;
        opt.schedule.warmup_batches = 4;
        return train_autoencoder(model, sp.train, sp.val, nullptr, opt);
    };
    TrainReport r1 = run();
    TrainReport r2 = run();
    CHECK(r1.train_loss == r2.train_loss);  // fixed reduction order: exact
    CHECK(r1.val_loss == r2.val_loss);
    CHECK(r1.best_epoch == r2.best_epoch);
    // training improves on the first epoch
    CHECK(r1.best_val <= r1.val_loss.front());
}
