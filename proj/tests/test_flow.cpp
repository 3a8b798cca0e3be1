#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "adex/flow/maf.hpp"
#include "adex/nn/optim.hpp"
#include "helpers.hpp"

using namespace adex;
using namespace adex::flow;
using nn::Tensor;

namespace {

// Perturbs the zero-initialized output layers so the flow is non-trivial
// while keeping mu/alpha small enough for grid quadrature.
template <class S>
void randomize_flow(Maf<S>& maf, Rng& rng, double w_scale = 0.05, double b_scale = 0.2) {
    for (auto& block : maf.blocks()) {
        auto& out_layer = block.layers().back();
        const auto& mask = out_layer.mask();
        for (std::size_t i = 0; i < out_layer.weight().value.size(); ++i)
            if (mask[i]) out_layer.weight().value[i] = static_cast<S>(rng.uniform(-w_scale, w_scale));
        for (auto& b : out_layer.bias().value) b = static_cast<S>(rng.uniform(-b_scale, b_scale));
    }
}

template <class S>
Tensor<S> random_context(Rng& rng, long rows, int dim) {
    Tensor<S> ctx({rows, dim});
    adex::test::fill_uniform(ctx, rng, -1.0, 1.0);
    return ctx;
}

}  // namespace

TEST_CASE("identity-initialized flow evaluates the standard normal") {
    MafConfig cfg;
    cfg.dim = 4;
    cfg.context_dim = 32;
    Maf<double> maf(cfg, 1);
    Rng rng(2);
    Tensor<double> theta({1, 4});  // zeros
    Tensor<double> ctx = random_context<double>(rng, 1, 32);
    const double logp = maf.log_prob(theta, ctx)[0];
    CHECK(logp == doctest::Approx(-2.0 * std::log(2 * 3.14159265358979323846)).epsilon(1e-9));
    CHECK(logp == doctest::Approx(-3.6757541328186907).epsilon(1e-9));
}

TEST_CASE("1-d flow density integrates to 1 over a wide grid") {
    MafConfig cfg;
    cfg.dim = 1;
    cfg.context_dim = 4;
    Maf<double> maf(cfg, 5);
    Rng rng(6);
    randomize_flow(maf, rng);
    Tensor<double> ctx = random_context<double>(rng, 1, 4);

    const double lo = -30, hi = 30, step = 0.01;
    const long n = static_cast<long>((hi - lo) / step) + 1;
    Tensor<double> grid({n, 1});
    for (long i = 0; i < n; ++i) grid.ptr()[i] = lo + i * step;
    Tensor<double> ctx_rows({n, 4});
    for (long i = 0; i < n; ++i) std::copy_n(ctx.ptr(), 4, ctx_rows.ptr() + i * 4);
    std::vector<double> logp = maf.log_prob(grid, ctx_rows);

    double integral = 0;  // trapezoid
    for (long i = 0; i < n; ++i) {
        const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
        integral += w * std::exp(logp[i]) * step;
    }
    CHECK(integral == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("2-d flow density integrates to 1 on a grid within 3%") {
    MafConfig cfg;
    cfg.dim = 2;
    cfg.context_dim = 3;
    cfg.n_transforms = 3;
    Maf<double> maf(cfg, 7);
    Rng rng(8);
    randomize_flow(maf, rng);
    Tensor<double> ctx = random_context<double>(rng, 1, 3);

    const double lo = -12, hi = 12, step = 0.06;
    const long m = static_cast<long>((hi - lo) / step) + 1;
    double integral = 0;
    Tensor<double> row({m, 2}), ctx_rows({m, 3});
    for (long i = 0; i < m; ++i) std::copy_n(ctx.ptr(), 3, ctx_rows.ptr() + i * 3);
    for (long iy = 0; iy < m; ++iy) {
        for (long ix = 0; ix < m; ++ix) {
            row.ptr()[ix * 2] = lo + ix * step;
            row.ptr()[ix * 2 + 1] = lo + iy * step;
        }
        std::vector<double> logp = maf.log_prob(row, ctx_rows);
        const double wy = (iy == 0 || iy == m - 1) ? 0.5 : 1.0;
        for (long ix = 0; ix < m; ++ix) {
            const double wx = (ix == 0 || ix == m - 1) ? 0.5 : 1.0;
            integral += wx * wy * std::exp(logp[ix]) * step * step;
        }
    }
    CHECK(integral == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("invertibility: from-base then to-base round-trips within 1e-5") {
    MafConfig cfg;
    cfg.dim = 4;
    cfg.context_dim = 8;
    Maf<double> maf(cfg, 9);
    Rng rng(10);
    randomize_flow(maf, rng, 0.2, 0.5);
    maf.set_standardization({10, 20, 30, 40}, {5, 5, 5, 5});

    const long n = 1000;
    Tensor<double> z({n, 4});
    test::fill_uniform(z, rng, -3.0, 3.0);
    Tensor<double> ctx = random_context<double>(rng, n, 8);
    Tensor<double> theta = maf.transform_from_base(z, ctx);
    Tensor<double> z_back = maf.transform_to_base(theta, ctx);
    double max_err = 0;
    for (long i = 0; i < n * 4; ++i)
        max_err = std::max(max_err, std::fabs(z_back.ptr()[i] - z.ptr()[i]));
    CHECK(max_err < 1e-5);
}

TEST_CASE("autoregressive mask check: fresh passes, corrupted mask reported") {
    MafConfig cfg;
    cfg.dim = 4;
    cfg.context_dim = 6;
    Maf<float> maf(cfg, 11);
    Rng rng(12);
    randomize_flow(maf, rng, 0.3, 0.3);
    CHECK(maf.check_autoregressive().empty());

    // corrupt one forbidden connection in the output layer of transform 2:
    // output row 0 is mu_1, which must see no hidden unit of degree >= 1
    auto& layer = maf.blocks()[2].layers().back();
    const int hidden = layer.in_features();
    for (int k = 0; k < hidden; ++k) {
        if (!layer.mask()[k]) {
            layer.mutable_mask()[k] = 1;
            layer.weight().value[k] = 0.7f;
            break;
        }
    }
    auto violations = maf.check_autoregressive();
    CHECK(!violations.empty());
    bool found = false;
    for (const auto& v : violations) found = found || (v.transform == 2 && v.output_dim == 0);
    CHECK(found);
}

TEST_CASE("masks stay intact through training steps") {
    MafConfig cfg;
    cfg.dim = 3;
    cfg.context_dim = 4;
    Maf<float> maf(cfg, 13);
    Rng rng(14);
    auto params = maf.params();
    nn::Adam<float> adam;
    for (int step = 0; step < 100; ++step) {
        Tensor<float> theta({8, 3}), ctx({8, 4});
        test::fill_uniform(theta, rng, -2.0, 2.0);
        test::fill_uniform(ctx, rng, -1.0, 1.0);
        std::vector<double> logp = maf.log_prob(theta, ctx);
        std::vector<double> dlogp(8, -1.0 / 8);
        maf.zero_grad();
        maf.backward(dlogp);
        adam.step(params, 1e-3);
    }
    CHECK(maf.check_autoregressive().empty());
}

TEST_CASE("identity flow samples are standard normal; round-trip recovers draws") {
    MafConfig cfg;
    cfg.dim = 4;
    cfg.context_dim = 5;
    Maf<double> maf(cfg, 15);
    Rng rng(16);
    Tensor<double> ctx = random_context<double>(rng, 1, 5);

    const long n = 4096;
    Rng sample_rng(18);
    Tensor<double> s = maf.sample(n, ctx, sample_rng);
    for (int j = 0; j < 4; ++j) {
        double mean = 0;
        for (long i = 0; i < n; ++i) mean += s.ptr()[i * 4 + j];
        mean /= static_cast<double>(n);
        CHECK(std::fabs(mean) < 4.0 / std::sqrt(static_cast<double>(n)));
    }

    // round-trip through a non-trivial flow
    randomize_flow(maf, rng, 0.2, 0.4);
    Tensor<double> z({64, 4});
    test::fill_uniform(z, rng, -2.5, 2.5);
    Tensor<double> theta = maf.transform_from_base(z, ctx);
    Tensor<double> z2 = maf.transform_to_base(theta, ctx);
    for (long i = 0; i < z.numel(); ++i)
        CHECK(z2.ptr()[i] == doctest::Approx(z.ptr()[i]).epsilon(1e-6));
}

TEST_CASE("log_prob gradients match finite differences (64-bit)") {
    MafConfig cfg;
    cfg.dim = 4;
    cfg.context_dim = 6;
    cfg.n_transforms = 3;
    Maf<double> maf(cfg, 19);
    Rng rng(20);
    randomize_flow(maf, rng, 0.3, 0.3);

    test::FdStats fd;
    fd.tol = 1e-3;
    for (int cse = 0; cse < 20; ++cse) {
        Tensor<double> theta({3, 4}), ctx({3, 6});
        test::fill_uniform(theta, rng, -2.0, 2.0);
        test::fill_uniform(ctx, rng, -1.0, 1.0);
        Tensor<double> weights({3, 1});
        test::fill_uniform(weights, rng, 0.5, 1.5);

        auto loss = [&]() {
            std::vector<double> logp = maf.log_prob(theta, ctx);
            double acc = 0;
            for (int r = 0; r < 3; ++r) acc += weights.ptr()[r] * logp[r];
            return acc;
        };
        maf.zero_grad();
        maf.log_prob(theta, ctx);
        std::vector<double> dlogp(weights.ptr(), weights.ptr() + 3);
        Tensor<double> dctx = maf.backward(dlogp);

        for (auto* p : maf.params()) {
            std::vector<double> analytic = p->grad;
            test::check_coords(p->value, analytic, loss, fd, rng, 4, 1e-6);
        }
        test::check_coords(ctx.data, dctx.data, loss, fd, rng, 6, 1e-6);
    }
    CHECK(fd.failed == 0);
    CHECK(fd.checked >= 1000);
    CHECK(fd.max_rel < 1e-3);
}

TEST_CASE("one NLL step at a small learning rate decreases the loss") {
    MafConfig cfg;
    cfg.dim = 4;
    cfg.context_dim = 4;
    Maf<float> maf(cfg, 21);
    Rng rng(22);
    randomize_flow(maf, rng, 0.2, 0.3);

    Tensor<float> theta({32, 4}), ctx({32, 4});
    test::fill_uniform(theta, rng, -1.5, 1.5);
    test::fill_uniform(ctx, rng, -1.0, 1.0);

    auto nll = [&]() {
        std::vector<double> logp = maf.log_prob(theta, ctx);
        double acc = 0;
        for (double v : logp) acc -= v;
        return acc / 32.0;
    };
    const double before = nll();
    maf.zero_grad();
    maf.log_prob(theta, ctx);
    std::vector<double> dlogp(32, -1.0 / 32);
    maf.backward(dlogp);
    // plain gradient step, small enough for a guaranteed descent direction
    for (auto* p : maf.params())
        for (std::size_t i = 0; i < p->value.size(); ++i)
            p->value[i] -= 1e-4f * p->grad[i];
    CHECK(nll() < before);
}

TEST_CASE("state round-trips through a checkpoint: samples identical") {
    MafConfig cfg;
    cfg.dim = 4;
    cfg.context_dim = 5;
    Maf<float> maf(cfg, 23);
    Rng rng(24);
    randomize_flow(maf, rng, 0.3, 0.4);
    maf.set_standardization({100, 200, 300, 400}, {50, 60, 70, 80});
    Tensor<float> ctx = random_context<float>(rng, 1, 5);

    nn::Checkpoint ck;
    maf.save_state(ck);
    const std::string path =
        (std::filesystem::temp_directory_path() / "adex_test_flow.ckpt").string();
    ck.save(path);

    Maf<float> other(cfg, 99);
    other.load_state(nn::Checkpoint::load(path));
    Rng r1(7), r2(7);
    Tensor<float> s1 = maf.sample(50, ctx, r1);
    Tensor<float> s2 = other.sample(50, ctx, r2);
    CHECK(s1.data == s2.data);
    std::filesystem::remove(path);
}
