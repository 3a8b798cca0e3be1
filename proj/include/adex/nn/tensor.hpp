#pragma once

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "adex/errors.hpp"

namespace adex::nn {

// Dense n-dimensional array, row-major. Scalar is float in training builds
// and double in gradient-check instantiations.
template <class S>
struct Tensor {
    std::vector<long> shape;
    std::vector<S> data;

    Tensor() = default;
    explicit Tensor(std::vector<long> shp) : shape(std::move(shp)) {
        data.assign(static_cast<std::size_t>(numel_of(shape)), S(0));
    }

    static long numel_of(const std::vector<long>& shp) {
        long n = 1;
        for (long d : shp) n *= d;
        return n;
    }

    long numel() const { return static_cast<long>(data.size()); }
    long dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
    int rank() const { return static_cast<int>(shape.size()); }

    S* ptr() { return data.data(); }
    const S* ptr() const { return data.data(); }

    // [N, C, L] accessors for the conv stack
    S* row(long n, long c) { return data.data() + (n * shape[1] + c) * shape[2]; }
    const S* row(long n, long c) const { return data.data() + (n * shape[1] + c) * shape[2]; }

    void require_shape(const std::vector<long>& expect, const std::string& who) const {
        if (shape != expect) {
            std::string got = "(", want = "(";
            for (long d : shape) got += std::to_string(d) + ",";
            for (long d : expect) want += std::to_string(d) + ",";
            throw ShapeError(who + ": expected shape " + want + ") got " + got + ")");
        }
    }
};

// Trainable array plus its gradient and Adam moment accumulators.
template <class S>
struct Param {
    std::string name;
    std::vector<long> shape;
    std::vector<S> value, grad, adam_m, adam_v;

    void init(std::string n, std::vector<long> shp) {
        name = std::move(n);
        shape = std::move(shp);
        const auto count = static_cast<std::size_t>(Tensor<S>::numel_of(shape));
        value.assign(count, S(0));
        grad.assign(count, S(0));
        adam_m.assign(count, S(0));
        adam_v.assign(count, S(0));
    }

    long numel() const { return static_cast<long>(value.size()); }
    void zero_grad() { std::fill(grad.begin(), grad.end(), S(0)); }
};

}  // namespace adex::nn
