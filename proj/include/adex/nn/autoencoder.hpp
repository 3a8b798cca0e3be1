#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "adex/nn/checkpoint.hpp"
#include "adex/nn/layers.hpp"

namespace adex::nn {

// Convolutional autoencoder over (1, 1024) traces with a 32-sample latent.
//
// Encoder: [conv5 1->32 +relu, bn, pool] [conv3 32->16 +relu, bn, pool]
//          [conv11 16->64 +relu, pool] [conv13 64->128 +relu, pool]
//          [conv3 128->1 +relu, pool]                         -> (1, 32)
// Decoder: [conv3 1->128 +relu, up] [conv13 128->64 +relu, up]
//          [conv11 64->16 +relu, up] [conv3 16->32 +relu, up]
//          [conv5 32->1, up]                                  -> (1, 1024)
template <class S>
class Autoencoder {
public:
    Sequential<S> encoder, decoder;

    static Autoencoder build(std::uint64_t init_seed = 0) {
        Autoencoder m;
        int layer_idx = 0;
        auto seed = [&] { return Rng::split(init_seed, static_cast<std::uint64_t>(layer_idx++)); };
        auto conv = [&](Sequential<S>& seq, const std::string& name, int ci, int co, int k,
                        bool relu) {
            seq.add(std::make_unique<Conv1d<S>>(name, ci, co, k, seed()));
            if (relu) seq.add(std::make_unique<Relu<S>>(name + ".relu"));
        };

        conv(m.encoder, "enc.conv1", 1, 32, 5, true);
        m.encoder.add(std::make_unique<BatchNorm1d<S>>("enc.bn1", 32));
        m.encoder.add(std::make_unique<MaxPool1d<S>>("enc.pool1"));
        conv(m.encoder, "enc.conv2", 32, 16, 3, true);
        m.encoder.add(std::make_unique<BatchNorm1d<S>>("enc.bn2", 16));
        m.encoder.add(std::make_unique<MaxPool1d<S>>("enc.pool2"));
        conv(m.encoder, "enc.conv3", 16, 64, 11, true);
        m.encoder.add(std::make_unique<MaxPool1d<S>>("enc.pool3"));
        conv(m.encoder, "enc.conv4", 64, 128, 13, true);
        m.encoder.add(std::make_unique<MaxPool1d<S>>("enc.pool4"));
        conv(m.encoder, "enc.conv5", 128, 1, 3, true);
        m.encoder.add(std::make_unique<MaxPool1d<S>>("enc.pool5"));

        conv(m.decoder, "dec.conv1", 1, 128, 3, true);
        m.decoder.add(std::make_unique<Upsample2<S>>("dec.up1"));
        conv(m.decoder, "dec.conv2", 128, 64, 13, true);
        m.decoder.add(std::make_unique<Upsample2<S>>("dec.up2"));
        conv(m.decoder, "dec.conv3", 64, 16, 11, true);
        m.decoder.add(std::make_unique<Upsample2<S>>("dec.up3"));
        conv(m.decoder, "dec.conv4", 16, 32, 3, true);
        m.decoder.add(std::make_unique<Upsample2<S>>("dec.up4"));
        conv(m.decoder, "dec.conv5", 32, 1, 5, false);  // no activation on the final conv
        m.decoder.add(std::make_unique<Upsample2<S>>("dec.up5"));
        return m;
    }

    // latent features for a batch: [N,1,1024] -> [N,1,32]
    Tensor<S> encode(const Tensor<S>& x, bool training = false) {
        return encoder.forward(x, training);
    }

    Tensor<S> forward(const Tensor<S>& x, bool training) {
        return decoder.forward(encoder.forward(x, training), training);
    }

    // full reconstruction backward; returns gradient wrt the input
    Tensor<S> backward(const Tensor<S>& dy) { return encoder.backward(decoder.backward(dy)); }

    std::vector<Param<S>*> params() {
        auto out = encoder.params();
        for (auto* p : decoder.params()) out.push_back(p);
        return out;
    }

    long param_count() {
        long n = 0;
        for (auto* p : params()) n += p->numel();
        return n;
    }

    // (layer name, output shape) for each architecture-table row
    std::vector<std::pair<std::string, std::vector<long>>> shape_probe() {
        std::vector<std::pair<std::string, std::vector<long>>> rows;
        Tensor<S> cur({1, 1, 1024});
        for (auto* l : encoder.layers()) {
            cur = l->forward(cur, false);
            if (l->shape_probe_point()) rows.emplace_back(l->name(), std::vector<long>{cur.dim(1), cur.dim(2)});
        }
        for (auto* l : decoder.layers()) {
            cur = l->forward(cur, false);
            if (l->shape_probe_point()) rows.emplace_back(l->name(), std::vector<long>{cur.dim(1), cur.dim(2)});
        }
        return rows;
    }

    void save_state(Checkpoint& ck, const std::string& prefix = "", bool with_adam = true) {
        for (auto* p : params()) {
            Param<S> tagged = *p;
            tagged.name = prefix + p->name;
            put_param(ck, tagged, with_adam);
        }
        for (auto* b : all_buffers()) ck.put_array(prefix + b->name, {static_cast<long>(b->value.size())}, b->value);
    }

    void load_state(const Checkpoint& ck, const std::string& prefix = "") {
        for (auto* p : params()) {
            Param<S> tagged = *p;
            tagged.name = prefix + p->name;
            get_param(ck, tagged);
            p->value = std::move(tagged.value);
            p->adam_m = std::move(tagged.adam_m);
            p->adam_v = std::move(tagged.adam_v);
        }
        for (auto* b : all_buffers()) b->value = ck.get_array<S>(prefix + b->name);
    }

private:
    std::vector<Buffer<S>*> all_buffers() {
        auto out = encoder.buffers();
        for (auto* b : decoder.buffers()) out.push_back(b);
        return out;
    }
};

}  // namespace adex::nn
