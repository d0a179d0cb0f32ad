#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "carbideseg/layers.hpp"
#include "carbideseg/rng.hpp"
#include "carbideseg/tensor.hpp"

namespace carbideseg::net {

struct UNetConfig {
    int in_channels = 2;
    int encoder_blocks = 3;
    int base_features = 128;
    int convs_per_block = 2;
    int kernel_size = 3;
    int out_channels = 1;
    bool mve_head = false;          // adds one output channel carrying log-variance
    bool bilinear_upsample = false; // nearest x2 + conv instead of transposed conv
    double bn_momentum = 0.1;
    double bn_eps = 1e-5;

    void validate() const {
        if (encoder_blocks < 1) throw std::invalid_argument("UNetConfig: encoder_blocks must be >= 1");
        if (base_features < 1) throw std::invalid_argument("UNetConfig: base_features must be >= 1");
        if (convs_per_block < 1) throw std::invalid_argument("UNetConfig: convs_per_block must be >= 1");
        if (kernel_size < 1 || kernel_size % 2 == 0)
            throw std::invalid_argument("UNetConfig: kernel_size must be odd");
        if (in_channels < 1 || out_channels < 1)
            throw std::invalid_argument("UNetConfig: channel counts must be >= 1");
    }

    int features_at(int level) const { return base_features << level; }
    int total_out_channels() const { return out_channels + (mve_head ? 1 : 0); }
};

template <typename T>
struct ParameterStore {
    struct Entry {
        std::string name;
        Tensor4<T> value;
        Tensor4<T> grad;  // empty for non-trainable entries
        bool trainable = true;
    };

    std::vector<Entry> entries;
    std::unordered_map<std::string, std::size_t> index;

    Tensor4<T>& add(const std::string& name, int n, int c, int h, int w, bool trainable = true) {
        if (index.count(name)) throw std::logic_error("ParameterStore: duplicate name " + name);
        index[name] = entries.size();
        Entry e;
        e.name = name;
        e.value = Tensor4<T>(n, c, h, w);
        if (trainable) e.grad = Tensor4<T>(n, c, h, w);
        e.trainable = trainable;
        entries.push_back(std::move(e));
        return entries.back().value;
    }

    bool has(const std::string& name) const { return index.count(name) != 0; }

    Entry& entry(const std::string& name) {
        auto it = index.find(name);
        if (it == index.end()) throw std::out_of_range("ParameterStore: no entry " + name);
        return entries[it->second];
    }
    const Entry& entry(const std::string& name) const {
        return const_cast<ParameterStore*>(this)->entry(name);
    }
    Tensor4<T>& value(const std::string& name) { return entry(name).value; }
    const Tensor4<T>& value(const std::string& name) const { return entry(name).value; }
    Tensor4<T>& grad(const std::string& name) { return entry(name).grad; }

    std::size_t trainable_scalar_count() const {
        std::size_t n = 0;
        for (const auto& e : entries)
            if (e.trainable) n += e.value.size();
        return n;
    }

    void zero_grad() {
        for (auto& e : entries)
            if (e.trainable) e.grad.fill(T(0));
    }
};

namespace detail {

template <typename T>
struct ConvUnitCache {
    Tensor4<T> conv_in;
    BatchNormCache<T> bn;
    Tensor4<T> relu_out;
};

template <typename T>
struct UNetCache {
    bool valid = false;
    std::vector<std::vector<ConvUnitCache<T>>> enc;   // per level, per conv
    std::vector<Tensor4<T>> skips;                    // pre-pool activations
    std::vector<std::vector<std::uint32_t>> pool_argmax;
    std::vector<std::pair<int, int>> pool_in_dims;
    std::vector<ConvUnitCache<T>> bottleneck;
    std::vector<Tensor4<T>> up_in;                    // per decoder level
    std::vector<Tensor4<T>> upsampled;                // bilinear path only
    std::vector<int> concat_skip_channels;
    std::vector<std::vector<ConvUnitCache<T>>> dec;
    Tensor4<T> final_in;
};

} // namespace detail

// The paper's segmentation network: encoder with channel doubling and 2x2
// max pooling, bottleneck, decoder with x2 upsampling and skip
// concatenation, final 1x1 conv emitting logits.
template <typename T>
class UNet {
public:
    explicit UNet(const UNetConfig& cfg, std::uint64_t seed = 0) : cfg_(cfg) {
        cfg.validate();
        build(seed);
    }

    const UNetConfig& config() const { return cfg_; }
    ParameterStore<T>& params() { return params_; }
    const ParameterStore<T>& params() const { return params_; }

    Tensor4<T> forward(const Tensor4<T>& batch, bool train) {
        if (batch.c != cfg_.in_channels)
            throw std::invalid_argument("UNet::forward: wrong channel count");
        const int stride = 1 << cfg_.encoder_blocks;
        if (batch.h % stride != 0 || batch.w % stride != 0)
            throw std::invalid_argument("UNet::forward: spatial dims not divisible by 2^encoder_blocks");

        detail::UNetCache<T> local;
        detail::UNetCache<T>& cache = train ? cache_ : local;
        cache = detail::UNetCache<T>{};
        cache.enc.resize(cfg_.encoder_blocks);
        cache.dec.resize(cfg_.encoder_blocks);

        Tensor4<T> x = batch;
        for (int k = 0; k < cfg_.encoder_blocks; ++k) {
            x = conv_stack(x, "enc" + std::to_string(k), cache.enc[k], train);
            cache.skips.push_back(x);
            cache.pool_in_dims.emplace_back(x.h, x.w);
            cache.pool_argmax.emplace_back();
            x = maxpool2x2_forward(x, train ? &cache.pool_argmax.back() : nullptr);
        }
        x = conv_stack(x, "bottleneck", cache.bottleneck, train);

        for (int k = cfg_.encoder_blocks - 1; k >= 0; --k) {
            cache.up_in.push_back(x);
            x = up_forward(x, k, cache, train);
            const Tensor4<T>& skip = cache.skips[k];
            cache.concat_skip_channels.push_back(skip.c);
            x = concat_channels(skip, x);
            x = conv_stack(x, "dec" + std::to_string(k), cache.dec[k], train);
        }

        cache.final_in = x;
        Tensor4<T> logits = conv2d_forward(x, params_.value("final.weight"),
                                           bias_vec("final.bias"));
        cache.valid = train;
        return logits;
    }

    // Accumulates parameter gradients from a retained train-mode forward;
    // returns the gradient with respect to the input batch.
    Tensor4<T> backward(const Tensor4<T>& grad_logits) {
        if (!cache_.valid)
            throw std::logic_error("UNet::backward: no retained train-mode forward");
        detail::UNetCache<T>& cache = cache_;

        Tensor4<T> gx;
        conv_unit_backward_conv("final", cache.final_in, grad_logits, gx);

        for (int k = 0; k < cfg_.encoder_blocks; ++k) {
            gx = conv_stack_backward(gx, "dec" + std::to_string(k), cache.dec[k]);
            Tensor4<T> g_skip, g_up;
            split_channels(gx, cache.concat_skip_channels[cfg_.encoder_blocks - 1 - k], g_skip, g_up);
            gx = up_backward(g_up, k, cache);
            pending_skip_grads_.push_back(std::move(g_skip));
        }

        gx = conv_stack_backward(gx, "bottleneck", cache.bottleneck);

        for (int k = cfg_.encoder_blocks - 1; k >= 0; --k) {
            auto [in_h, in_w] = cache.pool_in_dims[k];
            gx = maxpool2x2_backward(gx, cache.pool_argmax[k], in_h, in_w);
            // add the skip-connection gradient entering above the pool;
            // pending_skip_grads_[i] holds the gradient for encoder level i
            Tensor4<T>& g_skip = pending_skip_grads_[k];
            for (std::size_t i = 0; i < gx.data.size(); ++i) gx.data[i] += g_skip.data[i];
            gx = conv_stack_backward(gx, "enc" + std::to_string(k), cache.enc[k]);
        }
        pending_skip_grads_.clear();
        cache_.valid = false;
        return gx;
    }

    void invalidate_cache() {
        cache_ = detail::UNetCache<T>{};
        pending_skip_grads_.clear();
    }

    static std::size_t count_parameters(const UNetConfig& cfg);

private:
    std::vector<T> bias_vec(const std::string& name) const {
        const auto& t = params_.value(name);
        return t.data;
    }

    void add_conv(const std::string& name, int out_c, int in_c, int k, Rng& rng) {
        auto& w = params_.add(name + ".weight", out_c, in_c, k, k);
        const double scale = std::sqrt(2.0 / (static_cast<double>(in_c) * k * k));
        for (auto& v : w.data) v = static_cast<T>(rng.normal() * scale);
        params_.add(name + ".bias", out_c, 1, 1, 1);
    }

    void add_bn(const std::string& name, int c) {
        auto& g = params_.add(name + ".gamma", c, 1, 1, 1);
        g.fill(T(1));
        params_.add(name + ".beta", c, 1, 1, 1);
        params_.add(name + ".running_mean", c, 1, 1, 1, false);
        auto& rv = params_.add(name + ".running_var", c, 1, 1, 1, false);
        rv.fill(T(1));
    }

    void add_conv_stack(const std::string& prefix, int in_c, int out_c, Rng& rng) {
        for (int j = 0; j < cfg_.convs_per_block; ++j) {
            int ic = j == 0 ? in_c : out_c;
            add_conv(prefix + ".conv" + std::to_string(j), out_c, ic, cfg_.kernel_size, rng);
            add_bn(prefix + ".bn" + std::to_string(j), out_c);
        }
    }

    void build(std::uint64_t seed) {
        Rng rng(seed);
        const int B = cfg_.encoder_blocks;
        for (int k = 0; k < B; ++k) {
            int in_c = k == 0 ? cfg_.in_channels : cfg_.features_at(k - 1);
            add_conv_stack("enc" + std::to_string(k), in_c, cfg_.features_at(k), rng);
        }
        add_conv_stack("bottleneck", cfg_.features_at(B - 1), cfg_.features_at(B), rng);
        for (int k = B - 1; k >= 0; --k) {
            const int in_c = cfg_.features_at(k + 1);
            const int out_c = cfg_.features_at(k);
            const std::string up = "up" + std::to_string(k);
            if (cfg_.bilinear_upsample) {
                add_conv(up, out_c, in_c, cfg_.kernel_size, rng);
            } else {
                // transposed conv weight layout [in_c, out_c, 2, 2]
                auto& w = params_.add(up + ".weight", in_c, out_c, 2, 2);
                const double scale = std::sqrt(2.0 / (static_cast<double>(in_c) * 4));
                for (auto& v : w.data) v = static_cast<T>(rng.normal() * scale);
                params_.add(up + ".bias", out_c, 1, 1, 1);
            }
            add_conv_stack("dec" + std::to_string(k), 2 * out_c, out_c, rng);
        }
        add_conv("final", cfg_.total_out_channels(), cfg_.base_features, 1, rng);
    }

    Tensor4<T> conv_stack(const Tensor4<T>& in, const std::string& prefix,
                          std::vector<detail::ConvUnitCache<T>>& caches, bool train) {
        Tensor4<T> x = in;
        caches.clear();
        caches.resize(cfg_.convs_per_block);
        for (int j = 0; j < cfg_.convs_per_block; ++j) {
            auto& cc = caches[j];
            const std::string conv = prefix + ".conv" + std::to_string(j);
            const std::string bn = prefix + ".bn" + std::to_string(j);
            if (train) cc.conv_in = x;
            x = conv2d_forward(x, params_.value(conv + ".weight"), bias_vec(conv + ".bias"));
            x = batchnorm_forward(x, params_.value(bn + ".gamma").data,
                                  params_.value(bn + ".beta").data,
                                  params_.value(bn + ".running_mean").data,
                                  params_.value(bn + ".running_var").data, train,
                                  static_cast<T>(cfg_.bn_momentum), static_cast<T>(cfg_.bn_eps),
                                  train ? &cc.bn : nullptr);
            x = relu_forward(x);
            if (train) cc.relu_out = x;
        }
        return x;
    }

    void conv_unit_backward_conv(const std::string& conv, const Tensor4<T>& conv_in,
                                 const Tensor4<T>& grad_out, Tensor4<T>& grad_in) {
        Tensor4<T> gw;
        std::vector<T> gb;
        conv2d_backward(conv_in, params_.value(conv + ".weight"), grad_out, grad_in, gw, gb);
        accumulate(conv + ".weight", gw.data);
        accumulate(conv + ".bias", gb);
    }

    Tensor4<T> conv_stack_backward(const Tensor4<T>& grad_out, const std::string& prefix,
                                   std::vector<detail::ConvUnitCache<T>>& caches) {
        Tensor4<T> g = grad_out;
        for (int j = cfg_.convs_per_block - 1; j >= 0; --j) {
            auto& cc = caches[j];
            const std::string conv = prefix + ".conv" + std::to_string(j);
            const std::string bn = prefix + ".bn" + std::to_string(j);
            g = relu_backward(g, cc.relu_out);
            std::vector<T> gg, gb;
            g = batchnorm_backward(g, cc.bn, params_.value(bn + ".gamma").data, gg, gb);
            accumulate(bn + ".gamma", gg);
            accumulate(bn + ".beta", gb);
            Tensor4<T> gi;
            conv_unit_backward_conv(conv, cc.conv_in, g, gi);
            g = std::move(gi);
        }
        return g;
    }

    Tensor4<T> up_forward(const Tensor4<T>& x, int level, detail::UNetCache<T>& cache, bool train) {
        const std::string up = "up" + std::to_string(level);
        if (cfg_.bilinear_upsample) {
            Tensor4<T> u = upsample2x_forward(x);
            if (train) cache.upsampled.push_back(u);
            return conv2d_forward(u, params_.value(up + ".weight"), bias_vec(up + ".bias"));
        }
        return conv_transpose2x2_forward(x, params_.value(up + ".weight"), bias_vec(up + ".bias"));
    }

    Tensor4<T> up_backward(const Tensor4<T>& grad_out, int dec_step, detail::UNetCache<T>& cache) {
        // dec_step counts decoder stages already walked in backward order
        const int level = dec_step;
        const std::string up = "up" + std::to_string(level);
        const std::size_t fwd_idx = cfg_.encoder_blocks - 1 - level;
        const Tensor4<T>& in = cache.up_in[fwd_idx];
        Tensor4<T> gi, gw;
        std::vector<T> gb;
        if (cfg_.bilinear_upsample) {
            const Tensor4<T>& u = cache.upsampled[fwd_idx];
            conv2d_backward(u, params_.value(up + ".weight"), grad_out, gi, gw, gb);
            accumulate(up + ".weight", gw.data);
            accumulate(up + ".bias", gb);
            return upsample2x_backward(gi);
        }
        conv_transpose2x2_backward(in, params_.value(up + ".weight"), grad_out, gi, gw, gb);
        accumulate(up + ".weight", gw.data);
        accumulate(up + ".bias", gb);
        return gi;
    }

    void accumulate(const std::string& name, const std::vector<T>& g) {
        auto& dst = params_.grad(name).data;
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += g[i];
    }

    UNetConfig cfg_;
    ParameterStore<T> params_;
    detail::UNetCache<T> cache_;
    std::vector<Tensor4<T>> pending_skip_grads_;
};

template <typename T>
std::size_t UNet<T>::count_parameters(const UNetConfig& cfg) {
    cfg.validate();
    const int k2 = cfg.kernel_size * cfg.kernel_size;
    auto conv_stack_count = [&](int in_c, int out_c) {
        std::size_t n = 0;
        for (int j = 0; j < cfg.convs_per_block; ++j) {
            int ic = j == 0 ? in_c : out_c;
            n += static_cast<std::size_t>(out_c) * ic * k2 + out_c;  // conv
            n += 2 * static_cast<std::size_t>(out_c);                // bn scale/shift
        }
        return n;
    };
    std::size_t total = 0;
    const int B = cfg.encoder_blocks;
    for (int k = 0; k < B; ++k)
        total += conv_stack_count(k == 0 ? cfg.in_channels : cfg.features_at(k - 1),
                                  cfg.features_at(k));
    total += conv_stack_count(cfg.features_at(B - 1), cfg.features_at(B));
    for (int k = B - 1; k >= 0; --k) {
        const int in_c = cfg.features_at(k + 1);
        const int out_c = cfg.features_at(k);
        if (cfg.bilinear_upsample)
            total += static_cast<std::size_t>(out_c) * in_c * k2 + out_c;
        else
            total += static_cast<std::size_t>(in_c) * out_c * 4 + out_c;
        total += conv_stack_count(2 * out_c, out_c);
    }
    total += static_cast<std::size_t>(cfg.total_out_channels()) * cfg.base_features +
             cfg.total_out_channels();
    return total;
}

// Checkpoint container: JSON header (config + tensor index) followed by
// little-endian float32 payloads. Implemented in tensorio.cpp.
void save_checkpoint(const UNet<float>& net, const std::string& path);
UNet<float> load_checkpoint(const std::string& path);

} // namespace carbideseg::net
