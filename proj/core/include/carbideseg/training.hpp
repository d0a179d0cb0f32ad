#pragma once

#include <limits>
#include <string>
#include <vector>

#include "carbideseg/adam.hpp"
#include "carbideseg/tiling.hpp"
#include "carbideseg/unet.hpp"

namespace carbideseg {

// Soft Dice loss over the whole batch: 1 - (2*sum(y*p)+eps)/(sum(y)+sum(p)+eps).
// With eps > 0 the empty-empty case evaluates to 0. Optionally emits the
// analytic gradient with respect to the predictions.
template <typename T>
T dice_loss(const net::Tensor4<T>& pred_probs, const net::Tensor4<T>& targets, T eps,
            net::Tensor4<T>* grad_pred = nullptr) {
    net::check_same_shape(pred_probs, targets, "dice_loss");
    T inter = T(0), sum_p = T(0), sum_y = T(0);
    for (std::size_t i = 0; i < pred_probs.data.size(); ++i) {
        inter += targets.data[i] * pred_probs.data[i];
        sum_p += pred_probs.data[i];
        sum_y += targets.data[i];
    }
    const T num = T(2) * inter + eps;
    const T den = sum_y + sum_p + eps;
    if (grad_pred) {
        *grad_pred = net::Tensor4<T>(pred_probs.n, pred_probs.c, pred_probs.h, pred_probs.w);
        for (std::size_t i = 0; i < pred_probs.data.size(); ++i)
            grad_pred->data[i] = -(T(2) * targets.data[i] * den - num) / (den * den);
    }
    return T(1) - num / den;
}

struct TrainConfig {
    net::UNetConfig unet;
    double lr0 = 2e-4;
    double lr_decay_factor = 0.5;
    int lr_patience = 7;
    int early_stop_patience = 14;
    int batch_size = 32;
    int max_epochs = 200;
    double dice_smooth = 1e-6;
    std::uint64_t seed = 0;
    AugmentationSpec augmentation;
    bool augment_enabled = true;
    std::string objective = "val_loss";  // or "val_dice"

    void validate() const;
};

struct EpochStats {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_dice = 0.0;
    double lr = 0.0;  // learning rate in effect during this epoch
    double seconds = 0.0;
};

struct TrainReport {
    std::vector<EpochStats> epochs;
    int best_epoch = 0;
    double best_val_loss = std::numeric_limits<double>::infinity();
    double best_val_dice = 0.0;
    std::string stop_reason;  // "early_stop" | "max_epochs" | "non_finite_loss"
};

struct TrainResult {
    net::UNet<float> model;  // best-validation checkpoint
    TrainReport report;
};

TrainResult train(const TileSet& train_tiles, const TileSet& val_tiles,
                  const TrainConfig& cfg);

void write_report_csv(const TrainReport& report, const std::string& path);

// Tiled full-image inference: grid tiling with mirror padding for border
// strips, eval-mode forward, sigmoid with optional temperature, reassembly.
struct Prediction {
    Image2D prob_map;
    BinaryMask mask;
};

Prediction predict_image(net::UNet<float>& model, const ChannelPair& pair,
                         int tile_size = 128, double temperature = 1.0,
                         double threshold = 0.5);

// Also used by calibration: raw logits for the whole image.
Image2D predict_logits(net::UNet<float>& model, const ChannelPair& pair,
                       int tile_size = 128);

// --- hyperparameter random search (Appendix-style 4-parameter space) ---

struct SearchSpace {
    double lr0_lo = 1e-5, lr0_hi = 1e-2;  // log-uniform
    int patience_lo = 5, patience_hi = 20;
    std::vector<int> base_features_choices = {8, 16, 32, 64, 128};
    std::vector<int> encoder_blocks_choices = {1, 2, 3};
    int budget = 20;
    int max_epochs_per_trial = 20;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Trial {
    int id = 0;
    double lr0 = 0.0;
    int early_stop_patience = 0;
    int base_features = 0;
    int encoder_blocks = 0;
    bool feasible = true;
    std::string note;
    double best_val_loss = std::numeric_limits<double>::infinity();
    double best_val_dice = 0.0;
    int epochs_run = 0;
};

std::vector<Trial> hyperparameter_search(const SearchSpace& space,
                                         const TileSet& train_tiles,
                                         const TileSet& val_tiles,
                                         const TrainConfig& base_cfg);

void write_trials_csv(const std::vector<Trial>& trials, const std::string& path);

} // namespace carbideseg
