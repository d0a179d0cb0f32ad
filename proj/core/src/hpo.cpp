#include "carbideseg/training.hpp"

#include <filesystem>
#include <fstream>

namespace carbideseg {

void SearchSpace::validate() const {
    if (lr0_lo <= 0.0 || lr0_hi < lr0_lo)
        throw std::invalid_argument("SearchSpace: lr0 range must be positive and ordered");
    if (patience_lo < 1 || patience_hi < patience_lo)
        throw std::invalid_argument("SearchSpace: patience range not ordered");
    if (base_features_choices.empty() || encoder_blocks_choices.empty())
        throw std::invalid_argument("SearchSpace: empty choice list");
    if (budget < 1) throw std::invalid_argument("SearchSpace: budget must be >= 1");
    if (max_epochs_per_trial < 1)
        throw std::invalid_argument("SearchSpace: max_epochs_per_trial must be >= 1");
}

std::vector<Trial> hyperparameter_search(const SearchSpace& space,
                                         const TileSet& train_tiles,
                                         const TileSet& val_tiles,
                                         const TrainConfig& base_cfg) {
    space.validate();
    Rng rng(space.seed);
    std::vector<Trial> trials;
    for (int i = 0; i < space.budget; ++i) {
        Trial t;
        t.id = i;
        t.lr0 = rng.log_uniform(space.lr0_lo, space.lr0_hi);
        t.early_stop_patience =
            space.patience_lo +
            static_cast<int>(rng.uniform_index(
                static_cast<std::uint64_t>(space.patience_hi - space.patience_lo + 1)));
        t.base_features = space.base_features_choices[rng.uniform_index(
            space.base_features_choices.size())];
        t.encoder_blocks = space.encoder_blocks_choices[rng.uniform_index(
            space.encoder_blocks_choices.size())];

        TrainConfig cfg = base_cfg;
        cfg.lr0 = t.lr0;
        cfg.early_stop_patience = t.early_stop_patience;
        cfg.unet.base_features = t.base_features;
        cfg.unet.encoder_blocks = t.encoder_blocks;
        cfg.max_epochs = space.max_epochs_per_trial;
        cfg.seed = base_cfg.seed ^ (0x7f4a7c15ULL * static_cast<std::uint64_t>(i + 1));

        try {
            TrainResult r = train(train_tiles, val_tiles, cfg);
            t.best_val_loss = r.report.best_val_loss;
            t.best_val_dice = r.report.best_val_dice;
            t.epochs_run = static_cast<int>(r.report.epochs.size());
        } catch (const std::exception& e) {
            t.feasible = false;
            t.note = e.what();
        }
        trials.push_back(std::move(t));
    }
    return trials;
}

void write_trials_csv(const std::vector<Trial>& trials, const std::string& path) {
    std::filesystem::path tmp = std::filesystem::path(path).concat(".tmp");
    {
        std::ofstream os(tmp);
        os << "trial,lr0,early_stop_patience,base_features,encoder_blocks,"
              "feasible,best_val_loss,best_val_dice,epochs_run,note\n";
        for (const auto& t : trials)
            os << t.id << ',' << t.lr0 << ',' << t.early_stop_patience << ','
               << t.base_features << ',' << t.encoder_blocks << ','
               << (t.feasible ? 1 : 0) << ',' << t.best_val_loss << ','
               << t.best_val_dice << ',' << t.epochs_run << ",\"" << t.note << "\"\n";
    }
    std::filesystem::rename(tmp, path);
}

} // namespace carbideseg
