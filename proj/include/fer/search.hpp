#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "fer/training.hpp"

namespace fer {

// Sampling ranges for the tunable hyperparameters. Degenerate ranges
// (min == max) pin a value.
struct SearchSpace {
    double lr_min = 1e-4, lr_max = 1e-2;           // sampled log-uniformly
    int batch_min = 32, batch_max = 256;
    float conv_dropout_min = 0.1f, conv_dropout_max = 0.4f;
    float fc_dropout_min = 0.3f, fc_dropout_max = 0.7f;
    int trial_epochs_min = 5, trial_epochs_max = 5;  // short schedule per trial
};

struct TrialResult {
    int trial = 0;
    TrainConfig config;
    float conv_dropout = 0.25f;
    float fc_dropout = 0.5f;
    double val_accuracy = 0.0;
    std::string diagnostic;  // non-empty when the trial failed
};

namespace detail {

inline void validate(const SearchSpace& s) {
    if (!(s.lr_min > 0.0) || s.lr_max < s.lr_min) throw ArgError("random_search: bad learning-rate range");
    if (s.batch_min < 1 || s.batch_max < s.batch_min) throw ArgError("random_search: bad batch-size range");
    if (s.conv_dropout_min < 0.0f || s.conv_dropout_max >= 1.0f || s.conv_dropout_max < s.conv_dropout_min)
        throw ArgError("random_search: bad conv dropout range");
    if (s.fc_dropout_min < 0.0f || s.fc_dropout_max >= 1.0f || s.fc_dropout_max < s.fc_dropout_min)
        throw ArgError("random_search: bad fc dropout range");
    if (s.trial_epochs_min < 1 || s.trial_epochs_max < s.trial_epochs_min)
        throw ArgError("random_search: bad trial-epochs range");
}

}  // namespace detail

// Random-combination hyperparameter search: `budget` independent seeded
// draws from the space, each trained from scratch on a short schedule and
// scored by final validation accuracy. A failing trial is recorded with
// accuracy 0 and its diagnostic instead of aborting the sweep. Results come
// back sorted by accuracy, best first (ties keep draw order).
inline std::vector<TrialResult> random_search(const SearchSpace& space, int budget, const Dataset& train_set,
                                              const Dataset& val_set, uint64_t seed,
                                              const TrainConfig& base_config = {}) {
    if (budget < 1) throw ArgError("random_search: budget must be >= 1");
    detail::validate(space);

    std::vector<TrialResult> results;
    results.reserve(static_cast<size_t>(budget));
    for (int trial = 0; trial < budget; ++trial) {
        Rng rng(mix_seed(seed, 0x74756e65ull, static_cast<uint64_t>(trial)));
        TrialResult r;
        r.trial = trial;
        r.config = base_config;
        r.config.seed = mix_seed(seed, 0x74726961ull, static_cast<uint64_t>(trial));
        r.config.learning_rate =
            std::exp(rng.uniform(std::log(space.lr_min), std::log(space.lr_max)));
        r.config.batch_size =
            space.batch_min + static_cast<int>(rng.uniform_int(static_cast<uint64_t>(space.batch_max - space.batch_min + 1)));
        r.conv_dropout = static_cast<float>(rng.uniform(space.conv_dropout_min, space.conv_dropout_max));
        r.fc_dropout = static_cast<float>(rng.uniform(space.fc_dropout_min, space.fc_dropout_max));
        r.config.epochs =
            space.trial_epochs_min +
            static_cast<int>(rng.uniform_int(static_cast<uint64_t>(space.trial_epochs_max - space.trial_epochs_min + 1)));

        try {
            NetworkT<float> net =
                make_network<float>(NetworkSpec::canonical(r.conv_dropout, r.fc_dropout), r.config.seed);
            const std::vector<EpochRecord> records = train(net, train_set, val_set, r.config);
            r.val_accuracy = records.empty() ? 0.0 : records.back().val_accuracy;
        } catch (const std::exception& e) {
            r.val_accuracy = 0.0;
            r.diagnostic = e.what();
        }
        results.push_back(std::move(r));
    }
    std::stable_sort(results.begin(), results.end(),
                     [](const TrialResult& a, const TrialResult& b) { return a.val_accuracy > b.val_accuracy; });
    return results;
}

}  // namespace fer
