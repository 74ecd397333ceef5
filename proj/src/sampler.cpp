#include <melep/sampler.hpp>

#include <melep/errors.hpp>
#include <melep/random.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace melep {

Index SamplerConfig::train_size() const
{
    return static_cast<Index>(std::floor(train_fraction * static_cast<double>(fold_size) + 0.5));
}

void SamplerConfig::validate() const
{
    if (label_count_min < 2) throw InvalidArgument("label_count_min must be at least 2");
    if (label_count_max < label_count_min) throw InvalidArgument("label_count_max must be >= label_count_min");
    if (fold_size < 2) throw InvalidArgument("fold_size must be at least 2");
    if (fold_count < 0) throw InvalidArgument("fold_count must be nonnegative");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw InvalidArgument("train_fraction must lie in (0, 1)");
    if (min_label_positives < 0) throw InvalidArgument("min_label_positives must be nonnegative");
    if (max_retries < 0) throw InvalidArgument("max_retries must be nonnegative");
    const Index train = train_size();
    if (train < 1 || train >= fold_size)
        throw InvalidArgument("train_fraction * fold_size rounds to an empty train or test split");
}

IndexList eligible_labels(const LabelMatrix& labels, Index min_positives)
{
    IndexList out;
    for (Index y = 0; y < labels.target_labels(); ++y)
        if (labels.positives(y) >= min_positives) out.push_back(y);
    return out;
}

std::vector<FoldSpec> sample_folds(const LabelMatrix& labels, const SamplerConfig& config)
{
    config.validate();
    std::vector<FoldSpec> folds;
    if (config.fold_count == 0) return folds;

    const IndexList eligible = eligible_labels(labels, config.min_label_positives);
    if (eligible.empty()) throw InvalidArgument("no label has at least " + std::to_string(config.min_label_positives) +
                                                " positive records");
    if (static_cast<Index>(eligible.size()) < config.label_count_max)
        throw InvalidArgument("label_count_max (" + std::to_string(config.label_count_max) + ") exceeds the " +
                              std::to_string(eligible.size()) + " eligible labels");

    Rng rng(config.seed);
    const Index train = config.train_size();
    folds.reserve(static_cast<std::size_t>(config.fold_count));

    for (Index fold = 0; fold < config.fold_count; ++fold) {
        bool filled = false;
        Index best_available = 0;
        for (Index attempt = 0; attempt <= config.max_retries && !filled; ++attempt) {
            const auto count = static_cast<std::size_t>(rng.uniform_int(config.label_count_min, config.label_count_max));
            IndexList selected = rng.sample_without_replacement(eligible, count);
            std::sort(selected.begin(), selected.end());

            IndexList candidates;
            for (Index i = 0; i < labels.records(); ++i) {
                const bool any = std::any_of(selected.begin(), selected.end(),
                                             [&](Index y) { return labels(i, y) != 0; });
                if (any) candidates.push_back(i);
            }
            best_available = std::max(best_available, static_cast<Index>(candidates.size()));
            if (static_cast<Index>(candidates.size()) < config.fold_size) continue;

            IndexList drawn = rng.sample_without_replacement(std::move(candidates),
                                                             static_cast<std::size_t>(config.fold_size));
            FoldSpec spec;
            spec.fold_id = fold;
            spec.selected_label_indices = std::move(selected);
            spec.train_record_ids.assign(drawn.begin(), drawn.begin() + train);
            spec.test_record_ids.assign(drawn.begin() + train, drawn.end());
            std::sort(spec.train_record_ids.begin(), spec.train_record_ids.end());
            std::sort(spec.test_record_ids.begin(), spec.test_record_ids.end());
            folds.push_back(std::move(spec));
            filled = true;
        }
        if (!filled)
            throw InsufficientRecords(static_cast<std::size_t>(fold),
                                      "no label subset left " + std::to_string(config.fold_size) +
                                          " records with a positive after " + std::to_string(config.max_retries) +
                                          " resamples (largest pool: " + std::to_string(best_available) + ")");
    }
    return folds;
}

} // namespace melep
