#pragma once

#include <melep/types.hpp>

#include <cstdint>
#include <vector>

namespace melep {

/// Parameters of the target-task construction protocol.
struct SamplerConfig
{
    Index label_count_min = 2;
    Index label_count_max = 10;
    Index fold_size = 1000;
    Index fold_count = 100;
    double train_fraction = 0.7;
    Index min_label_positives = 1000;
    std::uint64_t seed = 0;
    /// Label-subset resamples allowed when a subset leaves too few records.
    Index max_retries = 20;

    /// floor(train_fraction * fold_size + 0.5)
    Index train_size() const;

    /// Checks the parts of the config that do not depend on data.
    void validate() const;
};

struct FoldSpec
{
    Index fold_id = 0;
    /// Selected target labels, ascending.
    IndexList selected_label_indices;
    /// Record row indices, ascending within each split.
    IndexList train_record_ids;
    IndexList test_record_ids;

    bool operator==(const FoldSpec&) const = default;
};

/// Labels with at least `min_positives` positive records, ascending.
IndexList eligible_labels(const LabelMatrix& labels, Index min_positives);

/// Draws `fold_count` folds: a label subset of uniformly drawn size, the
/// records with at least one positive among those labels, `fold_size` of those
/// records without replacement, then a train/test split. Deterministic in the seed.
std::vector<FoldSpec> sample_folds(const LabelMatrix& labels, const SamplerConfig& config);

} // namespace melep
