#pragma once

// Synthetic stand-ins for a target dataset and for pre-trained checkpoints.
//
// Records are standard normal latent vectors. Target label y is positive when
// the projection of the latent onto a unit direction a_y exceeds a threshold
// b_y; directions live in the first `label_rank` latent coordinates. A
// checkpoint's source label z tracks target label z mod Y: its direction is
// normalize(alpha * a_y + (1 - alpha) * r_z) with r_z uniform on the sphere,
// its offset is alpha * b_y, and its probability is
//   theta = logistic(gain * (u_z . x - c_z) + noise_sigma * eps).

#include <melep/core.hpp>
#include <melep/types.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace melep {

struct WorldConfig
{
    Index latent_dim = 8;
    /// Number of leading latent coordinates the target directions span; 0 means all.
    Index label_rank = 0;
    Index record_count = 1000;
    Index label_count = 5;
    /// Per-label positive fraction, drawn uniformly from [prevalence_min, prevalence_max].
    double prevalence_min = 0.1;
    double prevalence_max = 0.3;
    std::uint64_t seed = 0;
    Index max_retries = 16;

    void validate() const;
};

struct SyntheticWorld
{
    WorldConfig config;
    /// record_count x latent_dim
    Matrix<double> latents;
    /// label_count x latent_dim, unit rows
    Matrix<double> directions;
    Vector<double> thresholds;
};

struct GeneratedWorld
{
    SyntheticWorld world;
    LabelMatrix labels;
};

struct CheckpointConfig
{
    std::string checkpoint_id = "ckpt";
    Index source_label_count = 0; // 0 means one per target label
    double alignment = 1.0;
    double noise_sigma = 0.0;
    double gain = 4.0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SyntheticCheckpoint
{
    std::string checkpoint_id;
    double alignment = 1.0;
    double noise_sigma = 0.0;
    double gain = 4.0;
    std::uint64_t noise_seed = 0;
    /// source_label_count x latent_dim, unit rows
    Matrix<double> directions;
    Vector<double> offsets;
    std::vector<Index> tracked_targets;
};

GeneratedWorld generate_world(const WorldConfig& config);

SyntheticCheckpoint make_checkpoint(const SyntheticWorld& world, const CheckpointConfig& config);

PredictionMatrix<double> generate_predictions(const SyntheticWorld& world, const SyntheticCheckpoint& checkpoint);

/// Downstream-performance proxy: fits the Empirical Predictor on the train
/// split, predicts each target label on the test split as the mean over source
/// labels of the EP's positive probability, marks it positive when that mean
/// is >= 0.5, and returns the support-weighted F1 on the test split.
double downstream_f1_proxy(const PredictionMatrix<double>& preds_train, const LabelMatrix& labels_train,
                           const PredictionMatrix<double>& preds_test, const LabelMatrix& labels_test);

/// Binary predictions used by downstream_f1_proxy (exposed for inspection).
BinaryMatrix ep_proxy_predictions(const PredictionMatrix<double>& preds_train, const LabelMatrix& labels_train,
                                  const PredictionMatrix<double>& preds_test);

} // namespace melep
