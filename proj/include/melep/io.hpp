#pragma once

#include <melep/core.hpp>
#include <melep/sampler.hpp>
#include <melep/stats.hpp>
#include <melep/synth.hpp>
#include <melep/types.hpp>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace melep::io {

using Json = nlohmann::json;

inline constexpr int schema_version = 1;

// ---------------------------------------------------------------------------
// CSV matrices
// ---------------------------------------------------------------------------

/// Header `id,<name>...`, one row per record, probabilities in [0, 1].
PredictionMatrix<double> read_prediction_csv(const std::filesystem::path& path);
/// Same layout as predictions; every cell must be exactly `0` or `1`.
LabelMatrix read_label_csv(const std::filesystem::path& path);

void write_prediction_csv(const PredictionMatrix<double>& preds, const std::filesystem::path& path);
void write_label_csv(const LabelMatrix& labels, const std::filesystem::path& path);

/// Reorders `preds` to follow the record order of `labels`. Every id must match on both sides.
PredictionMatrix<double> align_to_labels(const PredictionMatrix<double>& preds, const LabelMatrix& labels,
                                         const std::string& preds_origin = "predictions");

/// One number per line; used for optional source-label priors.
Vector<double> read_weight_vector(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Canonical JSON
// ---------------------------------------------------------------------------

/// Sorted keys, two-space indent, floats with 17 significant digits, trailing newline.
std::string canonical_dump(const Json& value);
void write_json(const Json& value, const std::filesystem::path& path);
Json read_json(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Manifests and configs
// ---------------------------------------------------------------------------

struct CheckpointEntry
{
    std::string checkpoint_id;
    std::filesystem::path path;
    std::vector<std::string> source_label_names;
};

struct DatasetManifest
{
    int schema_version = io::schema_version;
    std::string name;
    std::filesystem::path labels_path;
    std::vector<CheckpointEntry> predictions;
};

/// Relative paths in the file are resolved against the manifest's directory.
DatasetManifest read_manifest(const std::filesystem::path& path);
/// Paths are written as given.
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

struct LoadedCheckpoint
{
    std::string checkpoint_id;
    PredictionMatrix<double> predictions;
};

/// Reads and validates every checkpoint file of a manifest, aligned to `labels`.
std::vector<LoadedCheckpoint> load_checkpoints(const DatasetManifest& manifest, const LabelMatrix& labels);

Json to_json(const SamplerConfig& config);
SamplerConfig sampler_config_from_json(const Json& j);

Json folds_to_json(const std::vector<FoldSpec>& folds, const SamplerConfig& config);
std::vector<FoldSpec> folds_from_json(const Json& j);

struct SynthConfig
{
    std::string name = "synthetic";
    WorldConfig world;
    std::vector<CheckpointConfig> checkpoints;
};

Json to_json(const SynthConfig& config);
SynthConfig synth_config_from_json(const Json& j);

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

Json to_json(const MelepReport<double>& report, const std::vector<std::string>& target_label_names,
             const std::vector<std::string>& source_label_names);

struct FoldRecord
{
    Index fold_id = 0;
    std::string checkpoint_id;
    double melep = 0.0;
    std::optional<double> weighted_f1;
    Index clamp_events = 0;

    bool operator==(const FoldRecord&) const = default;
};

struct CheckpointCorrelation
{
    std::string checkpoint_id;
    CorrelationResult pearson;
};

struct StudyAggregate
{
    CorrelationResult pearson;
    BinningMode binning_mode = BinningMode::equal_width;
    DistanceBinning binning;
};

struct ResultReport
{
    int schema_version = io::schema_version;
    std::string generator;
    std::uint64_t seed = 0;
    std::string f1_source;
    std::vector<FoldRecord> folds;
    std::optional<StudyAggregate> aggregate;
    std::vector<CheckpointCorrelation> per_checkpoint;
};

Json to_json(const ResultReport& report);
ResultReport result_report_from_json(const Json& j);

void write_report(const ResultReport& report, const std::filesystem::path& path);
/// Fails on a schema-version mismatch.
ResultReport read_report(const std::filesystem::path& path);

} // namespace melep::io
