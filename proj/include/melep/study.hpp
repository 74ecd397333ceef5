#pragma once

// Batch workflows behind the command-line tool: checkpoint ranking and
// fold-based correlation studies between MELEP and downstream F1.

#include <melep/core.hpp>
#include <melep/io.hpp>
#include <melep/sampler.hpp>
#include <melep/stats.hpp>

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace melep {

/// Parallelism from MELEP_THREADS, defaulting to 1.
unsigned default_thread_count();

/// Runs fn(0) ... fn(count - 1) on up to `threads` workers. Each index runs exactly once.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);

struct RankedCheckpoint
{
    std::string checkpoint_id;
    MelepReport<double> report;
    std::vector<std::string> source_label_names;
    /// True when this entry's MELEP equals the previous entry's and the id decided the order.
    bool tied_with_previous = false;
};

/// Ascending MELEP (smaller means better transferability); ties broken by checkpoint id.
std::vector<RankedCheckpoint> rank_checkpoints(const LabelMatrix& labels,
                                               const std::vector<io::LoadedCheckpoint>& checkpoints,
                                               const MelepOptions<double>& options = {}, unsigned threads = 1);

io::Json ranking_to_json(const std::vector<RankedCheckpoint>& ranking, const LabelMatrix& labels);

/// Externally measured F1 per (fold, checkpoint).
using F1Table = std::map<std::pair<Index, std::string>, double>;

/// CSV with header `fold_id,checkpoint_id,weighted_f1`.
F1Table read_f1_table(const std::filesystem::path& path);

struct StudyOptions
{
    SamplerConfig sampler;
    /// Use the Empirical-Predictor proxy for downstream F1.
    bool proxy = false;
    /// Used when `proxy` is false.
    std::optional<F1Table> external_f1;
    std::optional<double> weight_cap;
    BinningMode binning = BinningMode::equal_width;
    unsigned threads = 1;
};

/// For every fold and checkpoint: MELEP on the fold's train split (restricted to the
/// fold's labels) and weighted F1 on its test split; then Pearson, fit line and
/// four-level binning over all (MELEP, F1) points, plus a Pearson per checkpoint.
io::ResultReport run_study(const LabelMatrix& labels, const std::vector<io::LoadedCheckpoint>& checkpoints,
                           const StudyOptions& options);

/// Same as run_study on pre-drawn folds.
io::ResultReport run_study_on_folds(const LabelMatrix& labels, const std::vector<io::LoadedCheckpoint>& checkpoints,
                                    const std::vector<FoldSpec>& folds, const StudyOptions& options);

} // namespace melep
