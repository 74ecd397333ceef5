#pragma once

#include <melep/types.hpp>

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace melep {

/// Per-label confusion counts; true negatives are records - tp - fp - fn.
struct ConfusionCounts
{
    std::vector<Index> tp;
    std::vector<Index> fp;
    std::vector<Index> fn;
    Index records = 0;
};

struct F1Report
{
    Vector<double> precision;
    Vector<double> recall;
    Vector<double> f1;
    /// Share of each label in the total count of positive ground-truth instances.
    Vector<double> support_weights;
    double weighted_f1 = 0.0;
};

struct CorrelationResult
{
    double r = 0.0;
    double p_value = 1.0;
    Index sample_count = 0;
    /// Least-squares line of ys on xs.
    double fit_slope = 0.0;
    double fit_intercept = 0.0;
};

enum class BinningMode
{
    equal_width,
    quantile,
};

struct DistanceBinning
{
    std::array<double, 5> bin_edges{};
    std::array<std::optional<double>, 4> bin_mean_f1{};
    std::array<Index, 4> bin_counts{};
};

ConfusionCounts confusion_counts(const LabelMatrix& truth, const LabelMatrix& pred);
ConfusionCounts confusion_counts(const BinaryMatrix& truth, const BinaryMatrix& pred);

/// Per-label precision/recall/F1 and their support-weighted average.
/// Undefined ratios (0/0) are taken as zero.
F1Report f1_report(const LabelMatrix& truth, const LabelMatrix& pred);
F1Report f1_report(const BinaryMatrix& truth, const BinaryMatrix& pred);

/// Regularized incomplete beta function I_x(a, b).
double regularized_incomplete_beta(double x, double a, double b);

/// Two-sided tail probability P(|T| >= |t|) for Student's t with `dof` degrees of freedom.
double students_t_two_sided(double t, double dof);

/// Sample Pearson correlation with a two-sided t-test p-value and the OLS fit of ys on xs.
CorrelationResult pearson(std::span<const double> xs, std::span<const double> ys);

/// Four bins over the MELEP values with the mean F1 of the points in each.
/// Bins are half-open [e_k, e_{k+1}) except the last, which includes its right edge.
/// An explicit `range` replaces the observed [min, max] in equal-width mode.
DistanceBinning bin_by_distance(std::span<const double> melep_values, std::span<const double> f1_values,
                                BinningMode mode = BinningMode::equal_width,
                                std::optional<std::array<double, 2>> range = std::nullopt);

const char* to_string(BinningMode mode);
BinningMode binning_mode_from_string(const std::string& name);

} // namespace melep
