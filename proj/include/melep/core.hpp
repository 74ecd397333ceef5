#pragma once

// Multi-label Expected Log of Empirical Predictions.
//
// For a target label y and source label z the source model's probabilities
// theta(i, z) act as soft "dummy labels". Their empirical joint distribution
// with the ground truth, the marginal over the dummy label, and the resulting
// conditional P(t | s) define a binary Empirical Predictor (EP) for y. The
// per-pair score phi(y, z) is the EP's mean negative log-likelihood on the
// target data, and MELEP is the weighted mean of phi over all pairs.
//
// Everything is templated on the scalar type. Every reduction is a correctly
// rounded sum, so results do not depend on record, label or thread order.

#include <melep/errors.hpp>
#include <melep/summation.hpp>
#include <melep/types.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace melep {

/// Floor applied to the EP likelihood before taking its logarithm.
template <typename Scalar>
inline constexpr Scalar likelihood_floor = Scalar(1e-12);

template <typename Scalar = double>
struct PairDistribution
{
    Index target_label = 0;
    Index source_label = 0;
    /// joint(t, s): empirical P(target = t, dummy = s).
    Matrix2<Scalar> joint = Matrix2<Scalar>::Zero();
    /// marginal(s): empirical P(dummy = s); independent of the target label.
    Vector2<Scalar> marginal = Vector2<Scalar>::Zero();
    /// conditional(t, s): P(target = t | dummy = s); a column with zero marginal is all-zero.
    Matrix2<Scalar> conditional = Matrix2<Scalar>::Zero();
};

template <typename Scalar = double>
struct PhiResult
{
    Scalar value = Scalar(0);
    Index clamp_events = 0;
};

template <typename Scalar = double>
struct TargetWeights
{
    Vector<Scalar> weights;
    std::vector<Index> positive_counts;
    std::vector<Index> negative_counts;
};

template <typename Scalar = double>
struct MelepOptions
{
    /// Upper bound on a target weight. Required for labels without negatives.
    std::optional<Scalar> cap;
    /// Prior over source labels (length Z, nonnegative, normalized internally).
    std::optional<Vector<Scalar>> source_weights;
};

template <typename Scalar = double>
struct MelepReport
{
    Scalar melep = Scalar(0);
    /// phi(y, z) for every target/source pair.
    Matrix<Scalar> phi;
    /// Unweighted mean of phi over source labels, one entry per target label.
    Vector<Scalar> per_label;
    TargetWeights<Scalar> weights;
    std::optional<Scalar> source_weighted_melep;
    Index clamp_events = 0;
};

namespace detail {

template <typename Scalar>
void check_paired(const PredictionMatrix<Scalar>& preds, const LabelMatrix& labels)
{
    if (preds.records() != labels.records())
        throw DimensionMismatch("predictions have " + std::to_string(preds.records()) + " records but labels have " +
                                std::to_string(labels.records()));
}

template <typename Scalar>
void check_pair_indices(const PredictionMatrix<Scalar>& preds, const LabelMatrix& labels, Index y, Index z)
{
    if (y < 0 || y >= labels.target_labels())
        throw IndexOutOfRange("target label index " + std::to_string(y) + " out of range [0, " +
                              std::to_string(labels.target_labels()) + ")");
    if (z < 0 || z >= preds.source_labels())
        throw IndexOutOfRange("source label index " + std::to_string(z) + " out of range [0, " +
                              std::to_string(preds.source_labels()) + ")");
}

} // namespace detail

/// Empirical joint, marginal and conditional distributions of (target y, dummy source z).
template <typename Scalar>
PairDistribution<Scalar> compute_pair_distribution(const PredictionMatrix<Scalar>& preds, const LabelMatrix& labels,
                                                   Index y, Index z)
{
    detail::check_paired(preds, labels);
    detail::check_pair_indices(preds, labels, y, z);

    const Index n = preds.records();
    const Scalar inv_n = Scalar(1) / static_cast<Scalar>(n);

    PairDistribution<Scalar> pair;
    pair.target_label = y;
    pair.source_label = z;

    ExactSum<Scalar> sums[2][2];
    ExactSum<Scalar> totals[2];
    for (Index i = 0; i < n; ++i) {
        const Scalar on = preds(i, z);
        const Scalar off = Scalar(1) - on;
        const int t = labels(i, y);
        sums[t][0] += off;
        sums[t][1] += on;
        totals[0] += off;
        totals[1] += on;
    }
    for (int t = 0; t < 2; ++t)
        for (int s = 0; s < 2; ++s) pair.joint(t, s) = sums[t][s].value() * inv_n;
    // Summed over all records directly so the marginal is bit-identical for every target label.
    for (int s = 0; s < 2; ++s) pair.marginal(s) = totals[s].value() * inv_n;

    for (int s = 0; s < 2; ++s) {
        if (pair.marginal(s) > Scalar(0)) {
            pair.conditional(0, s) = pair.joint(0, s) / pair.marginal(s);
            pair.conditional(1, s) = pair.joint(1, s) / pair.marginal(s);
        }
    }
    return pair;
}

/// EP probability that the target label is positive given one dummy probability.
template <typename Scalar>
Scalar ep_positive_probability(const PairDistribution<Scalar>& pair, Scalar theta)
{
    return pair.conditional(1, 0) * (Scalar(1) - theta) + pair.conditional(1, 1) * theta;
}

/// EP likelihood of the observed target value t given one dummy probability.
template <typename Scalar>
Scalar ep_likelihood(const PairDistribution<Scalar>& pair, int t, Scalar theta)
{
    return pair.conditional(t, 0) * (Scalar(1) - theta) + pair.conditional(t, 1) * theta;
}

/// Mean negative log-likelihood of the pair's EP on (preds, labels).
template <typename Scalar>
PhiResult<Scalar> compute_phi(const PredictionMatrix<Scalar>& preds, const LabelMatrix& labels,
                              const PairDistribution<Scalar>& pair)
{
    detail::check_paired(preds, labels);
    detail::check_pair_indices(preds, labels, pair.target_label, pair.source_label);

    const Index n = preds.records();
    const Index y = pair.target_label;
    const Index z = pair.source_label;

    PhiResult<Scalar> result;
    ExactSum<Scalar> log_sum;
    for (Index i = 0; i < n; ++i) {
        Scalar likelihood = ep_likelihood(pair, labels(i, y), preds(i, z));
        if (!(likelihood >= likelihood_floor<Scalar>)) {
            likelihood = likelihood_floor<Scalar>;
            ++result.clamp_events;
        }
        log_sum += std::log(likelihood);
    }
    // Rounding can push a likelihood of exactly one a hair above it.
    result.value = std::max(Scalar(0), -log_sum.value() / static_cast<Scalar>(n));
    return result;
}

/// w_y = positives / negatives, optionally capped.
template <typename Scalar = double>
TargetWeights<Scalar> compute_target_weights(const LabelMatrix& labels, std::optional<Scalar> cap = std::nullopt)
{
    if (cap && !(*cap > Scalar(0) && std::isfinite(static_cast<double>(*cap))))
        throw InvalidArgument("weight cap must be a positive finite number");

    const Index count = labels.target_labels();
    TargetWeights<Scalar> out;
    out.weights.resize(count);
    out.positive_counts.resize(static_cast<std::size_t>(count));
    out.negative_counts.resize(static_cast<std::size_t>(count));

    for (Index y = 0; y < count; ++y) {
        const Index positives = labels.positives(y);
        const Index negatives = labels.records() - positives;
        out.positive_counts[static_cast<std::size_t>(y)] = positives;
        out.negative_counts[static_cast<std::size_t>(y)] = negatives;

        Scalar w;
        if (negatives == 0) {
            if (!cap) throw DegenerateLabel(static_cast<std::size_t>(y), labels.target_label_names()[static_cast<std::size_t>(y)]);
            w = *cap;
        } else {
            w = static_cast<Scalar>(positives) / static_cast<Scalar>(negatives);
            if (cap) w = std::min(w, *cap);
        }
        out.weights(y) = w;
    }
    return out;
}

template <typename Scalar>
MelepReport<Scalar> compute_melep(const PredictionMatrix<Scalar>& preds, const LabelMatrix& labels,
                                  const MelepOptions<Scalar>& options = {})
{
    detail::check_paired(preds, labels);

    const Index target_count = labels.target_labels();
    const Index source_count = preds.source_labels();

    MelepReport<Scalar> report;
    report.weights = compute_target_weights<Scalar>(labels, options.cap);

    Vector<Scalar> prior;
    if (options.source_weights) {
        const auto& v = *options.source_weights;
        if (v.size() != source_count)
            throw DimensionMismatch("source weights have length " + std::to_string(v.size()) + ", expected " +
                                    std::to_string(source_count));
        ExactSum<Scalar> sum;
        for (Index z = 0; z < source_count; ++z) {
            if (!(v(z) >= Scalar(0) && std::isfinite(static_cast<double>(v(z)))))
                throw InvalidArgument("source weights must be finite and nonnegative");
            sum += v(z);
        }
        const Scalar total = sum.value();
        if (!(total > Scalar(0))) throw InvalidArgument("source weights must not all be zero");
        prior = v / total;
    }

    report.phi.resize(target_count, source_count);
    for (Index y = 0; y < target_count; ++y)
        for (Index z = 0; z < source_count; ++z) {
            const auto pair = compute_pair_distribution(preds, labels, y, z);
            const auto phi = compute_phi(preds, labels, pair);
            report.phi(y, z) = phi.value;
            report.clamp_events += phi.clamp_events;
        }

    report.per_label.resize(target_count);
    ExactSum<Scalar> weighted;
    ExactSum<Scalar> source_weighted;
    for (Index y = 0; y < target_count; ++y) {
        ExactSum<Scalar> row;
        ExactSum<Scalar> prior_row;
        for (Index z = 0; z < source_count; ++z) {
            row += report.phi(y, z);
            if (options.source_weights) prior_row += prior(z) * report.phi(y, z);
        }
        report.per_label(y) = row.value() / static_cast<Scalar>(source_count);
        weighted += report.weights.weights(y) * report.per_label(y);
        if (options.source_weights) source_weighted += report.weights.weights(y) * prior_row.value();
    }
    report.melep = weighted.value() / static_cast<Scalar>(target_count);
    if (options.source_weights)
        report.source_weighted_melep = source_weighted.value() / static_cast<Scalar>(target_count);
    return report;
}

/// Per-record EP probability that target label y is positive, using the (y, z) pair fitted on the same data.
template <typename Scalar>
Vector<Scalar> empirical_predictor_likelihood(const PredictionMatrix<Scalar>& preds, const LabelMatrix& labels,
                                              Index y, Index z)
{
    const auto pair = compute_pair_distribution(preds, labels, y, z);
    Vector<Scalar> p(preds.records());
    for (Index i = 0; i < preds.records(); ++i) p(i) = ep_positive_probability(pair, preds(i, z));
    return p;
}

} // namespace melep
