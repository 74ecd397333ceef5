#pragma once

#include <melep/errors.hpp>

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace melep {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix2 = Eigen::Matrix<Scalar, 2, 2>;
template <typename Scalar>
using Vector2 = Eigen::Matrix<Scalar, 2, 1>;

using BinaryMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;
using IndexList = std::vector<Index>;

namespace detail {

inline std::vector<std::string> default_names(Index count, const char* prefix)
{
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(count));
    for (Index k = 0; k < count; ++k) names.push_back(prefix + std::to_string(k));
    return names;
}

inline void check_names(const std::vector<std::string>& names, Index expected, const char* what)
{
    if (static_cast<Index>(names.size()) != expected)
        throw DimensionMismatch(std::string(what) + ": expected " + std::to_string(expected) + " names, got " +
                                std::to_string(names.size()));
    std::unordered_set<std::string> seen;
    for (const auto& name : names)
        if (!seen.insert(name).second) throw InvalidArgument(std::string(what) + ": duplicate name '" + name + "'");
}

} // namespace detail

/// Source-model probabilities on the target records: row i, column z holds the
/// predicted probability that source label z applies to record i.
template <typename Scalar = double>
class PredictionMatrix
{
public:
    PredictionMatrix() = default;

    explicit PredictionMatrix(Matrix<Scalar> values, std::vector<std::string> source_label_names = {},
                              std::vector<std::string> record_ids = {})
        : values_(std::move(values)), names_(std::move(source_label_names)), ids_(std::move(record_ids))
    {
        if (values_.rows() < 1 || values_.cols() < 1)
            throw InvalidArgument("prediction matrix must have at least one record and one source label");
        for (Index z = 0; z < values_.cols(); ++z)
            for (Index i = 0; i < values_.rows(); ++i) {
                const Scalar v = values_(i, z);
                if (!(v >= Scalar(0) && v <= Scalar(1)))
                    throw InvalidArgument("prediction (" + std::to_string(i) + ", " + std::to_string(z) +
                                          ") is outside [0, 1]");
            }
        if (names_.empty()) names_ = detail::default_names(values_.cols(), "source_");
        if (ids_.empty()) ids_ = detail::default_names(values_.rows(), "r");
        detail::check_names(names_, values_.cols(), "source label names");
        detail::check_names(ids_, values_.rows(), "record ids");
    }

    Index records() const noexcept { return values_.rows(); }
    Index source_labels() const noexcept { return values_.cols(); }

    const Matrix<Scalar>& values() const noexcept { return values_; }
    Scalar operator()(Index record, Index source) const { return values_(record, source); }
    auto column(Index source) const { return values_.col(source); }

    const std::vector<std::string>& source_label_names() const noexcept { return names_; }
    const std::vector<std::string>& record_ids() const noexcept { return ids_; }

    /// Subset of records, in the order given.
    PredictionMatrix select_records(const IndexList& rows) const
    {
        Matrix<Scalar> out(static_cast<Index>(rows.size()), values_.cols());
        std::vector<std::string> ids;
        ids.reserve(rows.size());
        for (std::size_t k = 0; k < rows.size(); ++k) {
            out.row(static_cast<Index>(k)) = values_.row(rows[k]);
            ids.push_back(ids_[static_cast<std::size_t>(rows[k])]);
        }
        return PredictionMatrix(std::move(out), names_, std::move(ids));
    }

private:
    Matrix<Scalar> values_;
    std::vector<std::string> names_;
    std::vector<std::string> ids_;
};

/// Binary ground truth for the target task: row i, column y is 1 when target label y applies to record i.
class LabelMatrix
{
public:
    LabelMatrix() = default;

    explicit LabelMatrix(BinaryMatrix values, std::vector<std::string> target_label_names = {},
                         std::vector<std::string> record_ids = {})
        : values_(std::move(values)), names_(std::move(target_label_names)), ids_(std::move(record_ids))
    {
        if (values_.rows() < 1 || values_.cols() < 1)
            throw InvalidArgument("label matrix must have at least one record and one target label");
        for (Index y = 0; y < values_.cols(); ++y)
            for (Index i = 0; i < values_.rows(); ++i)
                if (values_(i, y) > 1)
                    throw InvalidArgument("label (" + std::to_string(i) + ", " + std::to_string(y) +
                                          ") is not binary");
        if (names_.empty()) names_ = detail::default_names(values_.cols(), "label_");
        if (ids_.empty()) ids_ = detail::default_names(values_.rows(), "r");
        detail::check_names(names_, values_.cols(), "target label names");
        detail::check_names(ids_, values_.rows(), "record ids");
    }

    Index records() const noexcept { return values_.rows(); }
    Index target_labels() const noexcept { return values_.cols(); }

    const BinaryMatrix& values() const noexcept { return values_; }
    int operator()(Index record, Index label) const { return values_(record, label); }

    const std::vector<std::string>& target_label_names() const noexcept { return names_; }
    const std::vector<std::string>& record_ids() const noexcept { return ids_; }

    Index positives(Index label) const
    {
        Index count = 0;
        for (Index i = 0; i < values_.rows(); ++i) count += values_(i, label);
        return count;
    }

    /// Subset of records (in the given order) restricted to the given label columns.
    LabelMatrix select(const IndexList& rows, const IndexList& labels) const
    {
        BinaryMatrix out(static_cast<Index>(rows.size()), static_cast<Index>(labels.size()));
        std::vector<std::string> ids;
        std::vector<std::string> names;
        ids.reserve(rows.size());
        for (std::size_t k = 0; k < rows.size(); ++k) {
            for (std::size_t c = 0; c < labels.size(); ++c)
                out(static_cast<Index>(k), static_cast<Index>(c)) = values_(rows[k], labels[c]);
            ids.push_back(ids_[static_cast<std::size_t>(rows[k])]);
        }
        for (Index label : labels) names.push_back(names_[static_cast<std::size_t>(label)]);
        return LabelMatrix(std::move(out), std::move(names), std::move(ids));
    }

    LabelMatrix select_records(const IndexList& rows) const
    {
        IndexList all(static_cast<std::size_t>(values_.cols()));
        for (Index y = 0; y < values_.cols(); ++y) all[static_cast<std::size_t>(y)] = y;
        return select(rows, all);
    }

private:
    BinaryMatrix values_;
    std::vector<std::string> names_;
    std::vector<std::string> ids_;
};

} // namespace melep
