#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace melep {

/// Base class for every error raised by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Inputs are structurally incompatible (row counts, shapes, vector lengths).
class DimensionMismatch : public Error
{
public:
    using Error::Error;
};

class IndexOutOfRange : public Error
{
public:
    using Error::Error;
};

/// A value or configuration violates a documented precondition.
class InvalidArgument : public Error
{
public:
    using Error::Error;
};

/// A target label has no negative records, so its weight would be infinite.
class DegenerateLabel : public Error
{
public:
    DegenerateLabel(std::size_t label, const std::string& name)
        : Error("label " + std::to_string(label) + (name.empty() ? "" : " (" + name + ")") +
                " has zero negative records; its positive/negative weight is undefined (supply a cap)"),
          label_(label)
    {}

    std::size_t label() const noexcept { return label_; }

private:
    std::size_t label_;
};

/// Constant input to a statistic that requires variation (pearson, binning).
class ConstantInput : public Error
{
public:
    using Error::Error;
};

class TooFewPoints : public Error
{
public:
    using Error::Error;
};

/// The fold sampler could not find enough records for a fold.
class InsufficientRecords : public Error
{
public:
    InsufficientRecords(std::size_t fold_id, const std::string& detail)
        : Error("fold " + std::to_string(fold_id) + ": " + detail), fold_id_(fold_id)
    {}

    std::size_t fold_id() const noexcept { return fold_id_; }

private:
    std::size_t fold_id_;
};

enum class ParseErrorKind
{
    io,
    missing_header,
    non_numeric_cell,
    out_of_range,
    non_binary_cell,
    duplicate_id,
    ragged_row,
    unmatched_id,
    schema,
};

/// Malformed input file. Row and column are 1-based file coordinates; 0 means "not applicable".
class ParseError : public Error
{
public:
    ParseError(ParseErrorKind kind, std::string path, std::size_t row, std::size_t column, const std::string& what)
        : Error(format(path, row, column, what)), kind_(kind), path_(std::move(path)), row_(row), column_(column)
    {}

    ParseErrorKind kind() const noexcept { return kind_; }
    const std::string& path() const noexcept { return path_; }
    std::size_t row() const noexcept { return row_; }
    std::size_t column() const noexcept { return column_; }

private:
    static std::string format(const std::string& path, std::size_t row, std::size_t column, const std::string& what)
    {
        std::string out = path;
        if (row != 0) out += ":" + std::to_string(row);
        if (column != 0) out += ":" + std::to_string(column);
        return out + ": " + what;
    }

    ParseErrorKind kind_;
    std::string path_;
    std::size_t row_;
    std::size_t column_;
};

} // namespace melep
