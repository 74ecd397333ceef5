#include <melep/stats.hpp>

#include <melep/errors.hpp>
#include <melep/summation.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace melep {

ConfusionCounts confusion_counts(const BinaryMatrix& truth, const BinaryMatrix& pred)
{
    if (truth.rows() != pred.rows() || truth.cols() != pred.cols())
        throw DimensionMismatch("truth is " + std::to_string(truth.rows()) + "x" + std::to_string(truth.cols()) +
                                " but predictions are " + std::to_string(pred.rows()) + "x" +
                                std::to_string(pred.cols()));

    const auto labels = static_cast<std::size_t>(truth.cols());
    ConfusionCounts counts;
    counts.records = truth.rows();
    counts.tp.assign(labels, 0);
    counts.fp.assign(labels, 0);
    counts.fn.assign(labels, 0);
    for (Index j = 0; j < truth.cols(); ++j) {
        const auto k = static_cast<std::size_t>(j);
        for (Index i = 0; i < truth.rows(); ++i) {
            const bool t = truth(i, j) != 0;
            const bool p = pred(i, j) != 0;
            if (t && p) ++counts.tp[k];
            else if (!t && p) ++counts.fp[k];
            else if (t && !p) ++counts.fn[k];
        }
    }
    return counts;
}

ConfusionCounts confusion_counts(const LabelMatrix& truth, const LabelMatrix& pred)
{
    return confusion_counts(truth.values(), pred.values());
}

F1Report f1_report(const BinaryMatrix& truth, const BinaryMatrix& pred)
{
    const auto counts = confusion_counts(truth, pred);
    const Index labels = truth.cols();

    F1Report report;
    report.precision.setZero(labels);
    report.recall.setZero(labels);
    report.f1.setZero(labels);
    report.support_weights.setZero(labels);

    Index total_support = 0;
    for (Index j = 0; j < labels; ++j) {
        const auto k = static_cast<std::size_t>(j);
        const double tp = static_cast<double>(counts.tp[k]);
        const Index predicted = counts.tp[k] + counts.fp[k];
        const Index actual = counts.tp[k] + counts.fn[k];
        const double p = predicted > 0 ? tp / static_cast<double>(predicted) : 0.0;
        const double r = actual > 0 ? tp / static_cast<double>(actual) : 0.0;
        report.precision(j) = p;
        report.recall(j) = r;
        report.f1(j) = (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
        total_support += actual;
    }
    if (total_support == 0) throw InvalidArgument("ground truth has no positive instances; weighted F1 is undefined");

    ExactSum<double> weighted;
    for (Index j = 0; j < labels; ++j) {
        const auto k = static_cast<std::size_t>(j);
        const auto support = static_cast<double>(counts.tp[k] + counts.fn[k]);
        report.support_weights(j) = support / static_cast<double>(total_support);
        weighted += support * report.f1(j);
    }
    // One division at the end keeps a perfect prediction at exactly 1.
    report.weighted_f1 = weighted.value() / static_cast<double>(total_support);
    return report;
}

F1Report f1_report(const LabelMatrix& truth, const LabelMatrix& pred)
{
    return f1_report(truth.values(), pred.values());
}

namespace {

// Continued fraction for I_x(a, b), modified Lentz evaluation.
double incomplete_beta_fraction(double x, double a, double b)
{
    constexpr int max_terms = 10000;
    constexpr double epsilon = 1e-16;
    constexpr double tiny = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_terms; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < epsilon) break;
    }
    return h;
}

} // namespace

double regularized_incomplete_beta(double x, double a, double b)
{
    if (!(a > 0.0 && b > 0.0)) throw InvalidArgument("incomplete beta requires positive shape parameters");
    if (!(x >= 0.0 && x <= 1.0)) throw InvalidArgument("incomplete beta requires x in [0, 1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;

    const double log_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    // The fraction converges quickly only on one side of the mean; use the symmetry otherwise.
    if (x < (a + 1.0) / (a + b + 2.0)) return front * incomplete_beta_fraction(x, a, b) / a;
    return 1.0 - front * incomplete_beta_fraction(1.0 - x, b, a) / b;
}

double students_t_two_sided(double t, double dof)
{
    if (!(dof > 0.0)) throw InvalidArgument("degrees of freedom must be positive");
    if (std::isnan(t)) throw InvalidArgument("t statistic is NaN");
    if (std::isinf(t)) return 0.0;
    const double x = dof / (dof + t * t);
    return std::clamp(regularized_incomplete_beta(x, 0.5 * dof, 0.5), 0.0, 1.0);
}

CorrelationResult pearson(std::span<const double> xs, std::span<const double> ys)
{
    if (xs.size() != ys.size())
        throw DimensionMismatch("pearson: xs has " + std::to_string(xs.size()) + " values, ys has " +
                                std::to_string(ys.size()));
    if (xs.size() < 3) throw TooFewPoints("pearson needs at least 3 points, got " + std::to_string(xs.size()));

    const auto m = xs.size();
    double mean_x = 0.0;
    double mean_y = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        mean_x += xs[i];
        mean_y += ys[i];
    }
    mean_x /= static_cast<double>(m);
    mean_y /= static_cast<double>(m);

    double sxx = 0.0;
    double syy = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double dx = xs[i] - mean_x;
        const double dy = ys[i] - mean_y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (!(sxx > 0.0)) throw ConstantInput("pearson: xs is constant");
    if (!(syy > 0.0)) throw ConstantInput("pearson: ys is constant");

    CorrelationResult out;
    out.sample_count = static_cast<Index>(m);
    out.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    out.fit_slope = sxy / sxx;
    out.fit_intercept = mean_y - out.fit_slope * mean_x;

    const double dof = static_cast<double>(m - 2);
    const double one_minus_r2 = 1.0 - out.r * out.r;
    if (one_minus_r2 <= 0.0) {
        out.p_value = 0.0;
    } else {
        const double t = out.r * std::sqrt(dof / one_minus_r2);
        out.p_value = students_t_two_sided(t, dof);
    }
    return out;
}

namespace {

// Linear interpolation between closest ranks on sorted data.
double quantile_sorted(const std::vector<double>& sorted, double q)
{
    const double position = q * static_cast<double>(sorted.size() - 1);
    const auto lower = static_cast<std::size_t>(std::floor(position));
    const auto upper = std::min(lower + 1, sorted.size() - 1);
    const double frac = position - static_cast<double>(lower);
    return sorted[lower] + frac * (sorted[upper] - sorted[lower]);
}

} // namespace

DistanceBinning bin_by_distance(std::span<const double> melep_values, std::span<const double> f1_values,
                                BinningMode mode, std::optional<std::array<double, 2>> range)
{
    if (melep_values.size() != f1_values.size())
        throw DimensionMismatch("binning: " + std::to_string(melep_values.size()) + " MELEP values but " +
                                std::to_string(f1_values.size()) + " F1 values");
    if (melep_values.size() < 4)
        throw TooFewPoints("binning needs at least 4 points, got " + std::to_string(melep_values.size()));

    const auto [min_it, max_it] = std::minmax_element(melep_values.begin(), melep_values.end());
    DistanceBinning out;

    if (mode == BinningMode::equal_width) {
        double lo = *min_it;
        double hi = *max_it;
        if (range) {
            lo = (*range)[0];
            hi = (*range)[1];
            if (!(lo < hi)) throw InvalidArgument("binning range must satisfy lo < hi");
            if (*min_it < lo || *max_it > hi) throw InvalidArgument("binning: MELEP value outside the given range");
        }
        if (!(lo < hi)) throw ConstantInput("binning: all MELEP values are equal");
        const double width = (hi - lo) / 4.0;
        for (int k = 0; k < 4; ++k) out.bin_edges[static_cast<std::size_t>(k)] = lo + k * width;
        out.bin_edges[4] = hi;
    } else {
        if (range) throw InvalidArgument("binning: an explicit range only applies to equal-width mode");
        std::vector<double> sorted(melep_values.begin(), melep_values.end());
        std::sort(sorted.begin(), sorted.end());
        for (int k = 0; k <= 4; ++k)
            out.bin_edges[static_cast<std::size_t>(k)] = quantile_sorted(sorted, k / 4.0);
        out.bin_edges[0] = sorted.front();
        out.bin_edges[4] = sorted.back();
    }
    for (std::size_t k = 0; k < 4; ++k)
        if (!(out.bin_edges[k] < out.bin_edges[k + 1]))
            throw ConstantInput("binning: bin edges are not strictly ascending (too many tied MELEP values)");

    std::array<double, 4> sums{};
    for (std::size_t i = 0; i < melep_values.size(); ++i) {
        const double v = melep_values[i];
        std::size_t bin = 3;
        for (std::size_t k = 0; k < 3; ++k)
            if (v < out.bin_edges[k + 1]) {
                bin = k;
                break;
            }
        ++out.bin_counts[bin];
        sums[bin] += f1_values[i];
    }
    for (std::size_t k = 0; k < 4; ++k)
        if (out.bin_counts[k] > 0) out.bin_mean_f1[k] = sums[k] / static_cast<double>(out.bin_counts[k]);
    return out;
}

const char* to_string(BinningMode mode)
{
    return mode == BinningMode::quantile ? "quantile" : "equal-width";
}

BinningMode binning_mode_from_string(const std::string& name)
{
    if (name == "equal-width") return BinningMode::equal_width;
    if (name == "quantile") return BinningMode::quantile;
    throw InvalidArgument("unknown binning mode '" + name + "' (expected equal-width or quantile)");
}

} // namespace melep
