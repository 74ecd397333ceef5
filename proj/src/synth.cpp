#include <melep/synth.hpp>

#include <melep/errors.hpp>
#include <melep/random.hpp>
#include <melep/stats.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace melep {

namespace {

Vector<double> random_unit(Rng& rng, Index dim, Index active)
{
    Vector<double> v = Vector<double>::Zero(dim);
    double norm = 0.0;
    while (!(norm > 0.0)) {
        for (Index k = 0; k < active; ++k) v(k) = rng.normal();
        norm = v.norm();
    }
    return v / norm;
}

// Logistic function kept strictly inside (0, 1).
double squashed(double logit)
{
    constexpr double lo = std::numeric_limits<double>::min();
    constexpr double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
    const double p = logit >= 0.0 ? 1.0 / (1.0 + std::exp(-logit)) : std::exp(logit) / (1.0 + std::exp(logit));
    return std::clamp(p, lo, hi);
}

} // namespace

void WorldConfig::validate() const
{
    if (latent_dim < 1) throw InvalidArgument("latent_dim must be at least 1");
    if (label_rank < 0 || label_rank > latent_dim) throw InvalidArgument("label_rank must lie in [0, latent_dim]");
    if (record_count < 4) throw InvalidArgument("record_count must be at least 4");
    if (label_count < 1) throw InvalidArgument("label_count must be at least 1");
    if (!(prevalence_min > 0.0 && prevalence_min <= prevalence_max && prevalence_max < 1.0))
        throw InvalidArgument("prevalences must satisfy 0 < prevalence_min <= prevalence_max < 1");
    if (max_retries < 0) throw InvalidArgument("max_retries must be nonnegative");
}

void CheckpointConfig::validate() const
{
    if (checkpoint_id.empty()) throw InvalidArgument("checkpoint_id must not be empty");
    if (source_label_count < 0) throw InvalidArgument("source_label_count must be nonnegative");
    if (!(alignment >= 0.0 && alignment <= 1.0)) throw InvalidArgument("alignment must lie in [0, 1]");
    if (!(noise_sigma >= 0.0 && std::isfinite(noise_sigma))) throw InvalidArgument("noise_sigma must be finite and >= 0");
    if (!(gain > 0.0 && std::isfinite(gain))) throw InvalidArgument("gain must be positive and finite");
}

GeneratedWorld generate_world(const WorldConfig& config)
{
    config.validate();
    const Index n = config.record_count;
    const Index dim = config.latent_dim;
    const Index rank = config.label_rank == 0 ? dim : config.label_rank;
    const Index label_count = config.label_count;

    Rng rng(config.seed);
    for (Index attempt = 0; attempt <= config.max_retries; ++attempt) {
        SyntheticWorld world;
        world.config = config;
        world.latents.resize(n, dim);
        for (Index i = 0; i < n; ++i)
            for (Index k = 0; k < dim; ++k) world.latents(i, k) = rng.normal();

        world.directions.resize(label_count, dim);
        world.thresholds.resize(label_count);
        BinaryMatrix values(n, label_count);
        bool tied = false;

        for (Index y = 0; y < label_count; ++y) {
            world.directions.row(y) = random_unit(rng, dim, rank).transpose();
            const double prevalence = rng.uniform(config.prevalence_min, config.prevalence_max);
            const Index positives =
                std::clamp<Index>(static_cast<Index>(std::llround(prevalence * static_cast<double>(n))), 1, n - 1);

            const Vector<double> scores = world.latents * world.directions.row(y).transpose();
            std::vector<double> sorted(scores.data(), scores.data() + n);
            std::sort(sorted.begin(), sorted.end(), std::greater<>());
            const double above = sorted[static_cast<std::size_t>(positives - 1)];
            const double below = sorted[static_cast<std::size_t>(positives)];
            if (!(above > below)) {
                tied = true;
                break;
            }
            world.thresholds(y) = 0.5 * (above + below);
            for (Index i = 0; i < n; ++i) values(i, y) = scores(i) > world.thresholds(y) ? 1 : 0;
        }
        if (tied) continue;

        std::vector<std::string> names;
        for (Index y = 0; y < label_count; ++y) names.push_back("label_" + std::to_string(y));
        LabelMatrix labels(std::move(values), std::move(names));
        return GeneratedWorld{std::move(world), std::move(labels)};
    }
    throw InvalidArgument("could not place label thresholds without ties after " +
                          std::to_string(config.max_retries) + " retries");
}

SyntheticCheckpoint make_checkpoint(const SyntheticWorld& world, const CheckpointConfig& config)
{
    config.validate();
    const Index dim = world.config.latent_dim;
    const Index label_count = world.directions.rows();
    const Index source_count = config.source_label_count == 0 ? label_count : config.source_label_count;

    Rng rng(config.seed);
    SyntheticCheckpoint ckpt;
    ckpt.checkpoint_id = config.checkpoint_id;
    ckpt.alignment = config.alignment;
    ckpt.noise_sigma = config.noise_sigma;
    ckpt.gain = config.gain;
    ckpt.directions.resize(source_count, dim);
    ckpt.offsets.resize(source_count);

    const double a = config.alignment;
    for (Index z = 0; z < source_count; ++z) {
        const Index target = z % label_count;
        ckpt.tracked_targets.push_back(target);
        const Vector<double> random_direction = random_unit(rng, dim, dim);
        Vector<double> u = a * world.directions.row(target).transpose() + (1.0 - a) * random_direction;
        const double norm = u.norm();
        ckpt.directions.row(z) = (norm > 0.0 ? Vector<double>(u / norm) : random_direction).transpose();
        ckpt.offsets(z) = a * world.thresholds(target);
    }
    ckpt.noise_seed = rng.next();
    return ckpt;
}

PredictionMatrix<double> generate_predictions(const SyntheticWorld& world, const SyntheticCheckpoint& checkpoint)
{
    if (checkpoint.directions.cols() != world.latents.cols())
        throw DimensionMismatch("checkpoint directions do not match the world's latent dimension");

    const Index n = world.latents.rows();
    const Index source_count = checkpoint.directions.rows();
    const Matrix<double> projections = world.latents * checkpoint.directions.transpose();

    Rng noise(checkpoint.noise_seed);
    Matrix<double> theta(n, source_count);
    for (Index i = 0; i < n; ++i)
        for (Index z = 0; z < source_count; ++z) {
            double logit = checkpoint.gain * (projections(i, z) - checkpoint.offsets(z));
            if (checkpoint.noise_sigma > 0.0) logit += checkpoint.noise_sigma * noise.normal();
            theta(i, z) = squashed(logit);
        }

    std::vector<std::string> names;
    for (Index z = 0; z < source_count; ++z) names.push_back("source_" + std::to_string(z));
    return PredictionMatrix<double>(std::move(theta), std::move(names));
}

BinaryMatrix ep_proxy_predictions(const PredictionMatrix<double>& preds_train, const LabelMatrix& labels_train,
                                  const PredictionMatrix<double>& preds_test)
{
    if (preds_train.source_labels() != preds_test.source_labels())
        throw DimensionMismatch("train and test predictions have different source label counts");

    const Index target_count = labels_train.target_labels();
    const Index source_count = preds_train.source_labels();
    const Index test_count = preds_test.records();

    BinaryMatrix out(test_count, target_count);
    for (Index y = 0; y < target_count; ++y) {
        Vector<double> mean = Vector<double>::Zero(test_count);
        for (Index z = 0; z < source_count; ++z) {
            const auto pair = compute_pair_distribution(preds_train, labels_train, y, z);
            for (Index i = 0; i < test_count; ++i) mean(i) += ep_positive_probability(pair, preds_test(i, z));
        }
        for (Index i = 0; i < test_count; ++i)
            out(i, y) = mean(i) / static_cast<double>(source_count) >= 0.5 ? 1 : 0;
    }
    return out;
}

double downstream_f1_proxy(const PredictionMatrix<double>& preds_train, const LabelMatrix& labels_train,
                           const PredictionMatrix<double>& preds_test, const LabelMatrix& labels_test)
{
    if (labels_train.target_labels() != labels_test.target_labels())
        throw DimensionMismatch("train and test labels have different target label counts");
    if (preds_test.records() != labels_test.records())
        throw DimensionMismatch("test predictions and labels have different record counts");
    const BinaryMatrix predicted = ep_proxy_predictions(preds_train, labels_train, preds_test);
    return f1_report(labels_test.values(), predicted).weighted_f1;
}

} // namespace melep
