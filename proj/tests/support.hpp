#pragma once

// Shared fixtures and random-instance generators for the test suites.

#include "oracle/direct_melep.hpp"

#include <melep/types.hpp>

#include <random>
#include <vector>

namespace testing {

struct Instance
{
    oracle::Rows theta;
    oracle::LabelRows labels;

    melep::PredictionMatrix<double> preds() const
    {
        melep::Matrix<double> m(static_cast<melep::Index>(theta.size()), static_cast<melep::Index>(theta[0].size()));
        for (std::size_t i = 0; i < theta.size(); ++i)
            for (std::size_t z = 0; z < theta[0].size(); ++z)
                m(static_cast<melep::Index>(i), static_cast<melep::Index>(z)) = theta[i][z];
        return melep::PredictionMatrix<double>(m);
    }

    melep::LabelMatrix label_matrix() const
    {
        melep::BinaryMatrix m(static_cast<melep::Index>(labels.size()), static_cast<melep::Index>(labels[0].size()));
        for (std::size_t i = 0; i < labels.size(); ++i)
            for (std::size_t y = 0; y < labels[0].size(); ++y)
                m(static_cast<melep::Index>(i), static_cast<melep::Index>(y)) = static_cast<std::uint8_t>(labels[i][y]);
        return melep::LabelMatrix(m);
    }
};

/// Four records, two source labels, two target labels.
inline Instance instance_a()
{
    return {{{0.9, 0.2}, {0.8, 0.7}, {0.1, 0.6}, {0.3, 0.4}}, {{1, 0}, {1, 1}, {0, 1}, {0, 0}}};
}

inline Instance perfectly_separating()
{
    return {{{1.0}, {0.0}}, {{1}, {0}}};
}

inline Instance uniform_balanced()
{
    return {{{0.5}, {0.5}, {0.5}, {0.5}}, {{1}, {0}, {1}, {0}}};
}

/// Random instance with every target label having at least one positive and one negative.
inline Instance random_instance(std::mt19937_64& rng, int max_records = 50, int max_labels = 5)
{
    std::uniform_int_distribution<int> records(2, max_records);
    std::uniform_int_distribution<int> label_count(1, max_labels);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);

    const int n = records(rng);
    const int sources = label_count(rng);
    const int targets = label_count(rng);
    Instance inst;
    inst.theta.assign(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(sources)));
    inst.labels.assign(static_cast<std::size_t>(n), std::vector<int>(static_cast<std::size_t>(targets)));
    for (auto& row : inst.theta)
        for (auto& v : row) v = unit(rng);
    for (auto& row : inst.labels)
        for (auto& v : row) v = coin(rng) ? 1 : 0;
    // Force one positive and one negative per target label at distinct records.
    std::uniform_int_distribution<int> pick(0, n - 1);
    for (int y = 0; y < targets; ++y) {
        const int pos = pick(rng);
        int neg = pick(rng);
        while (neg == pos) neg = pick(rng);
        inst.labels[static_cast<std::size_t>(pos)][static_cast<std::size_t>(y)] = 1;
        inst.labels[static_cast<std::size_t>(neg)][static_cast<std::size_t>(y)] = 0;
    }
    return inst;
}

} // namespace testing
