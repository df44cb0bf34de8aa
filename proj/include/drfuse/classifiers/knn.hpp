#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "drfuse/classifiers/common.hpp"

namespace drfuse {

struct KnnModel {
    int k = 5;
    Matrix x;
    std::vector<int> y;

    // Majority vote among the k nearest; equal distances rank by sample index,
    // vote ties go to whichever tied class has the nearest neighbour.
    int predict(std::span<const double> v) const
    {
        std::vector<std::pair<double, std::size_t>> dist(x.rows);
        for (std::size_t i = 0; i < x.rows; ++i) {
            double d = 0.0;
            const auto r = x.row(i);
            for (std::size_t j = 0; j < x.cols; ++j) {
                const double t = r[j] - v[j];
                d += t * t;
            }
            dist[i] = {std::isnan(d) ? std::numeric_limits<double>::infinity() : d, i};
        }
        const auto kk = static_cast<std::size_t>(k);
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk), dist.end());
        std::array<int, kNumClasses> votes{};
        for (std::size_t i = 0; i < kk; ++i)
            ++votes[static_cast<std::size_t>(y[dist[i].second])];
        const int top = *std::max_element(votes.begin(), votes.end());
        for (std::size_t i = 0; i < kk; ++i) {
            const int label = y[dist[i].second];
            if (votes[static_cast<std::size_t>(label)] == top)
                return label;
        }
        return 0;
    }
};

inline KnnModel knn_train(std::span<const FusedSample> train, int k)
{
    if (k < 1 || static_cast<std::size_t>(k) > train.size())
        fail(Errc::InvalidK, "knn k=" + std::to_string(k) + " must be in [1, " + std::to_string(train.size()) + "]");
    auto d = pack_samples(train);
    return KnnModel{k, std::move(d.x), std::move(d.y)};
}

} // namespace drfuse
