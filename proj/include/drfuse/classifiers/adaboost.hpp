#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "drfuse/classifiers/common.hpp"

namespace drfuse {

/// Depth-1 tree: x[feature] <= threshold ? left : right. feature < 0 is a
/// constant predictor returning `left`.
struct Stump {
    std::int32_t feature = -1;
    double threshold = 0.0;
    std::int32_t left = 0;
    std::int32_t right = 0;

    int predict(std::span<const double> v) const
    {
        if (feature < 0)
            return left;
        return v[static_cast<std::size_t>(feature)] <= threshold ? left : right;
    }

    bool operator==(const Stump&) const = default;
};

struct AdaBoostModel {
    std::vector<Stump> stumps;
    std::vector<double> alphas;
    /// Weighted error of every kept stage, as seen when it was fitted.
    std::vector<double> stage_errors;
    /// Used only when no stage survived.
    std::int32_t prior_class = 0;

    /// Prediction from the first `stages` stages (all when stages < 0).
    int predict(std::span<const double> v, int stages = -1) const
    {
        const std::size_t m = stages < 0 ? stumps.size() : std::min<std::size_t>(stumps.size(), static_cast<std::size_t>(stages));
        if (m == 0)
            return prior_class;
        std::array<double, kNumClasses> score{};
        for (std::size_t k = 0; k < m; ++k)
            score[static_cast<std::size_t>(stumps[k].predict(v))] += alphas[k];
        return argmax_lowest(score);
    }
};

inline constexpr double kSammeErrorClamp = 1e-10;

/// SAMME stage weight ln((1-err)/err) + ln(K-1), err clamped away from 0 and 1.
inline double samme_alpha(double err, int num_classes = kNumClasses)
{
    err = std::clamp(err, kSammeErrorClamp, 1.0 - kSammeErrorClamp);
    return std::log((1.0 - err) / err) + std::log(static_cast<double>(num_classes - 1));
}

namespace detail {

/// Per-feature row order by ascending value, ties by row index.
inline std::vector<std::vector<std::uint32_t>> presort(const Matrix& x)
{
    std::vector<std::vector<std::uint32_t>> order(x.cols, std::vector<std::uint32_t>(x.rows));
    for (std::size_t f = 0; f < x.cols; ++f) {
        auto& o = order[f];
        std::iota(o.begin(), o.end(), 0u);
        std::stable_sort(o.begin(), o.end(), [&](std::uint32_t a, std::uint32_t b) { return x(a, f) < x(b, f); });
    }
    return order;
}

struct StumpFit {
    Stump stump;
    double error = 1.0;
};

// Split chosen by weighted Gini (as in CART), leaves labelled by weighted
// majority. Plain error minimisation ties too often with five classes, and
// those ties starve the top classes of leaves.
inline StumpFit best_stump(const LabeledData& d, const std::vector<std::vector<std::uint32_t>>& order,
                           const std::vector<double>& w)
{
    std::array<double, kNumClasses> total{};
    for (std::size_t i = 0; i < d.x.rows; ++i)
        total[static_cast<std::size_t>(d.y[i])] += w[i];
    const double wsum = std::accumulate(total.begin(), total.end(), 0.0);

    StumpFit best;
    best.stump.left = best.stump.right = argmax_lowest(total);
    best.error = std::max(0.0, wsum - total[static_cast<std::size_t>(best.stump.left)]);
    double best_purity = 0.0;
    for (double t : total)
        best_purity += t * t;
    best_purity /= wsum;
    for (std::size_t f = 0; f < d.x.cols; ++f) {
        const auto& o = order[f];
        std::array<double, kNumClasses> left{};
        double wl = 0.0;
        for (std::size_t k = 0; k + 1 < o.size(); ++k) {
            left[static_cast<std::size_t>(d.y[o[k]])] += w[o[k]];
            wl += w[o[k]];
            const double v = d.x(o[k], f), next = d.x(o[k + 1], f);
            if (!(v < next))
                continue;
            std::array<double, kNumClasses> right{};
            double sl = 0.0, sr = 0.0, wr = 0.0;
            for (std::size_t c = 0; c < kNumClasses; ++c) {
                right[c] = std::max(0.0, total[c] - left[c]);
                wr += right[c];
                sl += left[c] * left[c];
                sr += right[c] * right[c];
            }
            if (wl <= 0.0 || wr <= 0.0)
                continue;
            // Maximising sum_c L_c^2/|L| + R_c^2/|R| minimises weighted Gini.
            const double purity = sl / wl + sr / wr;
            if (purity > best_purity) {
                const int lc = argmax_lowest(left), rc = argmax_lowest(right);
                const double err = std::max(0.0, wsum - left[static_cast<std::size_t>(lc)] - right[static_cast<std::size_t>(rc)]);
                best = {{static_cast<std::int32_t>(f), split_threshold(v, next), lc, rc}, err};
                best_purity = purity;
            }
        }
    }
    return best;
}

} // namespace detail

// Multiclass SAMME over Gini-selected stumps. Stops before keeping a
// stage no better than chance (err >= 1 - 1/K) and after keeping a perfect one.
inline AdaBoostModel adaboost_train(std::span<const FusedSample> train, const TrainConfig& cfg)
{
    cfg.validate();
    const auto data = pack_samples(train);
    const std::size_t n = data.x.rows;
    const auto order = detail::presort(data.x);
    std::vector<double> w(n, 1.0 / static_cast<double>(n));

    AdaBoostModel model;
    {
        std::array<double, kNumClasses> prior{};
        for (int y : data.y)
            prior[static_cast<std::size_t>(y)] += 1.0;
        model.prior_class = argmax_lowest(prior);
    }
    const double chance = 1.0 - 1.0 / kNumClasses;
    for (int stage = 0; stage < cfg.ada_stages; ++stage) {
        auto fit = detail::best_stump(data, order, w);
        // Recount directly so a perfect stump reports exactly zero.
        double miss = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (fit.stump.predict(data.x.row(i)) != data.y[i])
                miss += w[i];
        fit.error = miss;
        if (fit.error >= chance)
            break;
        const double alpha = samme_alpha(fit.error);
        model.stumps.push_back(fit.stump);
        model.alphas.push_back(alpha);
        model.stage_errors.push_back(fit.error);
        if (fit.error <= 0.0)
            break;
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (fit.stump.predict(data.x.row(i)) != data.y[i])
                w[i] *= std::exp(alpha);
            sum += w[i];
        }
        for (auto& v : w)
            v /= sum;
    }
    return model;
}

} // namespace drfuse
