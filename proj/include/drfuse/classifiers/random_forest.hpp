#pragma once

#include <algorithm>
#include <array>
#include <numeric>
#include <span>
#include <vector>

#include "drfuse/classifiers/common.hpp"
#include "drfuse/util/parallel.hpp"
#include "drfuse/util/rng.hpp"

namespace drfuse {

/// CART tree over flat node storage; `feature < 0` marks a leaf.
struct ClassificationTree {
    struct Node {
        std::int32_t feature = -1;
        double threshold = 0.0;
        std::int32_t left = -1;
        std::int32_t right = -1;
        std::int32_t label = 0;

        bool operator==(const Node&) const = default;
    };

    std::vector<Node> nodes;

    int predict(std::span<const double> v) const
    {
        std::size_t i = 0;
        while (nodes[i].feature >= 0)
            i = static_cast<std::size_t>(v[static_cast<std::size_t>(nodes[i].feature)] <= nodes[i].threshold
                                             ? nodes[i].left
                                             : nodes[i].right);
        return nodes[i].label;
    }

    bool operator==(const ClassificationTree&) const = default;
};

namespace detail {

using ClassCounts = std::array<double, kNumClasses>;

inline double gini(const ClassCounts& c, double n) noexcept
{
    if (n <= 0.0)
        return 0.0;
    double s = 0.0;
    for (double v : c)
        s += (v / n) * (v / n);
    return 1.0 - s;
}

inline int majority(const ClassCounts& c) { return argmax_lowest(c); }

class GiniTreeBuilder {
public:
    GiniTreeBuilder(const LabeledData& data, std::size_t candidates, int max_depth, Rng& rng)
        : data_(data), candidates_(candidates), max_depth_(max_depth), rng_(rng)
    {
        features_.resize(data.x.cols);
        std::iota(features_.begin(), features_.end(), std::size_t{0});
    }

    ClassificationTree build(std::vector<std::size_t> rows)
    {
        tree_.nodes.clear();
        grow(rows, 0);
        return std::move(tree_);
    }

private:
    std::int32_t grow(std::vector<std::size_t>& rows, int depth)
    {
        ClassCounts counts{};
        for (auto r : rows)
            counts[static_cast<std::size_t>(data_.y[r])] += 1.0;
        const auto id = static_cast<std::int32_t>(tree_.nodes.size());
        tree_.nodes.push_back({});
        tree_.nodes[id].label = majority(counts);

        const double n = static_cast<double>(rows.size());
        const bool pure = *std::max_element(counts.begin(), counts.end()) == n;
        if (depth >= max_depth_ || pure || rows.size() < 2)
            return id;

        // Partial Fisher-Yates: the first `candidates_` entries are the sample.
        const std::size_t m = std::min(candidates_, features_.size());
        for (std::size_t k = 0; k < m; ++k) {
            const std::size_t j = k + rng_.index(features_.size() - k);
            std::swap(features_[k], features_[j]);
        }
        std::vector<std::size_t> candidates(features_.begin(), features_.begin() + static_cast<std::ptrdiff_t>(m));

        double best_impurity = std::numeric_limits<double>::infinity();
        std::int32_t best_feature = -1;
        double best_threshold = 0.0;
        std::vector<std::pair<double, std::size_t>> vals(rows.size());
        for (std::size_t f : candidates) {
            for (std::size_t k = 0; k < rows.size(); ++k)
                vals[k] = {data_.x(rows[k], f), rows[k]};
            std::sort(vals.begin(), vals.end());
            ClassCounts left{};
            for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
                left[static_cast<std::size_t>(data_.y[vals[k].second])] += 1.0;
                if (!(vals[k].first < vals[k + 1].first))
                    continue;
                ClassCounts right{};
                for (int c = 0; c < kNumClasses; ++c)
                    right[c] = counts[c] - left[c];
                const double nl = static_cast<double>(k + 1), nr = n - nl;
                const double impurity = (nl * gini(left, nl) + nr * gini(right, nr)) / n;
                if (impurity < best_impurity) {
                    best_impurity = impurity;
                    best_feature = static_cast<std::int32_t>(f);
                    best_threshold = split_threshold(vals[k].first, vals[k + 1].first);
                }
            }
        }
        if (best_feature < 0)
            return id;

        std::vector<std::size_t> lrows, rrows;
        for (auto r : rows)
            (data_.x(r, static_cast<std::size_t>(best_feature)) <= best_threshold ? lrows : rrows).push_back(r);
        rows.clear();
        rows.shrink_to_fit();
        const auto l = grow(lrows, depth + 1);
        const auto r = grow(rrows, depth + 1);
        tree_.nodes[id].feature = best_feature;
        tree_.nodes[id].threshold = best_threshold;
        tree_.nodes[id].left = l;
        tree_.nodes[id].right = r;
        return id;
    }

    const LabeledData& data_;
    std::size_t candidates_;
    int max_depth_;
    Rng& rng_;
    std::vector<std::size_t> features_;
    ClassificationTree tree_;
};

} // namespace detail

struct ForestModel {
    std::vector<ClassificationTree> trees;

    int predict(std::span<const double> v) const
    {
        std::array<int, kNumClasses> votes{};
        for (const auto& t : trees)
            ++votes[static_cast<std::size_t>(t.predict(v))];
        return argmax_lowest(votes);
    }
};

/// Bootstrap + Gini CART ensemble. Tree t draws from its own stream
/// derive_seed(seed, t), so thread count never changes the forest.
inline ForestModel random_forest_train(std::span<const FusedSample> train, const TrainConfig& cfg)
{
    cfg.validate();
    const auto data = pack_samples(train);
    const std::size_t n = data.x.rows;
    const std::size_t candidates = cfg.rf_candidates(data.x.cols);
    ForestModel forest;
    forest.trees.resize(static_cast<std::size_t>(cfg.rf_trees));
    parallel_for(forest.trees.size(), cfg.threads, [&](std::size_t t) {
        Rng rng(derive_seed(cfg.seed, t));
        std::vector<std::size_t> rows(n);
        for (auto& r : rows)
            r = static_cast<std::size_t>(rng.index(n));
        detail::GiniTreeBuilder builder(data, candidates, cfg.rf_max_depth, rng);
        forest.trees[t] = builder.build(std::move(rows));
    });
    return forest;
}

} // namespace drfuse
