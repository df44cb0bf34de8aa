#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "drfuse/classifiers/adaboost.hpp"
#include "drfuse/classifiers/common.hpp"

namespace drfuse {

/// Least-squares regression tree; `feature < 0` marks a leaf holding `value`.
struct RegressionTree {
    struct Node {
        std::int32_t feature = -1;
        double threshold = 0.0;
        std::int32_t left = -1;
        std::int32_t right = -1;
        double value = 0.0;

        bool operator==(const Node&) const = default;
    };

    std::vector<Node> nodes;

    double predict(std::span<const double> v) const
    {
        std::size_t i = 0;
        while (nodes[i].feature >= 0)
            i = static_cast<std::size_t>(v[static_cast<std::size_t>(nodes[i].feature)] <= nodes[i].threshold
                                             ? nodes[i].left
                                             : nodes[i].right);
        return nodes[i].value;
    }

    bool operator==(const RegressionTree&) const = default;
};

namespace detail {

// Level-wise growth: one pass per (level, feature) over the presorted order
// scores the candidate splits of every open node at once.
inline RegressionTree fit_regression_tree(const Matrix& x, const std::vector<std::vector<std::uint32_t>>& order,
                                          const std::vector<double>& target, int max_depth)
{
    const std::size_t n = x.rows;
    RegressionTree tree;
    std::vector<std::int32_t> node_of(n, 0);
    double total = 0.0;
    for (double t : target)
        total += t;
    tree.nodes.push_back({-1, 0.0, -1, -1, total / static_cast<double>(n)});

    struct Open {
        std::int32_t node;
        double sum;
        std::size_t count;
    };
    std::vector<Open> open{{0, total, n}};

    for (int depth = 0; depth < max_depth && !open.empty(); ++depth) {
        const std::size_t num_nodes = tree.nodes.size();
        std::vector<std::int32_t> slot(num_nodes, -1);
        for (std::size_t k = 0; k < open.size(); ++k)
            slot[static_cast<std::size_t>(open[k].node)] = static_cast<std::int32_t>(k);

        struct Best {
            double gain = 0.0;
            std::int32_t feature = -1;
            double threshold = 0.0;
        };
        std::vector<Best> best(open.size());
        std::vector<double> left_sum(open.size());
        std::vector<std::size_t> left_count(open.size());
        std::vector<double> last(open.size());
        std::vector<char> seen(open.size());
        for (std::size_t f = 0; f < x.cols; ++f) {
            std::fill(left_sum.begin(), left_sum.end(), 0.0);
            std::fill(left_count.begin(), left_count.end(), 0);
            std::fill(seen.begin(), seen.end(), 0);
            for (std::uint32_t r : order[f]) {
                const auto s = slot[static_cast<std::size_t>(node_of[r])];
                if (s < 0)
                    continue;
                const auto k = static_cast<std::size_t>(s);
                const double v = x(r, f);
                if (seen[k] && last[k] < v) {
                    const auto& o = open[k];
                    const double nl = static_cast<double>(left_count[k]);
                    const double nr = static_cast<double>(o.count - left_count[k]);
                    const double sr = o.sum - left_sum[k];
                    const double gain = left_sum[k] * left_sum[k] / nl + sr * sr / nr
                                        - o.sum * o.sum / static_cast<double>(o.count);
                    if (gain > best[k].gain) {
                        best[k] = {gain, static_cast<std::int32_t>(f), split_threshold(last[k], v)};
                    }
                }
                left_sum[k] += target[r];
                ++left_count[k];
                last[k] = v;
                seen[k] = 1;
            }
        }

        std::vector<Open> next;
        for (std::size_t k = 0; k < open.size(); ++k) {
            if (best[k].feature < 0)
                continue;
            const auto id = open[k].node;
            const auto l = static_cast<std::int32_t>(tree.nodes.size());
            tree.nodes.push_back({});
            tree.nodes.push_back({});
            auto& node = tree.nodes[static_cast<std::size_t>(id)];
            node.feature = best[k].feature;
            node.threshold = best[k].threshold;
            node.left = l;
            node.right = l + 1;
            next.push_back({l, 0.0, 0});
            next.push_back({l + 1, 0.0, 0});
        }
        if (next.empty())
            break;
        // Route rows of split nodes to their children and accumulate stats.
        for (std::size_t r = 0; r < n; ++r) {
            const auto& node = tree.nodes[static_cast<std::size_t>(node_of[r])];
            if (node.feature < 0 || slot.size() <= static_cast<std::size_t>(node_of[r])
                || slot[static_cast<std::size_t>(node_of[r])] < 0)
                continue;
            node_of[r] = x(r, static_cast<std::size_t>(node.feature)) <= node.threshold ? node.left : node.right;
        }
        std::vector<double> sums(tree.nodes.size(), 0.0);
        std::vector<std::size_t> counts(tree.nodes.size(), 0);
        for (std::size_t r = 0; r < n; ++r) {
            sums[static_cast<std::size_t>(node_of[r])] += target[r];
            ++counts[static_cast<std::size_t>(node_of[r])];
        }
        for (auto& o : next) {
            o.sum = sums[static_cast<std::size_t>(o.node)];
            o.count = counts[static_cast<std::size_t>(o.node)];
            tree.nodes[static_cast<std::size_t>(o.node)].value = o.sum / static_cast<double>(o.count);
        }
        open = std::move(next);
    }
    return tree;
}

inline double sigmoid(double z) noexcept
{
    return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

} // namespace detail

inline constexpr int kGradBoostTreeDepth = 2;

/// One-vs-rest logistic boosting. Class c scores base[c] + lr * sum_m tree[m][c](x).
struct GradBoostModel {
    std::array<double, kNumClasses> base{};
    double learning_rate = 0.1;
    std::vector<std::array<RegressionTree, kNumClasses>> stages;

    std::array<double, kNumClasses> scores(std::span<const double> v, int num_stages = -1) const
    {
        const std::size_t m = num_stages < 0 ? stages.size() : std::min<std::size_t>(stages.size(), static_cast<std::size_t>(num_stages));
        std::array<double, kNumClasses> s{};
        for (int c = 0; c < kNumClasses; ++c) {
            double acc = 0.0;
            for (std::size_t k = 0; k < m; ++k)
                acc += stages[k][static_cast<std::size_t>(c)].predict(v);
            s[static_cast<std::size_t>(c)] = base[static_cast<std::size_t>(c)] + learning_rate * acc;
        }
        return s;
    }

    int predict(std::span<const double> v, int num_stages = -1) const { return argmax_lowest(scores(v, num_stages)); }
};

inline constexpr double kGradBoostPriorClamp = 1e-6;

// Each stage fits a depth-2 least-squares tree per class to the negative
// gradient y - sigmoid(F) of the binary log-loss.
inline GradBoostModel grad_boost_train(std::span<const FusedSample> train, const TrainConfig& cfg)
{
    cfg.validate();
    const auto data = pack_samples(train);
    const std::size_t n = data.x.rows;
    const auto order = detail::presort(data.x);

    GradBoostModel model;
    model.learning_rate = cfg.gb_learning_rate;
    std::array<double, kNumClasses> freq{};
    for (int y : data.y)
        freq[static_cast<std::size_t>(y)] += 1.0;
    for (int c = 0; c < kNumClasses; ++c) {
        const double p = std::clamp(freq[static_cast<std::size_t>(c)] / static_cast<double>(n), kGradBoostPriorClamp,
                                    1.0 - kGradBoostPriorClamp);
        model.base[static_cast<std::size_t>(c)] = std::log(p / (1.0 - p));
    }

    std::vector<std::array<double, kNumClasses>> score(n, model.base);
    std::vector<double> residual(n);
    for (int stage = 0; stage < cfg.gb_stages; ++stage) {
        std::array<RegressionTree, kNumClasses> trees;
        for (int c = 0; c < kNumClasses; ++c) {
            const auto cc = static_cast<std::size_t>(c);
            for (std::size_t i = 0; i < n; ++i)
                residual[i] = (data.y[i] == c ? 1.0 : 0.0) - detail::sigmoid(score[i][cc]);
            trees[cc] = detail::fit_regression_tree(data.x, order, residual, kGradBoostTreeDepth);
            for (std::size_t i = 0; i < n; ++i)
                score[i][cc] += cfg.gb_learning_rate * trees[cc].predict(data.x.row(i));
        }
        model.stages.push_back(std::move(trees));
    }
    return model;
}

} // namespace drfuse
