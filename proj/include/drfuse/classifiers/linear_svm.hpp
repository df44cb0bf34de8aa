#pragma once

#include <array>
#include <numeric>
#include <set>
#include <span>
#include <vector>

#include "drfuse/classifiers/common.hpp"
#include "drfuse/util/rng.hpp"

namespace drfuse {

/// One-vs-rest linear scorers; the last weight of each row is the bias.
struct LinearSvmModel {
    std::vector<std::vector<double>> weights; // kNumClasses x (dim + 1)

    std::array<double, kNumClasses> scores(std::span<const double> v) const
    {
        std::array<double, kNumClasses> s{};
        for (std::size_t c = 0; c < weights.size(); ++c) {
            const auto& w = weights[c];
            double acc = w.back();
            for (std::size_t j = 0; j < v.size(); ++j)
                acc += w[j] * v[j];
            s[c] = acc;
        }
        return s;
    }

    int predict(std::span<const double> v) const { return argmax_lowest(scores(v)); }
};

// Pegasos-style subgradient descent on the regularised hinge loss with step
// 1/(lambda t). Every class shares the same seed-fixed visiting order.
inline LinearSvmModel linear_svm_train(std::span<const FusedSample> train, const TrainConfig& cfg)
{
    cfg.validate();
    const auto data = pack_samples(train);
    if (std::set<int>(data.y.begin(), data.y.end()).size() < 2)
        fail(Errc::SingleClassTrainingSet, "linear SVM needs at least two classes");

    const std::size_t n = data.x.rows, d = data.x.cols;
    LinearSvmModel model;
    model.weights.assign(kNumClasses, std::vector<double>(d + 1, 0.0));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(cfg.seed);
    const double lambda = cfg.svm_lambda;
    std::uint64_t t = 0;
    for (int epoch = 0; epoch < cfg.svm_epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        for (std::size_t i : order) {
            ++t;
            const double eta = 1.0 / (lambda * static_cast<double>(t));
            const double shrink = 1.0 - eta * lambda;
            const auto x = data.x.row(i);
            for (int c = 0; c < kNumClasses; ++c) {
                auto& w = model.weights[static_cast<std::size_t>(c)];
                const double yc = data.y[i] == c ? 1.0 : -1.0;
                double margin = w[d];
                for (std::size_t j = 0; j < d; ++j)
                    margin += w[j] * x[j];
                margin *= yc;
                for (auto& wj : w)
                    wj *= shrink;
                if (margin < 1.0) {
                    for (std::size_t j = 0; j < d; ++j)
                        w[j] += eta * yc * x[j];
                    w[d] += eta * yc;
                }
            }
        }
    }
    return model;
}

} // namespace drfuse
