#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>

#include "drfuse/error.hpp"
#include "drfuse/fusion.hpp"

namespace drfuse {

/// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
    std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses> counts{};

    std::uint64_t total() const noexcept
    {
        std::uint64_t t = 0;
        for (const auto& row : counts)
            for (auto v : row)
                t += v;
        return t;
    }

    bool operator==(const ConfusionMatrix&) const = default;
};

struct MetricsReport {
    double accuracy = 0.0;
    double recall_micro = 0.0;
    double recall_macro = 0.0;
    double precision_micro = 0.0;
    double precision_macro = 0.0;
    double f1_micro = 0.0;
    double f1_macro = 0.0;
    double kappa = 0.0;
    std::array<double, kNumClasses> recall{};
    std::array<double, kNumClasses> precision{};
    std::array<double, kNumClasses> f1{};
    ConfusionMatrix confusion;
};

inline ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> pred)
{
    if (truth.size() != pred.size())
        fail(Errc::LengthMismatch, "truth has " + std::to_string(truth.size()) + " labels, predictions "
                                       + std::to_string(pred.size()));
    if (truth.empty())
        fail(Errc::LengthMismatch, "no labels to compare");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] < 0 || truth[i] >= kNumClasses || pred[i] < 0 || pred[i] >= kNumClasses)
            fail(Errc::LabelOutOfRange, "label outside [0, 5) at position " + std::to_string(i));
        ++cm.counts[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(pred[i])];
    }
    return cm;
}

namespace detail {
inline double ratio(double num, double den) noexcept { return den > 0.0 ? num / den : 0.0; }
} // namespace detail

inline MetricsReport metrics(const ConfusionMatrix& cm)
{
    const auto total_u = cm.total();
    if (total_u == 0)
        fail(Errc::EmptyMatrix, "confusion matrix is empty");
    const double total = static_cast<double>(total_u);
    std::array<double, kNumClasses> row{}, col{};
    double trace = 0.0;
    for (std::size_t t = 0; t < kNumClasses; ++t)
        for (std::size_t p = 0; p < kNumClasses; ++p) {
            const double v = static_cast<double>(cm.counts[t][p]);
            row[t] += v;
            col[p] += v;
            if (t == p)
                trace += v;
        }

    MetricsReport r;
    r.confusion = cm;
    r.accuracy = trace / total;
    double tp_sum = 0.0, fn_sum = 0.0, fp_sum = 0.0;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        const double tp = static_cast<double>(cm.counts[c][c]);
        r.recall[c] = detail::ratio(tp, row[c]);
        r.precision[c] = detail::ratio(tp, col[c]);
        r.f1[c] = detail::ratio(2.0 * r.precision[c] * r.recall[c], r.precision[c] + r.recall[c]);
        r.recall_macro += r.recall[c] / kNumClasses;
        r.precision_macro += r.precision[c] / kNumClasses;
        r.f1_macro += r.f1[c] / kNumClasses;
        tp_sum += tp;
        fn_sum += row[c] - tp;
        fp_sum += col[c] - tp;
    }
    r.recall_micro = detail::ratio(tp_sum, tp_sum + fn_sum);
    r.precision_micro = detail::ratio(tp_sum, tp_sum + fp_sum);
    r.f1_micro = detail::ratio(2.0 * tp_sum, 2.0 * tp_sum + fp_sum + fn_sum);

    double pe = 0.0;
    for (std::size_t c = 0; c < kNumClasses; ++c)
        pe += row[c] * col[c];
    pe /= total * total;
    r.kappa = pe == 1.0 ? 0.0 : (r.accuracy - pe) / (1.0 - pe);
    return r;
}

} // namespace drfuse
