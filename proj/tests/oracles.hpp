#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "drfuse/evaluation/metrics.hpp"
#include "drfuse/util/rng.hpp"

namespace drfuse::testing {

struct OracleMetrics {
    double accuracy, recall_micro, recall_macro, precision_micro, precision_macro, f1_micro, f1_macro, kappa;
};

// Deliberately naive: every quantity is recounted from the raw cells by
// looping over (truth, prediction) pairs, one class at a time.
inline OracleMetrics metrics_oracle(const ConfusionMatrix& cm)
{
    const int K = kNumClasses;
    double total = 0;
    for (int t = 0; t < K; ++t)
        for (int p = 0; p < K; ++p)
            total += static_cast<double>(cm.counts[t][p]);

    double correct = 0;
    for (int t = 0; t < K; ++t)
        correct += static_cast<double>(cm.counts[t][t]);

    double tp_all = 0, fp_all = 0, fn_all = 0, rec_sum = 0, prec_sum = 0, f1_sum = 0;
    for (int c = 0; c < K; ++c) {
        double tp = 0, fp = 0, fn = 0;
        for (int t = 0; t < K; ++t)
            for (int p = 0; p < K; ++p) {
                const double v = static_cast<double>(cm.counts[t][p]);
                if (t == c && p == c)
                    tp += v;
                else if (p == c)
                    fp += v;
                else if (t == c)
                    fn += v;
            }
        const double rec = tp + fn > 0 ? tp / (tp + fn) : 0.0;
        const double prec = tp + fp > 0 ? tp / (tp + fp) : 0.0;
        const double f1 = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
        rec_sum += rec;
        prec_sum += prec;
        f1_sum += f1;
        tp_all += tp;
        fp_all += fp;
        fn_all += fn;
    }

    double pe = 0;
    for (int c = 0; c < K; ++c) {
        double row = 0, col = 0;
        for (int j = 0; j < K; ++j) {
            row += static_cast<double>(cm.counts[c][j]);
            col += static_cast<double>(cm.counts[j][c]);
        }
        pe += row * col;
    }
    pe /= total * total;
    const double po = correct / total;

    OracleMetrics o{};
    o.accuracy = po;
    o.recall_micro = tp_all / (tp_all + fn_all);
    o.precision_micro = tp_all / (tp_all + fp_all);
    const double pm = o.precision_micro, rm = o.recall_micro;
    o.f1_micro = pm + rm > 0 ? 2 * pm * rm / (pm + rm) : 0.0;
    o.recall_macro = rec_sum / K;
    o.precision_macro = prec_sum / K;
    o.f1_macro = f1_sum / K;
    o.kappa = pe == 1.0 ? 0.0 : (po - pe) / (1 - pe);
    return o;
}

/// Random non-empty matrix; a mix of dense, sparse and lopsided shapes so
/// empty rows, empty columns and perfect diagonals all show up.
inline ConfusionMatrix random_confusion(Rng& rng)
{
    ConfusionMatrix cm;
    const auto shape = rng.index(4);
    for (int t = 0; t < kNumClasses; ++t)
        for (int p = 0; p < kNumClasses; ++p) {
            std::uint64_t v = 0;
            switch (shape) {
            case 0: v = rng.index(100); break;
            case 1: v = rng.uniform() < 0.3 ? rng.index(20) : 0; break;
            case 2: v = t == p ? rng.index(50) : (rng.uniform() < 0.1 ? 1 : 0); break;
            default: v = rng.index(3) * (t == 0 ? 1000 : 1); break;
            }
            cm.counts[t][p] = v;
        }
    if (cm.total() == 0)
        cm.counts[rng.index(kNumClasses)][rng.index(kNumClasses)] = 1;
    return cm;
}

inline int metric_mismatches(const MetricsReport& r, const OracleMetrics& o, double tol)
{
    const double a[] = {r.accuracy, r.recall_micro, r.recall_macro, r.precision_micro, r.precision_macro,
                        r.f1_micro, r.f1_macro, r.kappa};
    const double b[] = {o.accuracy, o.recall_micro, o.recall_macro, o.precision_micro, o.precision_macro,
                        o.f1_micro, o.f1_macro, o.kappa};
    int bad = 0;
    for (int i = 0; i < 8; ++i)
        bad += !(std::abs(a[i] - b[i]) <= tol);
    return bad;
}

} // namespace drfuse::testing
