#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "drfuse/error.hpp"
#include "drfuse/fusion.hpp"

namespace drfuse {

enum class ClassifierKind : std::uint8_t { Knn = 0, LinearSvm, RandomForest, AdaBoost, GradBoost };

inline constexpr std::array<ClassifierKind, 5> kAllClassifiers = {
    ClassifierKind::Knn, ClassifierKind::LinearSvm, ClassifierKind::RandomForest, ClassifierKind::AdaBoost,
    ClassifierKind::GradBoost};

constexpr std::string_view classifier_name(ClassifierKind k) noexcept
{
    switch (k) {
    case ClassifierKind::Knn: return "knn";
    case ClassifierKind::LinearSvm: return "linear_svm";
    case ClassifierKind::RandomForest: return "random_forest";
    case ClassifierKind::AdaBoost: return "adaboost";
    case ClassifierKind::GradBoost: return "grad_boost";
    }
    return "unknown";
}

/// Accepts canonical names plus the short forms svm, rf, ada, gb, xgb.
inline std::optional<ClassifierKind> parse_classifier(std::string_view s)
{
    for (auto k : kAllClassifiers)
        if (s == classifier_name(k))
            return k;
    if (s == "svm")
        return ClassifierKind::LinearSvm;
    if (s == "rf")
        return ClassifierKind::RandomForest;
    if (s == "ada")
        return ClassifierKind::AdaBoost;
    if (s == "gb" || s == "xgb" || s == "xgboost")
        return ClassifierKind::GradBoost;
    return std::nullopt;
}

struct TrainConfig {
    int knn_k = 5;
    double svm_lambda = 1e-4;
    int svm_epochs = 50;
    int rf_trees = 200;
    int rf_max_depth = 16;
    /// Candidate-feature fraction per split; 0 selects ceil(sqrt(dim)).
    double rf_feature_frac = 0.0;
    int ada_stages = 100;
    int gb_stages = 100;
    double gb_learning_rate = 0.1;
    std::uint64_t seed = 42;
    /// Worker threads for forest construction; never affects results.
    unsigned threads = 1;

    void validate() const
    {
        if (knn_k < 1 || svm_epochs < 1 || rf_trees < 1 || rf_max_depth < 1 || ada_stages < 1 || gb_stages < 1)
            fail(Errc::InvalidConfig, "all classifier counts must be >= 1");
        if (!(svm_lambda > 0.0) || !(gb_learning_rate > 0.0))
            fail(Errc::InvalidConfig, "svm_lambda and gb_learning_rate must be > 0");
        if (rf_feature_frac < 0.0 || rf_feature_frac > 1.0 || std::isnan(rf_feature_frac))
            fail(Errc::InvalidConfig, "rf_feature_frac must be 0 (sqrt) or in (0, 1]");
    }

    std::size_t rf_candidates(std::size_t dim) const
    {
        std::size_t m = rf_feature_frac > 0.0 ? static_cast<std::size_t>(std::ceil(rf_feature_frac * dim))
                                              : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(dim))));
        return std::clamp<std::size_t>(m, 1, std::max<std::size_t>(dim, 1));
    }

    bool operator==(const TrainConfig& o) const
    {
        return knn_k == o.knn_k && svm_lambda == o.svm_lambda && svm_epochs == o.svm_epochs && rf_trees == o.rf_trees
               && rf_max_depth == o.rf_max_depth && rf_feature_frac == o.rf_feature_frac
               && ada_stages == o.ada_stages && gb_stages == o.gb_stages && gb_learning_rate == o.gb_learning_rate
               && seed == o.seed;
    }
};

/// Dense row-major sample matrix.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    bool operator==(const Matrix&) const = default;
};

struct LabeledData {
    Matrix x;
    std::vector<int> y;
};

inline LabeledData pack_samples(std::span<const FusedSample> samples)
{
    if (samples.empty())
        fail(Errc::InsufficientSamples, "no training samples");
    LabeledData d;
    d.x.rows = samples.size();
    d.x.cols = samples.front().features.size();
    d.x.data.reserve(d.x.rows * d.x.cols);
    for (const auto& s : samples) {
        if (s.features.size() != d.x.cols)
            fail(Errc::DimensionMismatch, "training samples have mixed dimensions");
        if (s.label < 0 || s.label >= kNumClasses)
            fail(Errc::LabelOutOfRange, "label " + std::to_string(s.label) + " outside [0, 5)");
        d.x.data.insert(d.x.data.end(), s.features.begin(), s.features.end());
        d.y.push_back(s.label);
    }
    return d;
}

/// Index of the largest entry; ties resolve to the lowest index. NaNs never win.
template <class Range>
int argmax_lowest(const Range& scores)
{
    int best = 0;
    bool have = false;
    double best_v = 0.0;
    int i = 0;
    for (double v : scores) {
        if (!std::isnan(v) && (!have || v > best_v)) {
            best = i;
            best_v = v;
            have = true;
        }
        ++i;
    }
    return best;
}

/// Splits at the midpoint, but never at a value that equals the upper side.
inline double split_threshold(double lo, double hi) noexcept
{
    const double mid = lo + (hi - lo) / 2.0;
    return mid < hi ? mid : lo;
}

} // namespace drfuse
