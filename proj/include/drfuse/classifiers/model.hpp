#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "drfuse/classifiers/adaboost.hpp"
#include "drfuse/classifiers/common.hpp"
#include "drfuse/classifiers/grad_boost.hpp"
#include "drfuse/classifiers/knn.hpp"
#include "drfuse/classifiers/linear_svm.hpp"
#include "drfuse/classifiers/random_forest.hpp"
#include "drfuse/fusion.hpp"
#include "drfuse/util/binary_io.hpp"

namespace drfuse {

using ModelState = std::variant<KnnModel, LinearSvmModel, ForestModel, AdaBoostModel, GradBoostModel>;

struct TrainedModel {
    ClassifierKind kind = ClassifierKind::Knn;
    int n_classes = kNumClasses;
    std::size_t feature_dim = 0;
    std::uint64_t seed = 0;
    TrainConfig config;
    /// Optional; when present, predict() z-scores raw vectors first.
    Standardizer standardizer;
    ModelState state;
};

inline TrainedModel train(ClassifierKind kind, std::span<const FusedSample> samples, const TrainConfig& cfg)
{
    cfg.validate();
    if (samples.empty())
        fail(Errc::InsufficientSamples, "no training samples");
    TrainedModel m;
    m.kind = kind;
    m.feature_dim = samples.front().features.size();
    m.seed = cfg.seed;
    m.config = cfg;
    switch (kind) {
    case ClassifierKind::Knn: m.state = knn_train(samples, cfg.knn_k); break;
    case ClassifierKind::LinearSvm: m.state = linear_svm_train(samples, cfg); break;
    case ClassifierKind::RandomForest: m.state = random_forest_train(samples, cfg); break;
    case ClassifierKind::AdaBoost: m.state = adaboost_train(samples, cfg); break;
    case ClassifierKind::GradBoost: m.state = grad_boost_train(samples, cfg); break;
    }
    return m;
}

inline int predict(const TrainedModel& m, std::span<const double> v)
{
    if (v.size() != m.feature_dim)
        fail(Errc::DimensionMismatch,
             "vector has " + std::to_string(v.size()) + " dims, model expects " + std::to_string(m.feature_dim));
    if (m.standardizer.dim() > 0) {
        const auto z = apply_standardizer(m.standardizer, v);
        return std::visit([&](const auto& s) { return s.predict(std::span<const double>(z)); }, m.state);
    }
    return std::visit([&](const auto& s) { return s.predict(v); }, m.state);
}

// ---- FFM1 container -------------------------------------------------------

inline constexpr std::string_view kModelMagic = "FFM1";
inline constexpr std::uint32_t kModelVersion = 1;

namespace detail {

inline void write_config(ByteWriter& w, const TrainConfig& c)
{
    w.i32(c.knn_k);
    w.f64(c.svm_lambda);
    w.i32(c.svm_epochs);
    w.i32(c.rf_trees);
    w.i32(c.rf_max_depth);
    w.f64(c.rf_feature_frac);
    w.i32(c.ada_stages);
    w.i32(c.gb_stages);
    w.f64(c.gb_learning_rate);
    w.u64(c.seed);
}

inline TrainConfig read_config(ByteReader& r)
{
    TrainConfig c;
    c.knn_k = r.i32();
    c.svm_lambda = r.f64();
    c.svm_epochs = r.i32();
    c.rf_trees = r.i32();
    c.rf_max_depth = r.i32();
    c.rf_feature_frac = r.f64();
    c.ada_stages = r.i32();
    c.gb_stages = r.i32();
    c.gb_learning_rate = r.f64();
    c.seed = r.u64();
    return c;
}

inline void write_matrix(ByteWriter& w, const Matrix& m)
{
    w.u64(m.rows);
    w.u64(m.cols);
    w.f64s(m.data);
}

inline Matrix read_matrix(ByteReader& r)
{
    Matrix m;
    m.rows = r.u64();
    m.cols = r.u64();
    m.data = r.f64s();
    if (m.data.size() != m.rows * m.cols)
        fail(Errc::ModelLoadError, "matrix payload size mismatch");
    return m;
}

inline void write_tree(ByteWriter& w, const ClassificationTree& t)
{
    w.u32(static_cast<std::uint32_t>(t.nodes.size()));
    for (const auto& n : t.nodes) {
        w.i32(n.feature);
        w.f64(n.threshold);
        w.i32(n.left);
        w.i32(n.right);
        w.i32(n.label);
    }
}

inline void write_tree(ByteWriter& w, const RegressionTree& t)
{
    w.u32(static_cast<std::uint32_t>(t.nodes.size()));
    for (const auto& n : t.nodes) {
        w.i32(n.feature);
        w.f64(n.threshold);
        w.i32(n.left);
        w.i32(n.right);
        w.f64(n.value);
    }
}

// Child links must point forward inside the node array and features inside
// the vector, otherwise a corrupt file could make predict() loop or overrun.
template <class Node>
void check_nodes(const std::vector<Node>& nodes, std::size_t dim)
{
    if (nodes.empty())
        fail(Errc::ModelLoadError, "empty tree");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto& n = nodes[i];
        if (n.feature < 0)
            continue;
        if (static_cast<std::size_t>(n.feature) >= dim || n.left <= static_cast<std::int32_t>(i)
            || n.right <= static_cast<std::int32_t>(i) || static_cast<std::size_t>(n.left) >= nodes.size()
            || static_cast<std::size_t>(n.right) >= nodes.size())
            fail(Errc::ModelLoadError, "corrupt tree node");
    }
}

inline void check_label(std::int32_t label)
{
    if (label < 0 || label >= kNumClasses)
        fail(Errc::ModelLoadError, "class label out of range");
}

inline ClassificationTree read_class_tree(ByteReader& r, std::size_t dim)
{
    ClassificationTree t;
    t.nodes.resize(r.u32());
    for (auto& n : t.nodes) {
        n.feature = r.i32();
        n.threshold = r.f64();
        n.left = r.i32();
        n.right = r.i32();
        n.label = r.i32();
        check_label(n.label);
    }
    check_nodes(t.nodes, dim);
    return t;
}

inline RegressionTree read_reg_tree(ByteReader& r, std::size_t dim)
{
    RegressionTree t;
    t.nodes.resize(r.u32());
    for (auto& n : t.nodes) {
        n.feature = r.i32();
        n.threshold = r.f64();
        n.left = r.i32();
        n.right = r.i32();
        n.value = r.f64();
    }
    check_nodes(t.nodes, dim);
    return t;
}

struct StateWriter {
    ByteWriter& w;

    void operator()(const KnnModel& m) const
    {
        w.i32(m.k);
        write_matrix(w, m.x);
        for (int y : m.y)
            w.i32(y);
    }
    void operator()(const LinearSvmModel& m) const
    {
        for (const auto& row : m.weights)
            w.f64s(row);
    }
    void operator()(const ForestModel& m) const
    {
        w.u32(static_cast<std::uint32_t>(m.trees.size()));
        for (const auto& t : m.trees)
            write_tree(w, t);
    }
    void operator()(const AdaBoostModel& m) const
    {
        w.i32(m.prior_class);
        w.u32(static_cast<std::uint32_t>(m.stumps.size()));
        for (std::size_t k = 0; k < m.stumps.size(); ++k) {
            w.i32(m.stumps[k].feature);
            w.f64(m.stumps[k].threshold);
            w.i32(m.stumps[k].left);
            w.i32(m.stumps[k].right);
            w.f64(m.alphas[k]);
            w.f64(m.stage_errors[k]);
        }
    }
    void operator()(const GradBoostModel& m) const
    {
        for (double b : m.base)
            w.f64(b);
        w.f64(m.learning_rate);
        w.u32(static_cast<std::uint32_t>(m.stages.size()));
        for (const auto& stage : m.stages)
            for (const auto& t : stage)
                write_tree(w, t);
    }
};

inline ModelState read_state(ByteReader& r, ClassifierKind kind, std::size_t dim)
{
    switch (kind) {
    case ClassifierKind::Knn: {
        KnnModel m;
        m.k = r.i32();
        m.x = read_matrix(r);
        if (m.x.cols != dim || m.k < 1 || static_cast<std::size_t>(m.k) > m.x.rows)
            fail(Errc::ModelLoadError, "inconsistent knn state");
        m.y.resize(m.x.rows);
        for (auto& y : m.y) {
            y = r.i32();
            check_label(y);
        }
        return m;
    }
    case ClassifierKind::LinearSvm: {
        LinearSvmModel m;
        m.weights.resize(kNumClasses);
        for (auto& row : m.weights) {
            row = r.f64s();
            if (row.size() != dim + 1)
                fail(Errc::ModelLoadError, "inconsistent svm weights");
        }
        return m;
    }
    case ClassifierKind::RandomForest: {
        ForestModel m;
        m.trees.resize(r.u32());
        for (auto& t : m.trees)
            t = read_class_tree(r, dim);
        return m;
    }
    case ClassifierKind::AdaBoost: {
        AdaBoostModel m;
        m.prior_class = r.i32();
        check_label(m.prior_class);
        const auto count = r.u32();
        for (std::uint32_t k = 0; k < count; ++k) {
            Stump s;
            s.feature = r.i32();
            s.threshold = r.f64();
            s.left = r.i32();
            s.right = r.i32();
            check_label(s.left);
            check_label(s.right);
            if (s.feature >= 0 && static_cast<std::size_t>(s.feature) >= dim)
                fail(Errc::ModelLoadError, "stump feature out of range");
            m.stumps.push_back(s);
            m.alphas.push_back(r.f64());
            m.stage_errors.push_back(r.f64());
        }
        return m;
    }
    case ClassifierKind::GradBoost: {
        GradBoostModel m;
        for (auto& b : m.base)
            b = r.f64();
        m.learning_rate = r.f64();
        m.stages.resize(r.u32());
        for (auto& stage : m.stages)
            for (auto& t : stage)
                t = read_reg_tree(r, dim);
        return m;
    }
    }
    fail(Errc::ModelLoadError, "unknown classifier kind");
}

} // namespace detail

/// Layout: "FFM1", u32 version, u8 kind, u32 n_classes, u64 feature_dim,
/// u64 seed, config echo, standardizer, kind-specific state.
inline std::string serialize(const TrainedModel& m)
{
    ByteWriter w;
    w.bytes(kModelMagic);
    w.u32(kModelVersion);
    w.u8(static_cast<std::uint8_t>(m.kind));
    w.u32(static_cast<std::uint32_t>(m.n_classes));
    w.u64(m.feature_dim);
    w.u64(m.seed);
    detail::write_config(w, m.config);
    w.f64s(m.standardizer.means);
    w.f64s(m.standardizer.stds);
    std::visit(detail::StateWriter{w}, m.state);
    return w.take();
}

inline TrainedModel deserialize_model(std::string_view bytes)
{
    ByteReader r(bytes, Errc::ModelLoadError);
    if (r.bytes(4) != kModelMagic)
        fail(Errc::ModelLoadError, "not an FFM1 model file");
    if (const auto v = r.u32(); v != kModelVersion)
        fail(Errc::ModelLoadError, "unsupported model version " + std::to_string(v));
    TrainedModel m;
    const auto kind = r.u8();
    if (kind >= kAllClassifiers.size())
        fail(Errc::ModelLoadError, "unknown classifier kind tag");
    m.kind = static_cast<ClassifierKind>(kind);
    m.n_classes = static_cast<int>(r.u32());
    if (m.n_classes != kNumClasses)
        fail(Errc::ModelLoadError, "model must have 5 classes");
    m.feature_dim = r.u64();
    m.seed = r.u64();
    m.config = detail::read_config(r);
    m.standardizer.means = r.f64s();
    m.standardizer.stds = r.f64s();
    if (m.standardizer.means.size() != m.standardizer.stds.size()
        || (m.standardizer.dim() != 0 && m.standardizer.dim() != m.feature_dim))
        fail(Errc::ModelLoadError, "standardizer does not match feature_dim");
    m.state = detail::read_state(r, m.kind, m.feature_dim);
    if (!r.at_end())
        fail(Errc::ModelLoadError, "trailing bytes after model payload");
    return m;
}

inline void save_model(const TrainedModel& m, const std::filesystem::path& path)
{
    write_file_atomic(path, serialize(m));
}

inline TrainedModel load_model(const std::filesystem::path& path)
{
    return deserialize_model(read_file(path));
}

} // namespace drfuse
