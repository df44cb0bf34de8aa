#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "drfuse/classifiers/common.hpp"
#include "drfuse/dataset/cache.hpp"
#include "drfuse/deep/onnx_provider.hpp"
#include "drfuse/pipeline.hpp"
#include "drfuse/util/binary_io.hpp"

namespace drfuse {

struct ProviderConfig {
    /// "seeded" or a path to an .onnx model.
    std::string spec = "seeded";
    std::uint64_t seed = 42;
    std::size_t dim = 64;
    /// For model files; 0 skips the check.
    std::size_t expected_dim = 0;

    bool operator==(const ProviderConfig&) const = default;
};

struct RunConfig {
    std::uint64_t seed = 42;
    double train_frac = 0.8;
    std::string output_dir = "out";
    ExtractionParams extraction;
    std::vector<ProviderConfig> providers{ProviderConfig{}};
    std::vector<std::string> classifiers{"knn", "linear_svm", "random_forest", "adaboost", "grad_boost"};
    /// Subset of {hybrid, deep}.
    std::vector<std::string> feature_sets{"hybrid"};
    TrainConfig train;

    void validate() const
    {
        extraction.segmentation.validate();
        extraction.handcrafted.glcm.validate();
        train.validate();
        if (!(train_frac > 0.0 && train_frac < 1.0))
            fail(Errc::InvalidConfig, "train_frac must be in (0, 1)");
        if (providers.empty())
            fail(Errc::InvalidConfig, "at least one provider is required");
        for (const auto& c : classifiers)
            if (!parse_classifier(c))
                fail(Errc::InvalidConfig, "unknown classifier '" + c + "'");
        for (const auto& f : feature_sets)
            if (f != "hybrid" && f != "deep")
                fail(Errc::InvalidConfig, "feature set must be 'hybrid' or 'deep', got '" + f + "'");
        if (extraction.handcrafted.zernike_order < 0 || extraction.handcrafted.color_bins < 1
            || extraction.handcrafted.ldp_k < 1 || extraction.handcrafted.ldp_k > 7)
            fail(Errc::InvalidConfig, "descriptor parameters out of range");
    }
};

inline ProviderPtr make_provider(const ProviderConfig& p)
{
    if (p.spec == "seeded" || p.spec == "stub" || p.spec == "seeded_projection")
        return seeded_projection_provider(p.seed, p.dim);
    return model_file_provider(p.spec, p.expected_dim);
}

inline std::vector<ClassifierKind> resolve_classifiers(const std::vector<std::string>& names)
{
    std::vector<ClassifierKind> out;
    for (const auto& n : names) {
        const auto k = parse_classifier(n);
        if (!k)
            fail(Errc::InvalidConfig, "unknown classifier '" + n + "'");
        out.push_back(*k);
    }
    return out;
}

namespace detail {

template <class T>
void read_key(const YAML::Node& node, const char* key, T& out, std::set<std::string>& seen)
{
    seen.insert(key);
    if (const auto v = node[key]) {
        try {
            out = v.as<T>();
        } catch (const YAML::Exception& e) {
            fail(Errc::InvalidConfig, std::string("bad value for '") + key + "': " + e.what());
        }
    }
}

inline void reject_unknown(const YAML::Node& node, const std::set<std::string>& known, const std::string& where)
{
    if (!node)
        return;
    if (!node.IsMap())
        fail(Errc::InvalidConfig, where + " must be a mapping");
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (!known.count(key))
            fail(Errc::InvalidConfig, "unknown config key '" + where + (where.empty() ? "" : ".") + key + "'");
    }
}

} // namespace detail

/// Overlays a YAML document onto defaults; unknown keys are errors.
inline RunConfig parse_run_config(const std::string& text)
{
    RunConfig c;
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        fail(Errc::InvalidConfig, std::string("config is not valid YAML: ") + e.what());
    }
    if (!root || root.IsNull())
        return c;
    std::set<std::string> top;
    detail::read_key(root, "seed", c.seed, top);
    detail::read_key(root, "train_frac", c.train_frac, top);
    detail::read_key(root, "output_dir", c.output_dir, top);
    detail::read_key(root, "classifiers", c.classifiers, top);
    detail::read_key(root, "feature_sets", c.feature_sets, top);

    top.insert("segmentation");
    if (const auto n = root["segmentation"]) {
        std::set<std::string> k;
        auto& s = c.extraction.segmentation;
        detail::read_key(n, "blur_kernel", s.blur_kernel, k);
        detail::read_key(n, "blur_sigma", s.blur_sigma, k);
        detail::read_key(n, "block_size", s.block_size, k);
        detail::read_key(n, "threshold_offset", s.threshold_offset, k);
        detail::read_key(n, "opening_radius", s.opening_radius, k);
        detail::read_key(n, "background_level", s.background_level, k);
        detail::reject_unknown(n, k, "segmentation");
    }
    top.insert("descriptors");
    if (const auto n = root["descriptors"]) {
        std::set<std::string> k;
        auto& h = c.extraction.handcrafted;
        detail::read_key(n, "zernike_order", h.zernike_order, k);
        detail::read_key(n, "glcm_levels", h.glcm.levels, k);
        detail::read_key(n, "glcm_distances", h.glcm.distances, k);
        detail::read_key(n, "glcm_angles", h.glcm.angles, k);
        detail::read_key(n, "glcm_symmetric", h.glcm.symmetric, k);
        detail::read_key(n, "glcm_normalized", h.glcm.normalized, k);
        detail::read_key(n, "ldp_k", h.ldp_k, k);
        detail::read_key(n, "color_bins", h.color_bins, k);
        detail::reject_unknown(n, k, "descriptors");
    }
    top.insert("providers");
    if (const auto n = root["providers"]) {
        if (!n.IsSequence())
            fail(Errc::InvalidConfig, "providers must be a list");
        c.providers.clear();
        for (const auto& item : n) {
            ProviderConfig p;
            std::set<std::string> k;
            detail::read_key(item, "spec", p.spec, k);
            detail::read_key(item, "seed", p.seed, k);
            detail::read_key(item, "dim", p.dim, k);
            detail::read_key(item, "expected_dim", p.expected_dim, k);
            detail::reject_unknown(item, k, "providers[]");
            c.providers.push_back(p);
        }
    }
    top.insert("train");
    if (const auto n = root["train"]) {
        std::set<std::string> k;
        auto& t = c.train;
        detail::read_key(n, "knn_k", t.knn_k, k);
        detail::read_key(n, "svm_lambda", t.svm_lambda, k);
        detail::read_key(n, "svm_epochs", t.svm_epochs, k);
        detail::read_key(n, "rf_trees", t.rf_trees, k);
        detail::read_key(n, "rf_max_depth", t.rf_max_depth, k);
        k.insert("rf_feature_frac");
        if (const auto v = n["rf_feature_frac"]) {
            const auto s = v.as<std::string>();
            if (s == "sqrt")
                t.rf_feature_frac = 0.0;
            else
                detail::read_key(n, "rf_feature_frac", t.rf_feature_frac, k);
        }
        detail::read_key(n, "ada_stages", t.ada_stages, k);
        detail::read_key(n, "gb_stages", t.gb_stages, k);
        detail::read_key(n, "gb_learning_rate", t.gb_learning_rate, k);
        detail::reject_unknown(n, k, "train");
    }
    detail::reject_unknown(root, top, "");
    // The classifier seed always follows the run seed.
    c.train.seed = c.seed;
    return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path) { return parse_run_config(read_file(path)); }

inline std::string to_yaml(const RunConfig& c)
{
    YAML::Emitter e;
    e.SetDoublePrecision(17);
    e << YAML::BeginMap;
    e << YAML::Key << "seed" << YAML::Value << c.seed;
    e << YAML::Key << "train_frac" << YAML::Value << c.train_frac;
    e << YAML::Key << "output_dir" << YAML::Value << c.output_dir;
    e << YAML::Key << "classifiers" << YAML::Value << YAML::Flow << c.classifiers;
    e << YAML::Key << "feature_sets" << YAML::Value << YAML::Flow << c.feature_sets;

    const auto& s = c.extraction.segmentation;
    e << YAML::Key << "segmentation" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "blur_kernel" << YAML::Value << s.blur_kernel;
    e << YAML::Key << "blur_sigma" << YAML::Value << s.blur_sigma;
    e << YAML::Key << "block_size" << YAML::Value << s.block_size;
    e << YAML::Key << "threshold_offset" << YAML::Value << s.threshold_offset;
    e << YAML::Key << "opening_radius" << YAML::Value << s.opening_radius;
    e << YAML::Key << "background_level" << YAML::Value << s.background_level;
    e << YAML::EndMap;

    const auto& h = c.extraction.handcrafted;
    e << YAML::Key << "descriptors" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "zernike_order" << YAML::Value << h.zernike_order;
    e << YAML::Key << "glcm_levels" << YAML::Value << h.glcm.levels;
    e << YAML::Key << "glcm_distances" << YAML::Value << YAML::Flow << h.glcm.distances;
    e << YAML::Key << "glcm_angles" << YAML::Value << YAML::Flow << h.glcm.angles;
    e << YAML::Key << "glcm_symmetric" << YAML::Value << h.glcm.symmetric;
    e << YAML::Key << "glcm_normalized" << YAML::Value << h.glcm.normalized;
    e << YAML::Key << "ldp_k" << YAML::Value << h.ldp_k;
    e << YAML::Key << "color_bins" << YAML::Value << h.color_bins;
    e << YAML::EndMap;

    e << YAML::Key << "providers" << YAML::Value << YAML::BeginSeq;
    for (const auto& p : c.providers) {
        e << YAML::BeginMap;
        e << YAML::Key << "spec" << YAML::Value << p.spec;
        e << YAML::Key << "seed" << YAML::Value << p.seed;
        e << YAML::Key << "dim" << YAML::Value << p.dim;
        e << YAML::Key << "expected_dim" << YAML::Value << p.expected_dim;
        e << YAML::EndMap;
    }
    e << YAML::EndSeq;

    const auto& t = c.train;
    e << YAML::Key << "train" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "knn_k" << YAML::Value << t.knn_k;
    e << YAML::Key << "svm_lambda" << YAML::Value << t.svm_lambda;
    e << YAML::Key << "svm_epochs" << YAML::Value << t.svm_epochs;
    e << YAML::Key << "rf_trees" << YAML::Value << t.rf_trees;
    e << YAML::Key << "rf_max_depth" << YAML::Value << t.rf_max_depth;
    if (t.rf_feature_frac == 0.0)
        e << YAML::Key << "rf_feature_frac" << YAML::Value << "sqrt";
    else
        e << YAML::Key << "rf_feature_frac" << YAML::Value << t.rf_feature_frac;
    e << YAML::Key << "ada_stages" << YAML::Value << t.ada_stages;
    e << YAML::Key << "gb_stages" << YAML::Value << t.gb_stages;
    e << YAML::Key << "gb_learning_rate" << YAML::Value << t.gb_learning_rate;
    e << YAML::EndMap;

    e << YAML::EndMap;
    return std::string(e.c_str()) + "\n";
}

} // namespace drfuse
