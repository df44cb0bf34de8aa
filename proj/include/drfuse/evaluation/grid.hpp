#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "drfuse/classifiers/model.hpp"
#include "drfuse/dataset/cache.hpp"
#include "drfuse/evaluation/metrics.hpp"
#include "drfuse/evaluation/split.hpp"

namespace drfuse {

/// One grid row: a feature cache viewed through a feature set.
struct GridBackbone {
    std::string label;
    const FeatureCache* cache = nullptr;
    FeatureSet set = FeatureSet::Hybrid;
};

/// "<backbone>+handcrafted" for the fused set, the bare name for deep only.
inline std::string backbone_label(const FeatureCache& c, FeatureSet set)
{
    return set == FeatureSet::Hybrid ? c.backbone + "+handcrafted" : c.backbone;
}

struct GridConfig {
    double train_frac = 0.8;
    std::uint64_t seed = 42;
    TrainConfig train;
};

struct GridCell {
    std::string backbone;
    ClassifierKind classifier = ClassifierKind::Knn;
    bool ok = false;
    std::string error;
    std::size_t train_count = 0;
    std::size_t validation_count = 0;
    /// Validation record ids that had no features.
    std::vector<std::uint64_t> skipped_ids;
    MetricsReport report;
};

/// Trains and scores one (features, classifier) pair: standardizer fitted on
/// the train part only, metrics on the validation part.
inline GridCell evaluate_cell(const GridBackbone& b, ClassifierKind kind, const Split& split, const GridConfig& cfg)
{
    GridCell cell;
    cell.backbone = b.label;
    cell.classifier = kind;
    try {
        const auto train_raw = cache_samples(*b.cache, split.train, b.set);
        const auto val_raw = cache_samples(*b.cache, split.validation, b.set);
        for (auto p : split.validation)
            if (!b.cache->records.at(p).ok)
                cell.skipped_ids.push_back(b.cache->records[p].id);
        cell.train_count = train_raw.size();
        cell.validation_count = val_raw.size();
        if (val_raw.empty())
            fail(Errc::InsufficientSamples, "no validation samples with features");
        const auto st = fit_standardizer(train_raw);
        const auto train_z = apply_standardizer(st, train_raw);
        const auto model = train(kind, train_z, cfg.train);
        std::vector<int> truth, pred;
        for (const auto& s : val_raw) {
            truth.push_back(s.label);
            pred.push_back(predict(model, apply_standardizer(st, s.features)));
        }
        cell.report = metrics(confusion(truth, pred));
        cell.ok = true;
    } catch (const Error& e) {
        cell.error = std::string(errc_name(e.code())) + ": " + e.what();
    } catch (const std::exception& e) {
        cell.error = e.what();
    }
    return cell;
}

/// Row-major over backbones, then classifiers. A failing cell is recorded
/// and the sweep continues.
inline std::vector<GridCell> run_grid(std::span<const int> labels, std::span<const GridBackbone> backbones,
                                      std::span<const ClassifierKind> classifiers, const GridConfig& cfg)
{
    if (backbones.empty() || classifiers.empty())
        fail(Errc::InvalidConfig, "grid needs at least one backbone and one classifier");
    const auto split = stratified_split(labels, cfg.train_frac, cfg.seed);
    std::vector<GridCell> cells;
    for (const auto& b : backbones) {
        if (b.cache == nullptr || b.cache->records.size() != labels.size())
            fail(Errc::InvalidConfig, "backbone '" + b.label + "' cache does not cover the manifest");
        for (auto k : classifiers)
            cells.push_back(evaluate_cell(b, k, split, cfg));
    }
    return cells;
}

// ---- output ----------------------------------------------------------------

inline std::string format_fraction(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

inline constexpr std::array<std::string_view, 5> kGridMetrics = {"accuracy", "recall", "precision", "kappa", "f1"};

/// Summary view: micro recall, macro precision and F1.
inline std::array<double, 5> grid_values(const MetricsReport& r)
{
    return {r.accuracy, r.recall_micro, r.precision_macro, r.kappa, r.f1_macro};
}

inline std::string grid_csv(std::span<const GridCell> cells)
{
    std::string out = "backbone,classifier,accuracy,recall,precision,kappa,f1\n";
    for (const auto& c : cells) {
        out += c.backbone + "," + std::string(classifier_name(c.classifier));
        const auto v = grid_values(c.report);
        for (double x : v)
            out += "," + (c.ok ? format_fraction(x) : std::string("NA"));
        out += "\n";
    }
    return out;
}

/// Backbones down, classifiers across, one table per metric.
inline std::string heatmap_csv(std::span<const GridCell> cells, std::size_t metric)
{
    std::vector<std::string> rows;
    std::vector<ClassifierKind> cols;
    for (const auto& c : cells) {
        if (std::find(rows.begin(), rows.end(), c.backbone) == rows.end())
            rows.push_back(c.backbone);
        if (std::find(cols.begin(), cols.end(), c.classifier) == cols.end())
            cols.push_back(c.classifier);
    }
    std::string out = "backbone";
    for (auto k : cols)
        out += "," + std::string(classifier_name(k));
    out += "\n";
    for (const auto& r : rows) {
        out += r;
        for (auto k : cols) {
            std::string v = "NA";
            for (const auto& c : cells)
                if (c.backbone == r && c.classifier == k && c.ok)
                    v = format_fraction(grid_values(c.report)[metric]);
            out += "," + v;
        }
        out += "\n";
    }
    return out;
}

inline nlohmann::ordered_json report_json(const MetricsReport& r)
{
    nlohmann::ordered_json j;
    j["accuracy"] = r.accuracy;
    j["recall_micro"] = r.recall_micro;
    j["recall_macro"] = r.recall_macro;
    j["precision_micro"] = r.precision_micro;
    j["precision_macro"] = r.precision_macro;
    j["f1_micro"] = r.f1_micro;
    j["f1_macro"] = r.f1_macro;
    j["kappa"] = r.kappa;
    auto& per = j["per_class"] = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < kNumClasses; ++c)
        per.push_back({{"class", kClassNames[c]},
                       {"recall", r.recall[c]},
                       {"precision", r.precision[c]},
                       {"f1", r.f1[c]}});
    j["confusion"] = r.confusion.counts;
    return j;
}

inline nlohmann::ordered_json cell_json(const GridCell& c, std::uint64_t seed)
{
    nlohmann::ordered_json j;
    j["backbone"] = c.backbone;
    j["classifier"] = classifier_name(c.classifier);
    j["seed"] = seed;
    j["status"] = c.ok ? "ok" : "failed";
    if (!c.ok)
        j["error"] = c.error;
    j["train_count"] = c.train_count;
    j["validation_count"] = c.validation_count;
    j["skipped_ids"] = c.skipped_ids;
    if (c.ok)
        j["metrics"] = report_json(c.report);
    return j;
}

inline std::string file_safe(std::string s)
{
    for (auto& ch : s)
        if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '-' && ch != '_' && ch != '.')
            ch = '_';
    return s;
}

/// grid.csv, heatmap_<metric>.csv and cells/<backbone>__<classifier>.json.
inline void write_grid(std::span<const GridCell> cells, const std::filesystem::path& out_dir, std::uint64_t seed)
{
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir / "cells", ec);
    if (ec)
        fail(Errc::IoError, "cannot create " + (out_dir / "cells").string() + ": " + ec.message());
    write_file_atomic(out_dir / "grid.csv", grid_csv(cells));
    for (std::size_t m = 0; m < kGridMetrics.size(); ++m)
        write_file_atomic(out_dir / ("heatmap_" + std::string(kGridMetrics[m]) + ".csv"), heatmap_csv(cells, m));
    for (const auto& c : cells)
        write_file_atomic(out_dir / "cells"
                              / (file_safe(c.backbone) + "__" + std::string(classifier_name(c.classifier)) + ".json"),
                          cell_json(c, seed).dump(2) + "\n");
}

} // namespace drfuse
