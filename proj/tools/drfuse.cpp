#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "drfuse/classifiers/model.hpp"
#include "drfuse/config.hpp"
#include "drfuse/dataset/cache.hpp"
#include "drfuse/dataset/manifest.hpp"
#include "drfuse/evaluation/grid.hpp"
#include "drfuse/synthetic.hpp"

namespace fs = std::filesystem;
using namespace drfuse;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitUsage = 2;

void warn(const std::string& msg) { std::cerr << "warning: " << msg << "\n"; }

// Flags shared by the pipeline subcommands. Optional values only override the
// config file when given.
struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    unsigned jobs = 1;
    std::vector<std::string> providers;
    std::string classifiers;
    std::optional<double> train_frac;
    std::string feature_sets;

    std::optional<int> knn_k, svm_epochs, rf_trees, rf_max_depth, ada_stages, gb_stages;
    std::optional<double> svm_lambda, gb_learning_rate, rf_feature_frac;
    std::optional<int> block_size, blur_kernel, opening_radius, color_bins, glcm_levels, zernike_order;
    std::optional<double> threshold_offset, blur_sigma;
    std::optional<std::size_t> provider_dim;
    std::optional<std::uint64_t> provider_seed;
};

std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty())
                out.push_back(cur);
            cur.clear();
        } else if (c != ' ') {
            cur += c;
        }
    }
    if (!cur.empty())
        out.push_back(cur);
    return out;
}

void add_common(CLI::App* app, Common& c, bool with_grid_flags)
{
    app->add_option("--config", c.config_path, "YAML run configuration")->check(CLI::ExistingFile);
    app->add_option("--seed", c.seed, "Seed for splitting and training (default 42)");
    app->add_option("--jobs", c.jobs, "Worker threads")->check(CLI::PositiveNumber);
    app->add_option("--provider", c.providers, "Deep provider: 'seeded' or a model file (repeatable)");
    app->add_option("--train-frac", c.train_frac, "Training fraction of the stratified split (default 0.8)");
    if (with_grid_flags) {
        app->add_option("--classifiers", c.classifiers, "Comma list of knn,linear_svm,random_forest,adaboost,grad_boost");
        app->add_option("--feature-sets", c.feature_sets, "Comma list of hybrid,deep");
    }
    auto* g = app->add_option_group("overrides", "Per-parameter overrides");
    g->add_option("--knn-k", c.knn_k);
    g->add_option("--svm-lambda", c.svm_lambda);
    g->add_option("--svm-epochs", c.svm_epochs);
    g->add_option("--rf-trees", c.rf_trees);
    g->add_option("--rf-max-depth", c.rf_max_depth);
    g->add_option("--rf-feature-frac", c.rf_feature_frac, "0 selects sqrt(dim)");
    g->add_option("--ada-stages", c.ada_stages);
    g->add_option("--gb-stages", c.gb_stages);
    g->add_option("--gb-learning-rate", c.gb_learning_rate);
    g->add_option("--block-size", c.block_size);
    g->add_option("--blur-kernel", c.blur_kernel);
    g->add_option("--blur-sigma", c.blur_sigma);
    g->add_option("--threshold-offset", c.threshold_offset);
    g->add_option("--opening-radius", c.opening_radius);
    g->add_option("--zernike-order", c.zernike_order);
    g->add_option("--glcm-levels", c.glcm_levels);
    g->add_option("--color-bins", c.color_bins);
    g->add_option("--provider-dim", c.provider_dim, "Output dim of the seeded provider");
    g->add_option("--provider-seed", c.provider_seed, "Seed of the seeded provider");
}

RunConfig effective_config(const Common& c)
{
    RunConfig r = c.config_path.empty() ? RunConfig{} : load_run_config(c.config_path);
    if (c.seed)
        r.seed = *c.seed;
    if (c.train_frac)
        r.train_frac = *c.train_frac;
    if (!c.providers.empty()) {
        r.providers.clear();
        for (const auto& p : c.providers)
            r.providers.push_back({p, 42, 64, 0});
    }
    for (auto& p : r.providers) {
        if (c.provider_dim)
            p.dim = *c.provider_dim;
        if (c.provider_seed)
            p.seed = *c.provider_seed;
    }
    if (!c.classifiers.empty())
        r.classifiers = split_list(c.classifiers);
    if (!c.feature_sets.empty())
        r.feature_sets = split_list(c.feature_sets);
    auto set = [](auto& dst, const auto& src) {
        if (src)
            dst = *src;
    };
    set(r.train.knn_k, c.knn_k);
    set(r.train.svm_lambda, c.svm_lambda);
    set(r.train.svm_epochs, c.svm_epochs);
    set(r.train.rf_trees, c.rf_trees);
    set(r.train.rf_max_depth, c.rf_max_depth);
    set(r.train.rf_feature_frac, c.rf_feature_frac);
    set(r.train.ada_stages, c.ada_stages);
    set(r.train.gb_stages, c.gb_stages);
    set(r.train.gb_learning_rate, c.gb_learning_rate);
    auto& s = r.extraction.segmentation;
    set(s.block_size, c.block_size);
    set(s.blur_kernel, c.blur_kernel);
    set(s.blur_sigma, c.blur_sigma);
    set(s.threshold_offset, c.threshold_offset);
    set(s.opening_radius, c.opening_radius);
    auto& h = r.extraction.handcrafted;
    set(h.zernike_order, c.zernike_order);
    set(h.glcm.levels, c.glcm_levels);
    set(h.color_bins, c.color_bins);
    r.train.seed = r.seed;
    r.train.threads = c.jobs;
    r.validate();
    return r;
}

void ensure_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        fail(Errc::IoError, "cannot create output directory " + dir.string());
    const auto probe = dir / ".write_probe";
    write_file_atomic(probe, "");
    fs::remove(probe, ec);
}

void echo_config(const RunConfig& cfg, const fs::path& dir) { write_file_atomic(dir / "run_config.yaml", to_yaml(cfg)); }

void echo_config_beside(const RunConfig& cfg, const fs::path& file)
{
    auto p = file;
    p += ".run_config.yaml";
    write_file_atomic(p, to_yaml(cfg));
}

// ---- subcommands ------------------------------------------------------------

int cmd_synth(const std::string& out, int per_class, std::uint64_t seed)
{
    write_synthetic_dataset(out, per_class, seed);
    std::cout << "wrote " << per_class * kNumClasses << " images under " << out << "\n";
    return kExitOk;
}

int cmd_ingest(const std::string& root, const std::string& out)
{
    const auto m = ingest(root);
    for (const auto& s : m.skipped)
        warn("skipped undecodable file " + s);
    save_manifest(m, out);
    std::cout << "manifest: " << m.records.size() << " records -> " << out << "\n";
    return m.skipped.empty() ? kExitOk : kExitPartial;
}

int cmd_segment(const std::string& manifest_path, const Common& common, const std::string& out)
{
    const auto cfg = effective_config(common);
    const auto m = load_manifest(manifest_path);
    ensure_dir(out);
    echo_config(cfg, out);
    std::vector<std::string> problems(m.records.size());
    std::vector<char> fell_back(m.records.size(), 0);
    parallel_for(m.records.size(), common.jobs, [&](std::size_t i) {
        const auto& r = m.records[i];
        try {
            const auto img = resize_bilinear(to_rgb(load_image(m.absolute(r))), kCanonicalSize, kCanonicalSize);
            const auto outcome = segment_with_fallback(img, cfg.extraction.segmentation);
            fell_back[i] = outcome.used_fallback ? 1 : 0;
            char name[32];
            std::snprintf(name, sizeof name, "%06llu.png", static_cast<unsigned long long>(r.id));
            save_png(fs::path(out) / name, mask_to_gray(outcome.seg.mask));
        } catch (const Error& e) {
            problems[i] = std::string(errc_name(e.code())) + ": " + e.what();
        }
    });
    std::size_t failed = 0;
    for (std::size_t i = 0; i < m.records.size(); ++i) {
        if (fell_back[i])
            warn("record " + std::to_string(m.records[i].id) + " (" + m.records[i].path
                 + "): empty ROI, full-image mask written");
        if (!problems[i].empty()) {
            warn("record " + std::to_string(m.records[i].id) + " failed: " + problems[i]);
            ++failed;
        }
    }
    std::cout << "masks: " << m.records.size() - failed << " written to " << out << "\n";
    return failed == 0 ? kExitOk : kExitPartial;
}

int cmd_extract(const std::string& manifest_path, const Common& common, const std::string& out)
{
    const auto cfg = effective_config(common);
    if (cfg.providers.size() != 1)
        fail(Errc::InvalidConfig, "extract takes exactly one provider");
    const auto m = load_manifest(manifest_path);
    const auto provider = make_provider(cfg.providers.front());
    const auto res = extract_and_cache(m, *provider, cfg.extraction, out, common.jobs);
    echo_config_beside(cfg, out);
    if (res.invalidated)
        warn("existing cache " + out + " had a different fingerprint; rebuilt");
    for (const auto& r : res.cache.records)
        if (!r.ok)
            warn("record " + std::to_string(r.id) + " failed: " + r.error);
    std::cout << (res.reused ? "cache up to date: " : "cache written: ") << out << " (" << res.cache.records.size()
              << " records, dim " << res.cache.dim << ")\n";
    return res.cache.failed() == 0 ? kExitOk : kExitPartial;
}

FeatureCache load_cache_for(const DatasetManifest& m, const std::string& path)
{
    auto c = deserialize_cache(read_file(path));
    if (c.records.size() != m.records.size())
        fail(Errc::CacheCorrupt, "cache " + path + " does not match the manifest");
    for (std::size_t i = 0; i < c.records.size(); ++i)
        if (c.records[i].label != m.records[i].class_index)
            fail(Errc::CacheCorrupt, "cache " + path + " labels disagree with the manifest");
    return c;
}

FeatureSet parse_feature_set(const std::string& s) { return s == "deep" ? FeatureSet::DeepOnly : FeatureSet::Hybrid; }

int cmd_train(const std::string& manifest_path, const std::string& cache_path, const std::string& classifier,
              const std::string& feature_set, const Common& common, const std::string& out)
{
    const auto cfg = effective_config(common);
    const auto kind = parse_classifier(classifier);
    if (!kind)
        fail(Errc::InvalidConfig, "unknown classifier '" + classifier + "'");
    const auto m = load_manifest(manifest_path);
    const auto cache = load_cache_for(m, cache_path);
    const auto labels = m.labels();
    const auto split = stratified_split(labels, cfg.train_frac, cfg.seed);
    const auto raw = cache_samples(cache, split.train, parse_feature_set(feature_set));
    const auto st = fit_standardizer(raw);
    auto model = train(*kind, apply_standardizer(st, raw), cfg.train);
    model.standardizer = st;
    save_model(model, out);
    echo_config_beside(cfg, out);
    std::cout << "trained " << classifier_name(*kind) << " on " << raw.size() << " samples -> " << out << "\n";
    return raw.size() == split.train.size() ? kExitOk : kExitPartial;
}

int cmd_evaluate(const std::string& manifest_path, const std::string& cache_path, const std::string& model_path,
                 const std::string& feature_set, const Common& common, const std::string& out)
{
    const auto cfg = effective_config(common);
    const auto m = load_manifest(manifest_path);
    const auto cache = load_cache_for(m, cache_path);
    const auto model = load_model(model_path);
    const auto split = stratified_split(m.labels(), cfg.train_frac, cfg.seed);
    const auto val = cache_samples(cache, split.validation, parse_feature_set(feature_set));
    std::vector<int> truth, pred;
    for (const auto& s : val) {
        truth.push_back(s.label);
        pred.push_back(predict(model, s.features));
    }
    const auto report = metrics(confusion(truth, pred));
    auto j = report_json(report);
    j["classifier"] = classifier_name(model.kind);
    j["seed"] = cfg.seed;
    j["validation_count"] = val.size();
    write_file_atomic(out, j.dump(2) + "\n");
    echo_config_beside(cfg, out);
    std::cout << "accuracy " << format_fraction(report.accuracy) << " kappa " << format_fraction(report.kappa)
              << " -> " << out << "\n";
    return val.size() == split.validation.size() ? kExitOk : kExitPartial;
}

int cmd_grid(const std::string& manifest_path, const Common& common, const std::string& out,
             const std::string& cache_dir_opt)
{
    const auto cfg = effective_config(common);
    const auto kinds = resolve_classifiers(cfg.classifiers);
    const auto m = load_manifest(manifest_path);
    ensure_dir(out);
    const fs::path cache_dir = cache_dir_opt.empty() ? fs::path(out) / "cache" : fs::path(cache_dir_opt);
    ensure_dir(cache_dir);
    echo_config(cfg, out);

    bool partial = false;
    std::vector<FeatureCache> caches;
    caches.reserve(cfg.providers.size());
    for (std::size_t i = 0; i < cfg.providers.size(); ++i) {
        const auto provider = make_provider(cfg.providers[i]);
        const auto path = cache_dir / (std::to_string(i) + "_" + file_safe(provider->name()) + ".ffc");
        auto res = extract_and_cache(m, *provider, cfg.extraction, path, common.jobs);
        if (res.invalidated)
            warn("cache " + path.string() + " was stale; rebuilt");
        for (const auto& r : res.cache.records)
            if (!r.ok) {
                warn("record " + std::to_string(r.id) + " skipped: " + r.error);
                partial = true;
            }
        caches.push_back(std::move(res.cache));
    }
    std::vector<GridBackbone> rows;
    for (const auto& c : caches)
        for (const auto& fsname : cfg.feature_sets) {
            const auto set = parse_feature_set(fsname);
            rows.push_back({backbone_label(c, set), &c, set});
        }
    GridConfig gc{cfg.train_frac, cfg.seed, cfg.train};
    const auto labels = m.labels();
    const auto cells = run_grid(labels, rows, kinds, gc);
    write_grid(cells, out, cfg.seed);
    for (const auto& c : cells)
        if (!c.ok) {
            warn("cell " + c.backbone + "/" + std::string(classifier_name(c.classifier)) + " failed: " + c.error);
            partial = true;
        }
    std::cout << grid_csv(cells);
    return partial ? kExitPartial : kExitOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"drfuse: hybrid handcrafted + deep feature pipeline for 5-grade retinal image classification"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "drfuse 1.0.0");

    Common common;
    std::string root, out, manifest, cache, model, classifier = "random_forest", feature_set = "hybrid", cache_dir;
    int per_class = 100;
    std::uint64_t synth_seed = 42;

    auto* synth = app.add_subcommand("synth", "Write a synthetic 5-class fundus-like dataset");
    synth->add_option("--out", out, "Dataset root to create")->required();
    synth->add_option("--per-class", per_class, "Images per class")->check(CLI::PositiveNumber);
    synth->add_option("--seed", synth_seed, "Generator seed");

    auto* ing = app.add_subcommand("ingest", "Enumerate <root>/<class>/*.{png,jpg,jpeg} into a manifest CSV");
    ing->add_option("--root", root, "Dataset root")->required();
    ing->add_option("--out", out, "Manifest CSV to write")->required();

    auto* seg = app.add_subcommand("segment", "Write one ROI mask PNG per manifest record");
    seg->add_option("--manifest", manifest)->required();
    seg->add_option("--out", out, "Output directory")->required();
    add_common(seg, common, false);

    auto* ext = app.add_subcommand("extract", "Extract fused raw features into an FFC1 cache");
    ext->add_option("--manifest", manifest)->required();
    ext->add_option("--out", out, "Cache file")->required();
    add_common(ext, common, false);

    auto* trn = app.add_subcommand("train", "Train one classifier on the training split");
    trn->add_option("--manifest", manifest)->required();
    trn->add_option("--cache", cache)->required();
    trn->add_option("--classifier", classifier, "knn, linear_svm, random_forest, adaboost or grad_boost");
    trn->add_option("--feature-set", feature_set, "hybrid or deep")->check(CLI::IsMember({"hybrid", "deep"}));
    trn->add_option("--out", out, "Model file (FFM1)")->required();
    add_common(trn, common, false);

    auto* evl = app.add_subcommand("evaluate", "Score a trained model on the validation split");
    evl->add_option("--manifest", manifest)->required();
    evl->add_option("--cache", cache)->required();
    evl->add_option("--model", model)->required();
    evl->add_option("--feature-set", feature_set, "hybrid or deep")->check(CLI::IsMember({"hybrid", "deep"}));
    evl->add_option("--out", out, "Report JSON")->required();
    add_common(evl, common, false);

    auto* grd = app.add_subcommand("grid", "Backbone x classifier sweep with CSV, heatmap and per-cell reports");
    grd->add_option("--manifest", manifest)->required();
    grd->add_option("--out", out, "Output directory")->required();
    grd->add_option("--cache-dir", cache_dir, "Feature cache directory (default <out>/cache)");
    add_common(grd, common, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*synth)
            return cmd_synth(out, per_class, synth_seed);
        if (*ing)
            return cmd_ingest(root, out);
        if (*seg)
            return cmd_segment(manifest, common, out);
        if (*ext)
            return cmd_extract(manifest, common, out);
        if (*trn)
            return cmd_train(manifest, cache, classifier, feature_set, common, out);
        if (*evl)
            return cmd_evaluate(manifest, cache, model, feature_set, common, out);
        if (*grd)
            return cmd_grid(manifest, common, out, cache_dir);
    } catch (const Error& e) {
        std::cerr << "error: " << errc_name(e.code()) << ": " << e.what() << "\n";
        if (e.code() == Errc::InvalidConfig && *grd)
            std::cerr << "valid classifiers: knn, linear_svm, random_forest, adaboost, grad_boost\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
