#include <gtest/gtest.h>

#include <chrono>
#include <set>

#include "drfuse/evaluation/grid.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace drfuse;
using namespace drfuse::testing;

namespace {

std::vector<int> labels_with_counts(std::initializer_list<int> counts)
{
    std::vector<int> out;
    int c = 0;
    for (int n : counts) {
        for (int i = 0; i < n; ++i)
            out.push_back(c);
        ++c;
    }
    return out;
}

void expect_valid_split(const Split& s, const std::vector<int>& labels, double frac)
{
    std::set<std::size_t> seen;
    for (auto p : s.train)
        EXPECT_TRUE(seen.insert(p).second);
    for (auto p : s.validation)
        EXPECT_TRUE(seen.insert(p).second);
    EXPECT_EQ(seen.size(), labels.size());
    EXPECT_TRUE(std::is_sorted(s.train.begin(), s.train.end()));
    EXPECT_TRUE(std::is_sorted(s.validation.begin(), s.validation.end()));
    EXPECT_EQ(s.train.size(), static_cast<std::size_t>(std::llround(frac * labels.size())));
    std::array<int, kNumClasses> n{}, tr{};
    for (int l : labels)
        ++n[static_cast<std::size_t>(l)];
    for (auto p : s.train)
        ++tr[static_cast<std::size_t>(labels[p])];
    for (int c = 0; c < kNumClasses; ++c)
        EXPECT_LE(std::abs(tr[c] - frac * n[c]), 1.0) << "class " << c;
}

} // namespace

TEST(Split, PaperSizedManifest)
{
    const auto labels = labels_with_counts({1805, 370, 999, 193, 255});
    ASSERT_EQ(labels.size(), 3622u);
    const auto t0 = std::chrono::steady_clock::now();
    const auto s = stratified_split(labels, 0.8, 42);
    EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 1.0);
    EXPECT_EQ(s.train.size(), 2898u);
    EXPECT_EQ(s.validation.size(), 724u);
    expect_valid_split(s, labels, 0.8);
}

TEST(Split, DeterministicPerSeed)
{
    const auto labels = labels_with_counts({30, 20, 10, 7, 5});
    EXPECT_EQ(stratified_split(labels, 0.7, 5).train, stratified_split(labels, 0.7, 5).train);
    EXPECT_NE(stratified_split(labels, 0.7, 5).train, stratified_split(labels, 0.7, 6).train);
}

TEST(Split, RandomManifestsStratified)
{
    Rng rng(81);
    for (int t = 0; t < 200; ++t) {
        std::vector<int> labels;
        for (int c = 0; c < kNumClasses; ++c)
            for (std::size_t i = 0, n = 2 + rng.index(40); i < n; ++i)
                labels.push_back(c);
        rng.shuffle(std::span<int>(labels));
        const double frac = rng.uniform(0.05, 0.95);
        expect_valid_split(stratified_split(labels, frac, rng.index(1000)), labels, frac);
    }
}

TEST(Split, Errors)
{
    EXPECT_ERRC(stratified_split(labels_with_counts({5, 1, 5}), 0.8, 1), ClassTooSmall);
    EXPECT_ERRC(stratified_split(labels_with_counts({5, 5}), 1.0, 1), InvalidConfig);
    EXPECT_ERRC(stratified_split(labels_with_counts({5, 5}), 0.0, 1), InvalidConfig);
    EXPECT_ERRC(stratified_split(std::vector<int>{0, 0, 7, 7}, 0.5, 1), LabelOutOfRange);
}

TEST(Confusion, DirectTally)
{
    const auto cm = confusion(std::vector<int>{0, 0, 1}, std::vector<int>{0, 1, 1});
    EXPECT_EQ(cm.counts[0][0], 1u);
    EXPECT_EQ(cm.counts[0][1], 1u);
    EXPECT_EQ(cm.counts[1][1], 1u);
    EXPECT_EQ(cm.total(), 3u);
}

TEST(Confusion, Errors)
{
    EXPECT_ERRC(confusion(std::vector<int>{0, 1}, std::vector<int>{0}), LengthMismatch);
    EXPECT_ERRC(confusion(std::vector<int>{0, 5}, std::vector<int>{0, 1}), LabelOutOfRange);
    EXPECT_ERRC(confusion(std::vector<int>{0}, std::vector<int>{-1}), LabelOutOfRange);
    EXPECT_ERRC(metrics(ConfusionMatrix{}), EmptyMatrix);
}

TEST(Metrics, Diagonal)
{
    ConfusionMatrix cm;
    for (int c = 0; c < kNumClasses; ++c)
        cm.counts[c][c] = 3 + c;
    const auto r = metrics(cm);
    EXPECT_EQ(r.accuracy, 1.0);
    EXPECT_EQ(r.kappa, 1.0);
    EXPECT_EQ(r.recall_macro, 1.0);
    EXPECT_EQ(r.precision_macro, 1.0);
    EXPECT_EQ(r.f1_macro, 1.0);
}

TEST(Metrics, TwoClassKappa)
{
    ConfusionMatrix cm;
    cm.counts[0][0] = 50;
    cm.counts[0][1] = 10;
    cm.counts[1][0] = 5;
    cm.counts[1][1] = 35;
    const auto r = metrics(cm);
    EXPECT_DOUBLE_EQ(r.accuracy, 0.85);
    EXPECT_NEAR(r.kappa, 0.34 / 0.49, 1e-12);
    EXPECT_NEAR(r.kappa, 0.6939, 1e-4);
}

TEST(Metrics, ChanceLevel)
{
    ConfusionMatrix uniform;
    for (auto& row : uniform.counts)
        row.fill(7);
    EXPECT_NEAR(metrics(uniform).kappa, 0.0, 1e-12);
    Rng rng(82);
    for (int t = 0; t < 100; ++t) {
        std::array<std::uint64_t, kNumClasses> a{}, b{};
        for (auto& v : a)
            v = rng.index(6);
        for (auto& v : b)
            v = rng.index(6);
        a[rng.index(kNumClasses)] += 1;
        b[rng.index(kNumClasses)] += 1;
        ConfusionMatrix cm;
        for (int i = 0; i < kNumClasses; ++i)
            for (int j = 0; j < kNumClasses; ++j)
                cm.counts[i][j] = a[i] * b[j];
        EXPECT_NEAR(metrics(cm).kappa, 0.0, 1e-12);
    }
}

TEST(Metrics, SingleCellKappaIsZero)
{
    ConfusionMatrix cm;
    cm.counts[2][2] = 9;
    const auto r = metrics(cm);
    EXPECT_EQ(r.accuracy, 1.0);
    EXPECT_EQ(r.kappa, 0.0);
    EXPECT_EQ(r.recall[0], 0.0);
    EXPECT_EQ(r.recall[2], 1.0);
}

TEST(Metrics, MatchesOracleOnRandomMatrices)
{
    Rng rng(83);
    for (int t = 0; t < 1000; ++t) {
        const auto cm = random_confusion(rng);
        const auto r = metrics(cm);
        const auto o = metrics_oracle(cm);
        ASSERT_EQ(metric_mismatches(r, o, 1e-12), 0) << "matrix " << t;
        ASSERT_NEAR(r.recall_micro, r.accuracy, 1e-12);
        ASSERT_NEAR(r.precision_micro, r.accuracy, 1e-12);
        ASSERT_NEAR(r.f1_micro, r.accuracy, 1e-12);
        ASSERT_LE(r.kappa, 1.0);
        ASSERT_GE(r.kappa, -1.0);
    }
}

namespace {

FeatureCache toy_cache(Rng& rng, const std::vector<int>& labels, std::size_t hand, std::size_t deep)
{
    FeatureCache c;
    c.backbone = "toy";
    c.dim = hand + deep;
    c.handcrafted_dim = hand;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        CacheRecord r{i, labels[i], true, {}, {}};
        for (std::size_t j = 0; j < c.dim; ++j)
            r.values.push_back(rng.normal() + (j < hand && j % kNumClasses == static_cast<std::size_t>(labels[i]) ? 4.0 : 0.0));
        c.records.push_back(std::move(r));
    }
    return c;
}

TrainConfig quick()
{
    TrainConfig t;
    t.rf_trees = 20;
    t.ada_stages = 20;
    t.gb_stages = 20;
    return t;
}

} // namespace

TEST(Grid, OneBackboneFiveClassifiers)
{
    Rng rng(84);
    const auto labels = labels_with_counts({12, 12, 12, 12, 12});
    auto cache = toy_cache(rng, labels, 10, 4);
    cache.records[3].ok = false;
    cache.records[3].values.clear();
    cache.records[3].error = "DecodeError: bad";
    const std::vector<GridBackbone> bb = {{backbone_label(cache, FeatureSet::Hybrid), &cache, FeatureSet::Hybrid},
                                          {backbone_label(cache, FeatureSet::DeepOnly), &cache, FeatureSet::DeepOnly}};
    GridConfig cfg;
    cfg.train = quick();
    const auto cells = run_grid(labels, bb, kAllClassifiers, cfg);
    ASSERT_EQ(cells.size(), 10u);
    for (const auto& c : cells) {
        ASSERT_TRUE(c.ok) << c.error;
        EXPECT_NEAR(c.report.recall_micro, c.report.accuracy, 1e-12);
        EXPECT_EQ(c.train_count + c.validation_count + c.skipped_ids.size(), 60u - (c.skipped_ids.empty() ? 1 : 0));
    }
    EXPECT_EQ(cells[0].backbone, "toy+handcrafted");
    EXPECT_EQ(cells[5].backbone, "toy");

    const auto csv = grid_csv(cells);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "backbone,classifier,accuracy,recall,precision,kappa,f1");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 11);
    EXPECT_EQ(run_grid(labels, bb, kAllClassifiers, cfg).size(), 10u);
    EXPECT_EQ(grid_csv(run_grid(labels, bb, kAllClassifiers, cfg)), csv);

    const auto heat = heatmap_csv(cells, 0);
    EXPECT_EQ(heat.substr(0, heat.find('\n')), "backbone,knn,linear_svm,random_forest,adaboost,grad_boost");
    EXPECT_EQ(std::count(heat.begin(), heat.end(), '\n'), 3);
}

TEST(Grid, FailedCellIsRecorded)
{
    Rng rng(85);
    const auto labels = labels_with_counts({4, 4, 4, 4, 4});
    auto cache = toy_cache(rng, labels, 3, 2);
    const std::vector<GridBackbone> bb = {{"toy", &cache, FeatureSet::Hybrid}};
    GridConfig cfg;
    cfg.train = quick();
    cfg.train.knn_k = 500;
    const auto cells = run_grid(labels, bb, kAllClassifiers, cfg);
    EXPECT_FALSE(cells[0].ok);
    EXPECT_NE(cells[0].error.find("InvalidK"), std::string::npos);
    EXPECT_TRUE(cells[1].ok);
    const auto csv = grid_csv(cells);
    EXPECT_NE(csv.find("toy,knn,NA,NA,NA,NA,NA\n"), std::string::npos);
}

TEST(Grid, FilesWritten)
{
    Rng rng(86);
    const auto labels = labels_with_counts({6, 6, 6, 6, 6});
    auto cache = toy_cache(rng, labels, 5, 2);
    const std::vector<GridBackbone> bb = {{"toy/v1", &cache, FeatureSet::Hybrid}};
    GridConfig cfg;
    cfg.train = quick();
    const auto cells = run_grid(labels, bb, std::vector<ClassifierKind>{ClassifierKind::Knn}, cfg);
    const auto dir = scratch_dir("grid_files");
    write_grid(cells, dir, cfg.seed);
    EXPECT_TRUE(std::filesystem::exists(dir / "grid.csv"));
    for (auto m : kGridMetrics)
        EXPECT_TRUE(std::filesystem::exists(dir / ("heatmap_" + std::string(m) + ".csv")));
    std::size_t n = 0;
    for (const auto& e : std::filesystem::directory_iterator(dir / "cells")) {
        ++n;
        const auto j = nlohmann::json::parse(read_file(e.path()));
        EXPECT_EQ(j["classifier"], "knn");
        EXPECT_EQ(j["metrics"]["confusion"].size(), 5u);
    }
    EXPECT_EQ(n, 1u);
}

TEST(Grid, FormatFraction)
{
    EXPECT_EQ(format_fraction(0.5), "0.5000");
    EXPECT_EQ(format_fraction(1.0), "1.0000");
    EXPECT_EQ(format_fraction(0.12345), "0.1235");
}
