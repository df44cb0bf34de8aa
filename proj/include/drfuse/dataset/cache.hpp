#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "drfuse/dataset/manifest.hpp"
#include "drfuse/deep/provider.hpp"
#include "drfuse/pipeline.hpp"
#include "drfuse/util/binary_io.hpp"
#include "drfuse/util/hash.hpp"
#include "drfuse/util/parallel.hpp"

namespace drfuse {

struct CacheRecord {
    std::uint64_t id = 0;
    int label = 0;
    bool ok = false;
    /// Raw fused vector; empty when extraction failed.
    std::vector<double> values;
    std::string error;

    bool operator==(const CacheRecord&) const = default;
};

struct FeatureCache {
    std::string backbone;
    std::uint64_t fingerprint = 0;
    std::size_t dim = 0;
    /// Leading handcrafted part of every vector; the deep block follows.
    std::size_t handcrafted_dim = 0;
    std::vector<CacheRecord> records;

    std::size_t failed() const
    {
        std::size_t n = 0;
        for (const auto& r : records)
            n += r.ok ? 0 : 1;
        return n;
    }

    bool operator==(const FeatureCache&) const = default;
};

/// Hash over extractor parameters, provider identity and the manifest rows.
inline std::uint64_t cache_fingerprint(const DatasetManifest& m, const FeatureProvider& provider,
                                       const ExtractionParams& params)
{
    std::string key = "ffc1|" + params.describe() + "|" + provider.fingerprint() + "|";
    for (const auto& r : m.records)
        key += std::to_string(r.id) + ":" + r.path + ":" + std::to_string(r.class_index) + ";";
    return fnv1a(key);
}

inline constexpr std::string_view kCacheMagic = "FFC1";
inline constexpr std::uint32_t kCacheVersion = 1;

// "FFC1", u32 version, u64 fingerprint, str backbone, u64 dim,
// u64 handcrafted_dim, u64 count, then per record in id order:
// u64 id, i32 label, u8 ok, str error, dim x f64 (ok records only).
inline std::string serialize(const FeatureCache& c)
{
    ByteWriter w;
    w.bytes(kCacheMagic);
    w.u32(kCacheVersion);
    w.u64(c.fingerprint);
    w.str(c.backbone);
    w.u64(c.dim);
    w.u64(c.handcrafted_dim);
    w.u64(c.records.size());
    for (const auto& r : c.records) {
        w.u64(r.id);
        w.i32(r.label);
        w.u8(r.ok ? 1 : 0);
        w.str(r.error);
        if (r.ok)
            for (double v : r.values)
                w.f64(v);
    }
    return w.take();
}

inline FeatureCache deserialize_cache(std::string_view bytes)
{
    ByteReader r(bytes, Errc::CacheCorrupt);
    if (r.bytes(4) != kCacheMagic)
        fail(Errc::CacheCorrupt, "not an FFC1 feature cache");
    if (r.u32() != kCacheVersion)
        fail(Errc::CacheCorrupt, "unsupported cache version");
    FeatureCache c;
    c.fingerprint = r.u64();
    c.backbone = r.str();
    c.dim = r.u64();
    c.handcrafted_dim = r.u64();
    if (c.handcrafted_dim > c.dim)
        fail(Errc::CacheCorrupt, "handcrafted_dim exceeds dim");
    const auto count = r.u64();
    for (std::uint64_t k = 0; k < count; ++k) {
        CacheRecord rec;
        rec.id = r.u64();
        rec.label = r.i32();
        rec.ok = r.u8() != 0;
        rec.error = r.str();
        if (rec.id != k || rec.label < 0 || rec.label >= kNumClasses)
            fail(Errc::CacheCorrupt, "record " + std::to_string(k) + " out of order or mislabelled");
        if (rec.ok) {
            rec.values.resize(c.dim);
            for (auto& v : rec.values)
                v = r.f64();
        }
        c.records.push_back(std::move(rec));
    }
    if (!r.at_end())
        fail(Errc::CacheCorrupt, "trailing bytes in feature cache");
    return c;
}

inline void save_cache(const FeatureCache& c, const std::filesystem::path& path)
{
    write_file_atomic(path, serialize(c));
}

/// Throws CacheCorrupt when the stored fingerprint differs from `expected`.
inline FeatureCache load_cache(const std::filesystem::path& path, std::uint64_t expected)
{
    auto c = deserialize_cache(read_file(path));
    if (c.fingerprint != expected)
        fail(Errc::CacheCorrupt, "feature cache " + path.string() + " was built with different parameters");
    return c;
}

/// Runs the per-record pipeline over the manifest. A record that fails is
/// kept with ok=false and its error message.
inline FeatureCache extract_features(const DatasetManifest& m, const FeatureProvider& provider,
                                     const ExtractionParams& params, unsigned jobs = 1)
{
    params.segmentation.validate();
    params.handcrafted.glcm.validate();
    FeatureCache c;
    c.backbone = provider.name();
    c.fingerprint = cache_fingerprint(m, provider, params);
    c.handcrafted_dim = params.handcrafted.total_dim();
    c.dim = c.handcrafted_dim + provider.output_dim();
    c.records.resize(m.records.size());
    parallel_for(m.records.size(), jobs, [&](std::size_t i) {
        const auto& rec = m.records[i];
        auto& out = c.records[i];
        out.id = rec.id;
        out.label = rec.class_index;
        try {
            auto f = extract_record(load_image(m.absolute(rec)), provider, params);
            if (f.fused.values.size() != c.dim)
                fail(Errc::DimensionMismatch, "fused vector has unexpected length");
            out.values = std::move(f.fused.values);
            out.ok = true;
        } catch (const Error& e) {
            out.error = std::string(errc_name(e.code())) + ": " + e.what();
        }
    });
    return c;
}

struct CacheResult {
    FeatureCache cache;
    /// True when an existing file with a matching fingerprint was used.
    bool reused = false;
    /// True when an existing file was discarded because its fingerprint differed.
    bool invalidated = false;
};

inline CacheResult extract_and_cache(const DatasetManifest& m, const FeatureProvider& provider,
                                     const ExtractionParams& params, const std::filesystem::path& path,
                                     unsigned jobs = 1)
{
    CacheResult res;
    const auto fp = cache_fingerprint(m, provider, params);
    if (std::filesystem::exists(path)) {
        try {
            res.cache = load_cache(path, fp);
            if (res.cache.records.size() == m.records.size()
                && res.cache.dim == params.handcrafted.total_dim() + provider.output_dim()) {
                res.reused = true;
                return res;
            }
        } catch (const Error& e) {
            if (e.code() != Errc::CacheCorrupt)
                throw;
        }
        res.invalidated = true;
    }
    res.cache = extract_features(m, provider, params, jobs);
    save_cache(res.cache, path);
    return res;
}

enum class FeatureSet { Hybrid, DeepOnly };

/// Samples for the ok records among `positions`, optionally dropping the
/// handcrafted prefix.
inline std::vector<FusedSample> cache_samples(const FeatureCache& c, std::span<const std::size_t> positions,
                                              FeatureSet set = FeatureSet::Hybrid)
{
    std::vector<FusedSample> out;
    const std::size_t skip = set == FeatureSet::DeepOnly ? c.handcrafted_dim : 0;
    for (auto p : positions) {
        const auto& r = c.records.at(p);
        if (!r.ok)
            continue;
        out.push_back({std::vector<double>(r.values.begin() + static_cast<std::ptrdiff_t>(skip), r.values.end()),
                       r.label, r.id});
    }
    return out;
}

} // namespace drfuse
