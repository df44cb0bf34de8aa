#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <filesystem>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "drfuse/error.hpp"
#include "drfuse/fusion.hpp"
#include "drfuse/image_io.hpp"
#include "drfuse/util/binary_io.hpp"

namespace drfuse {

inline constexpr std::array<std::string_view, kNumClasses> kClassNames = {"No_DR", "Mild", "Moderate", "Severe",
                                                                           "Proliferative_DR"};

struct ManifestRecord {
    std::uint64_t id = 0;
    /// Relative to DatasetManifest::root, '/'-separated.
    std::string path;
    int class_index = 0;

    std::string_view class_name() const { return kClassNames[static_cast<std::size_t>(class_index)]; }

    bool operator==(const ManifestRecord&) const = default;
};

struct DatasetManifest {
    std::filesystem::path root;
    std::vector<ManifestRecord> records;
    /// Files that were seen but not decodable (ingest only; never persisted).
    std::vector<std::string> skipped;

    std::vector<int> labels() const
    {
        std::vector<int> y;
        y.reserve(records.size());
        for (const auto& r : records)
            y.push_back(r.class_index);
        return y;
    }

    std::filesystem::path absolute(const ManifestRecord& r) const { return root / std::filesystem::path(r.path); }
};

namespace detail {

inline bool has_image_extension(const std::filesystem::path& p)
{
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

} // namespace detail

/// Enumerates <root>/<class>/*.{png,jpg,jpeg}, ordered by class then by the
/// raw bytes of the filename. Undecodable files go to `skipped`.
inline DatasetManifest ingest(const std::filesystem::path& root)
{
    namespace fs = std::filesystem;
    DatasetManifest m;
    m.root = root;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        const fs::path dir = root / std::string(kClassNames[c]);
        if (!fs::is_directory(dir))
            fail(Errc::MissingClassDirectory, "missing class directory " + dir.string());
    }
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        const std::string cls(kClassNames[c]);
        std::vector<std::string> names;
        for (const auto& entry : fs::directory_iterator(root / cls))
            if (entry.is_regular_file() && detail::has_image_extension(entry.path()))
                names.push_back(entry.path().filename().string());
        std::sort(names.begin(), names.end());
        for (const auto& name : names) {
            const std::string rel = cls + "/" + name;
            try {
                (void)load_image(root / cls / name);
            } catch (const Error&) {
                m.skipped.push_back(rel);
                continue;
            }
            m.records.push_back({m.records.size(), rel, static_cast<int>(c)});
        }
    }
    if (m.records.empty())
        fail(Errc::EmptyDataset, "no decodable images under " + root.string());
    return m;
}

// Paths in the CSV are relative to the directory holding the CSV, so a
// manifest written next to the data tree stays valid when the tree moves.
inline std::string manifest_csv(const DatasetManifest& m, const std::filesystem::path& csv_dir)
{
    std::string out = "id,path,class_index,class_name\n";
    for (const auto& r : m.records) {
        auto rel = m.absolute(r).lexically_normal().lexically_relative(csv_dir.lexically_normal());
        if (rel.empty())
            rel = m.absolute(r);
        out += std::to_string(r.id) + "," + rel.generic_string() + "," + std::to_string(r.class_index) + ","
               + std::string(r.class_name()) + "\n";
    }
    return out;
}

inline void save_manifest(const DatasetManifest& m, const std::filesystem::path& csv_path)
{
    const auto abs_dir = std::filesystem::absolute(csv_path).parent_path();
    DatasetManifest copy = m;
    copy.root = std::filesystem::absolute(m.root);
    write_file_atomic(csv_path, manifest_csv(copy, abs_dir));
}

inline DatasetManifest parse_manifest(std::string_view text, const std::filesystem::path& root)
{
    DatasetManifest m;
    m.root = root;
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line) || line != "id,path,class_index,class_name")
        fail(Errc::InvalidConfig, "manifest header must be 'id,path,class_index,class_name'");
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty())
            continue;
        // Paths may contain commas; id is the first field, class fields the last two.
        const auto c1 = line.find(',');
        const auto c3 = line.rfind(',');
        const auto c2 = c3 == std::string::npos || c3 == 0 ? std::string::npos : line.rfind(',', c3 - 1);
        if (c1 == std::string::npos || c2 == std::string::npos || c2 <= c1)
            fail(Errc::InvalidConfig, "malformed manifest line " + std::to_string(lineno));
        ManifestRecord r;
        try {
            r.id = std::stoull(line.substr(0, c1));
            r.class_index = std::stoi(line.substr(c2 + 1, c3 - c2 - 1));
        } catch (const std::exception&) {
            fail(Errc::InvalidConfig, "malformed manifest line " + std::to_string(lineno));
        }
        r.path = line.substr(c1 + 1, c2 - c1 - 1);
        if (r.class_index < 0 || r.class_index >= kNumClasses || line.substr(c3 + 1) != r.class_name())
            fail(Errc::InvalidConfig, "inconsistent class on manifest line " + std::to_string(lineno));
        if (r.id != m.records.size())
            fail(Errc::InvalidConfig, "manifest ids must be 0..N-1 in order");
        m.records.push_back(std::move(r));
    }
    if (m.records.empty())
        fail(Errc::EmptyDataset, "manifest has no records");
    return m;
}

inline DatasetManifest load_manifest(const std::filesystem::path& csv_path)
{
    return parse_manifest(read_file(csv_path), std::filesystem::absolute(csv_path).parent_path());
}

} // namespace drfuse
