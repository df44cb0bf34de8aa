#pragma once

#include <array>
#include <filesystem>
#include <string>

#include "drfuse/deep/provider.hpp"

namespace drfuse {

enum class TensorLayout { Nchw, Nhwc };

/// Preprocessing contract stored next to an exported backbone as YAML:
/// name, output_dim, layout (nchw|nhwc), scale, mean[3], std[3].
/// Pixels are fed as (v * scale - mean[c]) / std[c].
struct ModelSidecar {
    std::string name;
    std::size_t output_dim = 0;
    TensorLayout layout = TensorLayout::Nchw;
    double scale = 1.0 / 255.0;
    std::array<double, 3> mean{0.0, 0.0, 0.0};
    std::array<double, 3> std{1.0, 1.0, 1.0};

    static ModelSidecar load(const std::filesystem::path& path);
};

/// `model.onnx` -> `model.yaml`.
inline std::filesystem::path sidecar_path_for(const std::filesystem::path& model)
{
    auto p = model;
    p.replace_extension(".yaml");
    return p;
}

/// Loads an ONNX model with one image input (1x3x224x224 or 1x224x224x3) and
/// one output. A dry run at load time checks the output length against the
/// sidecar's output_dim and, when non-zero, `expected_dim`.
ProviderPtr model_file_provider(const std::filesystem::path& path, std::size_t expected_dim = 0);

} // namespace drfuse
