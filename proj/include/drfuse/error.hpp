#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace drfuse {

enum class Errc {
    FileNotFound,
    DecodeError,
    UnsupportedChannelCount,
    EmptyImage,
    InvalidKernel,
    InvalidSigma,
    InvalidBlockSize,
    InvalidRadius,
    EmptyRoi,
    DegenerateRoi,
    InvalidOrder,
    InvalidK,
    NotColorImage,
    InvalidDim,
    ModelLoadError,
    DimensionMismatch,
    InputShapeUnsupported,
    EmptyBlockList,
    BlockOrderViolation,
    InsufficientSamples,
    SingleClassTrainingSet,
    InvalidConfig,
    ClassTooSmall,
    LengthMismatch,
    LabelOutOfRange,
    EmptyMatrix,
    MissingClassDirectory,
    EmptyDataset,
    CacheCorrupt,
    IoError,
    NonFiniteFeature,
};

constexpr std::string_view errc_name(Errc e) noexcept
{
    switch (e) {
    case Errc::FileNotFound: return "FileNotFound";
    case Errc::DecodeError: return "DecodeError";
    case Errc::UnsupportedChannelCount: return "UnsupportedChannelCount";
    case Errc::EmptyImage: return "EmptyImage";
    case Errc::InvalidKernel: return "InvalidKernel";
    case Errc::InvalidSigma: return "InvalidSigma";
    case Errc::InvalidBlockSize: return "InvalidBlockSize";
    case Errc::InvalidRadius: return "InvalidRadius";
    case Errc::EmptyRoi: return "EmptyRoi";
    case Errc::DegenerateRoi: return "DegenerateRoi";
    case Errc::InvalidOrder: return "InvalidOrder";
    case Errc::InvalidK: return "InvalidK";
    case Errc::NotColorImage: return "NotColorImage";
    case Errc::InvalidDim: return "InvalidDim";
    case Errc::ModelLoadError: return "ModelLoadError";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::InputShapeUnsupported: return "InputShapeUnsupported";
    case Errc::EmptyBlockList: return "EmptyBlockList";
    case Errc::BlockOrderViolation: return "BlockOrderViolation";
    case Errc::InsufficientSamples: return "InsufficientSamples";
    case Errc::SingleClassTrainingSet: return "SingleClassTrainingSet";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::ClassTooSmall: return "ClassTooSmall";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::LabelOutOfRange: return "LabelOutOfRange";
    case Errc::EmptyMatrix: return "EmptyMatrix";
    case Errc::MissingClassDirectory: return "MissingClassDirectory";
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::CacheCorrupt: return "CacheCorrupt";
    case Errc::IoError: return "IoError";
    case Errc::NonFiniteFeature: return "NonFiniteFeature";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the Errc codes.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code)
    {
    }

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what)
{
    throw Error(code, what);
}

} // namespace drfuse
