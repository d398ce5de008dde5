#pragma once

#include "shapespace/models.hpp"

#include <filesystem>

namespace shapespace {

/// Model file layout (all integers and doubles little-endian):
///
///   char[8]  magic "SHPSPACE"
///   u32      format version (kModelFormatVersion)
///   u32      kind (1 = global PCA, 2 = local wavelet)
///   ...      kind-specific payload
///   u32      CRC-32 of every preceding byte
///
/// Global payload: u64 n, u64 d, u64 spectrumLength, f64[3n] mean, f64[3n*d] basis (column-major),
/// f64[d] eigenvalues, f64[spectrumLength] spectrum, u64 faceCount, i32[3*faceCount] faces,
/// u8 hasGrid, [i32 rows, i32 cols], landmarks.
/// Local payload: i32 baseRows, i32 baseCols, i32 levels, u64 n, f64[3n] coefficient means,
/// f64[9n] rotations (column-major per coefficient), f64[3n] stddevs, landmarks.
/// Landmarks: u64 count, then per entry u32 labelLength, label bytes, i32 vertex.
inline constexpr std::uint32_t kModelFormatVersion = 1;

class ModelFormatError : public Error {
public:
    using Error::Error;
};

void saveModel(const ShapeModel& model, const std::filesystem::path& path);
ShapeModel loadModel(const std::filesystem::path& path);

/// Rejects a file whose kind differs from `expected`.
GlobalPcaModel loadGlobalModel(const std::filesystem::path& path);
LocalWaveletModel loadLocalModel(const std::filesystem::path& path);

} // namespace shapespace
