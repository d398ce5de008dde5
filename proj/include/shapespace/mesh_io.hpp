#pragma once

#include "shapespace/geometry.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>

namespace shapespace {

using Mesh = std::variant<TriangleMesh, QuadMesh>;

/// Malformed input file. `line` is 1-based for text content, `offset` is a byte offset for binary content.
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t line, std::size_t offset = 0);

    std::size_t line() const { return line_; }
    std::size_t offset() const { return offset_; }

private:
    std::size_t line_;
    std::size_t offset_;
};

enum class PlyEncoding { Ascii, BinaryLittleEndian };

struct MeshWriteOptions {
    PlyEncoding encoding = PlyEncoding::BinaryLittleEndian;
};

/// Everything a PLY/OBJ file can carry that we care about. Vertex order is exactly the stored order.
struct RawGeometry {
    VertexList vertices;
    std::vector<Triangle> triangles;
    std::vector<Quad> quads;
    std::vector<Rgb> colors;
    std::optional<GridDims> gridDims;
};

RawGeometry readGeometry(const std::filesystem::path& path);

/// Loads an OBJ or PLY (ascii / binary_little_endian). All-quad files become a QuadMesh,
/// anything else a TriangleMesh (quads and larger polygons are fan-triangulated).
Mesh loadMesh(const std::filesystem::path& path);

/// Writes OBJ or PLY depending on the extension. When `scalarField` is given (one value per vertex, mm)
/// it is written as per-vertex color through errorColor().
void saveMesh(const Mesh& mesh, const std::filesystem::path& path,
              std::optional<std::span<const double>> scalarField = std::nullopt, MeshWriteOptions options = {});

/// Any vertex-bearing OBJ/PLY; faces are ignored.
PointCloud loadPointCloud(const std::filesystem::path& path);
void savePointCloud(const PointCloud& cloud, const std::filesystem::path& path, MeshWriteOptions options = {});

/// Linear blue (0 mm) to red (>= 10 mm) color map.
Rgb errorColor(double millimeters);
inline constexpr double kErrorColorRangeMm = 10.0;

/// Text format, one landmark per line: `label x y z`, or `label -` when absent. '#' starts a comment.
LandmarkSet loadLandmarks(const std::filesystem::path& path);
void saveLandmarks(const LandmarkSet& landmarks, const std::filesystem::path& path);

const VertexList& vertices(const Mesh& mesh);

} // namespace shapespace
