#pragma once

#include "shapespace/geometry.hpp"
#include "shapespace/models.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace shapespace {

/// Gaussian bump displacing the patch along its normals. Centers are in patch coordinates
/// (u down the rows, v across the columns, both in [0, 1]); the radius is in mm of arc length.
struct BumpFactor {
    double centerU = 0.5;
    double centerV = 0.5;
    double radius = 15.0;
    double minAmplitude = -5.0;
    double maxAmplitude = 5.0;
};

struct SynthSpec {
    GridDims gridDims{17, 25};
    double height = 120.0;          // mm, extent along the rows
    double width = 160.0;           // mm of arc, extent along the columns
    double cylinderRadius = 100.0;  // curvature of the base patch
    std::vector<BumpFactor> factors;
    double noiseStddev = 0.0;       // mm, isotropic per vertex
    double poseRotationDegrees = 0.0;  // max random rotation angle per shape
    double poseTranslation = 0.0;      // max random offset per axis, mm
    int classes = 2;
    double classShift = 0.0;        // mm added to every amplitude per class index
    std::uint64_t seed = 1;
    int count = 20;                 // T

    /// Throws Error naming the offending field.
    void validate() const;

    /// Five bumps spread over the patch; the default corpus for tests and the CLI.
    static SynthSpec reference();
};

/// Landmark labels used to compute the initial alignment and the held-out labels used for evaluation.
const std::vector<std::string>& initLandmarkLabels();
const std::vector<std::string>& evalLandmarkLabels();

/// Grid vertex of every landmark label for the given dims.
LandmarkVertexMap synthLandmarkVertices(GridDims dims);

struct SynthCorpus {
    TrainingSet data;                    // grid-structured, not GPA-aligned
    Eigen::MatrixXd latents;             // T x factors, exact amplitudes
    std::vector<LandmarkSet> landmarks;  // per shape, all labels
    LandmarkVertexMap landmarkVertices;
};

/// Undeformed cylindrical patch in row-major grid order.
VertexList basePatch(const SynthSpec& spec);

/// Pure function of the spec.
SynthCorpus generateCorpus(const SynthSpec& spec);

/// Landmark positions read off a grid shape.
LandmarkSet landmarksOf(const VertexList& shape, const LandmarkVertexMap& vertices);

struct CorruptedCloud {
    PointCloud cloud;
    std::vector<char> outlier; // one flag per point, 1 for inserted outliers
};

struct OutlierBlob {
    int count = 200;
    double radius = 10.0;
    Point3 offset = Point3::Zero(); // blob center relative to the occluded region center
    std::uint64_t seed = 7;
};

/// Removes points strictly closer than `radius` to `center`, optionally inserting a blob of outliers.
/// Throws DegenerateError when nothing remains.
CorruptedCloud occlude(const PointCloud& cloud, const Point3& center, double radius,
                       const std::optional<OutlierBlob>& blob = std::nullopt);

/// Isotropic Gaussian noise on every point, then round(outlierFraction * m) uniform outliers appended from the
/// bounding box inflated by 10% of its diagonal.
CorruptedCloud addNoise(const PointCloud& cloud, double stddev, double outlierFraction, std::uint64_t seed);

/// Dense cloud by bilinear upsampling of each grid cell: ((rows-1)f+1) x ((cols-1)f+1) points that include
/// the original vertices.
PointCloud sampleSurface(const VertexList& grid, GridDims dims, int factor = 3);

} // namespace shapespace
