#pragma once

#include "shapespace/geometry.hpp"

#include <span>
#include <vector>

namespace shapespace {

/// x -> scale * rotation * x + translation. Rotation is proper (det +1), scale positive.
struct SimilarityTransform {
    Matrix3 rotation = Matrix3::Identity();
    Point3 translation = Point3::Zero();
    double scale = 1.0;

    static SimilarityTransform identity() { return {}; }

    Point3 apply(const Point3& p) const { return scale * (rotation * p) + translation; }
    VertexList apply(const VertexList& points) const;
    SimilarityTransform inverse() const;
    /// (*this)(other(x))
    SimilarityTransform compose(const SimilarityTransform& other) const;
    Eigen::Matrix4d matrix() const;
};

struct AlignmentResult {
    SimilarityTransform transform;
    double residualSumSq = 0.0;
    double residualRms = 0.0;
};

/// Closed-form least-squares similarity mapping `source` onto `target` (index-wise correspondence).
/// Uses the cross-covariance SVD with a determinant correction, so the rotation is always proper.
/// Throws DimensionError for k < 3 / unequal lengths and DegenerateError for collinear or coincident sources.
AlignmentResult alignCorresponding(std::span<const Point3> source, std::span<const Point3> target);

struct GpaOptions {
    double tolerance = 1e-8; // RMS change of the mean between iterations
    int maxIterations = 100;
};

struct GpaResult {
    std::vector<VertexList> aligned;
    VertexList mean;
    int iterations = 0;
    bool converged = false;
    std::vector<SimilarityTransform> transforms; // input shape i -> aligned shape i
    double inputScale = 0.0;                     // mean centroid-RMS size of the inputs, for restoring units
};

/// Generalized Procrustes analysis. The mean is centered at the origin with unit centroid-RMS size;
/// its orientation is that of the optimal rotation onto the average of the centered input shapes, which
/// makes the result independent of input order.
GpaResult gpa(const std::vector<VertexList>& shapes, GpaOptions options = {});

/// Centroid-RMS size: sqrt(mean ||x_i - centroid||^2).
double centroidSize(const VertexList& shape);

} // namespace shapespace
