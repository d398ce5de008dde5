#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace shapespace {

/// All geometry is expressed in millimeters. Nothing in the library converts units.
using Point3 = Eigen::Vector3d;
using Matrix3 = Eigen::Matrix3d;
using VertexList = std::vector<Point3>;
using Triangle = std::array<int, 3>;
using Quad = std::array<int, 4>;
using Rgb = std::array<std::uint8_t, 3>;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when inputs have incompatible sizes (vertex counts, parameter dimensions).
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Raised for geometrically degenerate configurations (collinear landmarks, empty clouds, ...).
class DegenerateError : public Error {
public:
    using Error::Error;
};

struct GridDims {
    int rows = 0;
    int cols = 0;

    int count() const { return rows * cols; }
    friend bool operator==(const GridDims&, const GridDims&) = default;
};

struct TriangleMesh {
    VertexList vertices;
    std::vector<Triangle> faces;
    std::vector<Rgb> colors; // empty or one per vertex

    /// Throws DimensionError / DegenerateError if an invariant is broken.
    void validate() const;
};

struct QuadMesh {
    VertexList vertices;
    std::vector<Quad> faces;
    std::optional<GridDims> gridDims;
    std::vector<Rgb> colors;

    void validate() const;
};

struct PointCloud {
    VertexList points;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
};

struct Landmark {
    std::string label;
    std::optional<Point3> position; // absent landmarks carry no position
};

class LandmarkSet {
public:
    LandmarkSet() = default;

    /// Adds or replaces a landmark. Labels are unique.
    void set(const std::string& label, std::optional<Point3> position);
    std::optional<Point3> find(const std::string& label) const;
    bool contains(const std::string& label) const;
    const std::vector<Landmark>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    std::size_t presentCount() const;

    /// Restricts to the given labels (in the order given), skipping unknown ones.
    LandmarkSet subset(const std::vector<std::string>& labels) const;

private:
    std::vector<Landmark> entries_;
};

/// Row-major quad connectivity for a rows x cols grid.
std::vector<Quad> gridQuads(GridDims dims);
/// Each grid quad split along its (r,c)-(r+1,c+1) diagonal.
std::vector<Triangle> gridTriangles(GridDims dims);
std::vector<Triangle> triangulate(const std::vector<Quad>& quads);

QuadMesh makeGridMesh(VertexList vertices, GridDims dims);

struct BoundingBox {
    Point3 min;
    Point3 max;

    double diagonal() const { return (max - min).norm(); }
    Point3 center() const { return 0.5 * (min + max); }
};

BoundingBox boundingBox(const VertexList& points);
Point3 centroid(const VertexList& points);

/// Flattens to (x0,y0,z0,x1,...).
Eigen::VectorXd flatten(const VertexList& vertices);
VertexList unflatten(const Eigen::VectorXd& flat);

double rmsDistance(const VertexList& a, const VertexList& b);
double meanDistance(const VertexList& a, const VertexList& b);

} // namespace shapespace
