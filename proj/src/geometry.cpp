#include "shapespace/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace shapespace {

namespace {

template <std::size_t K>
void checkFaces(const VertexList& vertices, const std::vector<std::array<int, K>>& faces, std::size_t colorCount)
{
    const auto n = static_cast<int>(vertices.size());
    if (n < 3)
        throw DegenerateError("mesh needs at least 3 vertices, got " + std::to_string(n));
    for (const auto& v : vertices)
        if (!v.allFinite())
            throw DegenerateError("mesh has a non-finite vertex");
    for (std::size_t f = 0; f < faces.size(); ++f) {
        const auto& face = faces[f];
        for (std::size_t a = 0; a < K; ++a) {
            if (face[a] < 0 || face[a] >= n)
                throw DimensionError("face " + std::to_string(f) + " references vertex " + std::to_string(face[a]) +
                                     " outside [0, " + std::to_string(n) + ")");
            for (std::size_t b = a + 1; b < K; ++b)
                if (face[a] == face[b])
                    throw DegenerateError("face " + std::to_string(f) + " repeats vertex " + std::to_string(face[a]));
        }
    }
    if (colorCount != 0 && colorCount != vertices.size())
        throw DimensionError("color count does not match vertex count");
}

} // namespace

void TriangleMesh::validate() const { checkFaces(vertices, faces, colors.size()); }

void QuadMesh::validate() const
{
    checkFaces(vertices, faces, colors.size());
    if (gridDims) {
        if (gridDims->count() != static_cast<int>(vertices.size()))
            throw DimensionError("grid dims " + std::to_string(gridDims->rows) + "x" + std::to_string(gridDims->cols) +
                                 " do not match " + std::to_string(vertices.size()) + " vertices");
        if (faces != gridQuads(*gridDims))
            throw DimensionError("grid-structured quad mesh does not use row-major grid connectivity");
    }
}

void LandmarkSet::set(const std::string& label, std::optional<Point3> position)
{
    for (auto& e : entries_) {
        if (e.label == label) {
            e.position = position;
            return;
        }
    }
    entries_.push_back({label, position});
}

std::optional<Point3> LandmarkSet::find(const std::string& label) const
{
    for (const auto& e : entries_)
        if (e.label == label)
            return e.position;
    return std::nullopt;
}

bool LandmarkSet::contains(const std::string& label) const
{
    return std::any_of(entries_.begin(), entries_.end(), [&](const Landmark& e) { return e.label == label; });
}

std::size_t LandmarkSet::presentCount() const
{
    return static_cast<std::size_t>(
        std::count_if(entries_.begin(), entries_.end(), [](const Landmark& e) { return e.position.has_value(); }));
}

LandmarkSet LandmarkSet::subset(const std::vector<std::string>& labels) const
{
    LandmarkSet out;
    for (const auto& label : labels)
        for (const auto& e : entries_)
            if (e.label == label)
                out.set(e.label, e.position);
    return out;
}

std::vector<Quad> gridQuads(GridDims dims)
{
    std::vector<Quad> quads;
    if (dims.rows < 2 || dims.cols < 2)
        return quads;
    quads.reserve(static_cast<std::size_t>((dims.rows - 1) * (dims.cols - 1)));
    for (int r = 0; r + 1 < dims.rows; ++r) {
        for (int c = 0; c + 1 < dims.cols; ++c) {
            const int v = r * dims.cols + c;
            quads.push_back({v, v + 1, v + dims.cols + 1, v + dims.cols});
        }
    }
    return quads;
}

std::vector<Triangle> triangulate(const std::vector<Quad>& quads)
{
    std::vector<Triangle> tris;
    tris.reserve(quads.size() * 2);
    for (const auto& q : quads) {
        tris.push_back({q[0], q[1], q[2]});
        tris.push_back({q[0], q[2], q[3]});
    }
    return tris;
}

std::vector<Triangle> gridTriangles(GridDims dims) { return triangulate(gridQuads(dims)); }

QuadMesh makeGridMesh(VertexList vertices, GridDims dims)
{
    QuadMesh mesh;
    mesh.vertices = std::move(vertices);
    mesh.faces = gridQuads(dims);
    mesh.gridDims = dims;
    mesh.validate();
    return mesh;
}

BoundingBox boundingBox(const VertexList& points)
{
    if (points.empty())
        throw DegenerateError("bounding box of an empty point set");
    BoundingBox box{points.front(), points.front()};
    for (const auto& p : points) {
        box.min = box.min.cwiseMin(p);
        box.max = box.max.cwiseMax(p);
    }
    return box;
}

Point3 centroid(const VertexList& points)
{
    if (points.empty())
        throw DegenerateError("centroid of an empty point set");
    Point3 sum = Point3::Zero();
    for (const auto& p : points)
        sum += p;
    return sum / static_cast<double>(points.size());
}

Eigen::VectorXd flatten(const VertexList& vertices)
{
    Eigen::VectorXd flat(3 * static_cast<Eigen::Index>(vertices.size()));
    for (std::size_t i = 0; i < vertices.size(); ++i)
        flat.segment<3>(3 * static_cast<Eigen::Index>(i)) = vertices[i];
    return flat;
}

VertexList unflatten(const Eigen::VectorXd& flat)
{
    if (flat.size() % 3 != 0)
        throw DimensionError("flattened shape length " + std::to_string(flat.size()) + " is not a multiple of 3");
    VertexList out(static_cast<std::size_t>(flat.size() / 3));
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = flat.segment<3>(3 * static_cast<Eigen::Index>(i));
    return out;
}

double rmsDistance(const VertexList& a, const VertexList& b)
{
    if (a.size() != b.size() || a.empty())
        throw DimensionError("rmsDistance needs equal, nonzero vertex counts");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        sum += (a[i] - b[i]).squaredNorm();
    return std::sqrt(sum / static_cast<double>(a.size()));
}

double meanDistance(const VertexList& a, const VertexList& b)
{
    if (a.size() != b.size() || a.empty())
        throw DimensionError("meanDistance needs equal, nonzero vertex counts");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        sum += (a[i] - b[i]).norm();
    return sum / static_cast<double>(a.size());
}

} // namespace shapespace
