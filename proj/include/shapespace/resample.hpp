#pragma once

#include "shapespace/geometry.hpp"
#include "shapespace/wavelet.hpp"

#include <Eigen/Geometry>

#include <array>
#include <string>
#include <vector>

namespace shapespace {

/// Labels of the landmarks anchoring the base grid corners: row 0 / last row, column 0 / last column.
inline const std::array<std::string, 4> kCornerLabels = {"corner_tl", "corner_tr", "corner_bl", "corner_br"};

/// Raised when a mesh is not a topological disc.
class TopologyError : public Error {
public:
    using Error::Error;
};

struct ClosestPoint {
    Point3 point;
    double distance = 0.0;
    int triangle = -1;
};

/// Bounding volume hierarchy over the triangles of a mesh for exact closest-point queries.
class TriangleBvh {
public:
    explicit TriangleBvh(const TriangleMesh& mesh);

    ClosestPoint closest(const Point3& p) const;

private:
    struct Node {
        Eigen::AlignedBox3d box;
        int first = 0; // leaf: range into order_; inner: left child index
        int count = 0; // 0 for inner nodes
        int right = -1;
    };
    int build(int first, int count);
    void query(int node, const Point3& p, ClosestPoint& best, double& bestSq) const;

    const TriangleMesh* mesh_;
    std::vector<int> order_;
    std::vector<Node> nodes_;
    std::vector<Eigen::AlignedBox3d> boxes_;
    std::vector<Point3> centers_;
};

/// Closest point to p on triangle (a, b, c).
Point3 closestPointOnTriangle(const Point3& p, const Point3& a, const Point3& b, const Point3& c);

/// Throws TopologyError unless the faces form a connected manifold disc: every edge shared by at most two
/// faces, Euler characteristic 1 and a single boundary loop.
void checkDiscTopology(const TriangleMesh& mesh);

/// Resamples a disc-topology triangle mesh onto the finest grid of the hierarchy.
///
/// The base grid is the bilinear patch spanned by the four corner landmarks, projected onto the surface.
/// Each further level inserts edge and face midpoints of the previous level and projects them onto the
/// surface. A mesh that already has the grid connectivity of the finest level is returned unchanged.
QuadMesh resampleToGrid(const TriangleMesh& mesh, const LandmarkSet& landmarks, const SubdivisionHierarchy& hierarchy);

} // namespace shapespace
