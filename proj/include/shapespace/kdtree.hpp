#pragma once

#include "shapespace/geometry.hpp"

#include <cstdint>
#include <vector>

namespace shapespace {

struct Neighbor {
    int index = -1;
    double distance = 0.0;
};

/// Exact nearest-neighbor index over a point cloud (static k-d tree).
///
/// Queries return the point minimizing the Euclidean distance; among equidistant points the one with
/// the smallest index in the original cloud wins. The index is immutable after construction, so
/// concurrent queries are safe.
class NearestNeighborIndex {
public:
    explicit NearestNeighborIndex(const PointCloud& cloud);
    explicit NearestNeighborIndex(VertexList points);

    Neighbor nearest(const Point3& query) const;

    std::size_t size() const { return points_.size(); }
    const VertexList& points() const { return points_; }

private:
    struct Node {
        // Leaf when axis < 0: points [begin, end) of order_.
        int axis = -1;
        double split = 0.0;
        int left = -1;
        int right = -1;
        int begin = 0;
        int end = 0;
    };

    int build(int begin, int end, int depth);
    void search(int node, const Point3& query, double& bestSq, int& bestIndex) const;

    VertexList points_;
    std::vector<int> order_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

} // namespace shapespace
