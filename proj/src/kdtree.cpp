#include "shapespace/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace shapespace {

namespace {
constexpr int kLeafSize = 8;
}

NearestNeighborIndex::NearestNeighborIndex(const PointCloud& cloud) : NearestNeighborIndex(cloud.points) {}

NearestNeighborIndex::NearestNeighborIndex(VertexList points) : points_(std::move(points))
{
    if (points_.empty())
        throw DegenerateError("cannot build a nearest-neighbor index over an empty cloud");
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), 0);
    nodes_.reserve(2 * points_.size() / kLeafSize + 1);
    root_ = build(0, static_cast<int>(points_.size()), 0);
}

int NearestNeighborIndex::build(int begin, int end, int depth)
{
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{});
    if (end - begin <= kLeafSize) {
        nodes_[static_cast<std::size_t>(id)].begin = begin;
        nodes_[static_cast<std::size_t>(id)].end = end;
        return id;
    }

    Point3 lo = points_[static_cast<std::size_t>(order_[static_cast<std::size_t>(begin)])];
    Point3 hi = lo;
    for (int i = begin; i < end; ++i) {
        const auto& p = points_[static_cast<std::size_t>(order_[static_cast<std::size_t>(i)])];
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);

    const int mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end, [&](int a, int b) {
        return points_[static_cast<std::size_t>(a)][axis] < points_[static_cast<std::size_t>(b)][axis];
    });
    const double split = points_[static_cast<std::size_t>(order_[static_cast<std::size_t>(mid)])][axis];

    const int left = build(begin, mid, depth + 1);
    const int right = build(mid, end, depth + 1);
    auto& node = nodes_[static_cast<std::size_t>(id)];
    node.axis = axis;
    node.split = split;
    node.left = left;
    node.right = right;
    return id;
}

void NearestNeighborIndex::search(int nodeId, const Point3& query, double& bestSq, int& bestIndex) const
{
    const auto& node = nodes_[static_cast<std::size_t>(nodeId)];
    if (node.axis < 0) {
        for (int i = node.begin; i < node.end; ++i) {
            const int idx = order_[static_cast<std::size_t>(i)];
            const double d2 = (points_[static_cast<std::size_t>(idx)] - query).squaredNorm();
            if (d2 < bestSq || (d2 == bestSq && idx < bestIndex)) {
                bestSq = d2;
                bestIndex = idx;
            }
        }
        return;
    }
    // Left holds coordinates <= split, right holds coordinates >= split.
    const double diff = query[node.axis] - node.split;
    const int nearChild = diff < 0 ? node.left : node.right;
    const int farChild = diff < 0 ? node.right : node.left;
    search(nearChild, query, bestSq, bestIndex);
    // Equal bound still has to be visited: it may hold a lower-index tie.
    if (diff * diff <= bestSq)
        search(farChild, query, bestSq, bestIndex);
}

Neighbor NearestNeighborIndex::nearest(const Point3& query) const
{
    double bestSq = std::numeric_limits<double>::infinity();
    int bestIndex = std::numeric_limits<int>::max();
    search(root_, query, bestSq, bestIndex);
    return Neighbor{bestIndex, std::sqrt(bestSq)};
}

} // namespace shapespace
