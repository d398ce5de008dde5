#include "shapespace/resample.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace shapespace {

Point3 closestPointOnTriangle(const Point3& p, const Point3& a, const Point3& b, const Point3& c)
{
    // Voronoi-region walk over vertices, edges and the face interior.
    const Point3 ab = b - a, ac = c - a, ap = p - a;
    const double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0)
        return a;
    const Point3 bp = p - b;
    const double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3)
        return b;
    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0)
        return a + (d1 / (d1 - d3)) * ab;
    const Point3 cp = p - c;
    const double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6)
        return c;
    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0)
        return a + (d2 / (d2 - d6)) * ac;
    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0)
        return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
    const double denom = 1.0 / (va + vb + vc);
    return a + ab * (vb * denom) + ac * (vc * denom);
}

TriangleBvh::TriangleBvh(const TriangleMesh& mesh) : mesh_(&mesh)
{
    if (mesh.faces.empty())
        throw DegenerateError("cannot build a closest-point structure over a mesh without faces");
    const auto count = mesh.faces.size();
    boxes_.reserve(count);
    centers_.reserve(count);
    for (const auto& f : mesh.faces) {
        Eigen::AlignedBox3d box;
        for (int v : f)
            box.extend(mesh.vertices[static_cast<std::size_t>(v)]);
        boxes_.push_back(box);
        centers_.push_back(box.center());
    }
    order_.resize(count);
    std::iota(order_.begin(), order_.end(), 0);
    nodes_.reserve(2 * count);
    build(0, static_cast<int>(count));
}

int TriangleBvh::build(int first, int count)
{
    const int index = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    Eigen::AlignedBox3d box, centerBox;
    for (int i = first; i < first + count; ++i) {
        box.extend(boxes_[static_cast<std::size_t>(order_[static_cast<std::size_t>(i)])]);
        centerBox.extend(centers_[static_cast<std::size_t>(order_[static_cast<std::size_t>(i)])]);
    }
    nodes_[static_cast<std::size_t>(index)].box = box;
    if (count <= 4) {
        nodes_[static_cast<std::size_t>(index)].first = first;
        nodes_[static_cast<std::size_t>(index)].count = count;
        return index;
    }
    int axis = 0;
    centerBox.sizes().maxCoeff(&axis);
    const int half = count / 2;
    std::nth_element(order_.begin() + first, order_.begin() + first + half, order_.begin() + first + count,
                     [&](int a, int b) {
                         return centers_[static_cast<std::size_t>(a)](axis) < centers_[static_cast<std::size_t>(b)](axis);
                     });
    const int left = build(first, half);
    const int right = build(first + half, count - half);
    nodes_[static_cast<std::size_t>(index)].first = left;
    nodes_[static_cast<std::size_t>(index)].right = right;
    return index;
}

void TriangleBvh::query(int nodeIndex, const Point3& p, ClosestPoint& best, double& bestSq) const
{
    const Node& node = nodes_[static_cast<std::size_t>(nodeIndex)];
    if (node.count > 0) {
        for (int i = node.first; i < node.first + node.count; ++i) {
            const int t = order_[static_cast<std::size_t>(i)];
            const auto& f = mesh_->faces[static_cast<std::size_t>(t)];
            const Point3 q = closestPointOnTriangle(p, mesh_->vertices[static_cast<std::size_t>(f[0])],
                                                    mesh_->vertices[static_cast<std::size_t>(f[1])],
                                                    mesh_->vertices[static_cast<std::size_t>(f[2])]);
            const double d2 = (q - p).squaredNorm();
            if (d2 < bestSq || (d2 == bestSq && t < best.triangle)) {
                bestSq = d2;
                best.point = q;
                best.triangle = t;
            }
        }
        return;
    }
    const int children[2] = {node.first, node.right};
    double dist[2];
    for (int i = 0; i < 2; ++i)
        dist[i] = nodes_[static_cast<std::size_t>(children[i])].box.squaredExteriorDistance(p);
    const int order = dist[1] < dist[0] ? 1 : 0;
    for (int i : {order, 1 - order})
        if (dist[i] <= bestSq)
            query(children[i], p, best, bestSq);
}

ClosestPoint TriangleBvh::closest(const Point3& p) const
{
    ClosestPoint best;
    double bestSq = std::numeric_limits<double>::infinity();
    query(0, p, best, bestSq);
    best.distance = std::sqrt(bestSq);
    return best;
}

void checkDiscTopology(const TriangleMesh& mesh)
{
    std::map<std::pair<int, int>, int> edgeUse;
    std::vector<int> parent(mesh.vertices.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto findRoot = [&](int v) {
        while (parent[static_cast<std::size_t>(v)] != v)
            v = parent[static_cast<std::size_t>(v)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(v)])];
        return v;
    };
    std::vector<char> used(mesh.vertices.size(), 0);
    for (const auto& f : mesh.faces) {
        for (int i = 0; i < 3; ++i) {
            const int a = f[static_cast<std::size_t>(i)], b = f[static_cast<std::size_t>((i + 1) % 3)];
            ++edgeUse[{std::min(a, b), std::max(a, b)}];
            used[static_cast<std::size_t>(a)] = 1;
            parent[static_cast<std::size_t>(findRoot(a))] = findRoot(b);
        }
    }
    const long usedCount = std::count(used.begin(), used.end(), 1);
    std::map<int, std::vector<int>> boundary;
    long boundaryEdges = 0;
    for (const auto& [edge, uses] : edgeUse) {
        if (uses > 2)
            throw TopologyError("mesh is not a disc: edge (" + std::to_string(edge.first) + ", " +
                                std::to_string(edge.second) + ") is shared by " + std::to_string(uses) + " faces");
        if (uses == 1) {
            boundary[edge.first].push_back(edge.second);
            boundary[edge.second].push_back(edge.first);
            ++boundaryEdges;
        }
    }
    const long euler = usedCount - static_cast<long>(edgeUse.size()) + static_cast<long>(mesh.faces.size());
    if (euler != 1)
        throw TopologyError("mesh is not a disc: Euler characteristic is " + std::to_string(euler));
    if (boundaryEdges == 0)
        throw TopologyError("mesh is not a disc: it has no boundary");
    for (const auto& [v, neighbors] : boundary)
        if (neighbors.size() != 2)
            throw TopologyError("mesh is not a disc: boundary is pinched at vertex " + std::to_string(v));
    // Walk the loop through the first boundary vertex; it must cover every boundary edge.
    const int start = boundary.begin()->first;
    int previous = start, current = boundary.begin()->second[0];
    long walked = 1;
    while (current != start) {
        const auto& next = boundary[current];
        const int step = next[0] == previous ? next[1] : next[0];
        previous = current;
        current = step;
        ++walked;
    }
    if (walked != boundaryEdges)
        throw TopologyError("mesh is not a disc: it has more than one boundary loop");
    int root = -1;
    for (std::size_t v = 0; v < used.size(); ++v) {
        if (!used[v])
            continue;
        const int r = findRoot(static_cast<int>(v));
        if (root < 0)
            root = r;
        else if (r != root)
            throw TopologyError("mesh is not a disc: it has several connected components");
    }
}

QuadMesh resampleToGrid(const TriangleMesh& mesh, const LandmarkSet& landmarks, const SubdivisionHierarchy& hierarchy)
{
    mesh.validate();
    const GridDims finest = hierarchy.finestDims();
    if (static_cast<int>(mesh.vertices.size()) == finest.count() && mesh.faces == gridTriangles(finest))
        return makeGridMesh(mesh.vertices, finest);

    checkDiscTopology(mesh);
    std::array<Point3, 4> corners;
    for (std::size_t i = 0; i < 4; ++i) {
        auto p = landmarks.find(kCornerLabels[i]);
        if (!p)
            throw Error("resampling needs the corner landmark '" + kCornerLabels[i] + "'");
        corners[i] = *p;
    }

    const TriangleBvh bvh(mesh);
    const double limit = boundingBox(mesh.vertices).diagonal();
    auto project = [&](const Point3& p) {
        const auto hit = bvh.closest(p);
        if (hit.distance > limit)
            throw Error("resampling failed: grid point lies " + std::to_string(hit.distance) +
                        " mm from the surface, more than the bounding-box diagonal");
        return hit.point;
    };

    VertexList grid(static_cast<std::size_t>(finest.count()));
    auto at = [&](int r, int c) -> Point3& { return grid[static_cast<std::size_t>(r * finest.cols + c)]; };

    const GridDims base = hierarchy.baseDims();
    const int s0 = hierarchy.spacing(0);
    for (int r = 0; r < base.rows; ++r) {
        const double u = base.rows > 1 ? static_cast<double>(r) / (base.rows - 1) : 0.0;
        for (int c = 0; c < base.cols; ++c) {
            const double v = base.cols > 1 ? static_cast<double>(c) / (base.cols - 1) : 0.0;
            const Point3 p = (1 - u) * (1 - v) * corners[0] + (1 - u) * v * corners[1] + u * (1 - v) * corners[2] +
                             u * v * corners[3];
            at(r * s0, c * s0) = project(p);
        }
    }
    for (int level = 1; level <= hierarchy.levels(); ++level) {
        const int s = hierarchy.spacing(level);
        for (int r = 0; r < finest.rows; r += s) {
            const bool oddRow = (r / s) % 2 == 1;
            for (int c = 0; c < finest.cols; c += s) {
                const bool oddCol = (c / s) % 2 == 1;
                Point3 p;
                if (oddRow && oddCol)
                    p = 0.25 * (at(r - s, c - s) + at(r - s, c + s) + at(r + s, c - s) + at(r + s, c + s));
                else if (oddRow)
                    p = 0.5 * (at(r - s, c) + at(r + s, c));
                else if (oddCol)
                    p = 0.5 * (at(r, c - s) + at(r, c + s));
                else
                    continue;
                at(r, c) = project(p);
            }
        }
    }
    return makeGridMesh(std::move(grid), finest);
}

} // namespace shapespace
