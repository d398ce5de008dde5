#include "support.hpp"

#include "shapespace/resample.hpp"
#include "shapespace/wavelet.hpp"

#include <doctest.h>

#include <Eigen/SVD>

using namespace shapespace;

namespace {

VertexList affineGrid(GridDims dims, const Eigen::Matrix<double, 3, 2>& A, const Point3& b)
{
    VertexList out;
    for (int r = 0; r < dims.rows; ++r)
        for (int c = 0; c < dims.cols; ++c)
            out.push_back(A * Eigen::Vector2d(r, c) + b);
    return out;
}

double detailMax(const WaveletCoefficients& w, const SubdivisionHierarchy& h)
{
    double worst = 0.0;
    for (int k = h.coefficientCount(0); k < h.vertexCount(); ++k)
        worst = std::max(worst, w.coeffs[static_cast<std::size_t>(k)].norm());
    return worst;
}

int chebyshev(GridDims dims, int a, int b)
{
    return std::max(std::abs(a / dims.cols - b / dims.cols), std::abs(a % dims.cols - b % dims.cols));
}

/// Triangulated patch of a sphere: the square [-a, a]^2 pushed radially onto radius R, cap up.
TriangleMesh sphereCap(int cells, double a, double radius)
{
    const GridDims dims{cells + 1, cells + 1};
    VertexList v;
    for (int r = 0; r <= cells; ++r)
        for (int c = 0; c <= cells; ++c) {
            const double x = -a + 2.0 * a * r / cells, y = -a + 2.0 * a * c / cells;
            v.push_back(Point3(x, y, 1.0).normalized() * radius);
        }
    return {v, gridTriangles(dims), {}};
}

double circumradius(const Point3& a, const Point3& b, const Point3& c)
{
    const double ab = (b - a).norm(), bc = (c - b).norm(), ca = (a - c).norm();
    return ab * bc * ca / (2.0 * (b - a).cross(c - a).norm());
}

LandmarkSet cornersOf(const VertexList& v, GridDims dims)
{
    LandmarkSet set;
    const int last = dims.count() - 1;
    set.set("corner_tl", v[0]);
    set.set("corner_tr", v[static_cast<std::size_t>(dims.cols - 1)]);
    set.set("corner_bl", v[static_cast<std::size_t>(last - (dims.cols - 1))]);
    set.set("corner_br", v[static_cast<std::size_t>(last)]);
    return set;
}

} // namespace

TEST_SUITE("subdivision hierarchy")
{
    TEST_CASE("vertex counts follow the refinement arithmetic")
    {
        const SubdivisionHierarchy h({5, 7}, 6);
        CHECK(h.finestDims() == GridDims{257, 385});
        CHECK(h.vertexCount() == 98945);
        CHECK(h.coefficientCount(0) == 35);
        for (int j = 0; j < 6; ++j) {
            CHECK(h.dims(j + 1).rows == 2 * h.dims(j).rows - 1);
            CHECK(h.dims(j + 1).cols == 2 * h.dims(j).cols - 1);
        }
        const SubdivisionHierarchy flat({5, 7}, 0);
        CHECK(flat.vertexCount() == 35);
    }

    TEST_CASE("coefficients are ordered level-major then row-major")
    {
        const SubdivisionHierarchy h({3, 4}, 2);
        const auto fine = h.finestDims();
        std::vector<int> seen(static_cast<std::size_t>(h.vertexCount()), 0);
        int previousLevel = 0, previousVertex = -1;
        for (int k = 0; k < h.vertexCount(); ++k) {
            const int level = h.coefficientLevel(k), vertex = h.coefficientVertex(k);
            ++seen[static_cast<std::size_t>(vertex)];
            CHECK(level >= previousLevel);
            if (level == previousLevel)
                CHECK(vertex > previousVertex);
            const int s = h.spacing(level);
            CHECK((vertex / fine.cols) % s == 0);
            CHECK((vertex % fine.cols) % s == 0);
            if (level > 0) {
                const int coarse = 2 * s;
                CHECK(((vertex / fine.cols) % coarse != 0 || (vertex % fine.cols) % coarse != 0));
            }
            previousLevel = level;
            previousVertex = vertex;
        }
        for (int count : seen)
            CHECK(count == 1);
        CHECK(h.coefficientLevel(11) == 0);
        CHECK(h.coefficientLevel(12) == 1);
    }
}

TEST_SUITE("lifting transform")
{
    TEST_CASE("a constant grid has zero details and constant scaling coefficients")
    {
        const SubdivisionHierarchy h({5, 7}, 3);
        const Point3 p(3.5, -1.25, 8.0);
        const VertexList grid(static_cast<std::size_t>(h.vertexCount()), p);
        const auto w = forwardTransform(grid, h);
        CHECK(detailMax(w, h) == 0.0);
        for (int k = 0; k < h.coefficientCount(0); ++k)
            CHECK((w.coeffs[static_cast<std::size_t>(k)] - p).norm() < 1e-12);
        const auto back = inverseTransform(w, h);
        for (const auto& q : back)
            CHECK((q - p).norm() < 1e-12);
    }

    TEST_CASE("affine grids have vanishing details")
    {
        const SubdivisionHierarchy h({5, 7}, 4);
        Eigen::Matrix<double, 3, 2> A;
        A << 0.7, -0.2, 0.1, 1.3, -0.4, 0.25;
        const auto grid = affineGrid(h.finestDims(), A, Point3(10, -20, 5));
        CHECK(detailMax(forwardTransform(grid, h), h) < 1e-12);
    }

    TEST_CASE("random grids reconstruct exactly at every depth")
    {
        for (int J = 0; J <= 5; ++J) {
            const SubdivisionHierarchy h({5, 7}, J);
            const auto grid = testing::randomPoints(static_cast<std::size_t>(h.vertexCount()), 30 + static_cast<std::uint64_t>(J));
            const auto back = inverseTransform(forwardTransform(grid, h), h);
            CHECK(testing::relativeRms(back, grid) < 1e-10);
        }
        const SubdivisionHierarchy odd({2, 3}, 3);
        const auto grid = testing::randomPoints(static_cast<std::size_t>(odd.vertexCount()), 39);
        CHECK(testing::relativeRms(inverseTransform(forwardTransform(grid, odd), odd), grid) < 1e-10);
    }

    TEST_CASE("the transform is linear")
    {
        const SubdivisionHierarchy h({5, 7}, 3);
        const auto n = static_cast<std::size_t>(h.vertexCount());
        const auto x = testing::randomPoints(n, 40), y = testing::randomPoints(n, 41);
        VertexList combo(n);
        for (std::size_t i = 0; i < n; ++i)
            combo[i] = 2.5 * x[i] - 0.75 * y[i];
        const auto wx = forwardTransform(x, h), wy = forwardTransform(y, h), wc = forwardTransform(combo, h);
        double worst = 0.0;
        for (std::size_t k = 0; k < n; ++k)
            worst = std::max(worst, (wc.coeffs[k] - (2.5 * wx.coeffs[k] - 0.75 * wy.coeffs[k])).norm());
        CHECK(worst < 1e-10);
    }

    TEST_CASE("truncated reconstruction approaches the original monotonically")
    {
        const SubdivisionHierarchy h({5, 7}, 4);
        const auto dims = h.finestDims();
        // A smooth surface with small noise. On pure white noise the biorthogonal update can make a
        // coarser truncation slightly closer than the next one, so the surface must carry signal.
        std::mt19937_64 rng(42);
        std::normal_distribution<double> noise(0.0, 0.1);
        VertexList grid;
        for (int r = 0; r < dims.rows; ++r)
            for (int c = 0; c < dims.cols; ++c) {
                const double x = r / (dims.rows - 1.0), y = c / (dims.cols - 1.0);
                grid.push_back(Point3(r, c, 10.0 * std::sin(3.0 * x) * std::cos(2.0 * y)) +
                               Point3(noise(rng), noise(rng), noise(rng)));
            }
        const auto w = forwardTransform(grid, h);

        WaveletCoefficients scalingOnly = w;
        for (int k = h.coefficientCount(0); k < h.vertexCount(); ++k)
            scalingOnly.coeffs[static_cast<std::size_t>(k)] = Point3::Zero();
        const auto level0 = inverseTransform(w, h, 0);
        const auto fromScaling = inverseTransform(scalingOnly, h);
        CHECK(testing::relativeRms(level0, fromScaling) < 1e-14);

        double previous = std::numeric_limits<double>::infinity();
        for (int level = 0; level <= h.levels(); ++level) {
            const double rms = rmsDistance(inverseTransform(w, h, level), grid);
            CHECK(rms < previous);
            previous = rms;
        }
        CHECK(previous < 1e-10);
    }

    TEST_CASE("linear upsampling produces zero details on the new levels")
    {
        const SubdivisionHierarchy coarse({5, 7}, 2), fine({5, 7}, 4);
        const auto grid = testing::randomPoints(static_cast<std::size_t>(coarse.vertexCount()), 43);
        auto w = forwardTransform(grid, coarse);
        // Coefficient order is level-major, so appending zero details upsamples bilinearly.
        w.coeffs.resize(static_cast<std::size_t>(fine.vertexCount()), Point3::Zero());
        const auto upsampled = inverseTransform(w, fine);
        const auto again = forwardTransform(upsampled, fine);
        double worst = 0.0;
        for (int k = coarse.vertexCount(); k < fine.vertexCount(); ++k)
            worst = std::max(worst, again.coeffs[static_cast<std::size_t>(k)].norm());
        CHECK(worst < 1e-10);
        // The coarse samples survive at their finest-grid positions.
        const auto fd = fine.finestDims();
        const auto cd = coarse.finestDims();
        for (int r = 0; r < cd.rows; ++r)
            for (int c = 0; c < cd.cols; ++c)
                CHECK((upsampled[static_cast<std::size_t>(4 * r * fd.cols + 4 * c)] -
                       grid[static_cast<std::size_t>(r * cd.cols + c)])
                          .norm() < 1e-10);
    }

    TEST_CASE("size mismatches are rejected")
    {
        const SubdivisionHierarchy h({5, 7}, 2);
        CHECK_THROWS_AS(forwardTransform(testing::randomPoints(10, 1), h), DimensionError);
        WaveletCoefficients w{testing::randomPoints(10, 1)};
        CHECK_THROWS_AS(inverseTransform(w, h), DimensionError);
        WaveletCoefficients ok{testing::randomPoints(static_cast<std::size_t>(h.vertexCount()), 1)};
        CHECK_THROWS(inverseTransform(ok, h, 3));
    }
}

TEST_SUITE("inverse transform as a matrix")
{
    TEST_CASE("the dense matrix agrees with lifting and has full rank")
    {
        const SubdivisionHierarchy h({5, 7}, 2);
        const Eigen::MatrixXd D = denseInverseMatrix(h);
        REQUIRE(D.rows() == h.vertexCount());
        REQUIRE(D.cols() == h.vertexCount());
        std::mt19937_64 rng(50);
        std::normal_distribution<double> g;
        for (int trial = 0; trial < 5; ++trial) {
            Eigen::VectorXd coeffs(h.vertexCount());
            for (auto& v : coeffs)
                v = g(rng);
            const Eigen::VectorXd lifted = inverseTransformScalar(coeffs, h);
            CHECK((D * coeffs - lifted).cwiseAbs().maxCoeff() < 1e-12);
            const Eigen::VectorXd x = Eigen::VectorXd::NullaryExpr(h.vertexCount(), [&] { return g(rng); });
            CHECK((D * forwardTransformScalar(x, h) - x).cwiseAbs().maxCoeff() < 1e-12);
        }
        const Eigen::JacobiSVD<Eigen::MatrixXd> svd(D);
        CHECK(svd.singularValues().minCoeff() > 1e-10);
    }

    TEST_CASE("basis columns are local with the closed-form support")
    {
        const SubdivisionHierarchy h({5, 7}, 3);
        const auto fine = h.finestDims();
        const Eigen::MatrixXd D = denseInverseMatrix(h);
        for (int k = 0; k < h.vertexCount(); k += 7) {
            const int level = h.coefficientLevel(k);
            const int s = h.spacing(level);
            // Hat of half-width s for scaling functions; details also move evens one level-spacing away.
            const int radius = level == 0 ? s : 3 * s;
            CHECK(supportRadius(h, k) == radius);
            const int centre = h.coefficientVertex(k);
            int nonzeros = 0;
            for (int i = 0; i < h.vertexCount(); ++i) {
                if (D(i, k) == 0.0)
                    continue;
                ++nonzeros;
                CHECK(chebyshev(fine, i, centre) < radius);
            }
            CHECK(nonzeros <= (2 * radius - 1) * (2 * radius - 1));
            CHECK(nonzeros >= 1);

            const auto column = basisColumn(h, k);
            Eigen::VectorXd dense = Eigen::VectorXd::Zero(h.vertexCount());
            for (std::size_t e = 0; e < column.vertices.size(); ++e)
                dense(column.vertices[e]) = column.weights[e];
            CHECK((dense - D.col(k)).cwiseAbs().maxCoeff() < 1e-14);
        }
    }

    TEST_CASE("the dense build is guarded by size")
    {
        CHECK_THROWS_AS(denseInverseMatrix(SubdivisionHierarchy({5, 7}, 5)), DimensionError);
    }
}

TEST_SUITE("resampling")
{
    TEST_CASE("closest points on a triangle beat dense barycentric sampling")
    {
        const Point3 a(0, 0, 0), b(4, 0, 0.5), c(1, 3, -0.5);
        for (const auto& p : testing::randomPoints(60, 60, 6.0)) {
            const Point3 q = closestPointOnTriangle(p, a, b, c);
            double best = std::numeric_limits<double>::infinity();
            for (int i = 0; i <= 200; ++i)
                for (int j = 0; i + j <= 200; ++j) {
                    const double u = i / 200.0, v = j / 200.0;
                    best = std::min(best, (p - (a + u * (b - a) + v * (c - a))).norm());
                }
            CHECK((p - q).norm() <= best + 1e-12);
            CHECK((p - q).norm() >= best - 0.05);
        }
    }

    TEST_CASE("bvh queries agree with a scan over all triangles")
    {
        const auto mesh = sphereCap(12, 0.8, 50.0);
        const TriangleBvh bvh(mesh);
        for (const auto& p : testing::randomPoints(100, 61, 80.0)) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& f : mesh.faces)
                best = std::min(best, (p - closestPointOnTriangle(p, mesh.vertices[static_cast<std::size_t>(f[0])],
                                                                  mesh.vertices[static_cast<std::size_t>(f[1])],
                                                                  mesh.vertices[static_cast<std::size_t>(f[2])]))
                                          .norm());
            const auto hit = bvh.closest(p);
            CHECK(hit.distance == doctest::Approx(best).epsilon(1e-12));
            CHECK((hit.point - p).norm() == doctest::Approx(hit.distance).epsilon(1e-12));
        }
    }

    TEST_CASE("a flat rectangle resamples to the planar regular grid")
    {
        const SubdivisionHierarchy h({5, 7}, 2);
        TriangleMesh patch;
        const GridDims coarse{4, 6};
        const Point3 origin(5, -3, 2), du(0, 40, 0), dv(60, 0, 10);
        for (int r = 0; r < coarse.rows; ++r)
            for (int c = 0; c < coarse.cols; ++c)
                patch.vertices.push_back(origin + du * r / (coarse.rows - 1.0) + dv * c / (coarse.cols - 1.0));
        patch.faces = gridTriangles(coarse);
        const auto grid = resampleToGrid(patch, cornersOf(patch.vertices, coarse), h);
        const auto fine = h.finestDims();
        REQUIRE(grid.vertices.size() == static_cast<std::size_t>(fine.count()));
        REQUIRE(grid.gridDims.has_value());
        CHECK(*grid.gridDims == fine);
        double worst = 0.0;
        for (int r = 0; r < fine.rows; ++r)
            for (int c = 0; c < fine.cols; ++c) {
                const Point3 expected = origin + du * r / (fine.rows - 1.0) + dv * c / (fine.cols - 1.0);
                worst = std::max(worst, (grid.vertices[static_cast<std::size_t>(r * fine.cols + c)] - expected).norm());
            }
        CHECK(worst < 1e-9);
    }

    TEST_CASE("a mesh that already is the grid comes back unchanged")
    {
        const SubdivisionHierarchy h({5, 7}, 2);
        const auto fine = h.finestDims();
        const auto pts = testing::randomPoints(static_cast<std::size_t>(fine.count()), 62);
        const TriangleMesh mesh{pts, gridTriangles(fine), {}};
        const auto grid = resampleToGrid(mesh, LandmarkSet{}, h);
        CHECK(grid.vertices == pts);
    }

    TEST_CASE("resampled sphere cap vertices lie on the surface")
    {
        const double R = 80.0;
        const int cells = 40;
        const auto cap = sphereCap(cells, 0.9, R);
        const SubdivisionHierarchy h({5, 7}, 3);
        const auto grid = resampleToGrid(cap, cornersOf(cap.vertices, {cells + 1, cells + 1}), h);

        // Points on a chord triangle sit inside the sphere by at most its sagitta.
        double sagitta = 0.0;
        for (const auto& f : cap.faces) {
            const double rho = circumradius(cap.vertices[static_cast<std::size_t>(f[0])],
                                            cap.vertices[static_cast<std::size_t>(f[1])],
                                            cap.vertices[static_cast<std::size_t>(f[2])]);
            sagitta = std::max(sagitta, R - std::sqrt(R * R - rho * rho));
        }
        const TriangleBvh bvh(cap);
        for (const auto& p : grid.vertices) {
            CHECK(p.norm() <= R * (1.0 + 1e-12));
            CHECK(p.norm() >= R - sagitta - 1e-9);
            CHECK(bvh.closest(p).distance < 1e-9);
        }
        CHECK(sagitta < 0.01 * R);
    }

    TEST_CASE("non-disc meshes are rejected")
    {
        const VertexList v = {Point3(0, 0, 0), Point3(1, 0, 0), Point3(0, 1, 0), Point3(0, 0, 1)};
        const TriangleMesh closed{v, {{0, 2, 1}, {0, 1, 3}, {1, 2, 3}, {0, 3, 2}}, {}};
        CHECK_THROWS_AS(checkDiscTopology(closed), TopologyError);

        VertexList two = v;
        for (const auto& p : v)
            two.push_back(p + Point3(5, 0, 0));
        const TriangleMesh split{two, {{0, 1, 2}, {4, 5, 6}}, {}};
        CHECK_THROWS_AS(checkDiscTopology(split), TopologyError);

        const TriangleMesh fan{v, {{0, 1, 2}, {0, 1, 3}, {0, 2, 1}}, {}};
        CHECK_THROWS_AS(checkDiscTopology(fan), TopologyError);

        const TriangleMesh single{v, {{0, 1, 2}}, {}};
        CHECK_NOTHROW(checkDiscTopology(single));

        const SubdivisionHierarchy h({5, 7}, 1);
        CHECK_THROWS_AS(resampleToGrid(closed, LandmarkSet{}, h), TopologyError);
    }

    TEST_CASE("missing corner landmarks are reported")
    {
        const auto cap = sphereCap(6, 0.5, 10.0);
        auto set = cornersOf(cap.vertices, {7, 7});
        set = set.subset({"corner_tl", "corner_tr", "corner_bl"});
        CHECK_THROWS(resampleToGrid(cap, set, SubdivisionHierarchy({5, 7}, 1)));
    }
}
