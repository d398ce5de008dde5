#include "support.hpp"

#include "shapespace/alignment.hpp"

#include <doctest.h>

#include <Eigen/Geometry>

using namespace shapespace;

namespace {

SimilarityTransform makeTransform(const Point3& axis, double degrees, double scale, const Point3& translation)
{
    SimilarityTransform t;
    t.rotation = Eigen::AngleAxisd(degrees * M_PI / 180.0, axis.normalized()).toRotationMatrix();
    t.scale = scale;
    t.translation = translation;
    return t;
}

SimilarityTransform randomTransform(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Point3 axis(u(rng), u(rng), u(rng));
    if (axis.norm() < 1e-3)
        axis = Point3::UnitX();
    return makeTransform(axis, 180.0 * u(rng), std::exp(u(rng)), Point3(u(rng), u(rng), u(rng)) * 50.0);
}

double transformDifference(const SimilarityTransform& a, const SimilarityTransform& b)
{
    return (a.matrix() - b.matrix()).cwiseAbs().maxCoeff();
}

double maxDeviation(const VertexList& a, const VertexList& b)
{
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, (a[i] - b[i]).norm());
    return worst;
}

/// Least-squares residual of the best similarity with the rotation held fixed at R.
double residualForRotation(const VertexList& x, const VertexList& y, const Matrix3& R)
{
    Point3 cx = Point3::Zero(), cy = Point3::Zero();
    for (std::size_t i = 0; i < x.size(); ++i) {
        cx += x[i];
        cy += y[i];
    }
    cx /= static_cast<double>(x.size());
    cy /= static_cast<double>(y.size());
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const Point3 a = R * (x[i] - cx), b = y[i] - cy;
        sxx += a.squaredNorm();
        syy += b.squaredNorm();
        sxy += a.dot(b);
    }
    const double s = std::max(sxy / sxx, 1e-12);
    return syy - 2.0 * s * sxy + s * s * sxx;
}

} // namespace

TEST_SUITE("alignCorresponding")
{
    TEST_CASE("identical point sets give the identity with zero residual")
    {
        const auto pts = testing::randomPoints(10, 1);
        const auto r = alignCorresponding(pts, pts);
        CHECK(transformDifference(r.transform, SimilarityTransform::identity()) < 1e-10);
        CHECK(r.residualSumSq < 1e-18);
    }

    TEST_CASE("a known rotation, scale and translation are recovered")
    {
        const auto source = testing::randomPoints(25, 2);
        const auto known = makeTransform(Point3::UnitZ(), 30.0, 2.0, Point3(1, 2, 3));
        const auto r = alignCorresponding(source, known.apply(source));
        CHECK((r.transform.rotation - known.rotation).cwiseAbs().maxCoeff() < 1e-9);
        CHECK(r.transform.scale == doctest::Approx(2.0).epsilon(1e-9));
        CHECK((r.transform.translation - Point3(1, 2, 3)).norm() < 1e-9);
        CHECK(r.residualRms < 1e-9);
    }

    TEST_CASE("a reflection yields the best proper rotation")
    {
        const auto source = testing::randomPoints(30, 3);
        VertexList target = source;
        for (auto& p : target)
            p.x() = -p.x();
        const auto r = alignCorresponding(source, target);
        const Matrix3& R = r.transform.rotation;
        CHECK(R.determinant() == doctest::Approx(1.0).epsilon(1e-10));
        CHECK((R.transpose() * R - Matrix3::Identity()).cwiseAbs().maxCoeff() < 1e-10);
        CHECK(r.residualSumSq > 1.0);
        CHECK(residualForRotation(source, target, R) == doctest::Approx(r.residualSumSq).epsilon(1e-9));

        std::mt19937_64 rng(4);
        int beaten = 0;
        for (int i = 0; i < 5000; ++i) {
            const Matrix3 sample = randomTransform(rng).rotation;
            beaten += residualForRotation(source, target, sample) < r.residualSumSq * (1.0 - 1e-12);
        }
        CHECK(beaten == 0);
    }

    TEST_CASE("solutions are left invariant under pre-transformation")
    {
        std::mt19937_64 rng(5);
        for (int trial = 0; trial < 20; ++trial) {
            const auto source = testing::randomPoints(12, 100 + static_cast<std::uint64_t>(trial));
            auto target = testing::randomPoints(12, 200 + static_cast<std::uint64_t>(trial));
            const auto original = alignCorresponding(source, target).transform;
            const auto S = randomTransform(rng);
            const auto resolved = alignCorresponding(S.apply(source), target).transform;
            CHECK(transformDifference(resolved.compose(S), original) < 1e-8);
        }
    }

    TEST_CASE("returned transforms satisfy the rotation invariants")
    {
        std::mt19937_64 rng(6);
        for (int trial = 0; trial < 50; ++trial) {
            const auto r = alignCorresponding(testing::randomPoints(8, 300 + static_cast<std::uint64_t>(trial)),
                                              testing::randomPoints(8, 400 + static_cast<std::uint64_t>(trial)));
            const Matrix3& R = r.transform.rotation;
            CHECK((R.transpose() * R - Matrix3::Identity()).cwiseAbs().maxCoeff() < 1e-10);
            CHECK(std::abs(R.determinant() - 1.0) < 1e-10);
            CHECK(r.transform.scale > 0.0);
        }
    }

    TEST_CASE("degenerate and undersized inputs are rejected")
    {
        VertexList line;
        for (int i = 0; i < 6; ++i)
            line.push_back(Point3(i, 2.0 * i, -i));
        const auto target = testing::randomPoints(6, 7);
        CHECK_THROWS_AS(alignCorresponding(line, target), DegenerateError);
        const VertexList same(5, Point3(1, 1, 1));
        CHECK_THROWS_AS(alignCorresponding(same, testing::randomPoints(5, 8)), DegenerateError);
        const auto two = testing::randomPoints(2, 9);
        CHECK_THROWS_AS(alignCorresponding(two, two), DimensionError);
        CHECK_THROWS_AS(alignCorresponding(testing::randomPoints(4, 1), testing::randomPoints(5, 1)), DimensionError);
    }
}

TEST_SUITE("gpa")
{
    TEST_CASE("similarity copies of one shape align exactly")
    {
        const auto base = testing::randomPoints(40, 10);
        std::mt19937_64 rng(11);
        std::vector<VertexList> shapes;
        for (int i = 0; i < 6; ++i)
            shapes.push_back(randomTransform(rng).apply(base));
        const auto result = gpa(shapes);
        CHECK(result.converged);
        for (std::size_t i = 1; i < shapes.size(); ++i)
            CHECK(maxDeviation(result.aligned[i], result.aligned[0]) < 1e-7);
    }

    TEST_CASE("two shapes give the same result in either order")
    {
        const auto a = testing::randomPoints(30, 12);
        auto b = a;
        const auto noise = testing::randomPoints(30, 13, 5.0);
        for (std::size_t i = 0; i < b.size(); ++i)
            b[i] += noise[i];
        std::mt19937_64 rng(14);
        b = randomTransform(rng).apply(b);

        const auto ab = gpa({a, b});
        const auto ba = gpa({b, a});
        CHECK(maxDeviation(ab.mean, ba.mean) < 1e-7);
        CHECK(maxDeviation(ab.aligned[0], ba.aligned[1]) < 1e-7);
        CHECK(maxDeviation(ab.aligned[1], ba.aligned[0]) < 1e-7);
    }

    TEST_CASE("an already aligned corpus converges in one iteration")
    {
        const auto corpus = testing::smallCorpus(1, 8, 0.5, 15);
        const auto first = gpa(corpus.data.shapes);
        const auto second = gpa(first.aligned);
        CHECK(second.converged);
        CHECK(second.iterations == 1);
        for (std::size_t i = 0; i < first.aligned.size(); ++i)
            CHECK(maxDeviation(second.aligned[i], first.aligned[i]) < 1e-8);
    }

    TEST_CASE("the output is a fixed point and the mean is centered")
    {
        const auto corpus = testing::smallCorpus(1, 10, 1.0, 16);
        std::mt19937_64 rng(17);
        std::vector<VertexList> shapes = corpus.data.shapes;
        for (auto& s : shapes)
            s = randomTransform(rng).apply(s);
        const auto first = gpa(shapes);
        CHECK(first.converged);
        const auto second = gpa(first.aligned);
        CHECK(maxDeviation(second.mean, first.mean) < 1e-10);

        Point3 centroid = Point3::Zero();
        for (const auto& p : first.mean)
            centroid += p;
        CHECK((centroid / static_cast<double>(first.mean.size())).norm() < 1e-10);
        CHECK(centroidSize(first.mean) == doctest::Approx(1.0).epsilon(1e-12));
    }

    TEST_CASE("transforms map each input onto its aligned copy")
    {
        const auto corpus = testing::smallCorpus(1, 5, 1.0, 18);
        const auto shapes = corpus.data.shapes;
        const auto result = gpa(shapes);
        for (std::size_t i = 0; i < shapes.size(); ++i)
            CHECK(maxDeviation(result.transforms[i].apply(shapes[i]), result.aligned[i]) < 1e-12);
        CHECK(result.inputScale > 0.0);
    }

    TEST_CASE("mismatched vertex counts and single shapes are rejected")
    {
        CHECK_THROWS_AS(gpa({testing::randomPoints(10, 1), testing::randomPoints(11, 2)}), DimensionError);
        CHECK_THROWS_AS(gpa({testing::randomPoints(10, 1)}), DimensionError);
    }
}
