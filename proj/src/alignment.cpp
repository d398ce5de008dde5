#include "shapespace/alignment.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <string>

namespace shapespace {

VertexList SimilarityTransform::apply(const VertexList& points) const
{
    VertexList out;
    out.reserve(points.size());
    for (const auto& p : points)
        out.push_back(apply(p));
    return out;
}

SimilarityTransform SimilarityTransform::inverse() const
{
    SimilarityTransform inv;
    inv.rotation = rotation.transpose();
    inv.scale = 1.0 / scale;
    inv.translation = -inv.scale * (inv.rotation * translation);
    return inv;
}

SimilarityTransform SimilarityTransform::compose(const SimilarityTransform& other) const
{
    SimilarityTransform out;
    out.rotation = rotation * other.rotation;
    out.scale = scale * other.scale;
    out.translation = scale * (rotation * other.translation) + translation;
    return out;
}

Eigen::Matrix4d SimilarityTransform::matrix() const
{
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.topLeftCorner<3, 3>() = scale * rotation;
    m.topRightCorner<3, 1>() = translation;
    return m;
}

namespace {

struct Moments {
    Point3 sourceMean = Point3::Zero();
    Point3 targetMean = Point3::Zero();
    Matrix3 crossCovariance = Matrix3::Zero(); // (1/k) sum (y - my)(x - mx)^T
    Matrix3 sourceScatter = Matrix3::Zero();   // (1/k) sum (x - mx)(x - mx)^T
};

Moments moments(std::span<const Point3> source, std::span<const Point3> target)
{
    Moments m;
    const double k = static_cast<double>(source.size());
    for (std::size_t i = 0; i < source.size(); ++i) {
        m.sourceMean += source[i];
        m.targetMean += target[i];
    }
    m.sourceMean /= k;
    m.targetMean /= k;
    for (std::size_t i = 0; i < source.size(); ++i) {
        const Point3 x = source[i] - m.sourceMean;
        const Point3 y = target[i] - m.targetMean;
        m.crossCovariance += y * x.transpose();
        m.sourceScatter += x * x.transpose();
    }
    m.crossCovariance /= k;
    m.sourceScatter /= k;
    return m;
}

/// Proper rotation maximizing tr(R^T C) for a cross-covariance C.
Matrix3 properRotation(const Matrix3& cross, Eigen::Vector3d* singularValues, Eigen::Vector3d* signs)
{
    Eigen::JacobiSVD<Matrix3> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Vector3d s = Eigen::Vector3d::Ones();
    if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0)
        s(2) = -1.0;
    if (singularValues)
        *singularValues = svd.singularValues();
    if (signs)
        *signs = s;
    return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

} // namespace

AlignmentResult alignCorresponding(std::span<const Point3> source, std::span<const Point3> target)
{
    if (source.size() != target.size())
        throw DimensionError("alignCorresponding: " + std::to_string(source.size()) + " source vs " +
                             std::to_string(target.size()) + " target points");
    if (source.size() < 3)
        throw DimensionError("alignCorresponding needs at least 3 correspondences, got " +
                             std::to_string(source.size()));

    const auto m = moments(source, target);
    const double sourceVariance = m.sourceScatter.trace();
    Eigen::SelfAdjointEigenSolver<Matrix3> scatter(m.sourceScatter);
    const auto ev = scatter.eigenvalues(); // ascending
    if (!(sourceVariance > 0.0) || ev(1) <= 1e-12 * ev(2))
        throw DegenerateError("alignCorresponding: source points are coincident or collinear");

    Eigen::Vector3d singular, signs;
    const Matrix3 rotation = properRotation(m.crossCovariance, &singular, &signs);
    const double trace = singular.dot(signs);
    if (!(trace > 0.0) || singular(1) <= 1e-12 * singular(0))
        throw DegenerateError("alignCorresponding: target configuration is degenerate");

    AlignmentResult result;
    result.transform.rotation = rotation;
    result.transform.scale = trace / sourceVariance;
    result.transform.translation = m.targetMean - result.transform.scale * (rotation * m.sourceMean);
    for (std::size_t i = 0; i < source.size(); ++i)
        result.residualSumSq += (result.transform.apply(source[i]) - target[i]).squaredNorm();
    result.residualRms = std::sqrt(result.residualSumSq / static_cast<double>(source.size()));
    return result;
}

double centroidSize(const VertexList& shape)
{
    const Point3 c = centroid(shape);
    double sum = 0.0;
    for (const auto& p : shape)
        sum += (p - c).squaredNorm();
    return std::sqrt(sum / static_cast<double>(shape.size()));
}

namespace {

VertexList centered(const VertexList& shape)
{
    const Point3 c = centroid(shape);
    VertexList out(shape.size());
    for (std::size_t i = 0; i < shape.size(); ++i)
        out[i] = shape[i] - c;
    return out;
}

void normalize(VertexList& shape)
{
    const Point3 c = centroid(shape);
    for (auto& p : shape)
        p -= c;
    const double size = centroidSize(shape);
    for (auto& p : shape)
        p /= size;
}

VertexList averageOf(const std::vector<VertexList>& shapes)
{
    VertexList avg(shapes.front().size(), Point3::Zero());
    for (const auto& s : shapes)
        for (std::size_t i = 0; i < avg.size(); ++i)
            avg[i] += s[i];
    for (auto& p : avg)
        p /= static_cast<double>(shapes.size());
    return avg;
}

} // namespace

GpaResult gpa(const std::vector<VertexList>& shapes, GpaOptions options)
{
    if (shapes.size() < 2)
        throw DimensionError("gpa needs at least 2 shapes");
    const std::size_t n = shapes.front().size();
    for (std::size_t i = 0; i < shapes.size(); ++i)
        if (shapes[i].size() != n)
            throw DimensionError("gpa: shape " + std::to_string(i) + " has " + std::to_string(shapes[i].size()) +
                                 " vertices, expected " + std::to_string(n));

    std::vector<VertexList> centeredShapes;
    double sizeSum = 0.0;
    for (const auto& s : shapes) {
        centeredShapes.push_back(centered(s));
        sizeSum += centroidSize(s);
    }
    const double meanSize = sizeSum / static_cast<double>(shapes.size());

    // The plain average of the centered inputs is order-independent; it only fails as a start
    // when the inputs are so differently oriented that the average collapses.
    const VertexList reference = averageOf(centeredShapes);
    const bool referenceUsable = centroidSize(reference) > 0.1 * meanSize;
    VertexList mean = referenceUsable ? reference : centeredShapes.front();
    normalize(mean);

    GpaResult result;
    result.inputScale = meanSize;
    result.aligned.resize(shapes.size());
    result.transforms.resize(shapes.size());
    for (int iter = 1; iter <= options.maxIterations; ++iter) {
        for (std::size_t i = 0; i < shapes.size(); ++i) {
            result.transforms[i] = alignCorresponding(shapes[i], mean).transform;
            result.aligned[i] = result.transforms[i].apply(shapes[i]);
        }
        VertexList next = averageOf(result.aligned);
        normalize(next);
        const double change = rmsDistance(next, mean);
        mean = std::move(next);
        result.iterations = iter;
        if (change < options.tolerance) {
            result.converged = true;
            break;
        }
    }

    // Fix the rotational gauge: orient the mean like the average input.
    if (referenceUsable) {
        Matrix3 cross = Matrix3::Zero();
        for (std::size_t i = 0; i < n; ++i)
            cross += reference[i] * mean[i].transpose();
        const Matrix3 gauge = properRotation(cross, nullptr, nullptr);
        SimilarityTransform rotate;
        rotate.rotation = gauge;
        mean = rotate.apply(mean);
        for (std::size_t i = 0; i < shapes.size(); ++i) {
            result.transforms[i] = rotate.compose(result.transforms[i]);
            result.aligned[i] = result.transforms[i].apply(shapes[i]);
        }
    }
    result.mean = std::move(mean);
    return result;
}

} // namespace shapespace
