#include "shapespace/models.hpp"

#include "shapespace/alignment.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <iostream>
#include <numeric>

namespace shapespace {

std::string TrainingSet::subjectOf(std::size_t i) const
{
    return subjectIds.empty() ? std::to_string(i) : subjectIds[i];
}

void TrainingSet::validate() const
{
    if (shapes.size() < 2)
        throw DimensionError("training set needs at least 2 shapes, got " + std::to_string(shapes.size()));
    const auto n = shapes.front().size();
    for (std::size_t i = 0; i < shapes.size(); ++i)
        if (shapes[i].size() != n)
            throw DimensionError("training shape " + std::to_string(i) + " has " + std::to_string(shapes[i].size()) +
                                 " vertices, expected " + std::to_string(n));
    if (!subjectIds.empty() && subjectIds.size() != shapes.size())
        throw DimensionError("subject id count does not match shape count");
    if (!labels.empty() && labels.size() != shapes.size())
        throw DimensionError("label count does not match shape count");
    if (gridDims && gridDims->count() != static_cast<int>(n))
        throw DimensionError("grid dims do not match the vertex count");
}

TrainingSet TrainingSet::subset(const std::vector<std::size_t>& indices) const
{
    TrainingSet out;
    out.gridDims = gridDims;
    out.faces = faces;
    out.gpaAligned = gpaAligned;
    for (auto i : indices) {
        out.shapes.push_back(shapes[i]);
        if (!subjectIds.empty())
            out.subjectIds.push_back(subjectIds[i]);
        if (!labels.empty())
            out.labels.push_back(labels[i]);
    }
    return out;
}

TrainingSet alignTrainingSet(const TrainingSet& data)
{
    data.validate();
    auto result = gpa(data.shapes);
    TrainingSet out = data;
    out.shapes = std::move(result.aligned);
    for (auto& shape : out.shapes)
        for (auto& p : shape)
            p *= result.inputScale;
    out.gpaAligned = true;
    return out;
}

void fixSign(Eigen::Ref<Eigen::VectorXd> v)
{
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i)
        if (std::abs(v(i)) > std::abs(v(best)))
            best = i;
    if (v.size() > 0 && v(best) < 0)
        v = -v;
}

bool GlobalPcaModel::rankDeficient() const
{
    if (eigenvalues.size() == 0)
        return true;
    return eigenvalues(eigenvalues.size() - 1) <= 1e-12 * std::max(eigenvalues(0), 1e-300);
}

ShapeParameters ShapeParameters::zeros(const ShapeModel& model)
{
    return std::visit(
        [](const auto& m) {
            using M = std::decay_t<decltype(m)>;
            ShapeParameters p;
            p.kind = std::is_same_v<M, GlobalPcaModel> ? ModelKind::Global : ModelKind::Local;
            p.values = Eigen::VectorXd::Zero(m.dimension());
            return p;
        },
        model);
}

namespace {

void requireAligned(const TrainingSet& data)
{
    data.validate();
    if (!data.gpaAligned)
        throw Error("training set must be GPA-aligned before training (see alignTrainingSet)");
}

} // namespace

GlobalPcaModel trainGlobal(const TrainingSet& data, int d)
{
    requireAligned(data);
    const auto T = static_cast<Eigen::Index>(data.size());
    const auto dims = static_cast<Eigen::Index>(3 * data.vertexCount());
    const Eigen::Index maxRank = std::min(dims - 1, T - 1);
    if (d < 1 || d > maxRank)
        throw DimensionError("d = " + std::to_string(d) + " outside [1, " + std::to_string(maxRank) + "]");

    Eigen::MatrixXd X(dims, T);
    for (Eigen::Index i = 0; i < T; ++i)
        X.col(i) = flatten(data.shapes[static_cast<std::size_t>(i)]);
    // Mean taken relative to the first shape, so identical shapes give exactly their common shape.
    const Eigen::VectorXd first = X.col(0);
    X.colwise() -= first;
    const Eigen::VectorXd offset = X.rowwise().mean();
    X.colwise() -= offset;
    const Eigen::VectorXd mean = first + offset;
    X /= std::sqrt(static_cast<double>(T)); // covariance = X X^T, 1/T normalization

    Eigen::BDCSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU);
    const Eigen::VectorXd singular = svd.singularValues();

    GlobalPcaModel model;
    model.mean = mean;
    model.spectrum = singular.head(maxRank).array().square();
    model.eigenvalues = model.spectrum.head(d);
    model.basis = svd.matrixU().leftCols(d);
    for (int i = 0; i < d; ++i)
        fixSign(model.basis.col(i));
    model.faces = data.faces;
    model.gridDims = data.gridDims;
    if (model.rankDeficient())
        std::clog << "warning: trainGlobal: eigenvalue " << d << " is numerically zero; the data has rank < d\n";
    return model;
}

LocalWaveletModel trainLocal(const TrainingSet& data, const SubdivisionHierarchy& hierarchy)
{
    requireAligned(data);
    if (!data.gridDims || *data.gridDims != hierarchy.finestDims())
        throw DimensionError("trainLocal needs grid-structured shapes matching the hierarchy's " +
                             std::to_string(hierarchy.finestDims().rows) + "x" +
                             std::to_string(hierarchy.finestDims().cols) + " finest grid");

    const std::size_t T = data.size();
    const auto n = static_cast<std::size_t>(hierarchy.vertexCount());
    std::vector<WaveletCoefficients> coeffs;
    coeffs.reserve(T);
    for (const auto& shape : data.shapes)
        coeffs.push_back(forwardTransform(shape, hierarchy));

    LocalWaveletModel model;
    model.hierarchy = hierarchy;
    model.coefficientMeans.assign(n, Point3::Zero());
    model.rotations.assign(n, Matrix3::Identity());
    model.stddevs.assign(n, Point3::Zero());
    for (std::size_t k = 0; k < n; ++k) {
        // Accumulate relative to the first sample so identical coefficients give exactly zero variance.
        const Point3 shift = coeffs.front().coeffs[k];
        Point3 offset = Point3::Zero();
        for (const auto& c : coeffs)
            offset += c.coeffs[k] - shift;
        offset /= static_cast<double>(T);
        Matrix3 cov = Matrix3::Zero();
        for (const auto& c : coeffs) {
            const Point3 d = c.coeffs[k] - shift - offset;
            cov += d * d.transpose();
        }
        cov /= static_cast<double>(T);
        const Point3 mean = shift + offset;

        Eigen::SelfAdjointEigenSolver<Matrix3> eig(cov);
        // Eigen returns ascending eigenvalues; store descending.
        Matrix3 U;
        Point3 sigma;
        for (int j = 0; j < 3; ++j) {
            U.col(j) = eig.eigenvectors().col(2 - j);
            sigma(j) = std::sqrt(std::max(eig.eigenvalues()(2 - j), 0.0));
        }
        for (int j = 0; j < 3; ++j) {
            Eigen::VectorXd col = U.col(j);
            fixSign(col);
            U.col(j) = col;
        }
        model.coefficientMeans[k] = mean;
        model.rotations[k] = U;
        model.stddevs[k] = sigma;
    }
    return model;
}

VertexList generate(const GlobalPcaModel& model, const Eigen::VectorXd& params)
{
    if (params.size() != model.dimension())
        throw DimensionError("global model expects " + std::to_string(model.dimension()) + " parameters, got " +
                             std::to_string(params.size()));
    return unflatten(model.mean + model.basis * params);
}

namespace {

WaveletCoefficients localCoefficients(const LocalWaveletModel& model, const Eigen::VectorXd& params)
{
    if (params.size() != model.dimension())
        throw DimensionError("local model expects " + std::to_string(model.dimension()) + " parameters, got " +
                             std::to_string(params.size()));
    WaveletCoefficients coeffs;
    coeffs.coeffs.resize(model.coefficientMeans.size());
    for (std::size_t k = 0; k < coeffs.coeffs.size(); ++k)
        coeffs.coeffs[k] = model.coefficientMeans[k] +
                           model.rotations[k] * params.segment<3>(3 * static_cast<Eigen::Index>(k));
    return coeffs;
}

} // namespace

VertexList generate(const LocalWaveletModel& model, const Eigen::VectorXd& params)
{
    return inverseTransform(localCoefficients(model, params), model.hierarchy);
}

VertexList generate(const ShapeModel& model, const ShapeParameters& params)
{
    if (params.kind != kindOf(model))
        throw DimensionError("parameters belong to a different model kind");
    return std::visit([&](const auto& m) { return generate(m, params.values); }, model);
}

Eigen::VectorXd project(const GlobalPcaModel& model, const VertexList& shape)
{
    if (static_cast<int>(shape.size()) != model.vertexCount())
        throw DimensionError("shape has " + std::to_string(shape.size()) + " vertices, model has " +
                             std::to_string(model.vertexCount()));
    return model.basis.transpose() * (flatten(shape) - model.mean);
}

Eigen::VectorXd project(const LocalWaveletModel& model, const VertexList& shape)
{
    if (static_cast<int>(shape.size()) != model.vertexCount())
        throw DimensionError("shape has " + std::to_string(shape.size()) + " vertices, model has " +
                             std::to_string(model.vertexCount()));
    const auto coeffs = forwardTransform(shape, model.hierarchy);
    Eigen::VectorXd params(model.dimension());
    for (std::size_t k = 0; k < coeffs.coeffs.size(); ++k)
        params.segment<3>(3 * static_cast<Eigen::Index>(k)) =
            model.rotations[k].transpose() * (coeffs.coeffs[k] - model.coefficientMeans[k]);
    return params;
}

ShapeParameters project(const ShapeModel& model, const VertexList& shape)
{
    ShapeParameters p;
    p.kind = kindOf(model);
    p.values = std::visit([&](const auto& m) { return project(m, shape); }, model);
    return p;
}

Eigen::VectorXd parameterStddevs(const ShapeModel& model)
{
    return std::visit(
        [](const auto& m) -> Eigen::VectorXd {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, GlobalPcaModel>) {
                return m.stddevs();
            } else {
                Eigen::VectorXd out(m.dimension());
                for (std::size_t k = 0; k < m.stddevs.size(); ++k)
                    out.segment<3>(3 * static_cast<Eigen::Index>(k)) = m.stddevs[k];
                return out;
            }
        },
        model);
}

VertexList meanShape(const ShapeModel& model)
{
    return std::visit(
        [](const auto& m) -> VertexList {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, GlobalPcaModel>)
                return unflatten(m.mean);
            else
                return inverseTransform(WaveletCoefficients{m.coefficientMeans}, m.hierarchy);
        },
        model);
}

int vertexCount(const ShapeModel& model)
{
    return std::visit([](const auto& m) { return m.vertexCount(); }, model);
}

ModelKind kindOf(const ShapeModel& model)
{
    return std::holds_alternative<GlobalPcaModel>(model) ? ModelKind::Global : ModelKind::Local;
}

std::vector<Triangle> modelFaces(const ShapeModel& model)
{
    return std::visit(
        [](const auto& m) -> std::vector<Triangle> {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, GlobalPcaModel>)
                return m.faces;
            else
                return gridTriangles(m.hierarchy.finestDims());
        },
        model);
}

const LandmarkVertexMap& modelLandmarks(const ShapeModel& model)
{
    return std::visit([](const auto& m) -> const LandmarkVertexMap& { return m.landmarks; }, model);
}

void setModelLandmarks(ShapeModel& model, LandmarkVertexMap landmarks)
{
    const int n = vertexCount(model);
    for (const auto& [label, vertex] : landmarks)
        if (vertex < 0 || vertex >= n)
            throw DimensionError("landmark '" + label + "' refers to vertex " + std::to_string(vertex));
    std::visit([&](auto& m) { m.landmarks = std::move(landmarks); }, model);
}

} // namespace shapespace
