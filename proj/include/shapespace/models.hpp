#pragma once

#include "shapespace/geometry.hpp"
#include "shapespace/wavelet.hpp"

#include <Eigen/Core>

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace shapespace {

/// T shapes in dense, index-wise correspondence.
struct TrainingSet {
    std::vector<VertexList> shapes;
    std::vector<std::string> subjectIds; // empty, or one per shape
    std::vector<int> labels;             // optional class labels for stratified splits
    std::optional<GridDims> gridDims;    // set when every shape is a grid of these dims
    std::vector<Triangle> faces;         // connectivity shared by all shapes (may be empty)
    bool gpaAligned = false;

    std::size_t size() const { return shapes.size(); }
    std::size_t vertexCount() const { return shapes.empty() ? 0 : shapes.front().size(); }
    std::string subjectOf(std::size_t i) const;

    /// Checks T >= 2, uniform vertex counts and per-shape metadata sizes.
    void validate() const;
    TrainingSet subset(const std::vector<std::size_t>& indices) const;
};

/// GPA-aligns the corpus and restores the corpus' mean centroid size, so aligned shapes stay in mm.
TrainingSet alignTrainingSet(const TrainingSet& data);

/// Landmark label -> vertex index on the model's mean shape.
using LandmarkVertexMap = std::map<std::string, int>;

enum class ModelKind : std::uint32_t { Global = 1, Local = 2 };

struct GlobalPcaModel {
    Eigen::VectorXd mean;         // 3n, interleaved xyz
    Eigen::MatrixXd basis;        // 3n x d, orthonormal columns
    Eigen::VectorXd eigenvalues;  // d retained, non-increasing
    Eigen::VectorXd spectrum;     // full spectrum, min(3n-1, T-1) values; used for compactness
    std::vector<Triangle> faces;
    std::optional<GridDims> gridDims;
    LandmarkVertexMap landmarks;

    int vertexCount() const { return static_cast<int>(mean.size() / 3); }
    int dimension() const { return static_cast<int>(basis.cols()); }
    Eigen::VectorXd stddevs() const { return eigenvalues.cwiseMax(0.0).cwiseSqrt(); }
    bool rankDeficient() const;
};

struct LocalWaveletModel {
    SubdivisionHierarchy hierarchy;
    VertexList coefficientMeans;        // one per coefficient
    std::vector<Matrix3> rotations;     // U^k, columns ordered by non-increasing variance
    VertexList stddevs;                 // per-coefficient, per rotated component
    LandmarkVertexMap landmarks;

    int vertexCount() const { return hierarchy.vertexCount(); }
    int dimension() const { return 3 * vertexCount(); }
};

using ShapeModel = std::variant<GlobalPcaModel, LocalWaveletModel>;

/// Global: s in R^d. Local: r^k stacked per coefficient, values(3k + j) is component j of r^k.
struct ShapeParameters {
    ModelKind kind = ModelKind::Global;
    Eigen::VectorXd values;

    static ShapeParameters zeros(const ShapeModel& model);
};

GlobalPcaModel trainGlobal(const TrainingSet& data, int d);
LocalWaveletModel trainLocal(const TrainingSet& data, const SubdivisionHierarchy& hierarchy);

VertexList generate(const GlobalPcaModel& model, const Eigen::VectorXd& params);
VertexList generate(const LocalWaveletModel& model, const Eigen::VectorXd& params);
VertexList generate(const ShapeModel& model, const ShapeParameters& params);

Eigen::VectorXd project(const GlobalPcaModel& model, const VertexList& shape);
Eigen::VectorXd project(const LocalWaveletModel& model, const VertexList& shape);
ShapeParameters project(const ShapeModel& model, const VertexList& shape);

/// Per-parameter standard deviations, in parameter order.
Eigen::VectorXd parameterStddevs(const ShapeModel& model);
VertexList meanShape(const ShapeModel& model);
int vertexCount(const ShapeModel& model);
ModelKind kindOf(const ShapeModel& model);
std::vector<Triangle> modelFaces(const ShapeModel& model);
const LandmarkVertexMap& modelLandmarks(const ShapeModel& model);
void setModelLandmarks(ShapeModel& model, LandmarkVertexMap landmarks);

/// Flips a vector so its largest-magnitude entry is positive (first such entry on ties).
void fixSign(Eigen::Ref<Eigen::VectorXd> v);

} // namespace shapespace
