#pragma once

#include "shapespace/fitting.hpp"
#include "shapespace/models.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace shapespace {

struct SummaryStats {
    double mean = 0.0;
    double median = 0.0;
    double stddev = 0.0; // population
    double max = 0.0;
    std::size_t count = 0;
};

SummaryStats summarize(std::span<const double> values);

struct MeanStd {
    double mean = 0.0;
    double stddev = 0.0;
};

/// Fraction of the full spectrum's variance captured by the first d components. 1 <= d <= spectrum length.
double compactness(const GlobalPcaModel& model, int d);
/// The local model keeps every dimension, so its compactness is 1 for every d.
double compactness(const LocalWaveletModel& model, int d);
/// C(d) for d = 1 .. spectrum length.
std::vector<double> compactnessCurve(const GlobalPcaModel& model);

using Trainer = std::function<ShapeModel(const TrainingSet&)>;

/// Global PCA trainer keeping min(d, T-1, 3n-1) components of whatever subset it receives.
Trainer globalTrainer(int d);
Trainer localTrainer(const SubdivisionHierarchy& hierarchy);

/// Leave-one-subject-out reconstruction error. The corpus must already be aligned; every held-out shape is
/// projected into the model trained on the remaining subjects and reconstructed. Per-subject error is the
/// mean corresponding-vertex distance averaged over that subject's shapes.
MeanStd generalization(const TrainingSet& data, const Trainer& trainer);

/// Random model samples (global: s_i ~ N(0, lambda_i); local: r^k_j ~ N(0, sigma^k_j^2)) scored by the mean
/// vertex distance to the closest training shape.
MeanStd specificity(const ShapeModel& model, const TrainingSet& data, int samples, std::uint64_t seed);

struct LandmarkErrors {
    std::map<std::string, double> perLabel;
    SummaryStats stats;
};

/// Distances between fitted landmark vertices and target landmarks, over labels present in both.
/// Throws Error when no label is shared.
LandmarkErrors landmarkDistance(const VertexList& fit, const LandmarkVertexMap& modelLandmarks,
                                const LandmarkSet& targetLandmarks);

/// Per-vertex distance from the fit to its nearest target point.
std::vector<double> surfaceDistance(const VertexList& fit, const PointCloud& target);
std::vector<double> surfaceDistance(const VertexList& fit, const NearestNeighborIndex& target);

/// Per-vertex distance between corresponding vertices.
std::vector<double> vertexErrors(const VertexList& fit, const VertexList& truth);

struct CurvePoint {
    double threshold = 0.0; // mm
    double fraction = 0.0;
};

/// Fraction of errors <= threshold at thresholds 0, step, 2 step, ... up to the first one reaching 1.
std::vector<CurvePoint> cumulativeCurve(std::span<const double> errors, double step = 0.1);

/// Smallest error e such that at least `fraction` of the errors are <= e.
double percentile(std::span<const double> errors, double fraction);

/// Assigns subjects to folds: subjects are grouped by label, shuffled with the seed and dealt round-robin,
/// so every fold gets a near-equal share of each label. All shapes of a subject share a fold.
std::vector<int> assignFolds(const TrainingSet& data, int folds, std::uint64_t seed);

struct NamedTrainer {
    std::string name;
    Trainer trainer;
};

struct CrossValidationModelResult {
    std::string name;
    std::vector<double> vertexErrors; // every vertex of every held-out fit
    SummaryStats stats;
    std::vector<CurvePoint> curve;
};

struct CrossValidationResult {
    std::vector<int> foldOf; // per shape
    std::vector<CrossValidationModelResult> models;
};

/// Ten-fold cross validation: for each fold, every trainer learns from the other nine folds and fits each
/// held-out shape's cloud (`target(i)`, default: the shape's own vertices) starting from the identity pose.
/// Requires an aligned corpus with T >= 10; with T not divisible by 10 some folds are one subject smaller.
CrossValidationResult crossValidate10Fold(const TrainingSet& data, const std::vector<NamedTrainer>& trainers,
                                          const FitConfig& fitConfig, std::uint64_t seed,
                                          const std::function<PointCloud(std::size_t)>& target = {});

struct EvaluationReport {
    std::string modelName;
    std::vector<double> compactnessCurve;
    std::optional<MeanStd> generalization;
    std::optional<MeanStd> specificity;
    std::vector<double> perVertexError;
    std::optional<LandmarkErrors> landmarkErrors;
    std::vector<CurvePoint> cumulativeErrorCurve;
};

/// Deterministic JSON text (no timings).
std::string toJson(const EvaluationReport& report, int indent = 2);

/// CSV with columns model,threshold_mm,fraction.
void writeCurvesCsv(const std::vector<std::pair<std::string, std::vector<CurvePoint>>>& curves,
                    const std::filesystem::path& path);

} // namespace shapespace
