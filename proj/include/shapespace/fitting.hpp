#pragma once

#include "shapespace/alignment.hpp"
#include "shapespace/kdtree.hpp"
#include "shapespace/models.hpp"

#include <cstdint>
#include <vector>

namespace shapespace {

struct FitConfig {
    double tau = 10.0;            // truncation distance, mm
    double c = 1.0;               // hyper-box half-width in standard deviations
    int maxIterations = 200;      // t_G, outer iterations of the global fitter
    int samplesPerParameter = 64; // t_L, samples per local parameter
    int maxLevel = -1;            // last wavelet level optimized by the local fitter; -1 = finest
    double tolerance = 1e-8;      // relative energy change that stops the global fitter
    int memory = 10;              // quasi-Newton history length

    /// Throws Error naming the offending field.
    void validate() const;
};

struct FitResult {
    ShapeParameters params;
    SimilarityTransform initTransform; // model frame -> target frame
    VertexList vertices;               // fitted shape, model frame
    double initialEnergy = 0.0;        // at the mean shape
    double finalEnergy = 0.0;
    /// Global: true energy after every outer iteration. Local: energy after every visited parameter.
    std::vector<double> energyTrace;
    std::uint64_t nearestNeighborQueries = 0;
    /// Local: candidate evaluations of the sampling search, always 3 * n_{<=maxLevel} * t_L. Parameters with
    /// zero width are counted but evaluated without nearest-neighbor queries.
    std::uint64_t energyEvaluations = 0;
    int iterations = 0;
    double seconds = 0.0;
    std::vector<double> levelSeconds; // local: cumulative time after finishing each level

    VertexList verticesInTargetFrame() const { return initTransform.apply(vertices); }
};

/// Similarity mapping the model's landmark positions onto the target's, using labels present in both.
/// Throws DegenerateError with fewer than 3 common landmarks.
SimilarityTransform initialAlign(const LandmarkSet& targetLandmarks, const LandmarkSet& modelLandmarks);

/// Landmark positions on the model's mean shape.
LandmarkSet meanShapeLandmarks(const ShapeModel& model);

/// Truncated nearest-neighbor energy: sum_i min(|f_i - p_NN(i)|^2, tau^2).
double energy(const VertexList& vertices, const NearestNeighborIndex& target, double tau);
double energy(const ShapeModel& model, const ShapeParameters& params, const NearestNeighborIndex& target, double tau);

/// Gradient of the energy of a global model with nearest neighbors and truncation frozen at `params`.
Eigen::VectorXd energyGradient(const GlobalPcaModel& model, const Eigen::VectorXd& params,
                               const NearestNeighborIndex& target, double tau);

/// Bounded quasi-Newton fit from s = 0, alternating nearest-neighbor refresh and one projected
/// quasi-Newton step with the correspondences frozen. The cloud is mapped into the model frame with
/// init.inverse().
FitResult fitGlobal(const GlobalPcaModel& model, const PointCloud& cloud, const FitConfig& config,
                    const SimilarityTransform& init = SimilarityTransform::identity());

/// Coarse-to-fine sampling search: coefficients level 0..maxLevel in hierarchy order, each rotated component
/// chosen as the best of t_L uniform samples on [-c sigma, c sigma] or its current value.
FitResult fitLocal(const LocalWaveletModel& model, const PointCloud& cloud, const FitConfig& config,
                   const SimilarityTransform& init = SimilarityTransform::identity());

FitResult fit(const ShapeModel& model, const PointCloud& cloud, const FitConfig& config,
              const SimilarityTransform& init = SimilarityTransform::identity());

/// Exact hyper-box membership of fitted parameters.
bool insideHyperBox(const ShapeModel& model, const ShapeParameters& params, double c);

} // namespace shapespace
