#include "shapespace/fitting.hpp"

#include "shapespace/box_lbfgs.hpp"
#include "shapespace/wavelet.hpp"

#include <chrono>
#include <cmath>

namespace shapespace {

void FitConfig::validate() const
{
    if (!(tau > 0.0))
        throw Error("fit config: tau must be > 0");
    if (!(c >= 0.0))
        throw Error("fit config: c must be >= 0");
    if (maxIterations < 1)
        throw Error("fit config: maxIterations must be >= 1");
    if (samplesPerParameter < 2)
        throw Error("fit config: samplesPerParameter must be >= 2");
    if (maxLevel < -1)
        throw Error("fit config: maxLevel must be >= 0 (or -1 for all levels)");
    if (!(tolerance >= 0.0))
        throw Error("fit config: tolerance must be >= 0");
    if (memory < 1)
        throw Error("fit config: memory must be >= 1");
}

SimilarityTransform initialAlign(const LandmarkSet& targetLandmarks, const LandmarkSet& modelLandmarks)
{
    VertexList source, target;
    for (const auto& entry : modelLandmarks.entries()) {
        if (!entry.position)
            continue;
        if (auto t = targetLandmarks.find(entry.label)) {
            source.push_back(*entry.position);
            target.push_back(*t);
        }
    }
    if (source.size() < 3)
        throw DegenerateError("initial alignment needs at least 3 landmarks present in both sets, found " +
                              std::to_string(source.size()));
    return alignCorresponding(source, target).transform;
}

LandmarkSet meanShapeLandmarks(const ShapeModel& model)
{
    const auto mean = meanShape(model);
    LandmarkSet out;
    for (const auto& [label, vertex] : modelLandmarks(model))
        out.set(label, mean[static_cast<std::size_t>(vertex)]);
    return out;
}

namespace {

using Clock = std::chrono::steady_clock;

double secondsSince(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

double truncatedTerm(const Point3& p, const NearestNeighborIndex& target, double tauSq)
{
    const auto nn = target.nearest(p);
    return std::min((p - target.points()[static_cast<std::size_t>(nn.index)]).squaredNorm(), tauSq);
}

PointCloud toModelFrame(const PointCloud& cloud, const SimilarityTransform& init)
{
    if (cloud.empty())
        throw DegenerateError("cannot fit to an empty point cloud");
    return PointCloud{init.inverse().apply(cloud.points)};
}

/// Nearest neighbors frozen at one parameter vector: residual targets and truncation mask.
struct FrozenCorrespondence {
    Eigen::VectorXd targets; // 3n, target point per vertex (unused where inactive)
    Eigen::VectorXd active;  // 3n, 1 where the vertex term is not truncated
    int truncated = 0;
    double energy = 0.0;
};

FrozenCorrespondence correspond(const Eigen::VectorXd& flat, const NearestNeighborIndex& target, double tau)
{
    const double tauSq = tau * tau;
    const auto n = flat.size() / 3;
    FrozenCorrespondence fc;
    fc.targets.resize(flat.size());
    fc.active.setZero(flat.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        const Point3 p = flat.segment<3>(3 * i);
        const auto nn = target.nearest(p);
        const Point3& q = target.points()[static_cast<std::size_t>(nn.index)];
        const double d2 = (p - q).squaredNorm();
        fc.targets.segment<3>(3 * i) = q;
        if (d2 < tauSq) {
            fc.active.segment<3>(3 * i).setOnes();
            fc.energy += d2;
        } else {
            ++fc.truncated;
            fc.energy += tauSq;
        }
    }
    return fc;
}

double frozenEnergy(const GlobalPcaModel& model, const FrozenCorrespondence& fc, const Eigen::VectorXd& params,
                    double tau, Eigen::VectorXd* gradient)
{
    const Eigen::VectorXd residual = (model.mean + model.basis * params - fc.targets).cwiseProduct(fc.active);
    if (gradient)
        *gradient = 2.0 * (model.basis.transpose() * residual);
    return residual.squaredNorm() + fc.truncated * tau * tau;
}

Eigen::VectorXd boxHalfWidths(const ShapeModel& model, double c) { return c * parameterStddevs(model); }

} // namespace

double energy(const VertexList& vertices, const NearestNeighborIndex& target, double tau)
{
    const double tauSq = tau * tau;
    double sum = 0.0;
    for (const auto& v : vertices)
        sum += truncatedTerm(v, target, tauSq);
    return sum;
}

double energy(const ShapeModel& model, const ShapeParameters& params, const NearestNeighborIndex& target, double tau)
{
    return energy(generate(model, params), target, tau);
}

Eigen::VectorXd energyGradient(const GlobalPcaModel& model, const Eigen::VectorXd& params,
                               const NearestNeighborIndex& target, double tau)
{
    if (params.size() != model.dimension())
        throw DimensionError("energyGradient: parameter dimension mismatch");
    const auto fc = correspond(model.mean + model.basis * params, target, tau);
    Eigen::VectorXd gradient;
    frozenEnergy(model, fc, params, tau, &gradient);
    return gradient;
}

FitResult fitGlobal(const GlobalPcaModel& model, const PointCloud& cloud, const FitConfig& config,
                    const SimilarityTransform& init)
{
    config.validate();
    const auto start = Clock::now();
    const NearestNeighborIndex index(toModelFrame(cloud, init));
    const auto n = static_cast<std::uint64_t>(model.vertexCount());
    const Eigen::VectorXd half = boxHalfWidths(model, config.c);
    BoxLbfgs solver(-half, half, config.memory);

    FitResult result;
    result.initTransform = init;
    result.params.kind = ModelKind::Global;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(model.dimension());
    Eigen::VectorXd previousX, previousGradient;

    auto fc = correspond(model.mean + model.basis * x, index, config.tau);
    result.nearestNeighborQueries += n;
    result.initialEnergy = fc.energy;
    result.energyTrace.push_back(fc.energy);

    for (int iter = 0; iter < config.maxIterations; ++iter) {
        Eigen::VectorXd gradient;
        const double value = frozenEnergy(model, fc, x, config.tau, &gradient);
        if (iter > 0)
            solver.update(x - previousX, gradient - previousGradient);
        const Eigen::VectorXd direction = solver.direction(x, gradient);
        auto objective = [&](const Eigen::VectorXd& candidate) {
            return frozenEnergy(model, fc, candidate, config.tau, nullptr);
        };
        const auto step = projectedLineSearch(objective, solver, x, value, gradient, direction);
        result.iterations = iter + 1;
        if (!step.improved)
            break;
        previousX = x;
        previousGradient = gradient;
        x = step.x;

        const double before = fc.energy;
        fc = correspond(model.mean + model.basis * x, index, config.tau);
        result.nearestNeighborQueries += n;
        result.energyTrace.push_back(fc.energy);
        if (std::abs(before - fc.energy) <= config.tolerance * std::max(before, 1e-300))
            break;
    }

    result.params.values = x;
    result.vertices = generate(model, x);
    result.finalEnergy = fc.energy;
    result.seconds = secondsSince(start);
    return result;
}

FitResult fitLocal(const LocalWaveletModel& model, const PointCloud& cloud, const FitConfig& config,
                   const SimilarityTransform& init)
{
    config.validate();
    const auto& h = model.hierarchy;
    const int maxLevel = config.maxLevel < 0 ? h.levels() : config.maxLevel;
    if (maxLevel > h.levels())
        throw Error("fit config: maxLevel " + std::to_string(maxLevel) + " exceeds the model's " +
                    std::to_string(h.levels()) + " levels");

    const auto start = Clock::now();
    const NearestNeighborIndex index(toModelFrame(cloud, init));
    const double tauSq = config.tau * config.tau;
    const int samples = config.samplesPerParameter;

    FitResult result;
    result.initTransform = init;
    result.params.kind = ModelKind::Local;
    result.params.values = Eigen::VectorXd::Zero(model.dimension());

    VertexList positions = generate(model, result.params.values);
    std::vector<double> terms(positions.size());
    double current = 0.0;
    for (std::size_t i = 0; i < positions.size(); ++i) {
        terms[i] = truncatedTerm(positions[i], index, tauSq);
        current += terms[i];
    }
    result.nearestNeighborQueries += positions.size();
    result.initialEnergy = current;

    std::vector<double> candidateTerms, bestTerms;
    const int coefficientLimit = h.coefficientCount(maxLevel);
    int level = 0;
    for (int k = 0; k < coefficientLimit; ++k) {
        while (h.coefficientLevel(k) > level) {
            result.levelSeconds.push_back(secondsSince(start));
            ++level;
        }
        const auto column = basisColumn(h, k);
        const std::size_t support = column.vertices.size();
        candidateTerms.resize(support);
        bestTerms.resize(support);

        for (int j = 0; j < 3; ++j) {
            const double width = config.c * model.stddevs[static_cast<std::size_t>(k)](j);
            if (!(width > 0.0)) {
                // Box of width zero: every sample is 0, the current value, so each evaluation returns the
                // current energy without touching the geometry.
                result.energyEvaluations += static_cast<std::uint64_t>(samples);
                result.energyTrace.push_back(current);
                continue;
            }
            const Point3 axis = model.rotations[static_cast<std::size_t>(k)].col(j);
            const auto slot = static_cast<Eigen::Index>(3 * k + j);
            const double value = result.params.values(slot);

            double supportSum = 0.0;
            for (std::size_t s = 0; s < support; ++s)
                supportSum += terms[static_cast<std::size_t>(column.vertices[s])];

            double bestValue = value;
            double bestEnergy = current;
            bool moved = false;
            for (int t = 0; t < samples; ++t) {
                const double sample =
                    t == samples - 1 ? width : -width + 2.0 * width * static_cast<double>(t) / (samples - 1);
                const Point3 shift = (sample - value) * axis;
                double sum = 0.0;
                for (std::size_t s = 0; s < support; ++s) {
                    const auto v = static_cast<std::size_t>(column.vertices[s]);
                    candidateTerms[s] = truncatedTerm(positions[v] + column.weights[s] * shift, index, tauSq);
                    sum += candidateTerms[s];
                }
                result.nearestNeighborQueries += support;
                ++result.energyEvaluations;
                const double candidate = current - supportSum + sum;
                if (candidate < bestEnergy ||
                    (candidate == bestEnergy && std::abs(sample) < std::abs(bestValue))) {
                    bestEnergy = candidate;
                    bestValue = sample;
                    bestTerms.swap(candidateTerms);
                    moved = true;
                }
            }
            if (moved && bestValue != value) {
                const Point3 shift = (bestValue - value) * axis;
                for (std::size_t s = 0; s < support; ++s) {
                    const auto v = static_cast<std::size_t>(column.vertices[s]);
                    positions[v] += column.weights[s] * shift;
                    terms[v] = bestTerms[s];
                }
                result.params.values(slot) = bestValue;
                current = bestEnergy;
            }
            result.energyTrace.push_back(current);
        }
    }
    while (level <= maxLevel) {
        result.levelSeconds.push_back(secondsSince(start));
        ++level;
    }

    result.vertices = generate(model, result.params.values);
    result.finalEnergy = energy(result.vertices, index, config.tau);
    result.nearestNeighborQueries += result.vertices.size();
    result.seconds = secondsSince(start);
    return result;
}

FitResult fit(const ShapeModel& model, const PointCloud& cloud, const FitConfig& config,
              const SimilarityTransform& init)
{
    return std::visit(
        [&](const auto& m) {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, GlobalPcaModel>)
                return fitGlobal(m, cloud, config, init);
            else
                return fitLocal(m, cloud, config, init);
        },
        model);
}

bool insideHyperBox(const ShapeModel& model, const ShapeParameters& params, double c)
{
    const Eigen::VectorXd half = boxHalfWidths(model, c);
    if (params.values.size() != half.size())
        return false;
    return (params.values.array().abs() <= half.array()).all();
}

} // namespace shapespace
