#include "shapespace/evaluation.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

namespace shapespace {

SummaryStats summarize(std::span<const double> values)
{
    SummaryStats s;
    s.count = values.size();
    if (values.empty())
        return s;
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const auto n = sorted.size();
    s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(n);
    s.median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    double ss = 0.0;
    for (double v : sorted)
        ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(n));
    s.max = sorted.back();
    return s;
}

namespace {

MeanStd meanStd(const std::vector<double>& values)
{
    const auto s = summarize(values);
    return {s.mean, s.stddev};
}

} // namespace

double compactness(const GlobalPcaModel& model, int d)
{
    const auto length = static_cast<int>(model.spectrum.size());
    if (d < 1 || d > length)
        throw Error("compactness: d = " + std::to_string(d) + " outside [1, " + std::to_string(length) + "]");
    const double total = model.spectrum.cwiseMax(0.0).sum();
    if (!(total > 0.0))
        return 1.0; // no variance at all: any number of components explains all of it
    if (d == length)
        return 1.0;
    return model.spectrum.head(d).cwiseMax(0.0).sum() / total;
}

double compactness(const LocalWaveletModel& model, int d)
{
    if (d < 1 || d > model.dimension())
        throw Error("compactness: d = " + std::to_string(d) + " outside [1, " + std::to_string(model.dimension()) + "]");
    return 1.0;
}

std::vector<double> compactnessCurve(const GlobalPcaModel& model)
{
    std::vector<double> out;
    for (int d = 1; d <= model.spectrum.size(); ++d)
        out.push_back(compactness(model, d));
    return out;
}

Trainer globalTrainer(int d)
{
    return [d](const TrainingSet& data) -> ShapeModel {
        const int T = static_cast<int>(data.size());
        const int n3 = 3 * static_cast<int>(data.vertexCount());
        return trainGlobal(data, std::max(1, std::min({d, T - 1, n3 - 1})));
    };
}

Trainer localTrainer(const SubdivisionHierarchy& hierarchy)
{
    return [hierarchy](const TrainingSet& data) -> ShapeModel { return trainLocal(data, hierarchy); };
}

MeanStd generalization(const TrainingSet& data, const Trainer& trainer)
{
    data.validate();
    std::map<std::string, std::vector<std::size_t>> bySubject;
    for (std::size_t i = 0; i < data.size(); ++i)
        bySubject[data.subjectOf(i)].push_back(i);
    if (bySubject.size() < 3)
        throw Error("generalization needs at least 3 subjects");

    std::vector<double> perSubject;
    for (const auto& [subject, held] : bySubject) {
        std::vector<std::size_t> rest;
        for (std::size_t i = 0; i < data.size(); ++i)
            if (data.subjectOf(i) != subject)
                rest.push_back(i);
        const ShapeModel model = trainer(data.subset(rest));
        double sum = 0.0;
        for (auto i : held) {
            const auto& shape = data.shapes[i];
            sum += meanDistance(generate(model, project(model, shape)), shape);
        }
        perSubject.push_back(sum / static_cast<double>(held.size()));
    }
    return meanStd(perSubject);
}

MeanStd specificity(const ShapeModel& model, const TrainingSet& data, int samples, std::uint64_t seed)
{
    if (samples < 1)
        throw Error("specificity needs at least one sample");
    data.validate();
    if (static_cast<int>(data.vertexCount()) != vertexCount(model))
        throw DimensionError("specificity: training shapes do not match the model's vertex count");

    const Eigen::VectorXd sigma = parameterStddevs(model);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    ShapeParameters params = ShapeParameters::zeros(model);
    std::vector<double> errors;
    errors.reserve(static_cast<std::size_t>(samples));
    for (int s = 0; s < samples; ++s) {
        for (Eigen::Index i = 0; i < sigma.size(); ++i)
            params.values(i) = sigma(i) * gauss(rng);
        const auto shape = generate(model, params);
        double best = std::numeric_limits<double>::infinity();
        for (const auto& training : data.shapes)
            best = std::min(best, meanDistance(shape, training));
        errors.push_back(best);
    }
    return meanStd(errors);
}

LandmarkErrors landmarkDistance(const VertexList& fit, const LandmarkVertexMap& modelLandmarks,
                                const LandmarkSet& targetLandmarks)
{
    LandmarkErrors out;
    std::vector<double> values;
    for (const auto& [label, vertex] : modelLandmarks) {
        if (vertex < 0 || static_cast<std::size_t>(vertex) >= fit.size())
            throw DimensionError("landmark '" + label + "' refers to vertex " + std::to_string(vertex) +
                                 " outside the fitted shape");
        if (auto target = targetLandmarks.find(label)) {
            const double d = (fit[static_cast<std::size_t>(vertex)] - *target).norm();
            out.perLabel[label] = d;
            values.push_back(d);
        }
    }
    if (values.empty())
        throw Error("landmark distance: no landmark label is present in both the model and the target");
    out.stats = summarize(values);
    return out;
}

std::vector<double> surfaceDistance(const VertexList& fit, const NearestNeighborIndex& target)
{
    std::vector<double> out;
    out.reserve(fit.size());
    for (const auto& v : fit)
        out.push_back(target.nearest(v).distance);
    return out;
}

std::vector<double> surfaceDistance(const VertexList& fit, const PointCloud& target)
{
    return surfaceDistance(fit, NearestNeighborIndex(target));
}

std::vector<double> vertexErrors(const VertexList& fit, const VertexList& truth)
{
    if (fit.size() != truth.size())
        throw DimensionError("vertex errors: fit has " + std::to_string(fit.size()) + " vertices, truth has " +
                             std::to_string(truth.size()));
    std::vector<double> out(fit.size());
    for (std::size_t i = 0; i < fit.size(); ++i)
        out[i] = (fit[i] - truth[i]).norm();
    return out;
}

std::vector<CurvePoint> cumulativeCurve(std::span<const double> errors, double step)
{
    if (!(step > 0.0))
        throw Error("cumulative curve step must be > 0");
    std::vector<CurvePoint> out;
    if (errors.empty())
        return out;
    std::vector<double> sorted(errors.begin(), errors.end());
    std::sort(sorted.begin(), sorted.end());
    const double total = static_cast<double>(sorted.size());
    for (long k = 0;; ++k) {
        const double threshold = static_cast<double>(k) * step;
        const auto below = std::upper_bound(sorted.begin(), sorted.end(), threshold) - sorted.begin();
        out.push_back({threshold, static_cast<double>(below) / total});
        if (below == static_cast<long>(sorted.size()))
            break;
    }
    return out;
}

double percentile(std::span<const double> errors, double fraction)
{
    if (errors.empty())
        throw Error("percentile of an empty set");
    std::vector<double> sorted(errors.begin(), errors.end());
    std::sort(sorted.begin(), sorted.end());
    const auto rank = static_cast<std::size_t>(std::ceil(std::clamp(fraction, 0.0, 1.0) * sorted.size()));
    return sorted[std::max<std::size_t>(rank, 1) - 1];
}

std::vector<int> assignFolds(const TrainingSet& data, int folds, std::uint64_t seed)
{
    if (folds < 1)
        throw Error("fold count must be >= 1");
    std::vector<std::string> subjects;
    std::map<std::string, int> subjectLabel;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto s = data.subjectOf(i);
        if (subjectLabel.emplace(s, data.labels.empty() ? 0 : data.labels[i]).second)
            subjects.push_back(s);
    }
    std::map<int, std::vector<std::string>> byLabel;
    for (const auto& s : subjects)
        byLabel[subjectLabel[s]].push_back(s);

    std::mt19937_64 rng(seed);
    std::map<std::string, int> subjectFold;
    int next = 0;
    for (auto& [label, group] : byLabel) {
        // Fisher-Yates with an explicit index draw keeps the order independent of the standard library.
        for (std::size_t i = group.size(); i > 1; --i)
            std::swap(group[i - 1], group[static_cast<std::size_t>(rng() % i)]);
        for (const auto& s : group)
            subjectFold[s] = next++ % folds;
    }
    std::vector<int> out(data.size());
    for (std::size_t i = 0; i < data.size(); ++i)
        out[i] = subjectFold[data.subjectOf(i)];
    return out;
}

CrossValidationResult crossValidate10Fold(const TrainingSet& data, const std::vector<NamedTrainer>& trainers,
                                          const FitConfig& fitConfig, std::uint64_t seed,
                                          const std::function<PointCloud(std::size_t)>& target)
{
    constexpr int kFolds = 10;
    data.validate();
    if (data.size() < kFolds)
        throw Error("10-fold cross validation needs at least 10 shapes, got " + std::to_string(data.size()));
    fitConfig.validate();

    CrossValidationResult result;
    result.foldOf = assignFolds(data, kFolds, seed);
    for (const auto& t : trainers)
        result.models.push_back({t.name, {}, {}, {}});

    for (int fold = 0; fold < kFolds; ++fold) {
        std::vector<std::size_t> train, held;
        for (std::size_t i = 0; i < data.size(); ++i)
            (result.foldOf[i] == fold ? held : train).push_back(i);
        if (held.empty())
            continue;
        const auto trainSet = data.subset(train);
        for (std::size_t m = 0; m < trainers.size(); ++m) {
            const ShapeModel model = trainers[m].trainer(trainSet);
            auto& errors = result.models[m].vertexErrors;
            for (auto i : held) {
                const PointCloud cloud = target ? target(i) : PointCloud{data.shapes[i]};
                const auto fitted = fit(model, cloud, fitConfig);
                const auto e = vertexErrors(fitted.vertices, data.shapes[i]);
                errors.insert(errors.end(), e.begin(), e.end());
            }
        }
    }
    for (auto& m : result.models) {
        m.stats = summarize(m.vertexErrors);
        m.curve = cumulativeCurve(m.vertexErrors);
    }
    return result;
}

namespace {

nlohmann::json statsJson(const SummaryStats& s)
{
    return {{"mean", s.mean}, {"median", s.median}, {"stddev", s.stddev}, {"max", s.max}, {"count", s.count}};
}

} // namespace

std::string toJson(const EvaluationReport& report, int indent)
{
    nlohmann::ordered_json j;
    j["model"] = report.modelName;
    j["compactness"] = report.compactnessCurve;
    if (report.generalization)
        j["generalization_mm"] = {{"mean", report.generalization->mean}, {"stddev", report.generalization->stddev}};
    if (report.specificity)
        j["specificity_mm"] = {{"mean", report.specificity->mean}, {"stddev", report.specificity->stddev}};
    if (!report.perVertexError.empty()) {
        j["per_vertex_error_mm"] = report.perVertexError;
        j["per_vertex_error_stats"] = statsJson(summarize(report.perVertexError));
    }
    if (report.landmarkErrors) {
        j["landmark_errors_mm"] = report.landmarkErrors->perLabel;
        j["landmark_error_stats"] = statsJson(report.landmarkErrors->stats);
    }
    auto& curve = j["cumulative_error_curve"] = nlohmann::ordered_json::array();
    for (const auto& p : report.cumulativeErrorCurve)
        curve.push_back({{"threshold_mm", p.threshold}, {"fraction", p.fraction}});
    return j.dump(indent);
}

void writeCurvesCsv(const std::vector<std::pair<std::string, std::vector<CurvePoint>>>& curves,
                    const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write " + path.string());
    out << "model,threshold_mm,fraction\n";
    char buffer[64];
    for (const auto& [name, curve] : curves)
        for (const auto& p : curve) {
            std::snprintf(buffer, sizeof(buffer), "%.1f,%.10g", p.threshold, p.fraction);
            out << name << ',' << buffer << '\n';
        }
    if (!out)
        throw Error("failed writing " + path.string());
}

} // namespace shapespace
