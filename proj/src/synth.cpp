#include "shapespace/synth.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <numbers>
#include <random>

namespace shapespace {

void SynthSpec::validate() const
{
    if (gridDims.rows < 2 || gridDims.cols < 2)
        throw Error("synth: gridDims must be at least 2 x 2");
    if (!(height > 0.0) || !(width > 0.0))
        throw Error("synth: height and width must be > 0");
    if (!(cylinderRadius > 0.0))
        throw Error("synth: cylinderRadius must be > 0");
    for (std::size_t i = 0; i < factors.size(); ++i) {
        const auto& f = factors[i];
        const std::string name = "synth: factors[" + std::to_string(i) + "]";
        if (!(f.radius > 0.0))
            throw Error(name + ".radius must be > 0");
        if (f.centerU < 0.0 || f.centerU > 1.0 || f.centerV < 0.0 || f.centerV > 1.0)
            throw Error(name + " center must lie inside the patch ([0, 1] x [0, 1])");
        if (f.minAmplitude > f.maxAmplitude)
            throw Error(name + ".minAmplitude exceeds maxAmplitude");
    }
    if (!(noiseStddev >= 0.0))
        throw Error("synth: noiseStddev must be >= 0");
    if (!(poseRotationDegrees >= 0.0) || !(poseTranslation >= 0.0))
        throw Error("synth: pose jitter must be >= 0");
    if (classes < 1)
        throw Error("synth: classes must be >= 1");
    if (count < 2)
        throw Error("synth: count must be >= 2");
}

SynthSpec SynthSpec::reference()
{
    SynthSpec spec;
    spec.factors = {
        {0.30, 0.25, 18.0, -6.0, 6.0}, {0.30, 0.75, 18.0, -6.0, 6.0}, {0.55, 0.50, 14.0, -8.0, 8.0},
        {0.80, 0.50, 22.0, -5.0, 5.0}, {0.15, 0.50, 25.0, -4.0, 4.0},
    };
    return spec;
}

const std::vector<std::string>& initLandmarkLabels()
{
    static const std::vector<std::string> labels = {"corner_tl", "corner_tr", "corner_bl", "corner_br", "center"};
    return labels;
}

const std::vector<std::string>& evalLandmarkLabels()
{
    static const std::vector<std::string> labels = {"left", "right", "top", "bottom"};
    return labels;
}

LandmarkVertexMap synthLandmarkVertices(GridDims dims)
{
    const int R = dims.rows - 1, C = dims.cols - 1;
    auto at = [&](int r, int c) { return r * dims.cols + c; };
    return {
        {"corner_tl", at(0, 0)},         {"corner_tr", at(0, C)},         {"corner_bl", at(R, 0)},
        {"corner_br", at(R, C)},         {"center", at(R / 2, C / 2)},    {"left", at(R / 2, C / 4)},
        {"right", at(R / 2, (3 * C) / 4)}, {"top", at(R / 4, C / 2)},     {"bottom", at((3 * R) / 4, C / 2)},
    };
}

namespace {

struct PatchFrame {
    Point3 position;
    Point3 normal;
};

PatchFrame patchPoint(const SynthSpec& spec, double u, double v)
{
    const double theta = (v - 0.5) * spec.width / spec.cylinderRadius;
    const double R = spec.cylinderRadius;
    return {Point3(R * std::sin(theta), (0.5 - u) * spec.height, R * std::cos(theta) - R),
            Point3(std::sin(theta), 0.0, std::cos(theta))};
}

double bump(const SynthSpec& spec, const BumpFactor& f, double u, double v)
{
    const double du = (u - f.centerU) * spec.height, dv = (v - f.centerV) * spec.width;
    return std::exp(-(du * du + dv * dv) / (2.0 * f.radius * f.radius));
}

double gridCoordinate(int i, int count) { return count > 1 ? static_cast<double>(i) / (count - 1) : 0.0; }

} // namespace

VertexList basePatch(const SynthSpec& spec)
{
    VertexList out;
    out.reserve(static_cast<std::size_t>(spec.gridDims.count()));
    for (int r = 0; r < spec.gridDims.rows; ++r)
        for (int c = 0; c < spec.gridDims.cols; ++c)
            out.push_back(patchPoint(spec, gridCoordinate(r, spec.gridDims.rows), gridCoordinate(c, spec.gridDims.cols))
                              .position);
    return out;
}

LandmarkSet landmarksOf(const VertexList& shape, const LandmarkVertexMap& vertices)
{
    LandmarkSet out;
    for (const auto& [label, v] : vertices) {
        if (v < 0 || static_cast<std::size_t>(v) >= shape.size())
            throw DimensionError("landmark '" + label + "' refers to vertex " + std::to_string(v) +
                                 " outside the shape");
        out.set(label, shape[static_cast<std::size_t>(v)]);
    }
    return out;
}

SynthCorpus generateCorpus(const SynthSpec& spec)
{
    spec.validate();
    const GridDims dims = spec.gridDims;
    const auto n = static_cast<std::size_t>(dims.count());
    const auto k = spec.factors.size();

    // Patch geometry and bump profiles do not depend on the shape.
    std::vector<PatchFrame> frames(n);
    Eigen::MatrixXd profiles(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
    for (int r = 0; r < dims.rows; ++r) {
        const double u = gridCoordinate(r, dims.rows);
        for (int c = 0; c < dims.cols; ++c) {
            const double v = gridCoordinate(c, dims.cols);
            const auto i = static_cast<std::size_t>(r * dims.cols + c);
            frames[i] = patchPoint(spec, u, v);
            for (std::size_t j = 0; j < k; ++j)
                profiles(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = bump(spec, spec.factors[j], u, v);
        }
    }

    SynthCorpus corpus;
    corpus.landmarkVertices = synthLandmarkVertices(dims);
    corpus.latents.resize(spec.count, static_cast<Eigen::Index>(k));
    auto& data = corpus.data;
    data.gridDims = dims;
    data.faces = gridTriangles(dims);

    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    for (int t = 0; t < spec.count; ++t) {
        const int label = t % spec.classes;
        Eigen::VectorXd amplitude(static_cast<Eigen::Index>(k));
        for (std::size_t j = 0; j < k; ++j) {
            const auto& f = spec.factors[j];
            amplitude(static_cast<Eigen::Index>(j)) =
                f.minAmplitude + (f.maxAmplitude - f.minAmplitude) * unit(rng) + spec.classShift * label;
        }
        corpus.latents.row(t) = amplitude.transpose();
        const Eigen::VectorXd displacement = profiles * amplitude;

        VertexList shape(n);
        for (std::size_t i = 0; i < n; ++i)
            shape[i] = frames[i].position + displacement(static_cast<Eigen::Index>(i)) * frames[i].normal;
        if (spec.noiseStddev > 0.0)
            for (auto& p : shape)
                p += spec.noiseStddev * Point3(gauss(rng), gauss(rng), gauss(rng));
        if (spec.poseRotationDegrees > 0.0 || spec.poseTranslation > 0.0) {
            Point3 axis(gauss(rng), gauss(rng), gauss(rng));
            axis.normalize();
            const double angle = spec.poseRotationDegrees * unit(rng) * std::numbers::pi / 180.0;
            const Matrix3 rotation = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
            const Point3 offset = spec.poseTranslation * Point3(2 * unit(rng) - 1, 2 * unit(rng) - 1, 2 * unit(rng) - 1);
            for (auto& p : shape)
                p = rotation * p + offset;
        }

        corpus.landmarks.push_back(landmarksOf(shape, corpus.landmarkVertices));
        data.shapes.push_back(std::move(shape));
        data.subjectIds.push_back("subject_" + std::to_string(t));
        data.labels.push_back(label);
    }
    return corpus;
}

CorruptedCloud occlude(const PointCloud& cloud, const Point3& center, double radius,
                       const std::optional<OutlierBlob>& blob)
{
    if (!(radius >= 0.0))
        throw Error("occlusion radius must be >= 0");
    CorruptedCloud out;
    const double radiusSq = radius * radius;
    for (const auto& p : cloud.points)
        if ((p - center).squaredNorm() >= radiusSq)
            out.cloud.points.push_back(p);
    if (out.cloud.empty())
        throw DegenerateError("occlusion removed every point of the cloud");
    out.outlier.assign(out.cloud.size(), 0);
    if (blob) {
        std::mt19937_64 rng(blob->seed);
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const Point3 blobCenter = center + blob->offset;
        for (int i = 0; i < blob->count; ++i) {
            Point3 dir(gauss(rng), gauss(rng), gauss(rng));
            dir.normalize();
            out.cloud.points.push_back(blobCenter + blob->radius * std::cbrt(unit(rng)) * dir);
            out.outlier.push_back(1);
        }
    }
    return out;
}

CorruptedCloud addNoise(const PointCloud& cloud, double stddev, double outlierFraction, std::uint64_t seed)
{
    if (!(stddev >= 0.0))
        throw Error("noise stddev must be >= 0");
    if (!(outlierFraction >= 0.0))
        throw Error("outlier fraction must be >= 0");
    CorruptedCloud out;
    out.cloud = cloud;
    out.outlier.assign(cloud.size(), 0);
    std::mt19937_64 rng(seed);
    if (stddev > 0.0) {
        std::normal_distribution<double> gauss(0.0, stddev);
        for (auto& p : out.cloud.points)
            p += Point3(gauss(rng), gauss(rng), gauss(rng));
    }
    const auto outliers = static_cast<std::size_t>(std::llround(outlierFraction * static_cast<double>(cloud.size())));
    if (outliers > 0 && !cloud.empty()) {
        const auto box = boundingBox(cloud.points);
        const Point3 pad = Point3::Constant(0.1 * box.diagonal());
        const Point3 lo = box.min - pad, hi = box.max + pad;
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (std::size_t i = 0; i < outliers; ++i) {
            const Point3 t(unit(rng), unit(rng), unit(rng));
            out.cloud.points.push_back(lo + t.cwiseProduct(hi - lo));
            out.outlier.push_back(1);
        }
    }
    return out;
}

PointCloud sampleSurface(const VertexList& grid, GridDims dims, int factor)
{
    if (static_cast<int>(grid.size()) != dims.count())
        throw DimensionError("sampleSurface: vertex count does not match the grid dims");
    if (factor < 1)
        throw Error("sampleSurface: factor must be >= 1");
    const int rows = (dims.rows - 1) * factor + 1, cols = (dims.cols - 1) * factor + 1;
    PointCloud out;
    out.points.reserve(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
    auto at = [&](int r, int c) -> const Point3& { return grid[static_cast<std::size_t>(r * dims.cols + c)]; };
    for (int R = 0; R < rows; ++R) {
        const int r0 = std::min(R / factor, dims.rows - 2);
        const double a = static_cast<double>(R - r0 * factor) / factor;
        for (int C = 0; C < cols; ++C) {
            const int c0 = std::min(C / factor, dims.cols - 2);
            const double b = static_cast<double>(C - c0 * factor) / factor;
            if (a == 0.0 && b == 0.0) {
                out.points.push_back(at(r0, c0)); // keep original vertices bit-exact
                continue;
            }
            out.points.push_back((1 - a) * (1 - b) * at(r0, c0) + (1 - a) * b * at(r0, c0 + 1) +
                                 a * (1 - b) * at(r0 + 1, c0) + a * b * at(r0 + 1, c0 + 1));
        }
    }
    return out;
}

} // namespace shapespace
