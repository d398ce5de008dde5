#include "shapespace/alignment.hpp"
#include "shapespace/evaluation.hpp"
#include "shapespace/fitting.hpp"
#include "shapespace/kdtree.hpp"
#include "shapespace/mesh_io.hpp"
#include "shapespace/model_io.hpp"
#include "shapespace/models.hpp"
#include "shapespace/synth.hpp"
#include "shapespace/wavelet.hpp"

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace shapespace;

namespace {

using RowPoints = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

// Vertex lists cross the boundary as (n, 3) float64 arrays.
VertexList toVertices(const Eigen::Ref<const RowPoints>& array)
{
    VertexList out(static_cast<std::size_t>(array.rows()));
    for (Eigen::Index i = 0; i < array.rows(); ++i)
        out[static_cast<std::size_t>(i)] = array.row(i).transpose();
    return out;
}

RowPoints toArray(const VertexList& vertices)
{
    RowPoints out(static_cast<Eigen::Index>(vertices.size()), 3);
    for (std::size_t i = 0; i < vertices.size(); ++i)
        out.row(static_cast<Eigen::Index>(i)) = vertices[i].transpose();
    return out;
}

std::vector<VertexList> toShapes(const std::vector<RowPoints>& arrays)
{
    std::vector<VertexList> out;
    out.reserve(arrays.size());
    for (const auto& a : arrays)
        out.push_back(toVertices(a));
    return out;
}

std::vector<RowPoints> toArrays(const std::vector<VertexList>& shapes)
{
    std::vector<RowPoints> out;
    out.reserve(shapes.size());
    for (const auto& s : shapes)
        out.push_back(toArray(s));
    return out;
}

std::map<std::string, Point3> landmarkDict(const LandmarkSet& set)
{
    std::map<std::string, Point3> out;
    for (const auto& e : set.entries())
        if (e.position)
            out[e.label] = *e.position;
    return out;
}

LandmarkSet landmarkSet(const std::map<std::string, Point3>& dict)
{
    LandmarkSet out;
    for (const auto& [label, p] : dict)
        out.set(label, p);
    return out;
}

TrainingSet trainingSet(const std::vector<RowPoints>& shapes, std::optional<std::pair<int, int>> grid,
                        bool aligned)
{
    TrainingSet data;
    data.shapes = toShapes(shapes);
    if (grid)
        data.gridDims = GridDims{grid->first, grid->second};
    data.gpaAligned = aligned;
    data.validate();
    return data;
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Global and local statistical shape spaces: training, fitting and evaluation";

    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
    py::register_exception<DegenerateError>(m, "DegenerateError", PyExc_ValueError);
    py::register_exception<ModelFormatError>(m, "ModelFormatError", PyExc_IOError);

    py::class_<SubdivisionHierarchy>(m, "SubdivisionHierarchy")
        .def(py::init([](int rows, int cols, int levels) { return SubdivisionHierarchy({rows, cols}, levels); }),
             py::arg("base_rows") = 5, py::arg("base_cols") = 7, py::arg("levels") = 6)
        .def_property_readonly("levels", &SubdivisionHierarchy::levels)
        .def_property_readonly("vertex_count", &SubdivisionHierarchy::vertexCount)
        .def_property_readonly("finest_dims", [](const SubdivisionHierarchy& h) {
            return std::make_pair(h.finestDims().rows, h.finestDims().cols);
        })
        .def("coefficient_count", &SubdivisionHierarchy::coefficientCount, py::arg("level"))
        .def("coefficient_vertex", &SubdivisionHierarchy::coefficientVertex, py::arg("k"))
        .def("coefficient_level", &SubdivisionHierarchy::coefficientLevel, py::arg("k"));

    m.def(
        "forward_transform",
        [](const Eigen::Ref<const RowPoints>& grid, const SubdivisionHierarchy& h) {
            return toArray(forwardTransform(toVertices(grid), h).coeffs);
        },
        py::arg("grid"), py::arg("hierarchy"));
    m.def(
        "inverse_transform",
        [](const Eigen::Ref<const RowPoints>& coeffs, const SubdivisionHierarchy& h, int upToLevel) {
            return toArray(inverseTransform(WaveletCoefficients{toVertices(coeffs)}, h, upToLevel));
        },
        py::arg("coeffs"), py::arg("hierarchy"), py::arg("up_to_level") = -1);
    m.def("dense_inverse_matrix", &denseInverseMatrix, py::arg("hierarchy"));

    py::class_<SimilarityTransform>(m, "SimilarityTransform")
        .def(py::init<>())
        .def_readwrite("rotation", &SimilarityTransform::rotation)
        .def_readwrite("translation", &SimilarityTransform::translation)
        .def_readwrite("scale", &SimilarityTransform::scale)
        .def("apply", [](const SimilarityTransform& t, const Eigen::Ref<const RowPoints>& p) {
            return toArray(t.apply(toVertices(p)));
        })
        .def("inverse", &SimilarityTransform::inverse)
        .def("matrix", &SimilarityTransform::matrix);

    m.def(
        "align",
        [](const Eigen::Ref<const RowPoints>& source, const Eigen::Ref<const RowPoints>& target) {
            const auto s = toVertices(source), t = toVertices(target);
            return alignCorresponding(s, t).transform;
        },
        py::arg("source"), py::arg("target"));
    m.def(
        "gpa",
        [](const std::vector<RowPoints>& shapes, double tolerance, int maxIterations) {
            const auto r = gpa(toShapes(shapes), GpaOptions{tolerance, maxIterations});
            py::dict out;
            out["aligned"] = toArrays(r.aligned);
            out["mean"] = toArray(r.mean);
            out["iterations"] = r.iterations;
            out["converged"] = r.converged;
            out["input_scale"] = r.inputScale;
            return out;
        },
        py::arg("shapes"), py::arg("tolerance") = 1e-8, py::arg("max_iterations") = 100);

    py::class_<NearestNeighborIndex>(m, "NearestNeighborIndex")
        .def(py::init([](const Eigen::Ref<const RowPoints>& points) { return NearestNeighborIndex(toVertices(points)); }))
        .def("nearest", [](const NearestNeighborIndex& index, const Point3& q) {
            const auto n = index.nearest(q);
            return std::make_pair(n.index, n.distance);
        })
        .def("__len__", &NearestNeighborIndex::size);

    py::class_<GlobalPcaModel>(m, "GlobalModel")
        .def_readonly("mean", &GlobalPcaModel::mean)
        .def_readonly("basis", &GlobalPcaModel::basis)
        .def_readonly("eigenvalues", &GlobalPcaModel::eigenvalues)
        .def_readonly("spectrum", &GlobalPcaModel::spectrum)
        .def_readonly("landmarks", &GlobalPcaModel::landmarks)
        .def_property_readonly("dimension", &GlobalPcaModel::dimension)
        .def_property_readonly("vertex_count", &GlobalPcaModel::vertexCount)
        .def("stddevs", &GlobalPcaModel::stddevs)
        .def("generate", [](const GlobalPcaModel& model, const Eigen::VectorXd& s) { return toArray(generate(model, s)); })
        .def("project", [](const GlobalPcaModel& model, const Eigen::Ref<const RowPoints>& shape) {
            return project(model, toVertices(shape));
        });

    py::class_<LocalWaveletModel>(m, "LocalModel")
        .def_readonly("hierarchy", &LocalWaveletModel::hierarchy)
        .def_readonly("landmarks", &LocalWaveletModel::landmarks)
        .def_property_readonly("dimension", &LocalWaveletModel::dimension)
        .def_property_readonly("vertex_count", &LocalWaveletModel::vertexCount)
        .def("stddevs", [](const LocalWaveletModel& model) { return toArray(model.stddevs); })
        .def("generate", [](const LocalWaveletModel& model, const Eigen::VectorXd& r) { return toArray(generate(model, r)); })
        .def("project", [](const LocalWaveletModel& model, const Eigen::Ref<const RowPoints>& shape) {
            return project(model, toVertices(shape));
        });

    m.def(
        "align_training_set",
        [](const std::vector<RowPoints>& shapes) {
            TrainingSet data;
            data.shapes = toShapes(shapes);
            return toArrays(alignTrainingSet(data).shapes);
        },
        py::arg("shapes"));
    m.def(
        "train_global",
        [](const std::vector<RowPoints>& aligned, int d) { return trainGlobal(trainingSet(aligned, {}, true), d); },
        py::arg("aligned_shapes"), py::arg("d"));
    m.def(
        "train_local",
        [](const std::vector<RowPoints>& aligned, const SubdivisionHierarchy& h) {
            const auto dims = h.finestDims();
            return trainLocal(trainingSet(aligned, std::make_pair(dims.rows, dims.cols), true), h);
        },
        py::arg("aligned_shapes"), py::arg("hierarchy"));
    m.def(
        "set_landmarks", [](GlobalPcaModel& model, LandmarkVertexMap map) { model.landmarks = std::move(map); },
        py::arg("model"), py::arg("landmarks"));
    m.def(
        "set_landmarks", [](LocalWaveletModel& model, LandmarkVertexMap map) { model.landmarks = std::move(map); },
        py::arg("model"), py::arg("landmarks"));

    m.def("save_model", [](const GlobalPcaModel& model, const std::filesystem::path& path) { saveModel(model, path); });
    m.def("save_model", [](const LocalWaveletModel& model, const std::filesystem::path& path) { saveModel(model, path); });
    m.def("load_model", [](const std::filesystem::path& path) -> py::object {
        auto model = loadModel(path);
        if (auto* g = std::get_if<GlobalPcaModel>(&model))
            return py::cast(std::move(*g));
        return py::cast(std::move(std::get<LocalWaveletModel>(model)));
    });

    py::class_<FitConfig>(m, "FitConfig")
        .def(py::init<>())
        .def_readwrite("tau", &FitConfig::tau)
        .def_readwrite("c", &FitConfig::c)
        .def_readwrite("max_iterations", &FitConfig::maxIterations)
        .def_readwrite("samples_per_parameter", &FitConfig::samplesPerParameter)
        .def_readwrite("max_level", &FitConfig::maxLevel)
        .def_readwrite("tolerance", &FitConfig::tolerance)
        .def_readwrite("memory", &FitConfig::memory);

    py::class_<FitResult>(m, "FitResult")
        .def_property_readonly("params", [](const FitResult& r) { return r.params.values; })
        .def_property_readonly("vertices", [](const FitResult& r) { return toArray(r.vertices); })
        .def_property_readonly("vertices_in_target_frame", [](const FitResult& r) { return toArray(r.verticesInTargetFrame()); })
        .def_readonly("init_transform", &FitResult::initTransform)
        .def_readonly("initial_energy", &FitResult::initialEnergy)
        .def_readonly("final_energy", &FitResult::finalEnergy)
        .def_readonly("energy_trace", &FitResult::energyTrace)
        .def_readonly("nearest_neighbor_queries", &FitResult::nearestNeighborQueries)
        .def_readonly("energy_evaluations", &FitResult::energyEvaluations)
        .def_readonly("iterations", &FitResult::iterations);

    m.def(
        "initial_align",
        [](const std::map<std::string, Point3>& target, const std::map<std::string, Point3>& model) {
            return initialAlign(landmarkSet(target), landmarkSet(model));
        },
        py::arg("target_landmarks"), py::arg("model_landmarks"));
    m.def(
        "fit_global",
        [](const GlobalPcaModel& model, const Eigen::Ref<const RowPoints>& cloud, const FitConfig& config,
           const SimilarityTransform& init) { return fitGlobal(model, PointCloud{toVertices(cloud)}, config, init); },
        py::arg("model"), py::arg("cloud"), py::arg("config") = FitConfig{},
        py::arg("init") = SimilarityTransform::identity(), py::call_guard<py::gil_scoped_release>());
    m.def(
        "fit_local",
        [](const LocalWaveletModel& model, const Eigen::Ref<const RowPoints>& cloud, const FitConfig& config,
           const SimilarityTransform& init) { return fitLocal(model, PointCloud{toVertices(cloud)}, config, init); },
        py::arg("model"), py::arg("cloud"), py::arg("config") = FitConfig{},
        py::arg("init") = SimilarityTransform::identity(), py::call_guard<py::gil_scoped_release>());
    m.def(
        "energy",
        [](const Eigen::Ref<const RowPoints>& vertices, const Eigen::Ref<const RowPoints>& cloud, double tau) {
            return energy(toVertices(vertices), NearestNeighborIndex(toVertices(cloud)), tau);
        },
        py::arg("vertices"), py::arg("cloud"), py::arg("tau") = 10.0);

    m.def("compactness_curve", &compactnessCurve, py::arg("model"));
    m.def(
        "generalization",
        [](const std::vector<RowPoints>& aligned, int d) {
            const auto g = generalization(trainingSet(aligned, {}, true), globalTrainer(d));
            return std::make_pair(g.mean, g.stddev);
        },
        py::arg("aligned_shapes"), py::arg("d"));
    m.def(
        "specificity",
        [](const GlobalPcaModel& model, const std::vector<RowPoints>& aligned, int samples, std::uint64_t seed) {
            const auto s = specificity(model, trainingSet(aligned, {}, true), samples, seed);
            return std::make_pair(s.mean, s.stddev);
        },
        py::arg("model"), py::arg("aligned_shapes"), py::arg("samples") = 1000, py::arg("seed") = 1);
    m.def(
        "surface_distance",
        [](const Eigen::Ref<const RowPoints>& fit, const Eigen::Ref<const RowPoints>& cloud) {
            return surfaceDistance(toVertices(fit), PointCloud{toVertices(cloud)});
        },
        py::arg("fit"), py::arg("cloud"));

    m.def(
        "synth_corpus",
        [](int levels, int count, double noise, std::uint64_t seed) {
            SynthSpec spec = SynthSpec::reference();
            spec.gridDims = SubdivisionHierarchy({5, 7}, levels).finestDims();
            spec.count = count;
            spec.noiseStddev = noise;
            spec.seed = seed;
            const auto corpus = generateCorpus(spec);
            std::vector<std::map<std::string, Point3>> landmarks;
            for (const auto& set : corpus.landmarks)
                landmarks.push_back(landmarkDict(set));
            py::dict out;
            out["shapes"] = toArrays(corpus.data.shapes);
            out["latents"] = corpus.latents;
            out["labels"] = corpus.data.labels;
            out["landmarks"] = landmarks;
            out["landmark_vertices"] = corpus.landmarkVertices;
            out["grid_dims"] = std::make_pair(spec.gridDims.rows, spec.gridDims.cols);
            return out;
        },
        py::arg("levels") = 2, py::arg("count") = 20, py::arg("noise") = 0.0, py::arg("seed") = 1);
    m.def(
        "sample_surface",
        [](const Eigen::Ref<const RowPoints>& grid, std::pair<int, int> dims, int factor) {
            return toArray(sampleSurface(toVertices(grid), {dims.first, dims.second}, factor).points);
        },
        py::arg("grid"), py::arg("dims"), py::arg("factor") = 3);
    m.def("init_landmark_labels", &initLandmarkLabels);

    m.def(
        "load_point_cloud", [](const std::filesystem::path& path) { return toArray(loadPointCloud(path).points); },
        py::arg("path"));
}
