#include "commands.hpp"

#include "run_config.hpp"

#include "shapespace/evaluation.hpp"
#include "shapespace/fitting.hpp"
#include "shapespace/kdtree.hpp"
#include "shapespace/mesh_io.hpp"
#include "shapespace/model_io.hpp"
#include "shapespace/models.hpp"
#include "shapespace/resample.hpp"
#include "shapespace/synth.hpp"
#include "shapespace/wavelet.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <thread>

namespace shapespace::cli {

namespace fs = std::filesystem;

namespace {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------------------------------------------
// Flags. Every flag mirrors one config key and only overrides it when given on the command line.

struct Flags {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    int jobs = 1;

    int count = 0;
    int levels = 0;
    double noise = 0.0;
    bool triangles = false;

    std::string corpus;
    std::string model;
    int components = 0;

    std::vector<std::string> targets;
    std::vector<std::string> landmarks;
    double tau = 0.0;
    double c = 0.0;
    int maxIterations = 0;
    int samples = 0;
    std::vector<int> maxLevels;
    double tolerance = 0.0;

    int specificitySamples = 0;
    bool noGeneralization = false;
    bool noCrossValidation = false;

    std::string mesh;
};

bool given(const CLI::App* active, const std::string& flag)
{
    const auto* option = active->get_option_no_throw(flag);
    return option && option->count() > 0;
}

RunConfig resolveConfig(const Flags& f, const CLI::App* active)
{
    RunConfig config = f.config.empty() ? defaultConfig() : loadConfig(f.config);
    if (given(active, "--out"))
        config.paths.output = f.out;
    if (given(active, "--seed"))
        config.seed = f.seed;
    if (given(active, "--jobs"))
        config.jobs = f.jobs;
    if (given(active, "--count"))
        config.synth.count = f.count;
    if (given(active, "--levels"))
        config.hierarchy.levels = f.levels;
    if (given(active, "--noise"))
        config.synth.noiseStddev = f.noise;
    if (given(active, "--corpus"))
        config.paths.corpus = f.corpus;
    if (given(active, "--model")) {
        if (f.model == "global" || f.model == "local") {
            config.train.model = f.model;
            config.paths.model.clear();
        } else {
            config.paths.model = f.model;
        }
    }
    if (given(active, "--components"))
        config.train.components = f.components;
    if (given(active, "--target"))
        config.paths.targets = f.targets;
    if (given(active, "--landmarks"))
        config.paths.landmarks = f.landmarks;
    if (given(active, "--tau"))
        config.fit.fit.tau = f.tau;
    if (given(active, "--c"))
        config.fit.fit.c = f.c;
    if (given(active, "--max-iterations"))
        config.fit.fit.maxIterations = f.maxIterations;
    if (given(active, "--samples"))
        config.fit.fit.samplesPerParameter = f.samples;
    if (given(active, "--max-level"))
        config.fit.maxLevels = f.maxLevels;
    if (given(active, "--tolerance"))
        config.fit.fit.tolerance = f.tolerance;
    if (given(active, "--specificity-samples"))
        config.evaluate.specificitySamples = f.specificitySamples;
    if (f.noGeneralization)
        config.evaluate.generalization = false;
    if (f.noCrossValidation)
        config.evaluate.crossValidation = false;
    if (given(active, "--mesh"))
        config.paths.mesh = f.mesh;
    config.validate();
    config.synth.gridDims = config.hierarchy.hierarchy().finestDims();
    return config;
}

// ---------------------------------------------------------------------------------------------------------------
// Output helpers.

void requireFile(const std::string& path, const std::string& what)
{
    if (path.empty())
        throw ValidationError("missing " + what);
    if (!fs::exists(path))
        throw ValidationError(what + " not found: " + path);
}

fs::path prepareOutput(const RunConfig& config)
{
    const fs::path dir = config.paths.output;
    fs::create_directories(dir);
    std::ofstream(dir / "resolved_config.json") << toJson(config).dump(2) << '\n';
    return dir;
}

void writeJson(const fs::path& path, const Json& j)
{
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

Json statsJson(const SummaryStats& s)
{
    return {{"mean", s.mean}, {"median", s.median}, {"stddev", s.stddev}, {"max", s.max}, {"count", s.count}};
}

std::string fixed(double value, int digits)
{
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.*f", digits, value);
    return buffer;
}

// ---------------------------------------------------------------------------------------------------------------
// Corpora: synthesized from the config, or read from a directory written by `synth`.

struct Corpus {
    TrainingSet data;
    std::vector<LandmarkSet> landmarks;
    LandmarkVertexMap landmarkVertices;
    std::string source;
};

Corpus synthesize(const RunConfig& config)
{
    SynthSpec spec = config.synth;
    spec.seed = config.seed;
    auto generated = generateCorpus(spec);
    return {std::move(generated.data), std::move(generated.landmarks), std::move(generated.landmarkVertices), "synth"};
}

Corpus readCorpus(const fs::path& dir, const SubdivisionHierarchy& hierarchy)
{
    const auto manifestPath = dir / "manifest.json";
    requireFile(manifestPath.string(), "corpus manifest");
    nlohmann::json manifest;
    try {
        std::ifstream in(manifestPath);
        manifest = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("corpus manifest " + manifestPath.string() + " is invalid: " + e.what());
    }
    if (!manifest.contains("shapes") || !manifest["shapes"].is_array())
        throw ValidationError("corpus manifest " + manifestPath.string() + " has no 'shapes' array");

    const GridDims finest = hierarchy.finestDims();
    Corpus corpus;
    corpus.source = "directory";
    corpus.data.gridDims = finest;
    corpus.data.faces = gridTriangles(finest);
    bool resampled = false;
    for (const auto& entry : manifest["shapes"]) {
        const auto file = dir / entry.at("file").get<std::string>();
        requireFile(file.string(), "corpus shape");
        LandmarkSet landmarks;
        if (entry.contains("landmarks")) {
            const auto lmk = dir / entry["landmarks"].get<std::string>();
            requireFile(lmk.string(), "corpus landmark file");
            landmarks = loadLandmarks(lmk);
        }
        const Mesh mesh = loadMesh(file);
        VertexList shape;
        if (const auto* quad = std::get_if<QuadMesh>(&mesh); quad && quad->gridDims && *quad->gridDims == finest) {
            shape = quad->vertices;
        } else {
            TriangleMesh tri;
            if (quad) {
                tri.vertices = quad->vertices;
                tri.faces = triangulate(quad->faces);
            } else {
                tri = std::get<TriangleMesh>(mesh);
            }
            shape = resampleToGrid(tri, landmarks, hierarchy).vertices;
            resampled = true;
        }
        corpus.data.shapes.push_back(std::move(shape));
        corpus.data.subjectIds.push_back(entry.value("subject", file.stem().string()));
        corpus.data.labels.push_back(entry.value("label", 0));
        corpus.landmarks.push_back(std::move(landmarks));
    }
    if (corpus.data.shapes.size() < 2)
        throw ValidationError("corpus " + dir.string() + " holds fewer than 2 shapes");

    if (!resampled && manifest.contains("landmark_vertices")) {
        for (const auto& [label, vertex] : manifest["landmark_vertices"].items())
            corpus.landmarkVertices[label] = vertex.get<int>();
    } else {
        // Landmark vertex = grid vertex closest to the landmark on the first shape.
        const NearestNeighborIndex index(corpus.data.shapes.front());
        for (const auto& l : corpus.landmarks.front().entries())
            if (l.position)
                corpus.landmarkVertices[l.label] = index.nearest(*l.position).index;
    }
    return corpus;
}

Corpus obtainCorpus(const RunConfig& config)
{
    if (config.paths.corpus.empty())
        return synthesize(config);
    if (!fs::is_directory(config.paths.corpus))
        throw ValidationError("corpus directory not found: " + config.paths.corpus);
    return readCorpus(config.paths.corpus, config.hierarchy.hierarchy());
}

ShapeModel trainModel(const std::string& kind, const TrainingSet& aligned, const RunConfig& config,
                      const LandmarkVertexMap& landmarks)
{
    ShapeModel model = kind == "global" ? globalTrainer(config.train.components)(aligned)
                                        : localTrainer(config.hierarchy.hierarchy())(aligned);
    setModelLandmarks(model, landmarks);
    return model;
}

std::string kindName(const ShapeModel& model) { return kindOf(model) == ModelKind::Global ? "global" : "local"; }

// ---------------------------------------------------------------------------------------------------------------
// Subcommands.

int cmdSynth(const RunConfig& config, std::ostream& out, bool triangles)
{
    const auto dir = prepareOutput(config);
    SynthSpec spec = config.synth;
    spec.seed = config.seed;
    const auto corpus = generateCorpus(spec);

    Json manifest;
    manifest["format"] = "shapespace-corpus";
    manifest["version"] = 1;
    manifest["seed"] = config.seed;
    manifest["grid"] = {spec.gridDims.rows, spec.gridDims.cols};
    manifest["landmark_vertices"] = corpus.landmarkVertices;
    manifest["init_landmarks"] = initLandmarkLabels();
    manifest["eval_landmarks"] = evalLandmarkLabels();
    auto& shapes = manifest["shapes"] = Json::array();
    for (std::size_t t = 0; t < corpus.data.size(); ++t) {
        char name[32];
        std::snprintf(name, sizeof(name), "shape_%03zu", t);
        const std::string meshFile = std::string(name) + ".ply", lmkFile = std::string(name) + ".lmk";
        if (triangles) {
            TriangleMesh mesh{corpus.data.shapes[t], corpus.data.faces, {}};
            saveMesh(mesh, dir / meshFile);
        } else {
            saveMesh(makeGridMesh(corpus.data.shapes[t], spec.gridDims), dir / meshFile);
        }
        saveLandmarks(corpus.landmarks[t], dir / lmkFile);
        std::vector<double> latents(corpus.latents.cols());
        for (Eigen::Index j = 0; j < corpus.latents.cols(); ++j)
            latents[static_cast<std::size_t>(j)] = corpus.latents(static_cast<Eigen::Index>(t), j);
        shapes.push_back({{"file", meshFile},
                          {"landmarks", lmkFile},
                          {"subject", corpus.data.subjectIds[t]},
                          {"label", corpus.data.labels[t]},
                          {"latents", latents}});
    }
    writeJson(dir / "manifest.json", manifest);

    Json report;
    report["command"] = "synth";
    report["shapes"] = corpus.data.size();
    report["vertices"] = spec.gridDims.count();
    report["grid"] = {spec.gridDims.rows, spec.gridDims.cols};
    report["factors"] = spec.factors.size();
    writeJson(dir / "report.json", report);

    out << "synth: " << corpus.data.size() << " shapes, " << spec.gridDims.rows << " x " << spec.gridDims.cols
        << " grid (" << spec.gridDims.count() << " vertices) -> " << dir.string() << '\n';
    return kExitOk;
}

Json modelSummary(const ShapeModel& model)
{
    Json j;
    j["kind"] = kindName(model);
    j["vertices"] = vertexCount(model);
    j["dimension"] = parameterStddevs(model).size();
    if (const auto* g = std::get_if<GlobalPcaModel>(&model)) {
        j["eigenvalues"] = std::vector<double>(g->eigenvalues.data(), g->eigenvalues.data() + g->eigenvalues.size());
        j["compactness"] = compactnessCurve(*g);
        j["rank_deficient"] = g->rankDeficient();
    } else {
        const auto& l = std::get<LocalWaveletModel>(model);
        j["levels"] = l.hierarchy.levels();
        j["base"] = {l.hierarchy.baseDims().rows, l.hierarchy.baseDims().cols};
        const Eigen::VectorXd sigma = parameterStddevs(model);
        j["zero_variance_parameters"] = (sigma.array() == 0.0).count();
    }
    return j;
}

int cmdTrain(const RunConfig& config, std::ostream& out)
{
    const auto corpus = obtainCorpus(config);
    const auto dir = prepareOutput(config);
    const auto aligned = alignTrainingSet(corpus.data);
    const auto model = trainModel(config.train.model, aligned, config, corpus.landmarkVertices);
    saveModel(model, dir / "model.bin");

    Json report;
    report["command"] = "train";
    report["corpus"] = {{"source", corpus.source}, {"shapes", corpus.data.size()},
                        {"vertices", corpus.data.vertexCount()}};
    report["model"] = modelSummary(model);
    writeJson(dir / "report.json", report);

    out << "train: " << kindName(model) << " model from " << corpus.data.size() << " shapes, "
        << parameterStddevs(model).size() << " parameters -> " << (dir / "model.bin").string() << '\n';
    return kExitOk;
}

struct FitJob {
    std::string name;
    int maxLevel = -1;
    FitResult result;
    std::vector<double> surface;
    std::optional<LandmarkErrors> landmarkErrors;
    int initLandmarks = 0;
};

int cmdFit(const RunConfig& config, std::ostream& out)
{
    if (config.paths.targets.empty())
        throw ValidationError("fit needs at least one --target");
    for (const auto& t : config.paths.targets)
        requireFile(t, "target");
    if (!config.paths.landmarks.empty() && config.paths.landmarks.size() != config.paths.targets.size())
        throw ValidationError("--landmarks must be given once per --target");
    for (const auto& l : config.paths.landmarks)
        requireFile(l, "landmark file");

    ShapeModel model;
    if (!config.paths.model.empty()) {
        requireFile(config.paths.model, "model file");
        model = loadModel(config.paths.model);
    } else {
        const auto corpus = obtainCorpus(config);
        model = trainModel(config.train.model, alignTrainingSet(corpus.data), config, corpus.landmarkVertices);
    }
    const auto dir = prepareOutput(config);
    const bool local = kindOf(model) == ModelKind::Local;
    const std::vector<int> levels = local ? config.fit.maxLevels : std::vector<int>{-1};
    const LandmarkSet meanLandmarks = meanShapeLandmarks(model);

    struct Target {
        std::string name;
        PointCloud cloud;
        std::optional<LandmarkSet> landmarks;
    };
    std::vector<Target> targets;
    for (std::size_t i = 0; i < config.paths.targets.size(); ++i) {
        const fs::path path = config.paths.targets[i];
        Target t{path.stem().string(), loadPointCloud(path), std::nullopt};
        fs::path lmk = config.paths.landmarks.empty() ? fs::path(path).replace_extension(".lmk")
                                                      : fs::path(config.paths.landmarks[i]);
        if (fs::exists(lmk))
            t.landmarks = loadLandmarks(lmk);
        targets.push_back(std::move(t));
    }

    std::vector<FitJob> jobs;
    for (std::size_t t = 0; t < targets.size(); ++t)
        for (int level : levels)
            jobs.push_back({targets[t].name, level, {}, {}, {}, 0});

    auto runJob = [&](std::size_t j) {
        auto& job = jobs[j];
        const auto& target = targets[j / levels.size()];
        SimilarityTransform init = SimilarityTransform::identity();
        if (target.landmarks) {
            auto initSet = target.landmarks->subset(initLandmarkLabels());
            const auto meanInit = meanLandmarks.subset(initLandmarkLabels());
            if (meanInit.presentCount() < 3 || initSet.presentCount() < 3) {
                initSet = *target.landmarks;
                init = initialAlign(initSet, meanLandmarks);
            } else {
                init = initialAlign(initSet, meanInit);
            }
            for (const auto& e : initSet.entries())
                job.initLandmarks += e.position && meanLandmarks.find(e.label) ? 1 : 0;
        }
        FitConfig fc = config.fit.fit;
        fc.maxLevel = job.maxLevel;
        job.result = fit(model, target.cloud, fc, init);
        const auto fitted = job.result.verticesInTargetFrame();
        job.surface = surfaceDistance(fitted, target.cloud);
        if (target.landmarks) {
            const auto evalSet = target.landmarks->subset(evalLandmarkLabels());
            try {
                job.landmarkErrors = landmarkDistance(fitted, modelLandmarks(model), evalSet);
            } catch (const Error&) {
                job.landmarkErrors.reset(); // no evaluation landmark present in both
            }
        }
        std::string file = "fit_" + job.name;
        if (levels.size() > 1)
            file += "_L" + std::to_string(job.maxLevel);
        TriangleMesh mesh{fitted, modelFaces(model), {}};
        saveMesh(mesh, dir / (file + ".ply"), std::span<const double>(job.surface));
    };

    std::atomic<std::size_t> next{0};
    std::mutex errorMutex;
    std::exception_ptr failure;
    auto worker = [&] {
        for (std::size_t j; (j = next++) < jobs.size();) {
            try {
                runJob(j);
            } catch (...) {
                std::lock_guard lock(errorMutex);
                if (!failure)
                    failure = std::current_exception();
            }
        }
    };
    const int threads = std::max(1, std::min<int>(config.jobs, static_cast<int>(jobs.size())));
    std::vector<std::thread> pool;
    for (int i = 1; i < threads; ++i)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool)
        t.join();
    if (failure)
        std::rethrow_exception(failure);

    Json report;
    report["command"] = "fit";
    report["model"] = {{"kind", kindName(model)}, {"vertices", vertexCount(model)},
                       {"dimension", parameterStddevs(model).size()}};
    auto& fits = report["fits"] = Json::array();
    for (const auto& job : jobs) {
        Json j;
        j["target"] = job.name;
        if (local)
            j["max_level"] = job.maxLevel;
        j["initial_energy"] = job.result.initialEnergy;
        j["final_energy"] = job.result.finalEnergy;
        j["iterations"] = job.result.iterations;
        j["nearest_neighbor_queries"] = job.result.nearestNeighborQueries;
        j["energy_evaluations"] = job.result.energyEvaluations;
        j["inside_box"] = insideHyperBox(model, job.result.params, config.fit.fit.c);
        j["init_landmarks"] = job.initLandmarks;
        j["surface_distance_mm"] = statsJson(summarize(job.surface));
        if (job.landmarkErrors) {
            j["landmark_errors_mm"] = job.landmarkErrors->perLabel;
            j["landmark_error_stats"] = statsJson(job.landmarkErrors->stats);
        }
        fits.push_back(j);
    }
    writeJson(dir / "report.json", report);

    out << "target               level  energy(init -> final)         surface mean / median mm   seconds\n";
    for (const auto& job : jobs) {
        const auto s = summarize(job.surface);
        char line[256];
        std::snprintf(line, sizeof(line), "%-20s %5s  %12.4f -> %-12.4f   %10.4f / %-10.4f   %8.3f\n",
                      job.name.c_str(), local ? std::to_string(job.maxLevel).c_str() : "-",
                      job.result.initialEnergy, job.result.finalEnergy, s.mean, s.median, job.result.seconds);
        out << line;
    }
    return kExitOk;
}

int cmdEvaluate(const RunConfig& config, std::ostream& out)
{
    const auto corpus = obtainCorpus(config);
    const auto dir = prepareOutput(config);
    const auto aligned = alignTrainingSet(corpus.data);
    const auto hierarchy = config.hierarchy.hierarchy();

    std::vector<NamedTrainer> trainers = {{"global", globalTrainer(config.train.components)},
                                          {"local", localTrainer(hierarchy)}};
    Json report;
    report["command"] = "evaluate";
    report["corpus"] = {{"source", corpus.source},
                        {"shapes", aligned.size()},
                        {"vertices", aligned.vertexCount()},
                        {"grid", {hierarchy.finestDims().rows, hierarchy.finestDims().cols}}};
    auto& models = report["models"] = Json::array();

    std::vector<std::pair<std::string, std::vector<CurvePoint>>> curves;
    std::optional<CrossValidationResult> cv;
    if (config.evaluate.crossValidation) {
        FitConfig fc = config.fit.fit;
        fc.maxLevel = config.fit.maxLevels.front();
        cv = crossValidate10Fold(aligned, trainers, fc, config.seed);
    }

    out << "model    compactness(d)  generalization mm      specificity mm         cv p80 mm\n";
    for (std::size_t m = 0; m < trainers.size(); ++m) {
        const auto& name = trainers[m].name;
        const ShapeModel model = trainers[m].trainer(aligned);
        Json j;
        j["name"] = name;
        j["dimension"] = parameterStddevs(model).size();
        double headline = 1.0;
        if (const auto* g = std::get_if<GlobalPcaModel>(&model)) {
            j["compactness"] = compactnessCurve(*g);
            headline = compactness(*g, g->dimension());
        } else {
            j["compactness"] = 1.0;
        }
        std::optional<MeanStd> gen, spec;
        if (config.evaluate.generalization) {
            gen = generalization(aligned, trainers[m].trainer);
            j["generalization_mm"] = {{"mean", gen->mean}, {"stddev", gen->stddev}};
        }
        spec = specificity(model, aligned, config.evaluate.specificitySamples, config.seed + m);
        j["specificity_mm"] = {{"mean", spec->mean}, {"stddev", spec->stddev}};
        double p80 = std::nan("");
        if (cv) {
            const auto& r = cv->models[m];
            p80 = percentile(r.vertexErrors, 0.8);
            j["cross_validation"] = {{"vertex_error_mm", statsJson(r.stats)}, {"p80_mm", p80}};
            curves.emplace_back(name, r.curve);
        }
        models.push_back(j);

        char line[256];
        std::snprintf(line, sizeof(line), "%-8s %14s  %8s +- %-8s  %8s +- %-8s  %9s\n", name.c_str(),
                      fixed(headline, 4).c_str(), gen ? fixed(gen->mean, 4).c_str() : "-",
                      gen ? fixed(gen->stddev, 4).c_str() : "-", fixed(spec->mean, 4).c_str(),
                      fixed(spec->stddev, 4).c_str(), cv ? fixed(p80, 4).c_str() : "-");
        out << line;
    }
    if (cv)
        report["folds"] = cv->foldOf;
    writeJson(dir / "report.json", report);
    writeCurvesCsv(curves, dir / "curves.csv");
    return kExitOk;
}

int inferLevels(GridDims dims)
{
    int levels = 0;
    while (levels < 12) {
        const int step = 1 << (levels + 1);
        if ((dims.rows - 1) % step != 0 || (dims.cols - 1) % step != 0 || (dims.rows - 1) / step < 1 ||
            (dims.cols - 1) / step < 1)
            break;
        ++levels;
    }
    return levels;
}

int cmdRoundtrip(const RunConfig& config, std::ostream& out, bool levelsGiven)
{
    requireFile(config.paths.mesh, "mesh");
    const Mesh mesh = loadMesh(config.paths.mesh);
    const auto* quad = std::get_if<QuadMesh>(&mesh);
    if (!quad || !quad->gridDims)
        throw ValidationError("roundtrip needs a grid-structured quad mesh (a file with grid_dims): " +
                              config.paths.mesh);
    const GridDims dims = *quad->gridDims;
    const int levels = levelsGiven ? config.hierarchy.levels : inferLevels(dims);
    const int step = 1 << levels;
    if ((dims.rows - 1) % step != 0 || (dims.cols - 1) % step != 0)
        throw ValidationError("grid " + std::to_string(dims.rows) + " x " + std::to_string(dims.cols) +
                              " cannot be split into " + std::to_string(levels) + " levels");
    const SubdivisionHierarchy h({(dims.rows - 1) / step + 1, (dims.cols - 1) / step + 1}, levels);
    const auto dir = prepareOutput(config);

    const auto restored = inverseTransform(forwardTransform(quad->vertices, h), h);
    double maxError = 0.0;
    for (std::size_t i = 0; i < restored.size(); ++i)
        maxError = std::max(maxError, (restored[i] - quad->vertices[i]).norm());
    const bool ok = maxError < 1e-10;

    Json report;
    report["command"] = "roundtrip";
    report["vertices"] = dims.count();
    report["base"] = {h.baseDims().rows, h.baseDims().cols};
    report["levels"] = levels;
    report["max_error_mm"] = maxError;
    report["passed"] = ok;
    writeJson(dir / "report.json", report);

    out << "roundtrip: " << dims.count() << " vertices, base " << h.baseDims().rows << " x " << h.baseDims().cols
        << ", " << levels << " levels, max reconstruction error " << maxError << " mm -> " << (ok ? "ok" : "FAILED")
        << '\n';
    return ok ? kExitOk : kExitRuntime;
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Statistical shape spaces: synthesize corpora, train global PCA and local wavelet models, fit "
                 "them to point clouds and evaluate them."};
    app.require_subcommand(1);
    Flags f;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", f.config, "JSON run configuration")->check(CLI::ExistingFile);
        sub->add_option("--out", f.out, "Output directory");
        sub->add_option("--seed", f.seed, "Random seed");
        sub->add_option("--jobs", f.jobs, "Parallel fits");
    };
    auto fitFlags = [&](CLI::App* sub) {
        sub->add_option("--tau", f.tau, "Truncation distance (mm)");
        sub->add_option("--c", f.c, "Hyper-box half-width in standard deviations");
        sub->add_option("--max-iterations", f.maxIterations, "Global fitter iterations");
        sub->add_option("--samples", f.samples, "Samples per local parameter");
        sub->add_option("--max-level", f.maxLevels, "Last optimized wavelet level; several values sweep");
        sub->add_option("--tolerance", f.tolerance, "Relative energy change that stops the global fitter");
    };
    auto corpusFlags = [&](CLI::App* sub) {
        sub->add_option("--corpus", f.corpus, "Corpus directory written by `synth` (default: synthesize)");
        sub->add_option("--components", f.components, "Global model components");
        sub->add_option("--levels", f.levels, "Subdivision levels");
        sub->add_option("--count", f.count, "Synthetic corpus size");
    };

    auto* synth = app.add_subcommand("synth", "Write a synthetic corpus (meshes, landmarks, manifest)");
    common(synth);
    synth->add_option("--count", f.count, "Number of shapes");
    synth->add_option("--levels", f.levels, "Subdivision levels of the grid");
    synth->add_option("--noise", f.noise, "Per-vertex noise stddev (mm)");
    synth->add_flag("--triangles", f.triangles, "Write triangle meshes instead of grid quads");

    auto* train = app.add_subcommand("train", "Train a model on a corpus");
    common(train);
    corpusFlags(train);
    train->add_option("--model", f.model, "global or local");

    auto* fitCmd = app.add_subcommand("fit", "Fit a model to target point clouds");
    common(fitCmd);
    corpusFlags(fitCmd);
    fitFlags(fitCmd);
    fitCmd->add_option("--model", f.model, "Model file, or global / local to train on the corpus first");
    fitCmd->add_option("--target", f.targets, "Target point cloud or mesh (repeatable)");
    fitCmd->add_option("--landmarks", f.landmarks, "Landmark file per target (default: <target>.lmk)");

    auto* evaluate = app.add_subcommand("evaluate", "Compactness, generalization, specificity, 10-fold CV");
    common(evaluate);
    corpusFlags(evaluate);
    fitFlags(evaluate);
    evaluate->add_option("--specificity-samples", f.specificitySamples, "Random samples");
    evaluate->add_flag("--no-generalization", f.noGeneralization, "Skip leave-one-out generalization");
    evaluate->add_flag("--no-cv", f.noCrossValidation, "Skip 10-fold cross validation");

    auto* roundtrip = app.add_subcommand("roundtrip", "Wavelet forward/inverse self-test on a grid mesh");
    common(roundtrip);
    roundtrip->add_option("--mesh", f.mesh, "Grid-structured quad mesh");
    auto* roundtripLevels = roundtrip->add_option("--levels", f.levels, "Subdivision levels (default: inferred)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitValidation;
    }

    try {
        const CLI::App* active = app.get_subcommands().front();
        const RunConfig config = resolveConfig(f, active);
        if (*synth)
            return cmdSynth(config, out, f.triangles);
        if (*train)
            return cmdTrain(config, out);
        if (*fitCmd)
            return cmdFit(config, out);
        if (*evaluate)
            return cmdEvaluate(config, out);
        return cmdRoundtrip(config, out, roundtripLevels->count() > 0);
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

} // namespace shapespace::cli
