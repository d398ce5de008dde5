#include "run_config.hpp"

#include <fstream>
#include <set>

namespace shapespace::cli {

SubdivisionHierarchy HierarchyConfig::hierarchy() const { return SubdivisionHierarchy({baseRows, baseCols}, levels); }

namespace {

void require(bool ok, const std::string& key, const std::string& what)
{
    if (!ok)
        throw ValidationError("config key '" + key + "' " + what);
}

/// Reads one JSON object, remembering which keys were consumed so leftovers can be rejected.
class Section {
public:
    Section(const nlohmann::json& object, std::string prefix) : object_(object), prefix_(std::move(prefix))
    {
        if (!object_.is_object())
            throw ValidationError(prefix_.empty() ? "config must be a JSON object"
                                                  : "config key '" + prefix_ + "' must be an object");
    }

    std::string key(const std::string& name) const { return prefix_.empty() ? name : prefix_ + "." + name; }

    const nlohmann::json* find(const std::string& name)
    {
        seen_.insert(name);
        auto it = object_.find(name);
        return it == object_.end() ? nullptr : &*it;
    }

    void read(const std::string& name, double& out)
    {
        if (auto v = find(name)) {
            require(v->is_number(), key(name), "must be a number");
            out = v->get<double>();
        }
    }
    void read(const std::string& name, int& out)
    {
        if (auto v = find(name)) {
            require(v->is_number_integer(), key(name), "must be an integer");
            out = v->get<int>();
        }
    }
    void read(const std::string& name, std::uint64_t& out)
    {
        if (auto v = find(name)) {
            require(v->is_number_unsigned() || (v->is_number_integer() && v->get<long long>() >= 0), key(name),
                    "must be a non-negative integer");
            out = v->get<std::uint64_t>();
        }
    }
    void read(const std::string& name, bool& out)
    {
        if (auto v = find(name)) {
            require(v->is_boolean(), key(name), "must be true or false");
            out = v->get<bool>();
        }
    }
    void read(const std::string& name, std::string& out)
    {
        if (auto v = find(name)) {
            require(v->is_string(), key(name), "must be a string");
            out = v->get<std::string>();
        }
    }
    void read(const std::string& name, std::vector<std::string>& out)
    {
        if (auto v = find(name)) {
            require(v->is_array(), key(name), "must be an array of strings");
            out.clear();
            for (const auto& item : *v) {
                require(item.is_string(), key(name), "must be an array of strings");
                out.push_back(item.get<std::string>());
            }
        }
    }
    /// An integer or a non-empty array of integers.
    void readIntList(const std::string& name, std::vector<int>& out)
    {
        if (auto v = find(name)) {
            if (v->is_number_integer()) {
                out = {v->get<int>()};
                return;
            }
            require(v->is_array() && !v->empty(), key(name), "must be an integer or a non-empty array of integers");
            out.clear();
            for (const auto& item : *v) {
                require(item.is_number_integer(), key(name), "must be an integer or a non-empty array of integers");
                out.push_back(item.get<int>());
            }
        }
    }

    template <typename F>
    void section(const std::string& name, F&& body)
    {
        if (auto v = find(name)) {
            Section inner(*v, key(name));
            body(inner);
            inner.finish();
        }
    }

    void finish() const
    {
        for (auto it = object_.begin(); it != object_.end(); ++it)
            if (!seen_.count(it.key()))
                throw ValidationError("unknown config key '" + key(it.key()) + "'");
    }

private:
    const nlohmann::json& object_;
    std::string prefix_;
    std::set<std::string> seen_;
};

void readFactor(Section& s, BumpFactor& f)
{
    s.read("center_u", f.centerU);
    s.read("center_v", f.centerV);
    s.read("radius", f.radius);
    s.read("min_amplitude", f.minAmplitude);
    s.read("max_amplitude", f.maxAmplitude);
}

} // namespace

RunConfig defaultConfig()
{
    RunConfig config;
    config.synth = SynthSpec::reference();
    config.synth.count = 100;
    config.synth.gridDims = config.hierarchy.hierarchy().finestDims();
    return config;
}

RunConfig applyJson(RunConfig config, const nlohmann::json& document)
{
    Section root(document, "");
    root.read("seed", config.seed);
    root.read("jobs", config.jobs);
    root.section("hierarchy", [&](Section& s) {
        s.read("base_rows", config.hierarchy.baseRows);
        s.read("base_cols", config.hierarchy.baseCols);
        s.read("levels", config.hierarchy.levels);
    });
    root.section("synth", [&](Section& s) {
        auto& spec = config.synth;
        s.read("count", spec.count);
        s.read("height", spec.height);
        s.read("width", spec.width);
        s.read("cylinder_radius", spec.cylinderRadius);
        s.read("noise_stddev", spec.noiseStddev);
        s.read("pose_rotation_degrees", spec.poseRotationDegrees);
        s.read("pose_translation", spec.poseTranslation);
        s.read("classes", spec.classes);
        s.read("class_shift", spec.classShift);
        if (auto v = s.find("factors")) {
            require(v->is_array(), s.key("factors"), "must be an array of objects");
            spec.factors.clear();
            for (std::size_t i = 0; i < v->size(); ++i) {
                Section f((*v)[i], s.key("factors") + "[" + std::to_string(i) + "]");
                BumpFactor factor;
                readFactor(f, factor);
                f.finish();
                spec.factors.push_back(factor);
            }
        }
    });
    root.section("train", [&](Section& s) {
        s.read("model", config.train.model);
        s.read("components", config.train.components);
    });
    root.section("fit", [&](Section& s) {
        auto& f = config.fit.fit;
        s.read("tau", f.tau);
        s.read("c", f.c);
        s.read("max_iterations", f.maxIterations);
        s.read("samples_per_parameter", f.samplesPerParameter);
        s.readIntList("max_level", config.fit.maxLevels);
        s.read("tolerance", f.tolerance);
        s.read("memory", f.memory);
    });
    root.section("evaluate", [&](Section& s) {
        s.read("specificity_samples", config.evaluate.specificitySamples);
        s.read("generalization", config.evaluate.generalization);
        s.read("cross_validation", config.evaluate.crossValidation);
    });
    root.section("paths", [&](Section& s) {
        s.read("output", config.paths.output);
        s.read("corpus", config.paths.corpus);
        s.read("model", config.paths.model);
        s.read("targets", config.paths.targets);
        s.read("landmarks", config.paths.landmarks);
        s.read("mesh", config.paths.mesh);
    });
    root.finish();
    return config;
}

RunConfig loadConfig(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ValidationError("cannot open config file " + path.string());
    nlohmann::json document;
    try {
        document = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError("config file " + path.string() + " is not valid JSON: " + e.what());
    }
    return applyJson(defaultConfig(), document);
}

void RunConfig::validate() const
{
    require(jobs >= 1, "jobs", "must be >= 1");
    require(hierarchy.baseRows >= 2, "hierarchy.base_rows", "must be >= 2");
    require(hierarchy.baseCols >= 2, "hierarchy.base_cols", "must be >= 2");
    require(hierarchy.levels >= 0 && hierarchy.levels <= 12, "hierarchy.levels", "must be in [0, 12]");

    require(synth.count >= 2, "synth.count", "must be >= 2");
    require(synth.height > 0.0, "synth.height", "must be > 0");
    require(synth.width > 0.0, "synth.width", "must be > 0");
    require(synth.cylinderRadius > 0.0, "synth.cylinder_radius", "must be > 0");
    require(synth.noiseStddev >= 0.0, "synth.noise_stddev", "must be >= 0");
    require(synth.poseRotationDegrees >= 0.0, "synth.pose_rotation_degrees", "must be >= 0");
    require(synth.poseTranslation >= 0.0, "synth.pose_translation", "must be >= 0");
    require(synth.classes >= 1, "synth.classes", "must be >= 1");
    for (std::size_t i = 0; i < synth.factors.size(); ++i) {
        const auto& f = synth.factors[i];
        const std::string key = "synth.factors[" + std::to_string(i) + "]";
        require(f.radius > 0.0, key + ".radius", "must be > 0");
        require(f.centerU >= 0.0 && f.centerU <= 1.0, key + ".center_u", "must be in [0, 1]");
        require(f.centerV >= 0.0 && f.centerV <= 1.0, key + ".center_v", "must be in [0, 1]");
        require(f.minAmplitude <= f.maxAmplitude, key + ".min_amplitude", "must not exceed max_amplitude");
    }

    require(train.model == "global" || train.model == "local", "train.model", "must be \"global\" or \"local\"");
    require(train.components >= 1, "train.components", "must be >= 1");

    const auto& f = fit.fit;
    require(f.tau > 0.0, "fit.tau", "must be > 0");
    require(f.c >= 0.0, "fit.c", "must be >= 0");
    require(f.maxIterations >= 1, "fit.max_iterations", "must be >= 1");
    require(f.samplesPerParameter >= 2, "fit.samples_per_parameter", "must be >= 2");
    require(f.tolerance >= 0.0, "fit.tolerance", "must be >= 0");
    require(f.memory >= 1, "fit.memory", "must be >= 1");
    require(!fit.maxLevels.empty(), "fit.max_level", "must not be empty");
    for (int level : fit.maxLevels)
        require(level >= -1 && level <= hierarchy.levels, "fit.max_level",
                "must be -1 (all levels) or in [0, hierarchy.levels]");

    require(evaluate.specificitySamples >= 1, "evaluate.specificity_samples", "must be >= 1");
}

nlohmann::ordered_json toJson(const RunConfig& c)
{
    nlohmann::ordered_json j;
    j["seed"] = c.seed;
    j["jobs"] = c.jobs;
    j["hierarchy"] = {{"base_rows", c.hierarchy.baseRows}, {"base_cols", c.hierarchy.baseCols},
                      {"levels", c.hierarchy.levels}};
    auto factors = nlohmann::ordered_json::array();
    for (const auto& f : c.synth.factors)
        factors.push_back({{"center_u", f.centerU}, {"center_v", f.centerV}, {"radius", f.radius},
                           {"min_amplitude", f.minAmplitude}, {"max_amplitude", f.maxAmplitude}});
    j["synth"] = {{"count", c.synth.count},
                  {"height", c.synth.height},
                  {"width", c.synth.width},
                  {"cylinder_radius", c.synth.cylinderRadius},
                  {"noise_stddev", c.synth.noiseStddev},
                  {"pose_rotation_degrees", c.synth.poseRotationDegrees},
                  {"pose_translation", c.synth.poseTranslation},
                  {"classes", c.synth.classes},
                  {"class_shift", c.synth.classShift},
                  {"factors", factors}};
    j["train"] = {{"model", c.train.model}, {"components", c.train.components}};
    const auto& f = c.fit.fit;
    j["fit"] = {{"tau", f.tau},
                {"c", f.c},
                {"max_iterations", f.maxIterations},
                {"samples_per_parameter", f.samplesPerParameter},
                {"max_level", c.fit.maxLevels},
                {"tolerance", f.tolerance},
                {"memory", f.memory}};
    j["evaluate"] = {{"specificity_samples", c.evaluate.specificitySamples},
                     {"generalization", c.evaluate.generalization},
                     {"cross_validation", c.evaluate.crossValidation}};
    j["paths"] = {{"output", c.paths.output}, {"corpus", c.paths.corpus},   {"model", c.paths.model},
                  {"targets", c.paths.targets}, {"landmarks", c.paths.landmarks}, {"mesh", c.paths.mesh}};
    return j;
}

} // namespace shapespace::cli
