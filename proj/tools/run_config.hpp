#pragma once

#include "shapespace/fitting.hpp"
#include "shapespace/synth.hpp"
#include "shapespace/wavelet.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace shapespace::cli {

/// Bad configuration, bad flags or missing inputs: exit status 1.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct HierarchyConfig {
    int baseRows = 5;
    int baseCols = 7;
    int levels = 6;

    SubdivisionHierarchy hierarchy() const;
};

struct TrainConfig {
    std::string model = "global"; // "global" or "local"
    int components = 30;
};

struct FitSection {
    FitConfig fit;
    std::vector<int> maxLevels = {-1}; // more than one value runs a level sweep
};

struct EvaluateConfig {
    int specificitySamples = 10000;
    bool generalization = true;
    bool crossValidation = true;
};

struct PathsConfig {
    std::string output = "run";
    std::string corpus;
    std::string model;
    std::vector<std::string> targets;
    std::vector<std::string> landmarks;
    std::string mesh;
};

struct RunConfig {
    std::uint64_t seed = 1;
    int jobs = 1;
    HierarchyConfig hierarchy;
    SynthSpec synth; // gridDims always follow the hierarchy's finest level
    TrainConfig train;
    FitSection fit;
    EvaluateConfig evaluate;
    PathsConfig paths;

    /// Range checks on every section. Throws ValidationError naming the key.
    void validate() const;
};

/// Defaults: tau 10 mm, c = 1, 30 global components and the 100-subject reference synthetic corpus.
RunConfig defaultConfig();

/// Overlays a JSON document on `base`. Unknown keys and wrongly typed values raise ValidationError.
RunConfig applyJson(RunConfig base, const nlohmann::json& document);
RunConfig loadConfig(const std::filesystem::path& path);

/// Fully resolved configuration, key order fixed.
nlohmann::ordered_json toJson(const RunConfig& config);

} // namespace shapespace::cli
