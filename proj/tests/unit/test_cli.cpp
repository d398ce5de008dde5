#include "support.hpp"

#include "commands.hpp"
#include "shapespace/mesh_io.hpp"
#include "shapespace/model_io.hpp"

#include <doctest.h>

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

using namespace shapespace;
using testing::TempDir;

namespace {

struct Outcome {
    int status = 0;
    std::string out;
    std::string err;
};

Outcome invoke(std::vector<std::string> args)
{
    args.insert(args.begin(), "shapespace");
    std::vector<const char*> argv;
    for (const auto& a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int status = shapespace::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {status, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

nlohmann::json readJson(const std::filesystem::path& path) { return nlohmann::json::parse(slurp(path)); }

const std::filesystem::path kData = SHAPESPACE_TEST_DATA;

} // namespace

TEST_SUITE("command line")
{
    TEST_CASE("synth writes a corpus directory with the resolved config")
    {
        TempDir dir("cli_synth");
        const auto r = invoke({"synth", "--out", (dir / "corpus").string(), "--count", "4", "--levels", "1"});
        REQUIRE(r.status == 0);
        const auto manifest = readJson(dir / "corpus" / "manifest.json");
        CHECK(manifest["shapes"].size() == 4);
        for (int i = 0; i < 4; ++i) {
            CHECK(std::filesystem::exists(dir / "corpus" / ("shape_00" + std::to_string(i) + ".ply")));
            CHECK(std::filesystem::exists(dir / "corpus" / ("shape_00" + std::to_string(i) + ".lmk")));
        }
        const auto resolved = readJson(dir / "corpus" / "resolved_config.json");
        CHECK(resolved["synth"]["count"] == 4);
        CHECK(resolved["hierarchy"]["levels"] == 1);
        CHECK(resolved["fit"]["tau"] == 10.0);
        CHECK(resolved["fit"]["c"] == 1.0);
        CHECK(resolved["train"]["components"] == 30);
        CHECK(resolved["hierarchy"]["base_rows"] == 5);
        CHECK(resolved["hierarchy"]["base_cols"] == 7);
    }

    TEST_CASE("train and fit with a zero box return the mean shape")
    {
        TempDir dir("cli_fit");
        const auto corpus = (dir / "corpus").string();
        REQUIRE(invoke({"synth", "--out", corpus, "--count", "6", "--levels", "1"}).status == 0);
        REQUIRE(invoke({"train", "--corpus", corpus, "--levels", "1", "--model", "global", "--components", "4", "--out",
                     (dir / "g").string()})
                    .status == 0);
        const auto model = loadGlobalModel(dir / "g" / "model.bin");
        CHECK(model.dimension() == 4);

        // A target without a landmark file is fitted from the identity pose.
        std::filesystem::create_directories(dir / "targets");
        std::filesystem::copy_file(dir / "corpus" / "shape_002.ply", dir / "targets" / "t.ply");
        const auto r = invoke({"fit", "--model", (dir / "g" / "model.bin").string(), "--target",
                            (dir / "targets" / "t.ply").string(), "--c", "0", "--out", (dir / "f").string()});
        REQUIRE(r.status == 0);
        const auto fitted = std::get<TriangleMesh>(loadMesh(dir / "f" / "fit_t.ply"));
        CHECK(fitted.vertices == unflatten(model.mean));
        CHECK(fitted.colors.size() == fitted.vertices.size());
        CHECK(std::filesystem::exists(dir / "f" / "report.json"));
        CHECK(std::filesystem::exists(dir / "f" / "resolved_config.json"));
    }

    TEST_CASE("a local level sweep writes one mesh per level and prints the table")
    {
        TempDir dir("cli_sweep");
        const auto corpus = (dir / "corpus").string();
        REQUIRE(invoke({"synth", "--out", corpus, "--count", "5", "--levels", "2"}).status == 0);
        const auto r = invoke({"fit", "--corpus", corpus, "--levels", "2", "--model", "local", "--target",
                            (dir / "corpus" / "shape_001.ply").string(), "--max-level", "0", "--max-level", "1",
                            "--samples", "4", "--out", (dir / "f").string()});
        REQUIRE(r.status == 0);
        CHECK(std::filesystem::exists(dir / "f" / "fit_shape_001_L0.ply"));
        CHECK(std::filesystem::exists(dir / "f" / "fit_shape_001_L1.ply"));
        CHECK(r.out.find("level") != std::string::npos);
        const auto report = readJson(dir / "f" / "report.json");
        CHECK(report.dump().find("seconds") == std::string::npos);
    }

    TEST_CASE("roundtrip accepts any grid mesh")
    {
        TempDir dir("cli_roundtrip");
        const GridDims dims{9, 13};
        saveMesh(makeGridMesh(testing::randomPoints(static_cast<std::size_t>(dims.count()), 3), dims), dir / "g.ply");
        const auto r = invoke({"roundtrip", "--mesh", (dir / "g.ply").string(), "--out", (dir / "o").string()});
        CHECK(r.status == 0);
        const auto report = readJson(dir / "o" / "report.json");
        CHECK(report["levels"] == 2);
        CHECK(report["base"] == nlohmann::json::array({3, 4}));
        CHECK(report["max_error_mm"].get<double>() < 1e-10);
        CHECK(report["passed"] == true);
    }

    TEST_CASE("the reference pipeline reproduces the committed golden report")
    {
        TempDir dir("cli_golden");
        const auto config = (kData / "pipeline_config.json").string();
        REQUIRE(invoke({"evaluate", "--config", config, "--out", (dir / "a").string()}).status == 0);
        REQUIRE(invoke({"evaluate", "--config", config, "--out", (dir / "b").string()}).status == 0);
        const auto a = slurp(dir / "a" / "report.json");
        CHECK(a == slurp(dir / "b" / "report.json"));
        CHECK(a == slurp(kData / "golden_evaluate_report.json"));
        CHECK(std::filesystem::exists(dir / "a" / "curves.csv"));
    }

    TEST_CASE("flags override values from the config file")
    {
        TempDir dir("cli_override");
        const auto config = (kData / "pipeline_config.json").string();
        REQUIRE(invoke({"synth", "--config", config, "--count", "3", "--out", (dir / "o").string()}).status == 0);
        const auto resolved = readJson(dir / "o" / "resolved_config.json");
        CHECK(resolved["synth"]["count"] == 3);
        CHECK(resolved["seed"] == 5);
        CHECK(resolved["train"]["components"] == 8);
    }

    TEST_CASE("validation problems exit with status 1 and name the culprit")
    {
        TempDir dir("cli_bad");
        std::ofstream(dir / "bad.json") << R"({"fit": {"taux": 3}})";
        auto r = invoke({"evaluate", "--config", (dir / "bad.json").string(), "--out", (dir / "o").string()});
        CHECK(r.status == 1);
        CHECK(r.err.find("fit.taux") != std::string::npos);

        std::ofstream(dir / "type.json") << R"({"fit": {"tau": "ten"}})";
        r = invoke({"evaluate", "--config", (dir / "type.json").string()});
        CHECK(r.status == 1);
        CHECK(r.err.find("fit.tau") != std::string::npos);

        r = invoke({"fit", "--model", (dir / "nowhere.bin").string(), "--target", (dir / "missing.ply").string()});
        CHECK(r.status == 1);
        CHECK(r.err.find("missing.ply") != std::string::npos);

        r = invoke({"fit", "--tau", "-1", "--target", (dir / "bad.json").string()});
        CHECK(r.status == 1);
        CHECK(r.err.find("tau") != std::string::npos);

        CHECK(invoke({"frobnicate"}).status == 1);
        CHECK(invoke({"synth", "--count", "many"}).status == 1);
    }

    TEST_CASE("runtime failures exit with status 2")
    {
        TempDir dir("cli_runtime");
        std::ofstream(dir / "model.bin") << "SHPSPACE but not really a model";
        const GridDims dims{3, 3};
        saveMesh(makeGridMesh(testing::randomPoints(9, 4), dims), dir / "t.ply");
        const auto r = invoke({"fit", "--model", (dir / "model.bin").string(), "--target", (dir / "t.ply").string(),
                            "--out", (dir / "o").string()});
        CHECK(r.status == 2);
        CHECK_FALSE(r.err.empty());
    }

    TEST_CASE("help exits cleanly")
    {
        const auto r = invoke({"--help"});
        CHECK(r.status == 0);
        CHECK(r.out.find("roundtrip") != std::string::npos);
    }
}
