#pragma once

// Small helpers shared by the unit tests: seeded random geometry and tiny corpora.

#include "shapespace/geometry.hpp"
#include "shapespace/models.hpp"
#include "shapespace/synth.hpp"

#include <filesystem>
#include <random>
#include <string>

namespace testing {

using namespace shapespace;

inline VertexList randomPoints(std::size_t count, std::uint64_t seed, double extent = 100.0)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-extent, extent);
    VertexList out(count);
    for (auto& p : out)
        p = Point3(u(rng), u(rng), u(rng));
    return out;
}

inline double relativeRms(const VertexList& a, const VertexList& b)
{
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - b[i]).squaredNorm();
        den += b[i].squaredNorm();
    }
    return std::sqrt(num / std::max(den, 1e-300));
}

/// Reference corpus on a grid matching SubdivisionHierarchy({5, 7}, levels).
inline SynthCorpus smallCorpus(int levels, int count, double noise, std::uint64_t seed)
{
    SynthSpec spec = SynthSpec::reference();
    spec.gridDims = SubdivisionHierarchy({5, 7}, levels).finestDims();
    spec.count = count;
    spec.noiseStddev = noise;
    spec.seed = seed;
    return generateCorpus(spec);
}

/// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& name)
        : path_(std::filesystem::temp_directory_path() /
                ("shapespace_test_" + name + "_" + std::to_string(std::random_device{}())))
    {
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

} // namespace testing
