#include "shapespace/model_io.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <sstream>

namespace shapespace {

namespace {

constexpr char kMagic[8] = {'S', 'H', 'P', 'S', 'P', 'A', 'C', 'E'};

class Writer {
public:
    template <typename T>
    void put(T value)
    {
        const auto* p = reinterpret_cast<const char*>(&value);
        bytes_.insert(bytes_.end(), p, p + sizeof(T));
    }
    void putDoubles(const double* data, std::size_t count)
    {
        const auto* p = reinterpret_cast<const char*>(data);
        bytes_.insert(bytes_.end(), p, p + count * sizeof(double));
    }
    void putRaw(const char* data, std::size_t count) { bytes_.insert(bytes_.end(), data, data + count); }
    std::vector<char>& bytes() { return bytes_; }

private:
    std::vector<char> bytes_;
};

class Reader {
public:
    Reader(const char* data, std::size_t size) : data_(data), size_(size) {}

    template <typename T>
    T get()
    {
        need(sizeof(T));
        T value;
        std::memcpy(&value, data_ + pos_, sizeof(T));
        pos_ += sizeof(T);
        return value;
    }
    void getDoubles(double* out, std::size_t count)
    {
        need(count * sizeof(double));
        std::memcpy(out, data_ + pos_, count * sizeof(double));
        pos_ += count * sizeof(double);
    }
    std::string getString(std::size_t length)
    {
        need(length);
        std::string s(data_ + pos_, length);
        pos_ += length;
        return s;
    }
    std::size_t remaining() const { return size_ - pos_; }

private:
    void need(std::size_t count) const
    {
        if (count > size_ - pos_)
            throw ModelFormatError("model file payload is truncated");
    }
    const char* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
};

void writeLandmarks(Writer& w, const LandmarkVertexMap& landmarks)
{
    w.put<std::uint64_t>(landmarks.size());
    for (const auto& [label, vertex] : landmarks) {
        w.put<std::uint32_t>(static_cast<std::uint32_t>(label.size()));
        w.putRaw(label.data(), label.size());
        w.put<std::int32_t>(vertex);
    }
}

LandmarkVertexMap readLandmarks(Reader& r)
{
    LandmarkVertexMap out;
    const auto count = r.get<std::uint64_t>();
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto length = r.get<std::uint32_t>();
        auto label = r.getString(length);
        out[label] = r.get<std::int32_t>();
    }
    return out;
}

void writeGlobal(Writer& w, const GlobalPcaModel& m)
{
    const auto n3 = static_cast<std::size_t>(m.mean.size());
    const auto d = static_cast<std::size_t>(m.basis.cols());
    w.put<std::uint64_t>(n3 / 3);
    w.put<std::uint64_t>(d);
    w.put<std::uint64_t>(static_cast<std::uint64_t>(m.spectrum.size()));
    w.putDoubles(m.mean.data(), n3);
    w.putDoubles(m.basis.data(), n3 * d);
    w.putDoubles(m.eigenvalues.data(), d);
    w.putDoubles(m.spectrum.data(), static_cast<std::size_t>(m.spectrum.size()));
    w.put<std::uint64_t>(m.faces.size());
    for (const auto& f : m.faces)
        for (int idx : f)
            w.put<std::int32_t>(idx);
    w.put<std::uint8_t>(m.gridDims ? 1 : 0);
    if (m.gridDims) {
        w.put<std::int32_t>(m.gridDims->rows);
        w.put<std::int32_t>(m.gridDims->cols);
    }
    writeLandmarks(w, m.landmarks);
}

GlobalPcaModel readGlobal(Reader& r)
{
    GlobalPcaModel m;
    const auto n = r.get<std::uint64_t>();
    const auto d = r.get<std::uint64_t>();
    const auto spectrumLength = r.get<std::uint64_t>();
    const auto n3 = 3 * n;
    if (n3 * (d + 1) * sizeof(double) > r.remaining())
        throw ModelFormatError("model file payload is truncated");
    m.mean.resize(static_cast<Eigen::Index>(n3));
    r.getDoubles(m.mean.data(), n3);
    m.basis.resize(static_cast<Eigen::Index>(n3), static_cast<Eigen::Index>(d));
    r.getDoubles(m.basis.data(), n3 * d);
    m.eigenvalues.resize(static_cast<Eigen::Index>(d));
    r.getDoubles(m.eigenvalues.data(), d);
    m.spectrum.resize(static_cast<Eigen::Index>(spectrumLength));
    r.getDoubles(m.spectrum.data(), spectrumLength);
    const auto faceCount = r.get<std::uint64_t>();
    if (faceCount * 12 > r.remaining())
        throw ModelFormatError("model file payload is truncated");
    m.faces.resize(faceCount);
    for (auto& f : m.faces)
        for (int& idx : f)
            idx = r.get<std::int32_t>();
    if (r.get<std::uint8_t>()) {
        GridDims dims;
        dims.rows = r.get<std::int32_t>();
        dims.cols = r.get<std::int32_t>();
        m.gridDims = dims;
    }
    m.landmarks = readLandmarks(r);
    return m;
}

void writeLocal(Writer& w, const LocalWaveletModel& m)
{
    const auto& h = m.hierarchy;
    w.put<std::int32_t>(h.baseDims().rows);
    w.put<std::int32_t>(h.baseDims().cols);
    w.put<std::int32_t>(h.levels());
    const auto n = m.coefficientMeans.size();
    w.put<std::uint64_t>(n);
    for (const auto& p : m.coefficientMeans)
        w.putDoubles(p.data(), 3);
    for (const auto& U : m.rotations)
        w.putDoubles(U.data(), 9);
    for (const auto& s : m.stddevs)
        w.putDoubles(s.data(), 3);
    writeLandmarks(w, m.landmarks);
}

LocalWaveletModel readLocal(Reader& r)
{
    GridDims base;
    base.rows = r.get<std::int32_t>();
    base.cols = r.get<std::int32_t>();
    const int levels = r.get<std::int32_t>();
    LocalWaveletModel m;
    try {
        m.hierarchy = SubdivisionHierarchy(base, levels);
    } catch (const Error& e) {
        throw ModelFormatError(std::string("invalid hierarchy in model file: ") + e.what());
    }
    const auto n = r.get<std::uint64_t>();
    if (n != static_cast<std::uint64_t>(m.hierarchy.vertexCount()))
        throw ModelFormatError("coefficient count does not match the stored hierarchy");
    if (n * 15 * sizeof(double) > r.remaining())
        throw ModelFormatError("model file payload is truncated");
    m.coefficientMeans.resize(n);
    m.rotations.resize(n);
    m.stddevs.resize(n);
    for (auto& p : m.coefficientMeans)
        r.getDoubles(p.data(), 3);
    for (auto& U : m.rotations)
        r.getDoubles(U.data(), 9);
    for (auto& s : m.stddevs)
        r.getDoubles(s.data(), 3);
    m.landmarks = readLandmarks(r);
    return m;
}

std::uint32_t crc(const char* data, std::size_t size)
{
    return static_cast<std::uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef*>(data), static_cast<uInt>(size)));
}

} // namespace

void saveModel(const ShapeModel& model, const std::filesystem::path& path)
{
    Writer w;
    w.putRaw(kMagic, sizeof(kMagic));
    w.put<std::uint32_t>(kModelFormatVersion);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(kindOf(model)));
    std::visit(
        [&](const auto& m) {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, GlobalPcaModel>)
                writeGlobal(w, m);
            else
                writeLocal(w, m);
        },
        model);
    const auto checksum = crc(w.bytes().data(), w.bytes().size());
    w.put<std::uint32_t>(checksum);

    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write model file " + path.string());
    out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
    if (!out)
        throw Error("failed writing model file " + path.string());
}

ShapeModel loadModel(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot open model file " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    const std::string bytes = buffer.str();

    if (bytes.size() < sizeof(kMagic) + 12 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
        throw ModelFormatError(path.string() + " is not a shape model file");
    std::uint32_t version = 0;
    std::memcpy(&version, bytes.data() + sizeof(kMagic), 4);
    if (version != kModelFormatVersion)
        throw ModelFormatError("model format version " + std::to_string(version) + " is not supported (expected " +
                               std::to_string(kModelFormatVersion) + ")");
    const std::size_t body = bytes.size() - 4;
    std::uint32_t stored = 0;
    std::memcpy(&stored, bytes.data() + body, 4);
    if (crc(bytes.data(), body) != stored)
        throw ModelFormatError("model file checksum mismatch (file corrupted or truncated): " + path.string());

    Reader r(bytes.data() + sizeof(kMagic) + 4, body - sizeof(kMagic) - 4);
    const auto kind = r.get<std::uint32_t>();
    ShapeModel model;
    if (kind == static_cast<std::uint32_t>(ModelKind::Global))
        model = readGlobal(r);
    else if (kind == static_cast<std::uint32_t>(ModelKind::Local))
        model = readLocal(r);
    else
        throw ModelFormatError("unknown model kind " + std::to_string(kind));
    if (r.remaining() != 0)
        throw ModelFormatError("trailing bytes in model file");
    return model;
}

GlobalPcaModel loadGlobalModel(const std::filesystem::path& path)
{
    auto model = loadModel(path);
    if (!std::holds_alternative<GlobalPcaModel>(model))
        throw ModelFormatError(path.string() + " holds a local wavelet model, not a global PCA model");
    return std::get<GlobalPcaModel>(std::move(model));
}

LocalWaveletModel loadLocalModel(const std::filesystem::path& path)
{
    auto model = loadModel(path);
    if (!std::holds_alternative<LocalWaveletModel>(model))
        throw ModelFormatError(path.string() + " holds a global PCA model, not a local wavelet model");
    return std::get<LocalWaveletModel>(std::move(model));
}

} // namespace shapespace
