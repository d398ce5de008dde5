#include "shapespace/mesh_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace shapespace {

static_assert(std::endian::native == std::endian::little, "binary PLY I/O assumes a little-endian host");

ParseError::ParseError(const std::string& message, std::size_t line, std::size_t offset)
    : Error(message + (line ? " (line " + std::to_string(line) + ")" : std::string()) +
            (offset ? " (byte offset " + std::to_string(offset) + ")" : std::string())),
      line_(line), offset_(offset)
{
}

namespace {

std::string lowerExtension(const std::filesystem::path& path)
{
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext;
}

std::string readFile(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

// ---------------------------------------------------------------------------------------------
// OBJ

int resolveObjIndex(long index, std::size_t vertexCount, std::size_t line)
{
    long resolved = index > 0 ? index - 1 : static_cast<long>(vertexCount) + index;
    if (index == 0 || resolved < 0 || resolved >= static_cast<long>(vertexCount))
        throw ParseError("face index " + std::to_string(index) + " out of range", line);
    return static_cast<int>(resolved);
}

void addPolygon(RawGeometry& geo, const std::vector<int>& poly, std::size_t line)
{
    if (poly.size() < 3)
        throw ParseError("face with fewer than 3 vertices", line);
    if (poly.size() == 3) {
        geo.triangles.push_back({poly[0], poly[1], poly[2]});
    } else if (poly.size() == 4) {
        geo.quads.push_back({poly[0], poly[1], poly[2], poly[3]});
    } else {
        for (std::size_t i = 1; i + 1 < poly.size(); ++i)
            geo.triangles.push_back({poly[0], poly[i], poly[i + 1]});
    }
}

RawGeometry parseObj(const std::string& text)
{
    RawGeometry geo;
    std::istringstream in(text);
    std::string raw;
    std::size_t lineNo = 0;
    bool anyColor = false;
    while (std::getline(in, raw)) {
        ++lineNo;
        if (!raw.empty() && raw.back() == '\r')
            raw.pop_back();
        std::istringstream line(raw);
        std::string tag;
        if (!(line >> tag) || tag[0] == '#')
            continue;
        if (tag == "v") {
            double x, y, z;
            if (!(line >> x >> y >> z))
                throw ParseError("malformed vertex record", lineNo);
            geo.vertices.emplace_back(x, y, z);
            double r, g, b;
            if (line >> r >> g >> b) {
                anyColor = true;
                auto channel = [](double v) {
                    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
                };
                geo.colors.push_back({channel(r), channel(g), channel(b)});
            } else {
                geo.colors.push_back({255, 255, 255});
            }
        } else if (tag == "f") {
            std::vector<int> poly;
            std::string token;
            while (line >> token) {
                const auto slash = token.find('/');
                const auto head = token.substr(0, slash);
                long index = 0;
                try {
                    std::size_t used = 0;
                    index = std::stol(head, &used);
                    if (used != head.size())
                        throw std::invalid_argument(head);
                } catch (const std::exception&) {
                    throw ParseError("malformed face index '" + token + "'", lineNo);
                }
                poly.push_back(resolveObjIndex(index, geo.vertices.size(), lineNo));
            }
            addPolygon(geo, poly, lineNo);
        } else if (tag == "#grid_dims") {
            GridDims dims;
            if (line >> dims.rows >> dims.cols)
                geo.gridDims = dims;
        }
        // vn, vt, o, g, s, usemtl, mtllib: not needed
    }
    if (!anyColor)
        geo.colors.clear();
    return geo;
}

// ---------------------------------------------------------------------------------------------
// PLY

enum class PlyType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

PlyType parsePlyType(const std::string& name, std::size_t line)
{
    if (name == "char" || name == "int8") return PlyType::Int8;
    if (name == "uchar" || name == "uint8") return PlyType::UInt8;
    if (name == "short" || name == "int16") return PlyType::Int16;
    if (name == "ushort" || name == "uint16") return PlyType::UInt16;
    if (name == "int" || name == "int32") return PlyType::Int32;
    if (name == "uint" || name == "uint32") return PlyType::UInt32;
    if (name == "float" || name == "float32") return PlyType::Float32;
    if (name == "double" || name == "float64") return PlyType::Float64;
    throw ParseError("unknown PLY property type '" + name + "'", line);
}

std::size_t plyTypeSize(PlyType t)
{
    switch (t) {
    case PlyType::Int8:
    case PlyType::UInt8: return 1;
    case PlyType::Int16:
    case PlyType::UInt16: return 2;
    case PlyType::Int32:
    case PlyType::UInt32:
    case PlyType::Float32: return 4;
    case PlyType::Float64: return 8;
    }
    return 0;
}

struct PlyProperty {
    std::string name;
    PlyType type = PlyType::Float32;
    bool isList = false;
    PlyType countType = PlyType::UInt8;
};

struct PlyElement {
    std::string name;
    std::size_t count = 0;
    std::vector<PlyProperty> properties;
};

struct PlyHeader {
    bool binary = false;
    std::vector<PlyElement> elements;
    std::optional<GridDims> gridDims;
    std::size_t bodyOffset = 0;
    std::size_t bodyLine = 0;
};

PlyHeader parsePlyHeader(const std::string& data)
{
    PlyHeader header;
    std::size_t pos = 0;
    std::size_t lineNo = 0;
    bool sawFormat = false;
    auto nextLine = [&]() -> std::string {
        const auto end = data.find('\n', pos);
        if (end == std::string::npos)
            throw ParseError("unterminated PLY header", lineNo + 1);
        std::string line = data.substr(pos, end - pos);
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        pos = end + 1;
        ++lineNo;
        return line;
    };
    if (nextLine() != "ply")
        throw ParseError("missing 'ply' magic", 1);
    for (;;) {
        std::istringstream line(nextLine());
        std::string keyword;
        if (!(line >> keyword))
            continue;
        if (keyword == "end_header")
            break;
        if (keyword == "format") {
            std::string fmt;
            line >> fmt;
            if (fmt == "ascii")
                header.binary = false;
            else if (fmt == "binary_little_endian")
                header.binary = true;
            else
                throw ParseError("unsupported PLY format '" + fmt + "'", lineNo);
            sawFormat = true;
        } else if (keyword == "comment" || keyword == "obj_info") {
            std::string what;
            GridDims dims;
            if (line >> what && what == "grid_dims" && line >> dims.rows >> dims.cols)
                header.gridDims = dims;
        } else if (keyword == "element") {
            PlyElement element;
            if (!(line >> element.name >> element.count))
                throw ParseError("malformed element declaration", lineNo);
            header.elements.push_back(element);
        } else if (keyword == "property") {
            if (header.elements.empty())
                throw ParseError("property before any element", lineNo);
            PlyProperty prop;
            std::string type;
            line >> type;
            if (type == "list") {
                std::string countType, itemType;
                line >> countType >> itemType;
                prop.isList = true;
                prop.countType = parsePlyType(countType, lineNo);
                prop.type = parsePlyType(itemType, lineNo);
            } else {
                prop.type = parsePlyType(type, lineNo);
            }
            if (!(line >> prop.name))
                throw ParseError("property without a name", lineNo);
            header.elements.back().properties.push_back(prop);
        } else {
            throw ParseError("unknown PLY header keyword '" + keyword + "'", lineNo);
        }
    }
    if (!sawFormat)
        throw ParseError("PLY header has no format line", lineNo);
    header.bodyOffset = pos;
    header.bodyLine = lineNo + 1;
    return header;
}

/// Sequential scalar reader over either the ascii token stream or the binary body.
class PlyBodyReader {
public:
    PlyBodyReader(const std::string& data, const PlyHeader& header)
        : data_(data), pos_(header.bodyOffset), line_(header.bodyLine), binary_(header.binary)
    {
    }

    double read(PlyType type)
    {
        return binary_ ? readBinary(type) : readAscii();
    }

    void endRecord()
    {
        if (binary_)
            return;
        // Each ascii record occupies exactly one line.
        while (pos_ < data_.size() && data_[pos_] != '\n') {
            if (!std::isspace(static_cast<unsigned char>(data_[pos_])))
                throw ParseError("trailing data in PLY record", line_);
            ++pos_;
        }
        if (pos_ < data_.size()) {
            ++pos_;
            ++line_;
        }
    }

    std::size_t line() const { return binary_ ? 0 : line_; }
    std::size_t offset() const { return binary_ ? pos_ : 0; }

private:
    double readBinary(PlyType type)
    {
        const auto size = plyTypeSize(type);
        if (pos_ + size > data_.size())
            throw ParseError("truncated binary PLY body", 0, pos_);
        const char* p = data_.data() + pos_;
        pos_ += size;
        switch (type) {
        case PlyType::Int8: return static_cast<double>(load<std::int8_t>(p));
        case PlyType::UInt8: return static_cast<double>(load<std::uint8_t>(p));
        case PlyType::Int16: return static_cast<double>(load<std::int16_t>(p));
        case PlyType::UInt16: return static_cast<double>(load<std::uint16_t>(p));
        case PlyType::Int32: return static_cast<double>(load<std::int32_t>(p));
        case PlyType::UInt32: return static_cast<double>(load<std::uint32_t>(p));
        case PlyType::Float32: return static_cast<double>(load<float>(p));
        case PlyType::Float64: return load<double>(p);
        }
        return 0.0;
    }

    template <typename T>
    static T load(const char* p)
    {
        T value;
        std::memcpy(&value, p, sizeof(T));
        return value;
    }

    double readAscii()
    {
        while (pos_ < data_.size() && (data_[pos_] == ' ' || data_[pos_] == '\t' || data_[pos_] == '\r'))
            ++pos_;
        if (pos_ >= data_.size() || data_[pos_] == '\n')
            throw ParseError("PLY record ended early", line_);
        const char* begin = data_.data() + pos_;
        char* end = nullptr;
        const double value = std::strtod(begin, &end);
        if (end == begin)
            throw ParseError("malformed number in PLY body", line_);
        pos_ += static_cast<std::size_t>(end - begin);
        return value;
    }

    const std::string& data_;
    std::size_t pos_;
    std::size_t line_;
    bool binary_;
};

RawGeometry parsePly(const std::string& data)
{
    const auto header = parsePlyHeader(data);
    RawGeometry geo;
    geo.gridDims = header.gridDims;
    PlyBodyReader reader(data, header);

    for (const auto& element : header.elements) {
        if (element.name == "vertex") {
            int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1;
            for (std::size_t p = 0; p < element.properties.size(); ++p) {
                const auto& name = element.properties[p].name;
                const int idx = static_cast<int>(p);
                if (name == "x") ix = idx;
                else if (name == "y") iy = idx;
                else if (name == "z") iz = idx;
                else if (name == "red" || name == "r") ir = idx;
                else if (name == "green" || name == "g") ig = idx;
                else if (name == "blue" || name == "b") ib = idx;
            }
            if (ix < 0 || iy < 0 || iz < 0)
                throw ParseError("vertex element lacks x/y/z", header.bodyLine);
            const bool hasColor = ir >= 0 && ig >= 0 && ib >= 0;
            geo.vertices.reserve(element.count);
            std::vector<double> values(element.properties.size());
            for (std::size_t v = 0; v < element.count; ++v) {
                for (std::size_t p = 0; p < element.properties.size(); ++p) {
                    const auto& prop = element.properties[p];
                    if (prop.isList) {
                        const auto count = static_cast<std::size_t>(reader.read(prop.countType));
                        for (std::size_t i = 0; i < count; ++i)
                            reader.read(prop.type);
                        values[p] = 0.0;
                    } else {
                        values[p] = reader.read(prop.type);
                    }
                }
                reader.endRecord();
                geo.vertices.emplace_back(values[static_cast<std::size_t>(ix)], values[static_cast<std::size_t>(iy)],
                                          values[static_cast<std::size_t>(iz)]);
                if (hasColor) {
                    auto channel = [&](int i) {
                        return static_cast<std::uint8_t>(std::clamp(values[static_cast<std::size_t>(i)], 0.0, 255.0));
                    };
                    geo.colors.push_back({channel(ir), channel(ig), channel(ib)});
                }
            }
        } else if (element.name == "face") {
            int listIndex = -1;
            for (std::size_t p = 0; p < element.properties.size(); ++p) {
                const auto& prop = element.properties[p];
                if (prop.isList && (prop.name == "vertex_indices" || prop.name == "vertex_index"))
                    listIndex = static_cast<int>(p);
            }
            if (listIndex < 0)
                throw ParseError("face element lacks a vertex_indices list", header.bodyLine);
            std::vector<int> poly;
            for (std::size_t f = 0; f < element.count; ++f) {
                const auto line = reader.line();
                const auto offset = reader.offset();
                for (std::size_t p = 0; p < element.properties.size(); ++p) {
                    const auto& prop = element.properties[p];
                    if (prop.isList) {
                        const auto count = static_cast<std::size_t>(reader.read(prop.countType));
                        if (static_cast<int>(p) == listIndex)
                            poly.clear();
                        for (std::size_t i = 0; i < count; ++i) {
                            const double idx = reader.read(prop.type);
                            if (static_cast<int>(p) == listIndex) {
                                if (idx < 0 || idx >= static_cast<double>(geo.vertices.size()))
                                    throw ParseError("face index out of range", line, offset);
                                poly.push_back(static_cast<int>(idx));
                            }
                        }
                    } else {
                        reader.read(prop.type);
                    }
                }
                reader.endRecord();
                addPolygon(geo, poly, line ? line : offset);
            }
        } else {
            for (std::size_t e = 0; e < element.count; ++e) {
                for (const auto& prop : element.properties) {
                    if (prop.isList) {
                        const auto count = static_cast<std::size_t>(reader.read(prop.countType));
                        for (std::size_t i = 0; i < count; ++i)
                            reader.read(prop.type);
                    } else {
                        reader.read(prop.type);
                    }
                }
                reader.endRecord();
            }
        }
    }
    return geo;
}

// ---------------------------------------------------------------------------------------------
// writers

struct WriteView {
    const VertexList* vertices = nullptr;
    std::vector<std::vector<int>> faces;
    std::vector<Rgb> colors;
    std::optional<GridDims> gridDims;
};

template <typename T>
void put(std::ostream& out, T value)
{
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

void writePly(const WriteView& view, const std::filesystem::path& path, PlyEncoding encoding)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write " + path.string());
    const bool binary = encoding == PlyEncoding::BinaryLittleEndian;
    const bool hasColor = !view.colors.empty();
    out << "ply\n" << (binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n");
    if (view.gridDims)
        out << "comment grid_dims " << view.gridDims->rows << ' ' << view.gridDims->cols << '\n';
    out << "element vertex " << view.vertices->size() << '\n';
    out << "property double x\nproperty double y\nproperty double z\n";
    if (hasColor)
        out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    if (!view.faces.empty())
        out << "element face " << view.faces.size() << "\nproperty list uchar int vertex_indices\n";
    out << "end_header\n";

    const auto& verts = *view.vertices;
    if (binary) {
        for (std::size_t i = 0; i < verts.size(); ++i) {
            put(out, verts[i].x());
            put(out, verts[i].y());
            put(out, verts[i].z());
            if (hasColor)
                for (auto c : view.colors[i])
                    put(out, c);
        }
        for (const auto& f : view.faces) {
            put(out, static_cast<std::uint8_t>(f.size()));
            for (int idx : f)
                put(out, static_cast<std::int32_t>(idx));
        }
    } else {
        out << std::setprecision(17);
        for (std::size_t i = 0; i < verts.size(); ++i) {
            out << verts[i].x() << ' ' << verts[i].y() << ' ' << verts[i].z();
            if (hasColor)
                for (auto c : view.colors[i])
                    out << ' ' << static_cast<int>(c);
            out << '\n';
        }
        for (const auto& f : view.faces) {
            out << f.size();
            for (int idx : f)
                out << ' ' << idx;
            out << '\n';
        }
    }
    if (!out)
        throw Error("failed writing " + path.string());
}

void writeObj(const WriteView& view, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write " + path.string());
    out << std::setprecision(17);
    if (view.gridDims)
        out << "#grid_dims " << view.gridDims->rows << ' ' << view.gridDims->cols << '\n';
    const auto& verts = *view.vertices;
    for (std::size_t i = 0; i < verts.size(); ++i) {
        out << "v " << verts[i].x() << ' ' << verts[i].y() << ' ' << verts[i].z();
        if (!view.colors.empty())
            for (auto c : view.colors[i])
                out << ' ' << static_cast<double>(c) / 255.0;
        out << '\n';
    }
    for (const auto& f : view.faces) {
        out << 'f';
        for (int idx : f)
            out << ' ' << idx + 1;
        out << '\n';
    }
    if (!out)
        throw Error("failed writing " + path.string());
}

void writeView(const WriteView& view, const std::filesystem::path& path, MeshWriteOptions options)
{
    const auto ext = lowerExtension(path);
    if (ext == ".ply")
        writePly(view, path, options.encoding);
    else if (ext == ".obj")
        writeObj(view, path);
    else
        throw Error("unsupported mesh extension '" + ext + "' for " + path.string());
}

} // namespace

RawGeometry readGeometry(const std::filesystem::path& path)
{
    if (!std::filesystem::exists(path))
        throw Error("file not found: " + path.string());
    const auto ext = lowerExtension(path);
    const auto data = readFile(path);
    if (ext == ".obj")
        return parseObj(data);
    if (ext == ".ply")
        return parsePly(data);
    throw Error("unsupported mesh extension '" + ext + "' for " + path.string());
}

Mesh loadMesh(const std::filesystem::path& path)
{
    auto geo = readGeometry(path);
    if (!geo.quads.empty() && geo.triangles.empty()) {
        QuadMesh mesh;
        mesh.vertices = std::move(geo.vertices);
        mesh.faces = std::move(geo.quads);
        mesh.colors = std::move(geo.colors);
        if (geo.gridDims && geo.gridDims->count() == static_cast<int>(mesh.vertices.size()) &&
            mesh.faces == gridQuads(*geo.gridDims))
            mesh.gridDims = geo.gridDims;
        mesh.validate();
        return mesh;
    }
    TriangleMesh mesh;
    mesh.vertices = std::move(geo.vertices);
    mesh.faces = std::move(geo.triangles);
    for (const auto& t : triangulate(geo.quads))
        mesh.faces.push_back(t);
    mesh.colors = std::move(geo.colors);
    mesh.validate();
    return mesh;
}

const VertexList& vertices(const Mesh& mesh)
{
    return std::visit([](const auto& m) -> const VertexList& { return m.vertices; }, mesh);
}

void saveMesh(const Mesh& mesh, const std::filesystem::path& path, std::optional<std::span<const double>> scalarField,
              MeshWriteOptions options)
{
    WriteView view;
    std::visit(
        [&](const auto& m) {
            m.validate();
            view.vertices = &m.vertices;
            view.colors = m.colors;
            for (const auto& f : m.faces)
                view.faces.emplace_back(f.begin(), f.end());
            if constexpr (std::is_same_v<std::decay_t<decltype(m)>, QuadMesh>)
                view.gridDims = m.gridDims;
        },
        mesh);
    if (scalarField) {
        if (scalarField->size() != view.vertices->size())
            throw DimensionError("scalar field has " + std::to_string(scalarField->size()) + " values for " +
                                 std::to_string(view.vertices->size()) + " vertices");
        view.colors.clear();
        for (double v : *scalarField)
            view.colors.push_back(errorColor(v));
    }
    writeView(view, path, options);
}

PointCloud loadPointCloud(const std::filesystem::path& path)
{
    auto geo = readGeometry(path);
    if (geo.vertices.empty())
        throw DegenerateError("point cloud " + path.string() + " has no points");
    for (const auto& p : geo.vertices)
        if (!p.allFinite())
            throw DegenerateError("point cloud " + path.string() + " has a non-finite point");
    return PointCloud{std::move(geo.vertices)};
}

void savePointCloud(const PointCloud& cloud, const std::filesystem::path& path, MeshWriteOptions options)
{
    WriteView view;
    view.vertices = &cloud.points;
    writeView(view, path, options);
}

Rgb errorColor(double millimeters)
{
    const double t = std::isfinite(millimeters) ? std::clamp(millimeters / kErrorColorRangeMm, 0.0, 1.0) : 1.0;
    const auto red = static_cast<std::uint8_t>(std::lround(255.0 * t));
    const auto blue = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - t)));
    return {red, 0, blue};
}

LandmarkSet loadLandmarks(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open landmark file " + path.string());
    LandmarkSet set;
    std::string raw;
    std::size_t lineNo = 0;
    while (std::getline(in, raw)) {
        ++lineNo;
        if (const auto hash = raw.find('#'); hash != std::string::npos)
            raw.erase(hash);
        std::istringstream line(raw);
        std::string label;
        if (!(line >> label))
            continue;
        if (set.contains(label))
            throw ParseError("duplicate landmark label '" + label + "'", lineNo);
        std::string first;
        if (!(line >> first))
            throw ParseError("landmark '" + label + "' has no position", lineNo);
        if (first == "-") {
            set.set(label, std::nullopt);
            continue;
        }
        double x = 0, y = 0, z = 0;
        try {
            x = std::stod(first);
        } catch (const std::exception&) {
            throw ParseError("malformed coordinate for landmark '" + label + "'", lineNo);
        }
        if (!(line >> y >> z))
            throw ParseError("landmark '" + label + "' needs three coordinates", lineNo);
        set.set(label, Point3(x, y, z));
    }
    return set;
}

void saveLandmarks(const LandmarkSet& landmarks, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write landmark file " + path.string());
    out << std::setprecision(17);
    for (const auto& e : landmarks.entries()) {
        out << e.label;
        if (e.position)
            out << ' ' << e.position->x() << ' ' << e.position->y() << ' ' << e.position->z() << '\n';
        else
            out << " -\n";
    }
}

} // namespace shapespace
