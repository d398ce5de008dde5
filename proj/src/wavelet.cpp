#include "shapespace/wavelet.hpp"

#include <algorithm>
#include <string>

namespace shapespace {

SubdivisionHierarchy::SubdivisionHierarchy(GridDims base, int levels) : base_(base), levels_(levels)
{
    if (base.rows < 2 || base.cols < 2)
        throw DimensionError("base grid must be at least 2x2");
    if (levels < 0 || levels > 12)
        throw DimensionError("subdivision levels must lie in [0, 12], got " + std::to_string(levels));

    const auto fine = finestDims();
    coeffVertex_.reserve(static_cast<std::size_t>(fine.count()));
    coeffLevel_.reserve(static_cast<std::size_t>(fine.count()));
    for (int level = 0; level <= levels_; ++level) {
        const int s = spacing(level);
        for (int r = 0; r < fine.rows; r += s) {
            for (int c = 0; c < fine.cols; c += s) {
                const bool coarser = level > 0 && r % (2 * s) == 0 && c % (2 * s) == 0;
                if (coarser)
                    continue;
                coeffVertex_.push_back(r * fine.cols + c);
                coeffLevel_.push_back(level);
            }
        }
    }
}

GridDims SubdivisionHierarchy::dims(int level) const
{
    if (level < 0 || level > levels_)
        throw DimensionError("level " + std::to_string(level) + " outside [0, " + std::to_string(levels_) + "]");
    return {(base_.rows - 1) * (1 << level) + 1, (base_.cols - 1) * (1 << level) + 1};
}

namespace {

template <typename T>
T zeroOf()
{
    if constexpr (std::is_same_v<T, double>)
        return 0.0;
    else
        return T::Zero();
}

/// A rectangular window onto the finest grid. Values outside the window read as zero; neighbor
/// counts always follow the full grid, so windowed and full passes agree wherever the field is
/// supported inside the window.
template <typename T>
struct Window {
    T* data;
    int rowBegin, rowEnd, colBegin, colEnd; // [begin, end) in finest-grid coordinates
    int fullRows, fullCols;

    bool inside(int r, int c) const { return r >= rowBegin && r < rowEnd && c >= colBegin && c < colEnd; }
    T& at(int r, int c) { return data[(r - rowBegin) * (colEnd - colBegin) + (c - colBegin)]; }
    T get(int r, int c) const
    {
        return inside(r, c) ? data[(r - rowBegin) * (colEnd - colBegin) + (c - colBegin)] : zeroOf<T>();
    }
};

int firstMultiple(int from, int step) { return ((std::max(from, 0) + step - 1) / step) * step; }

template <typename T, typename Fn>
void forEachLattice(const Window<T>& w, int step, Fn&& fn)
{
    for (int r = firstMultiple(w.rowBegin, step); r < w.rowEnd; r += step)
        for (int c = firstMultiple(w.colBegin, step); c < w.colEnd; c += step)
            fn(r, c);
}

/// Prediction of an odd vertex of the lattice with spacing s from its even neighbors (spacing 2s).
template <typename T>
T predict(const Window<T>& w, int r, int c, int s)
{
    const bool rowEven = r % (2 * s) == 0;
    const bool colEven = c % (2 * s) == 0;
    if (rowEven)
        return 0.5 * (w.get(r, c - s) + w.get(r, c + s));
    if (colEven)
        return 0.5 * (w.get(r - s, c) + w.get(r + s, c));
    return 0.25 * (w.get(r - s, c - s) + w.get(r - s, c + s) + w.get(r + s, c - s) + w.get(r + s, c + s));
}

/// Half the mean of the details at the odd neighbors of an even vertex.
template <typename T>
T updateTerm(const Window<T>& w, int r, int c, int s)
{
    T sum = zeroOf<T>();
    int count = 0;
    for (int dr = -s; dr <= s; dr += s) {
        for (int dc = -s; dc <= s; dc += s) {
            if (dr == 0 && dc == 0)
                continue;
            const int rr = r + dr, cc = c + dc;
            if (rr < 0 || rr >= w.fullRows || cc < 0 || cc >= w.fullCols)
                continue;
            sum += w.get(rr, cc);
            ++count;
        }
    }
    return (0.5 / count) * sum;
}

bool isOdd(int r, int c, int s) { return r % (2 * s) != 0 || c % (2 * s) != 0; }

template <typename T>
void forwardStep(Window<T>& w, int s)
{
    forEachLattice(w, s, [&](int r, int c) {
        if (isOdd(r, c, s))
            w.at(r, c) -= predict(w, r, c, s);
    });
    forEachLattice(w, 2 * s, [&](int r, int c) { w.at(r, c) += updateTerm(w, r, c, s); });
}

template <typename T>
void inverseStep(Window<T>& w, int s, bool keepDetails)
{
    if (keepDetails) {
        forEachLattice(w, 2 * s, [&](int r, int c) { w.at(r, c) -= updateTerm(w, r, c, s); });
    } else {
        forEachLattice(w, s, [&](int r, int c) {
            if (isOdd(r, c, s))
                w.at(r, c) = zeroOf<T>();
        });
    }
    forEachLattice(w, s, [&](int r, int c) {
        if (isOdd(r, c, s))
            w.at(r, c) += predict(w, r, c, s);
    });
}

template <typename T>
Window<T> fullWindow(std::vector<T>& data, GridDims dims)
{
    return Window<T>{data.data(), 0, dims.rows, 0, dims.cols, dims.rows, dims.cols};
}

template <typename T>
std::vector<T> forwardImpl(std::vector<T> grid, const SubdivisionHierarchy& h)
{
    auto w = fullWindow(grid, h.finestDims());
    for (int level = h.levels(); level >= 1; --level)
        forwardStep(w, h.spacing(level));
    std::vector<T> coeffs(grid.size());
    for (int k = 0; k < h.vertexCount(); ++k)
        coeffs[static_cast<std::size_t>(k)] = grid[static_cast<std::size_t>(h.coefficientVertex(k))];
    return coeffs;
}

template <typename T>
std::vector<T> inverseImpl(const std::vector<T>& coeffs, const SubdivisionHierarchy& h, int upToLevel)
{
    if (upToLevel < 0)
        upToLevel = h.levels();
    if (upToLevel > h.levels())
        throw DimensionError("upToLevel " + std::to_string(upToLevel) + " exceeds " + std::to_string(h.levels()));
    std::vector<T> grid(coeffs.size());
    for (int k = 0; k < h.vertexCount(); ++k)
        grid[static_cast<std::size_t>(h.coefficientVertex(k))] = coeffs[static_cast<std::size_t>(k)];
    auto w = fullWindow(grid, h.finestDims());
    for (int level = 1; level <= h.levels(); ++level)
        inverseStep(w, h.spacing(level), level <= upToLevel);
    return grid;
}

void checkCount(std::size_t count, const SubdivisionHierarchy& h, const char* what)
{
    if (count != static_cast<std::size_t>(h.vertexCount()))
        throw DimensionError(std::string(what) + ": got " + std::to_string(count) + " values, hierarchy has " +
                             std::to_string(h.vertexCount()));
}

} // namespace

WaveletCoefficients forwardTransform(const VertexList& grid, const SubdivisionHierarchy& hierarchy)
{
    checkCount(grid.size(), hierarchy, "forwardTransform");
    return WaveletCoefficients{forwardImpl(grid, hierarchy)};
}

VertexList inverseTransform(const WaveletCoefficients& coeffs, const SubdivisionHierarchy& hierarchy, int upToLevel)
{
    checkCount(coeffs.coeffs.size(), hierarchy, "inverseTransform");
    return inverseImpl(coeffs.coeffs, hierarchy, upToLevel);
}

Eigen::VectorXd forwardTransformScalar(const Eigen::VectorXd& grid, const SubdivisionHierarchy& hierarchy)
{
    checkCount(static_cast<std::size_t>(grid.size()), hierarchy, "forwardTransformScalar");
    auto out = forwardImpl(std::vector<double>(grid.data(), grid.data() + grid.size()), hierarchy);
    return Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size()));
}

Eigen::VectorXd inverseTransformScalar(const Eigen::VectorXd& coeffs, const SubdivisionHierarchy& hierarchy,
                                       int upToLevel)
{
    checkCount(static_cast<std::size_t>(coeffs.size()), hierarchy, "inverseTransformScalar");
    auto out = inverseImpl(std::vector<double>(coeffs.data(), coeffs.data() + coeffs.size()), hierarchy, upToLevel);
    return Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size()));
}

int supportRadius(const SubdivisionHierarchy& hierarchy, int k)
{
    const int level = hierarchy.coefficientLevel(k);
    // A scaling function is a tensor hat of half-width spacing(0). A level-j detail also moves the
    // (2s)-spaced even neighbors by the update, which then spread one more coarse cell by interpolation.
    return level == 0 ? hierarchy.spacing(0) : 3 * hierarchy.spacing(level);
}

BasisColumn basisColumn(const SubdivisionHierarchy& hierarchy, int k)
{
    if (k < 0 || k >= hierarchy.vertexCount())
        throw DimensionError("coefficient index " + std::to_string(k) + " out of range");
    const auto fine = hierarchy.finestDims();
    const int vertex = hierarchy.coefficientVertex(k);
    const int level = hierarchy.coefficientLevel(k);
    const int r0 = vertex / fine.cols, c0 = vertex % fine.cols;
    const int radius = supportRadius(hierarchy, k);

    Window<double> w{nullptr,
                     std::max(0, r0 - radius),
                     std::min(fine.rows, r0 + radius + 1),
                     std::max(0, c0 - radius),
                     std::min(fine.cols, c0 + radius + 1),
                     fine.rows,
                     fine.cols};
    std::vector<double> local(static_cast<std::size_t>((w.rowEnd - w.rowBegin) * (w.colEnd - w.colBegin)), 0.0);
    w.data = local.data();
    w.at(r0, c0) = 1.0;
    for (int l = std::max(level, 1); l <= hierarchy.levels(); ++l)
        inverseStep(w, hierarchy.spacing(l), l == level);

    BasisColumn column;
    for (int r = w.rowBegin; r < w.rowEnd; ++r) {
        for (int c = w.colBegin; c < w.colEnd; ++c) {
            const double v = w.get(r, c);
            if (v != 0.0) {
                column.vertices.push_back(r * fine.cols + c);
                column.weights.push_back(v);
            }
        }
    }
    return column;
}

Eigen::MatrixXd denseInverseMatrix(const SubdivisionHierarchy& hierarchy)
{
    const int n = hierarchy.vertexCount();
    if (n > kMaxDenseVertices)
        throw DimensionError("dense inverse transform limited to " + std::to_string(kMaxDenseVertices) +
                             " vertices, hierarchy has " + std::to_string(n));
    Eigen::MatrixXd matrix = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k < n; ++k) {
        const auto column = basisColumn(hierarchy, k);
        for (std::size_t i = 0; i < column.vertices.size(); ++i)
            matrix(column.vertices[i], k) = column.weights[i];
    }
    return matrix;
}

} // namespace shapespace
