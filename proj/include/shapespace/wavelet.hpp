#pragma once

#include "shapespace/geometry.hpp"

#include <Eigen/Core>

#include <vector>

namespace shapespace {

/// Regular quad subdivision hierarchy over a rows x cols base grid.
///
/// Level j has ((rows-1)*2^j + 1) x ((cols-1)*2^j + 1) vertices; level `levels()` is the finest grid
/// and its vertex count is n. A vertex of the finest grid at (r, c) belongs to level j when both r and c
/// are multiples of 2^(levels - j).
///
/// Wavelet coefficients are indexed level-major, then row-major: first the level-0 (scaling)
/// vertices in row-major order of the base grid, then for each level j = 1..J the vertices that are new at
/// level j, in row-major order of the level-j grid. Coefficient k lives at finest-grid vertex
/// coefficientVertex(k).
class SubdivisionHierarchy {
public:
    SubdivisionHierarchy() : SubdivisionHierarchy(GridDims{5, 7}, 6) {}
    SubdivisionHierarchy(GridDims base, int levels);

    GridDims baseDims() const { return base_; }
    int levels() const { return levels_; }
    GridDims dims(int level) const;
    GridDims finestDims() const { return dims(levels_); }
    int vertexCount() const { return finestDims().count(); }

    /// Number of coefficients at levels <= level, i.e. vertex count of the level grid.
    int coefficientCount(int level) const { return dims(level).count(); }
    int coefficientVertex(int k) const { return coeffVertex_[static_cast<std::size_t>(k)]; }
    int coefficientLevel(int k) const { return coeffLevel_[static_cast<std::size_t>(k)]; }
    /// Spacing of the level grid measured in finest-grid steps.
    int spacing(int level) const { return 1 << (levels_ - level); }

    friend bool operator==(const SubdivisionHierarchy& a, const SubdivisionHierarchy& b)
    {
        return a.base_ == b.base_ && a.levels_ == b.levels_;
    }

private:
    GridDims base_;
    int levels_;
    std::vector<int> coeffVertex_;
    std::vector<int> coeffLevel_;
};

enum class CoefficientKind { Scaling, Detail };

struct WaveletCoefficients {
    VertexList coeffs; // one 3-vector per coefficient, in hierarchy order

    CoefficientKind kind(const SubdivisionHierarchy& h, int k) const
    {
        return h.coefficientLevel(k) == 0 ? CoefficientKind::Scaling : CoefficientKind::Detail;
    }
};

/// Biorthogonal linear B-spline lifting transform. Predict: edge vertices from the mean of their two
/// grid neighbors, face vertices from the mean of their four diagonal neighbors. Update: each even vertex
/// gains half the mean of the details at its (up to eight) odd neighbors.
WaveletCoefficients forwardTransform(const VertexList& grid, const SubdivisionHierarchy& hierarchy);

/// Exact inverse of forwardTransform. With upToLevel < levels, details above upToLevel are treated as zero.
VertexList inverseTransform(const WaveletCoefficients& coeffs, const SubdivisionHierarchy& hierarchy,
                            int upToLevel = -1);

/// Scalar versions, one value per vertex / coefficient. The 3D transform applies these per coordinate.
Eigen::VectorXd forwardTransformScalar(const Eigen::VectorXd& grid, const SubdivisionHierarchy& hierarchy);
Eigen::VectorXd inverseTransformScalar(const Eigen::VectorXd& coeffs, const SubdivisionHierarchy& hierarchy,
                                       int upToLevel = -1);

/// One column of the inverse transform: the finest-grid footprint of a unit coefficient.
struct BasisColumn {
    std::vector<int> vertices;
    std::vector<double> weights;
};

/// Computes column k of D^-1 by propagating a unit coefficient only through its support window.
BasisColumn basisColumn(const SubdivisionHierarchy& hierarchy, int k);

/// Chebyshev radius (finest-grid steps) outside which column k is exactly zero.
int supportRadius(const SubdivisionHierarchy& hierarchy, int k);

inline constexpr int kMaxDenseVertices = 5000;

/// Dense scalar n x n matrix of the inverse transform (column k = basis function of coefficient k).
/// The 3n x 3n operator on interleaved coordinates is this matrix Kronecker I_3.
/// Throws DimensionError above kMaxDenseVertices vertices.
Eigen::MatrixXd denseInverseMatrix(const SubdivisionHierarchy& hierarchy);

} // namespace shapespace
