#ifndef LLBAR_GRID_HPP
#define LLBAR_GRID_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>

#include "llbar/error.hpp"

namespace llbar {

using Index3 = std::array<int, 3>;

/// Cell-centred tensor grid on the box [0,L_1]x...x[0,L_d].
///
/// Node i along axis j sits at (i + 1/2) L_j / N_j, the even-reflection
/// (DCT-II) convention: every cosine mode has zero normal derivative at the
/// box faces, and the midpoint rule integrates cos(k pi x / L) exactly for
/// k < 2N.
struct GridSpec {
    int dim = 1;
    std::array<double, 3> extents{1.0, 1.0, 1.0};
    Index3 points{1, 1, 1};
    int dealias_pad = 2;

    static GridSpec make(int dim, std::array<double, 3> extents, Index3 points,
                         int dealias_pad = 2) {
        GridSpec g;
        g.dim = dim;
        g.extents = extents;
        g.points = points;
        g.dealias_pad = dealias_pad;
        for (int j = dim; j < 3; ++j) {
            g.extents[j] = 1.0;
            g.points[j] = 1;
        }
        g.validate();
        return g;
    }

    /// Cube [0,L]^d with N nodes per axis.
    static GridSpec cube(int dim, int n, double length = 1.0, int dealias_pad = 2) {
        return make(dim, {length, length, length}, {n, n, n}, dealias_pad);
    }

    void validate() const {
        require(dim >= 1 && dim <= 3, "grid: dim must be 1, 2 or 3");
        require(dealias_pad >= 1, "grid: dealias_pad must be >= 1");
        for (int j = 0; j < dim; ++j) {
            require(points[j] >= 4, "grid: axis " + std::to_string(j) +
                                        " has N=" + std::to_string(points[j]) +
                                        " < 4");
            require(std::isfinite(extents[j]) && extents[j] > 0.0,
                    "grid: axis " + std::to_string(j) + " has non-positive extent");
        }
    }

    std::size_t node_count() const {
        std::size_t n = 1;
        for (int j = 0; j < dim; ++j) n *= static_cast<std::size_t>(points[j]);
        return n;
    }

    double volume() const {
        double v = 1.0;
        for (int j = 0; j < dim; ++j) v *= extents[j];
        return v;
    }

    /// Quadrature weight of a single node.
    double cell_volume() const {
        double v = 1.0;
        for (int j = 0; j < dim; ++j) v *= extents[j] / points[j];
        return v;
    }

    double coordinate(int axis, int i) const {
        return (i + 0.5) * extents[axis] / points[axis];
    }

    /// Wavenumber k pi / L_axis.
    double wavenumber(int axis, int k) const {
        return k * std::numbers::pi / extents[axis];
    }

    GridSpec refined(int factor) const {
        GridSpec g = *this;
        for (int j = 0; j < dim; ++j) g.points[j] *= factor;
        return g;
    }

    /// Grid used for pointwise nonlinear products.
    GridSpec padded() const { return refined(dealias_pad); }

    /// Same box, different node counts.
    GridSpec with_points(Index3 n) const {
        GridSpec g = *this;
        for (int j = 0; j < dim; ++j) g.points[j] = n[j];
        g.validate();
        return g;
    }

    bool same_box(const GridSpec& o) const {
        if (dim != o.dim) return false;
        for (int j = 0; j < dim; ++j)
            if (extents[j] != o.extents[j]) return false;
        return true;
    }

    friend bool operator==(const GridSpec& a, const GridSpec& b) {
        return a.same_box(b) && a.points == b.points;
    }
};

/// Row-major multi-index iteration helpers (last axis fastest).
inline std::size_t flat_size(int dim, const Index3& n) {
    std::size_t s = 1;
    for (int j = 0; j < dim; ++j) s *= static_cast<std::size_t>(n[j]);
    return s;
}

inline Index3 unflatten(int dim, const Index3& n, std::size_t flat) {
    Index3 k{0, 0, 0};
    for (int j = dim - 1; j >= 0; --j) {
        k[j] = static_cast<int>(flat % static_cast<std::size_t>(n[j]));
        flat /= static_cast<std::size_t>(n[j]);
    }
    return k;
}

inline std::size_t flatten(int dim, const Index3& n, const Index3& k) {
    std::size_t f = 0;
    for (int j = 0; j < dim; ++j) f = f * static_cast<std::size_t>(n[j]) + k[j];
    return f;
}

} // namespace llbar

#endif // LLBAR_GRID_HPP
