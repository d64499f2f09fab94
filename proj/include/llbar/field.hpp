#ifndef LLBAR_FIELD_HPP
#define LLBAR_FIELD_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "llbar/grid.hpp"

namespace llbar {

using Vec3 = std::array<double, 3>;

inline double dot3(const double* a, const double* b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

inline void cross3(const double* a, const double* b, double* out) {
    out[0] = a[1] * b[2] - a[2] * b[1];
    out[1] = a[2] * b[0] - a[0] * b[2];
    out[2] = a[0] * b[1] - a[1] * b[0];
}

/// Node-major samples with `Stride` doubles per node. Stride 0 means 3*dim
/// (a Jacobian, column j = d/dx_j of the vector at offset 3j), stride -1
/// means dim (a row vector such as z . A).
template <int Stride>
struct NodalField {
    GridSpec grid;
    std::vector<double> data;

    NodalField() = default;
    explicit NodalField(const GridSpec& g) : grid(g), data(g.node_count() * stride_of(g), 0.0) {}
    NodalField(const GridSpec& g, std::vector<double> values) : grid(g), data(std::move(values)) {
        require(data.size() == g.node_count() * stride_of(g),
                "field: data length does not match grid");
    }

    static std::size_t stride_of(const GridSpec& g) {
        if constexpr (Stride == 0) return static_cast<std::size_t>(3 * g.dim);
        else if constexpr (Stride == -1) return static_cast<std::size_t>(g.dim);
        else return static_cast<std::size_t>(Stride);
    }
    std::size_t stride() const { return stride_of(grid); }
    std::size_t nodes() const { return grid.node_count(); }

    double* at(std::size_t node) { return data.data() + node * stride(); }
    const double* at(std::size_t node) const { return data.data() + node * stride(); }

    bool finite() const {
        return std::all_of(data.begin(), data.end(), [](double x) { return std::isfinite(x); });
    }

    NodalField& operator+=(const NodalField& o) {
        check_same(o);
        for (std::size_t i = 0; i < data.size(); ++i) data[i] += o.data[i];
        return *this;
    }
    NodalField& operator-=(const NodalField& o) {
        check_same(o);
        for (std::size_t i = 0; i < data.size(); ++i) data[i] -= o.data[i];
        return *this;
    }
    NodalField& operator*=(double s) {
        for (double& x : data) x *= s;
        return *this;
    }
    friend NodalField operator+(NodalField a, const NodalField& b) { return a += b; }
    friend NodalField operator-(NodalField a, const NodalField& b) { return a -= b; }
    friend NodalField operator*(double s, NodalField a) { return a *= s; }

    void check_same(const NodalField& o) const {
        require(grid == o.grid && data.size() == o.data.size(),
                "field: dimension mismatch between operands");
    }
};

using ScalarField = NodalField<1>;
using VectorField = NodalField<3>;
using JacobianField = NodalField<0>;
using RowField = NodalField<-1>;

inline void require_same_grid(const GridSpec& a, const GridSpec& b, const char* op) {
    require(a == b, std::string(op) + ": operands live on different grids");
}

/// Samples f(x) at every node; f receives the node coordinates.
template <typename F>
VectorField sample(const GridSpec& grid, F&& f) {
    VectorField u(grid);
    for (std::size_t n = 0; n < u.nodes(); ++n) {
        const Index3 i = unflatten(grid.dim, grid.points, n);
        std::array<double, 3> x{0.0, 0.0, 0.0};
        for (int j = 0; j < grid.dim; ++j) x[j] = grid.coordinate(j, i[j]);
        const Vec3 v = f(x);
        std::copy(v.begin(), v.end(), u.at(n));
    }
    return u;
}

// Column-wise products (z x A, z . A, A . B, A x B).

inline VectorField cross(const VectorField& z, const VectorField& a) {
    require_same_grid(z.grid, a.grid, "cross");
    VectorField out(z.grid);
    for (std::size_t n = 0; n < z.nodes(); ++n) cross3(z.at(n), a.at(n), out.at(n));
    return out;
}

inline JacobianField cross(const VectorField& z, const JacobianField& a) {
    require_same_grid(z.grid, a.grid, "cross");
    JacobianField out(z.grid);
    const int d = z.grid.dim;
    for (std::size_t n = 0; n < z.nodes(); ++n)
        for (int j = 0; j < d; ++j) cross3(z.at(n), a.at(n) + 3 * j, out.at(n) + 3 * j);
    return out;
}

/// A x B = sum_j A^(j) x B^(j).
inline VectorField cross(const JacobianField& a, const JacobianField& b) {
    require_same_grid(a.grid, b.grid, "cross");
    VectorField out(a.grid);
    const int d = a.grid.dim;
    for (std::size_t n = 0; n < a.nodes(); ++n) {
        double* o = out.at(n);
        for (int j = 0; j < d; ++j) {
            double c[3];
            cross3(a.at(n) + 3 * j, b.at(n) + 3 * j, c);
            o[0] += c[0];
            o[1] += c[1];
            o[2] += c[2];
        }
    }
    return out;
}

inline ScalarField dot(const VectorField& a, const VectorField& b) {
    require_same_grid(a.grid, b.grid, "dot");
    ScalarField out(a.grid);
    for (std::size_t n = 0; n < a.nodes(); ++n) out.data[n] = dot3(a.at(n), b.at(n));
    return out;
}

/// z . A, one entry per column.
inline RowField dot(const VectorField& z, const JacobianField& a) {
    require_same_grid(z.grid, a.grid, "dot");
    RowField out(z.grid);
    const int d = z.grid.dim;
    for (std::size_t n = 0; n < z.nodes(); ++n)
        for (int j = 0; j < d; ++j) out.at(n)[j] = dot3(z.at(n), a.at(n) + 3 * j);
    return out;
}

inline ScalarField dot(const JacobianField& a, const JacobianField& b) {
    require_same_grid(a.grid, b.grid, "dot");
    ScalarField out(a.grid);
    const std::size_t s = a.stride();
    for (std::size_t n = 0; n < a.nodes(); ++n) {
        double acc = 0.0;
        for (std::size_t i = 0; i < s; ++i) acc += a.at(n)[i] * b.at(n)[i];
        out.data[n] = acc;
    }
    return out;
}

/// Pointwise Euclidean (Frobenius) magnitude.
template <int S>
ScalarField magnitude(const NodalField<S>& f) {
    ScalarField out(f.grid);
    const std::size_t s = f.stride();
    for (std::size_t n = 0; n < f.nodes(); ++n) {
        double acc = 0.0;
        for (std::size_t i = 0; i < s; ++i) acc += f.at(n)[i] * f.at(n)[i];
        out.data[n] = std::sqrt(acc);
    }
    return out;
}

/// Pointwise s * f.
template <int S>
NodalField<S> scale_pointwise(const ScalarField& s, NodalField<S> f) {
    require_same_grid(s.grid, f.grid, "scale_pointwise");
    const std::size_t st = f.stride();
    for (std::size_t n = 0; n < f.nodes(); ++n)
        for (std::size_t i = 0; i < st; ++i) f.at(n)[i] *= s.data[n];
    return f;
}

/// |v|^2 v.
inline VectorField cubic(const VectorField& v) {
    VectorField out(v.grid);
    for (std::size_t n = 0; n < v.nodes(); ++n) {
        const double m = dot3(v.at(n), v.at(n));
        for (int c = 0; c < 3; ++c) out.at(n)[c] = m * v.at(n)[c];
    }
    return out;
}

// Midpoint quadrature; exact for band-limited cosine integrands below 2N.

template <int S>
double inner(const NodalField<S>& a, const NodalField<S>& b) {
    a.check_same(b);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) acc += a.data[i] * b.data[i];
    return acc * a.grid.cell_volume();
}

template <int S>
double norm_l2_squared(const NodalField<S>& a) {
    return inner(a, a);
}

template <int S>
double norm_l2(const NodalField<S>& a) {
    return std::sqrt(norm_l2_squared(a));
}

/// (int |f|^p)^(1/p) with |.| the pointwise Euclidean magnitude.
template <int S>
double norm_lp(const NodalField<S>& f, double p) {
    const ScalarField m = magnitude(f);
    double acc = 0.0;
    for (double x : m.data) acc += std::pow(x, p);
    return std::pow(acc * f.grid.cell_volume(), 1.0 / p);
}

template <int S>
double norm_linf(const NodalField<S>& f) {
    const ScalarField m = magnitude(f);
    double best = 0.0;
    for (double x : m.data) best = std::max(best, x);
    return best;
}

} // namespace llbar

#endif // LLBAR_FIELD_HPP
