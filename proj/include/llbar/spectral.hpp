#ifndef LLBAR_SPECTRAL_HPP
#define LLBAR_SPECTRAL_HPP

#include <fftw3.h>

#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <vector>

#include "llbar/field.hpp"
#include "llbar/grid.hpp"

namespace llbar {

/// Coefficients of the orthonormal Neumann eigenbasis
///   e_k(x) = prod_j c_{k_j} cos(k_j pi x_j / L_j),
///   c_0 = 1/sqrt(L_j), c_k = sqrt(2/L_j),
/// with -Delta e_k = lambda(k) e_k and lambda(k) = sum_j (k_j pi / L_j)^2.
/// Multi-indices 0 <= k_j < modes[j] are stored row-major (last axis
/// fastest), three components per mode.
struct SpectralField {
    GridSpec grid;
    Index3 modes{1, 1, 1};
    std::vector<double> coeffs;

    SpectralField() = default;
    SpectralField(const GridSpec& g, Index3 m) : grid(g), modes(m) {
        for (int j = g.dim; j < 3; ++j) modes[j] = 1;
        for (int j = 0; j < g.dim; ++j)
            require(modes[j] >= 1 && modes[j] <= g.points[j],
                    "spectral: mode count exceeds grid on axis " + std::to_string(j));
        coeffs.assign(3 * mode_count(), 0.0);
    }
    static SpectralField zeros_like_grid(const GridSpec& g) { return SpectralField(g, g.points); }

    std::size_t mode_count() const { return flat_size(grid.dim, modes); }
    Index3 mode_index(std::size_t flat) const { return unflatten(grid.dim, modes, flat); }
    std::size_t flat_index(const Index3& k) const { return flatten(grid.dim, modes, k); }

    double* at(std::size_t mode) { return coeffs.data() + 3 * mode; }
    const double* at(std::size_t mode) const { return coeffs.data() + 3 * mode; }

    double eigenvalue(const Index3& k) const {
        double lam = 0.0;
        for (int j = 0; j < grid.dim; ++j) {
            const double w = grid.wavenumber(j, k[j]);
            lam += w * w;
        }
        return lam;
    }

    /// lambda(k) for every stored mode.
    std::vector<double> eigenvalues() const {
        std::vector<double> out(mode_count());
        for (std::size_t m = 0; m < out.size(); ++m) out[m] = eigenvalue(mode_index(m));
        return out;
    }

    bool finite() const {
        for (double c : coeffs)
            if (!std::isfinite(c)) return false;
        return true;
    }

    void check_compatible(const SpectralField& o) const {
        require(grid.same_box(o.grid) && modes == o.modes,
                "spectral: operands have different boxes or mode counts");
    }

    SpectralField& operator+=(const SpectralField& o) {
        check_compatible(o);
        for (std::size_t i = 0; i < coeffs.size(); ++i) coeffs[i] += o.coeffs[i];
        return *this;
    }
    SpectralField& operator-=(const SpectralField& o) {
        check_compatible(o);
        for (std::size_t i = 0; i < coeffs.size(); ++i) coeffs[i] -= o.coeffs[i];
        return *this;
    }
    SpectralField& operator*=(double s) {
        for (double& c : coeffs) c *= s;
        return *this;
    }
    friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
    friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
    friend SpectralField operator*(double s, SpectralField a) { return a *= s; }
};

/// L2 inner product, by Parseval.
inline double inner(const SpectralField& a, const SpectralField& b) {
    a.check_compatible(b);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.coeffs.size(); ++i) acc += a.coeffs[i] * b.coeffs[i];
    return acc;
}

inline double norm_l2(const SpectralField& a) { return std::sqrt(inner(a, a)); }

/// sum_k w(lambda_k) |a_k|^2.
template <typename W>
double weighted_energy(const SpectralField& a, W&& weight) {
    double acc = 0.0;
    for (std::size_t m = 0; m < a.mode_count(); ++m) {
        const double* c = a.at(m);
        const double e = dot3(c, c);
        if (e != 0.0) acc += weight(a.eigenvalue(a.mode_index(m))) * e;
    }
    return acc;
}

/// Multiplies each mode by f(lambda_k).
template <typename F>
SpectralField apply_multiplier(SpectralField s, F&& f) {
    for (std::size_t m = 0; m < s.mode_count(); ++m) {
        const double factor = f(s.eigenvalue(s.mode_index(m)));
        double* c = s.at(m);
        c[0] *= factor;
        c[1] *= factor;
        c[2] *= factor;
    }
    return s;
}

inline SpectralField laplacian(const SpectralField& s) {
    return apply_multiplier(s, [](double lam) { return -lam; });
}

inline SpectralField bilaplacian(const SpectralField& s) {
    return apply_multiplier(s, [](double lam) { return lam * lam; });
}

/// Zero-pads or truncates to a new mode count (same box, same grid).
inline SpectralField resize_modes(const SpectralField& s, Index3 modes) {
    SpectralField out(s.grid, modes);
    for (std::size_t m = 0; m < out.mode_count(); ++m) {
        const Index3 k = out.mode_index(m);
        bool inside = true;
        for (int j = 0; j < s.grid.dim; ++j) inside = inside && k[j] < s.modes[j];
        if (!inside) continue;
        const double* src = s.at(s.flat_index(k));
        std::copy(src, src + 3, out.at(m));
    }
    return out;
}

/// Same coefficients attached to a different grid of the same box.
inline SpectralField regrid(const SpectralField& s, const GridSpec& g) {
    require(g.same_box(s.grid), "regrid: boxes differ");
    SpectralField out(g, s.modes);
    out.coeffs = s.coeffs;
    return out;
}

/// Same coefficients on grid `g` with `modes` retained (truncated or zero-padded).
inline SpectralField transfer(const SpectralField& s, const GridSpec& g, Index3 modes) {
    Index3 keep = modes;
    for (int j = 0; j < 3; ++j) keep[j] = std::min(keep[j], s.modes[j]);
    return resize_modes(regrid(resize_modes(s, keep), g), modes);
}

namespace detail {

/// One FFTW plan per (shape, kinds) transforming a single component of
/// interleaved xyz data (stride 3), created with FFTW_ESTIMATE | FFTW_UNALIGNED
/// so execution is reproducible and independent of buffer alignment.
class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache cache;
        return cache;
    }

    fftw_plan get(int dim, const Index3& n, const std::array<fftw_r2r_kind, 3>& kinds) {
        const Key key{dim, n, {kinds[0], kinds[1], kinds[2]}};
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        const std::size_t size = 3 * flat_size(dim, n);
        std::vector<double> in(size), out(size);
        int nn[3] = {n[0], n[1], n[2]};
        fftw_r2r_kind kk[3] = {kinds[0], kinds[1], kinds[2]};
        fftw_plan plan = fftw_plan_many_r2r(dim, nn, 1, in.data(), nn, 3, 1, out.data(), nn, 3, 1,
                                            kk, FFTW_ESTIMATE | FFTW_UNALIGNED);
        require(plan != nullptr, "fftw: plan creation failed");
        plans_.emplace(key, plan);
        return plan;
    }

    ~PlanCache() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

private:
    using Key = std::tuple<int, Index3, std::array<int, 3>>;
    std::mutex mutex_;
    std::map<Key, fftw_plan> plans_;
};

/// Transforms the components flagged in `active`; the others are known to be
/// identically zero, so their transform is zero as well.
inline void execute(int dim, const Index3& n, const std::array<fftw_r2r_kind, 3>& kinds,
                    std::vector<double>& in, std::vector<double>& out,
                    const std::array<bool, 3>& active) {
    fftw_plan plan = PlanCache::instance().get(dim, n, kinds);
    const std::size_t nodes = flat_size(dim, n);
    for (int c = 0; c < 3; ++c) {
        if (active[c]) {
            fftw_execute_r2r(plan, in.data() + c, out.data() + c);
        } else {
            for (std::size_t i = 0; i < nodes; ++i) out[3 * i + c] = 0.0;
        }
    }
}

/// Which components of interleaved xyz data are not identically zero.
inline std::array<bool, 3> nonzero_components(const std::vector<double>& v) {
    std::array<bool, 3> any{false, false, false};
    for (std::size_t i = 0; i < v.size(); i += 3) {
        any[0] = any[0] || v[i] != 0.0;
        any[1] = any[1] || v[i + 1] != 0.0;
        any[2] = any[2] || v[i + 2] != 0.0;
        if (any[0] && any[1] && any[2]) break;
    }
    return any;
}

/// Transforms each component, skipping identically zero ones.
inline void execute(int dim, const Index3& n, const std::array<fftw_r2r_kind, 3>& kinds,
                    std::vector<double>& in, std::vector<double>& out) {
    execute(dim, n, kinds, in, out, nonzero_components(in));
}

inline double basis_scale(double length, int k) {
    return k == 0 ? 1.0 / std::sqrt(length) : std::sqrt(2.0 / length);
}

} // namespace detail

/// Orthonormal cosine coefficients of u, keeping `modes` per axis.
inline SpectralField forward(const VectorField& u, Index3 modes) {
    const GridSpec& g = u.grid;
    require(u.finite(), "forward: input field contains non-finite values");
    SpectralField s(g, modes);
    std::vector<double> in = u.data;
    std::vector<double> out(in.size());
    detail::execute(g.dim, g.points, {FFTW_REDFT10, FFTW_REDFT10, FFTW_REDFT10}, in, out);

    std::array<std::vector<double>, 3> axis_scale;
    for (int j = 0; j < g.dim; ++j) {
        axis_scale[j].resize(s.modes[j]);
        for (int k = 0; k < s.modes[j]; ++k)
            axis_scale[j][k] = g.extents[j] / (2.0 * g.points[j]) * detail::basis_scale(g.extents[j], k);
    }
    for (std::size_t m = 0; m < s.mode_count(); ++m) {
        const Index3 k = s.mode_index(m);
        double scale = 1.0;
        for (int j = 0; j < g.dim; ++j) scale *= axis_scale[j][k[j]];
        const double* y = out.data() + 3 * flatten(g.dim, g.points, k);
        double* c = s.at(m);
        c[0] = scale * y[0];
        c[1] = scale * y[1];
        c[2] = scale * y[2];
    }
    return s;
}

inline SpectralField forward(const VectorField& u) { return forward(u, u.grid.points); }

/// Samples D^order of the cosine series at the nodes of `target`, which must
/// cover the same box with at least as many nodes as retained modes. Odd
/// derivative orders turn an axis into a sine series (evaluated by DST-III).
inline VectorField evaluate(const SpectralField& s, const GridSpec& target,
                            Index3 order = {0, 0, 0}) {
    require(target.same_box(s.grid), "evaluate: target grid covers a different box");
    const int dim = target.dim;
    for (int j = 0; j < dim; ++j)
        require(s.modes[j] <= target.points[j], "evaluate: mode counts exceed target grid");

    std::array<fftw_r2r_kind, 3> kinds{FFTW_REDFT01, FFTW_REDFT01, FFTW_REDFT01};
    std::array<std::vector<double>, 3> factor;
    std::array<std::vector<int>, 3> slot;
    for (int j = 0; j < dim; ++j) {
        const int o = order[j];
        require(o >= 0, "evaluate: negative derivative order");
        const bool odd = (o % 2) != 0;
        kinds[j] = odd ? FFTW_RODFT01 : FFTW_REDFT01;
        factor[j].resize(s.modes[j]);
        slot[j].resize(s.modes[j]);
        const double sign = ((odd ? (o + 1) / 2 : o / 2) % 2 == 0) ? 1.0 : -1.0;
        for (int k = 0; k < s.modes[j]; ++k) {
            const double w = target.wavenumber(j, k);
            const double scale = detail::basis_scale(target.extents[j], k);
            if (odd) {
                factor[j][k] = k == 0 ? 0.0 : sign * std::pow(w, o) * scale / 2.0;
                slot[j][k] = k - 1;
            } else {
                const double deriv = o == 0 ? 1.0 : sign * std::pow(w, o);
                factor[j][k] = deriv * (k == 0 ? scale : scale / 2.0);
                slot[j][k] = k;
            }
        }
    }

    std::vector<double> in(3 * target.node_count(), 0.0);
    for (std::size_t m = 0; m < s.mode_count(); ++m) {
        const Index3 k = s.mode_index(m);
        double f = 1.0;
        Index3 idx{0, 0, 0};
        for (int j = 0; j < dim; ++j) {
            f *= factor[j][k[j]];
            idx[j] = slot[j][k[j]];
        }
        if (f == 0.0) continue;
        const double* c = s.at(m);
        double* dst = in.data() + 3 * flatten(dim, target.points, idx);
        dst[0] = f * c[0];
        dst[1] = f * c[1];
        dst[2] = f * c[2];
    }
    VectorField u(target);
    detail::execute(dim, target.points, kinds, in, u.data);
    return u;
}

/// Direct summation of D^order of the series at an arbitrary point of the box.
inline Vec3 evaluate_point(const SpectralField& s, const std::array<double, 3>& x,
                           Index3 order = {0, 0, 0}) {
    Vec3 v{0.0, 0.0, 0.0};
    for (std::size_t m = 0; m < s.mode_count(); ++m) {
        const Index3 k = s.mode_index(m);
        double f = 1.0;
        for (int j = 0; j < s.grid.dim && f != 0.0; ++j) {
            const double w = s.grid.wavenumber(j, k[j]);
            const double arg = w * x[j];
            double d = 0.0;
            switch (order[j] % 4) {
            case 0: d = std::cos(arg); break;
            case 1: d = -std::sin(arg); break;
            case 2: d = -std::cos(arg); break;
            case 3: d = std::sin(arg); break;
            }
            f *= detail::basis_scale(s.grid.extents[j], k[j]) * std::pow(w, order[j]) * d;
        }
        const double* c = s.at(m);
        for (int i = 0; i < 3; ++i) v[i] += f * c[i];
    }
    return v;
}

inline VectorField inverse(const SpectralField& s) { return evaluate(s, s.grid); }

/// Jacobian [d_1 u ... d_d u] sampled on `target`.
inline JacobianField gradient(const SpectralField& s, const GridSpec& target) {
    JacobianField out(target);
    const int d = target.dim;
    for (int j = 0; j < d; ++j) {
        Index3 order{0, 0, 0};
        order[j] = 1;
        const VectorField col = evaluate(s, target, order);
        for (std::size_t n = 0; n < out.nodes(); ++n)
            std::copy(col.at(n), col.at(n) + 3, out.at(n) + 3 * j);
    }
    return out;
}

inline JacobianField gradient(const VectorField& u) { return gradient(forward(u), u.grid); }

inline VectorField laplacian(const VectorField& u) {
    return evaluate(laplacian(forward(u)), u.grid);
}

inline VectorField bilaplacian(const VectorField& u) {
    return evaluate(bilaplacian(forward(u)), u.grid);
}

/// grad(Delta u) (= Delta grad u; the multipliers commute).
inline JacobianField grad_laplacian(const VectorField& u) {
    return gradient(laplacian(forward(u)), u.grid);
}

} // namespace llbar

#endif // LLBAR_SPECTRAL_HPP
