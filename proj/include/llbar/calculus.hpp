#ifndef LLBAR_CALCULUS_HPP
#define LLBAR_CALCULUS_HPP

#include "llbar/field.hpp"
#include "llbar/spectral.hpp"

namespace llbar {

// Chain-rule forms of the derivatives of the cubic |v|^2 v, assembled from
// exact spectral derivatives of v and pointwise products on `target`.

/// grad(|v|^2 v) = 2 v (v . grad v) + |v|^2 grad v.
inline JacobianField nabla_cubic(const SpectralField& v, const GridSpec& target) {
    const VectorField u = evaluate(v, target);
    JacobianField out = gradient(v, target);
    const int d = target.dim;
    for (std::size_t n = 0; n < out.nodes(); ++n) {
        const double* p = u.at(n);
        const double m = dot3(p, p);
        for (int j = 0; j < d; ++j) {
            double* col = out.at(n) + 3 * j;
            const double s = 2.0 * dot3(p, col);
            for (int c = 0; c < 3; ++c) col[c] = s * p[c] + m * col[c];
        }
    }
    return out;
}

/// Delta(|v|^2 v) = 2|grad v|^2 v + 2(v . Delta v) v + 4 grad v (v . grad v)^T + |v|^2 Delta v.
inline VectorField delta_cubic(const SpectralField& v, const GridSpec& target) {
    const VectorField u = evaluate(v, target);
    const JacobianField g = gradient(v, target);
    const VectorField lap = evaluate(laplacian(v), target);
    VectorField out(target);
    const int d = target.dim;
    for (std::size_t n = 0; n < out.nodes(); ++n) {
        const double* p = u.at(n);
        const double* l = lap.at(n);
        const double* jac = g.at(n);
        const double m = dot3(p, p);
        double grad_sq = 0.0;
        for (int i = 0; i < 3 * d; ++i) grad_sq += jac[i] * jac[i];
        const double pl = dot3(p, l);
        double* o = out.at(n);
        for (int c = 0; c < 3; ++c) o[c] = 2.0 * grad_sq * p[c] + 2.0 * pl * p[c] + m * l[c];
        for (int j = 0; j < d; ++j) {
            const double* col = jac + 3 * j;
            const double s = 4.0 * dot3(p, col);
            for (int c = 0; c < 3; ++c) o[c] += s * col[c];
        }
    }
    return out;
}

/// Physical-field forms, evaluated on the dealiasing grid of u.
inline JacobianField nabla_cubic(const VectorField& u) {
    return nabla_cubic(forward(u), u.grid.padded());
}

inline VectorField delta_cubic(const VectorField& u) {
    return delta_cubic(forward(u), u.grid.padded());
}

} // namespace llbar

#endif // LLBAR_CALCULUS_HPP
