#ifndef LLBAR_GALERKIN_HPP
#define LLBAR_GALERKIN_HPP

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "llbar/calculus.hpp"
#include "llbar/error.hpp"
#include "llbar/field.hpp"
#include "llbar/spectral.hpp"

namespace llbar {

/// beta1 = lambda_r - lambda_e / (2 chi); may take either sign.
inline double derive_beta1(double lambda_r, double lambda_e, double chi) {
    require(chi > 0.0, "derive_beta1: chi must be positive");
    return lambda_r - lambda_e / (2.0 * chi);
}

struct PhysicalInputs {
    double lambda_r = 0.0;
    double lambda_e = 0.0;
    double chi = 1.0;
    double gamma = 1.0;
};

/// Coefficients of
///   u_t = beta1 Lap u - beta2 Lap^2 u + beta3 (1 - |u|^2) u - beta4 u x Lap u + beta5 Lap(|u|^2 u).
struct LLBarParams {
    double beta1 = 0.0;
    double beta2 = 1.0;
    double beta3 = 1.0;
    double beta4 = 1.0;
    double beta5 = 1.0;
    std::optional<PhysicalInputs> physical;

    /// Expanding -gamma u x H + lambda_r H - lambda_e Lap H with
    /// H = Lap u + (1 - |u|^2) u / (2 chi) gives the five coefficients.
    static LLBarParams from_physical(const PhysicalInputs& in) {
        require(in.lambda_r > 0.0 && in.lambda_e > 0.0 && in.chi > 0.0 && in.gamma > 0.0,
                "physical inputs lambda_r, lambda_e, chi, gamma must be positive");
        LLBarParams p;
        p.beta1 = derive_beta1(in.lambda_r, in.lambda_e, in.chi);
        p.beta2 = in.lambda_e;
        p.beta3 = in.lambda_r / (2.0 * in.chi);
        p.beta4 = in.gamma;
        p.beta5 = in.lambda_e / (2.0 * in.chi);
        p.physical = in;
        return p;
    }

    /// Model check: beta2..beta5 strictly positive.
    void validate() const {
        require(std::isfinite(beta1), "params: beta1 must be finite");
        require(beta2 > 0.0 && beta3 > 0.0 && beta4 > 0.0 && beta5 > 0.0,
                "params: beta2..beta5 must be positive");
        if (physical) {
            const double expected = derive_beta1(physical->lambda_r, physical->lambda_e, physical->chi);
            require(std::abs(beta1 - expected) <= 1e-14 * std::max(1.0, std::abs(expected)),
                    "params: beta1 inconsistent with physical inputs");
        }
    }

    /// Relaxed check for the integrator: individual terms may be switched
    /// off (beta = 0) to isolate linear, precession-only or equilibrium runs.
    void validate_dynamics() const {
        require(std::isfinite(beta1), "params: beta1 must be finite");
        require(beta2 >= 0.0 && beta3 >= 0.0 && beta4 >= 0.0 && beta5 >= 0.0,
                "params: beta2..beta5 must be non-negative");
    }
};

/// V_n = span{e_k : k_j < modes_j}.
struct ModeBand {
    Index3 modes{1, 1, 1};

    static ModeBand full(const GridSpec& g) { return ModeBand{g.points}; }

    std::size_t size(int dim) const { return flat_size(dim, modes); }

    void check(const GridSpec& g) const {
        for (int j = 0; j < g.dim; ++j)
            require(modes[j] >= 1 && modes[j] <= g.points[j],
                    "band: axis " + std::to_string(j) + " exceeds grid");
    }

    bool contains(int dim, const Index3& k) const {
        for (int j = 0; j < dim; ++j)
            if (k[j] >= modes[j]) return false;
        return true;
    }
};

/// Pi_n: zero every coefficient outside the band.
inline SpectralField project(SpectralField s, const ModeBand& band) {
    band.check(s.grid);
    for (std::size_t m = 0; m < s.mode_count(); ++m) {
        if (band.contains(s.grid.dim, s.mode_index(m))) continue;
        double* c = s.at(m);
        c[0] = c[1] = c[2] = 0.0;
    }
    return s;
}

namespace detail {

/// Projection of a product sampled on the padded grid back onto v's layout.
inline SpectralField project_product(const VectorField& product, const SpectralField& like,
                                     const ModeBand& band) {
    if (!product.finite())
        throw Error(ErrorCode::blowup, "rhs: non-finite pointwise product (discrete blow-up)");
    return project(regrid(forward(product, like.modes), like.grid), band);
}

} // namespace detail

inline SpectralField F1(const SpectralField& v) { return laplacian(v); }

inline SpectralField F2(const SpectralField& v) { return bilaplacian(v); }

/// Pi_n(|v|^2 v).
inline SpectralField F3(const SpectralField& v, const ModeBand& band) {
    const GridSpec fine = v.grid.padded();
    return detail::project_product(cubic(evaluate(v, fine)), v, band);
}

/// Pi_n(v x Lap v).
inline SpectralField F4(const SpectralField& v, const ModeBand& band) {
    const GridSpec fine = v.grid.padded();
    return detail::project_product(cross(evaluate(v, fine), evaluate(laplacian(v), fine)), v, band);
}

/// Pi_n Lap(|v|^2 v), through the chain-rule form; equals F1(F3(v)).
inline SpectralField F5(const SpectralField& v, const ModeBand& band) {
    return detail::project_product(delta_cubic(v, v.grid.padded()), v, band);
}

/// m(k) = -beta1 lambda(k) - beta2 lambda(k)^2 for each stored mode.
inline std::vector<double> rhs_linear_factor(const GridSpec& grid, const Index3& modes,
                                             const LLBarParams& p) {
    const SpectralField shape(grid, modes);
    std::vector<double> m(shape.mode_count());
    for (std::size_t i = 0; i < m.size(); ++i) {
        const double lam = shape.eigenvalue(shape.mode_index(i));
        m[i] = -p.beta1 * lam - p.beta2 * lam * lam;
    }
    return m;
}

inline void require_finite_rhs(const SpectralField& s, const char* stage) {
    if (!s.finite())
        throw Error(ErrorCode::blowup,
                    std::string("rhs: non-finite value in ") + stage + " (discrete blow-up)");
}

/// beta3 Pi_n((1-|u|^2)u) - beta4 F4 + beta5 F5, with F5 taken as Lap F3 so
/// the cubic is evaluated once.
inline SpectralField nonlinear_rhs(const SpectralField& u, const LLBarParams& p,
                                   const ModeBand& band) {
    const GridSpec fine = u.grid.padded();
    const VectorField up = evaluate(u, fine);
    const VectorField lp = evaluate(laplacian(u), fine);
    const SpectralField f3 = detail::project_product(cubic(up), u, band);
    const SpectralField f4 = detail::project_product(cross(up, lp), u, band);
    SpectralField out = project(u, band);
    out -= f3;
    out *= p.beta3;
    for (std::size_t m = 0; m < out.mode_count(); ++m) {
        const double lam = u.eigenvalue(u.mode_index(m));
        double* o = out.at(m);
        const double* a = f3.at(m);
        const double* b = f4.at(m);
        for (int c = 0; c < 3; ++c) o[c] += -p.beta4 * b[c] - p.beta5 * lam * a[c];
    }
    require_finite_rhs(out, "nonlinear terms");
    return out;
}

/// nonlinear_rhs for a fixed layout with transform tables and work buffers
/// set up once, so repeated evaluation allocates nothing. Performs the same
/// operations in the same order as nonlinear_rhs.
class NonlinearWorkspace {
public:
    NonlinearWorkspace(const GridSpec& grid, const Index3& modes, const ModeBand& band,
                       const LLBarParams& p)
        : grid_(grid), fine_(grid.padded()), modes_(modes), params_(p) {
        band.check(grid);
        const SpectralField shape(grid, modes);
        const int d = grid.dim;
        const std::size_t count = shape.mode_count();
        slot_.resize(count);
        synth_.resize(count);
        analysis_.resize(count);
        lambda_.resize(count);
        inside_.resize(count);
        for (std::size_t m = 0; m < count; ++m) {
            const Index3 k = shape.mode_index(m);
            double f = 1.0;
            double a = 1.0;
            for (int j = 0; j < d; ++j) {
                const double scale = detail::basis_scale(fine_.extents[j], k[j]);
                f *= k[j] == 0 ? scale : scale / 2.0;
                a *= fine_.extents[j] / (2.0 * fine_.points[j]) * detail::basis_scale(fine_.extents[j], k[j]);
            }
            slot_[m] = flatten(d, fine_.points, k);
            synth_[m] = f;
            analysis_[m] = a;
            lambda_[m] = shape.eigenvalue(k);
            inside_[m] = band.contains(d, k);
        }
        const std::size_t n = 3 * fine_.node_count();
        for (auto* buf : {&in_u_, &in_l_, &u_, &l_, &p3_, &p4_, &c3_, &c4_}) buf->assign(n, 0.0);
    }

    void apply(const SpectralField& u, SpectralField& out) {
        require(u.coeffs.size() == 3 * slot_.size() && out.coeffs.size() == u.coeffs.size(),
                "nonlinear workspace: layout mismatch");
        const int d = fine_.dim;
        const Index3& np = fine_.points;
        std::array<bool, 3> active{false, false, false};
        std::array<bool, 3> active_lap{false, false, false};
        for (std::size_t m = 0; m < slot_.size(); ++m) {
            const double* c = u.at(m);
            double* du = in_u_.data() + 3 * slot_[m];
            double* dl = in_l_.data() + 3 * slot_[m];
            const double f = synth_[m];
            const double neg = -lambda_[m];
            for (int i = 0; i < 3; ++i) {
                du[i] = f * c[i];
                dl[i] = f * (c[i] * neg);
                active[i] = active[i] || c[i] != 0.0;
                active_lap[i] = active_lap[i] || dl[i] != 0.0;
            }
        }
        const std::array<fftw_r2r_kind, 3> inv{FFTW_REDFT01, FFTW_REDFT01, FFTW_REDFT01};
        const std::array<fftw_r2r_kind, 3> fwd{FFTW_REDFT10, FFTW_REDFT10, FFTW_REDFT10};
        detail::execute(d, np, inv, in_u_, u_, active);
        detail::execute(d, np, inv, in_l_, l_, active_lap);
        const std::size_t nodes = fine_.node_count();
        for (std::size_t n = 0; n < nodes; ++n) {
            const double* a = u_.data() + 3 * n;
            const double* b = l_.data() + 3 * n;
            const double mag = dot3(a, a);
            double* q3 = p3_.data() + 3 * n;
            for (int c = 0; c < 3; ++c) q3[c] = mag * a[c];
            cross3(a, b, p4_.data() + 3 * n);
        }
        detail::execute(d, np, fwd, p3_, c3_, detail::nonzero_components(p3_));
        detail::execute(d, np, fwd, p4_, c4_, detail::nonzero_components(p4_));
        const LLBarParams& p = params_;
        for (std::size_t m = 0; m < slot_.size(); ++m) {
            double* o = out.at(m);
            if (!inside_[m]) {
                o[0] = o[1] = o[2] = 0.0;
                continue;
            }
            const double* c = u.at(m);
            const double* y3 = c3_.data() + 3 * slot_[m];
            const double* y4 = c4_.data() + 3 * slot_[m];
            for (int i = 0; i < 3; ++i) {
                const double f3 = analysis_[m] * y3[i];
                const double f4 = analysis_[m] * y4[i];
                o[i] = (c[i] - f3) * p.beta3;
                o[i] += -p.beta4 * f4 - p.beta5 * lambda_[m] * f3;
            }
        }
        require_finite_rhs(out, "nonlinear terms");
    }

private:
    GridSpec grid_;
    GridSpec fine_;
    Index3 modes_;
    LLBarParams params_;
    std::vector<std::size_t> slot_;
    std::vector<double> synth_, analysis_, lambda_;
    std::vector<char> inside_;
    std::vector<double> in_u_, in_l_, u_, l_, p3_, p4_, c3_, c4_;
};

/// Right-hand side of the Galerkin system in V_n.
inline SpectralField rhs(const SpectralField& u, const LLBarParams& p, const ModeBand& band) {
    SpectralField out = nonlinear_rhs(u, p, band);
    const std::vector<double> m = rhs_linear_factor(u.grid, u.modes, p);
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (!band.contains(u.grid.dim, u.mode_index(i))) continue;
        const double* a = u.at(i);
        double* o = out.at(i);
        for (int c = 0; c < 3; ++c) o[c] += m[i] * a[c];
    }
    require_finite_rhs(out, "linear terms");
    return out;
}

} // namespace llbar

#endif // LLBAR_GALERKIN_HPP
