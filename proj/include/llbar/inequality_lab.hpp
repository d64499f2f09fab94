#ifndef LLBAR_INEQUALITY_LAB_HPP
#define LLBAR_INEQUALITY_LAB_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/rational.hpp>

#include "llbar/calculus.hpp"
#include "llbar/estimates.hpp"
#include "llbar/parallel.hpp"
#include "llbar/random.hpp"

namespace llbar {

/// Sample i is random_spectral(grid, band, decay, amplitude, stream_key(seed, i)).
struct SampleSpec {
    GridSpec grid = GridSpec::cube(1, 16);
    Index3 band{8, 8, 8};
    std::uint64_t seed = 1;
    int count = 100;
    /// 0 gives the flat law.
    double decay = 0.0;
    double amplitude = 1.0;

    void validate() const {
        require(count >= 1, "samples: count must be >= 1");
        require(decay >= 0.0, "samples: decay exponent must be >= 0");
        require(amplitude > 0.0, "samples: amplitude must be positive");
        ModeBand{band}.check(grid);
    }

    std::uint64_t key(std::size_t i) const { return stream_key(seed, i); }

    SpectralField draw(std::size_t i) const {
        Index3 b = band;
        for (int j = grid.dim; j < 3; ++j) b[j] = 1;
        return random_spectral(grid, b, decay, amplitude, key(i));
    }
};

struct RatioReport {
    std::string id;
    double max_ratio = 0.0;
    double median_ratio = 0.0;
    /// Samples whose ratio exceeds the asserted constant plus tolerance.
    int violations = 0;
    /// Key of the sample attaining max_ratio (stream_key(seed, index)).
    std::uint64_t witness_seed = 0;
    std::size_t witness_index = 0;
    std::size_t samples = 0;
    std::optional<double> constant;
};

/// Both sides below this count as 0/0 and pass.
inline constexpr double degenerate_floor = 1e-14;

inline double guarded_ratio(double lhs, double rhs) {
    if (std::abs(lhs) < degenerate_floor && std::abs(rhs) < degenerate_floor) return 0.0;
    if (std::abs(rhs) < degenerate_floor) return std::numeric_limits<double>::infinity();
    return lhs / rhs;
}

/// Summary of per-sample ratios; index i of `ratios` corresponds to key(i)
/// unless `keys` overrides it.
inline RatioReport summarize(std::string id, const std::vector<double>& ratios, const SampleSpec& spec,
                             std::optional<double> constant, double tolerance,
                             const std::vector<std::uint64_t>& keys = {}) {
    RatioReport r;
    r.id = std::move(id);
    r.samples = ratios.size();
    r.constant = constant;
    if (ratios.empty()) return r;
    std::size_t worst = 0;
    for (std::size_t i = 0; i < ratios.size(); ++i) {
        const double q = ratios[i];
        if (std::isnan(q) || q > ratios[worst] || std::isnan(ratios[worst])) worst = i;
        if (constant && !(q <= *constant + tolerance)) ++r.violations;
    }
    std::vector<double> sorted = ratios;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    r.median_ratio = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    r.max_ratio = ratios[worst];
    r.witness_index = worst;
    r.witness_seed = keys.empty() ? spec.key(worst) : keys[worst];
    return r;
}

namespace detail {

/// Keys of the first member of each pair (samples 2i, 2i+1).
inline std::vector<std::uint64_t> pair_keys(const SampleSpec& spec) {
    std::vector<std::uint64_t> keys(spec.count);
    for (std::size_t i = 0; i < keys.size(); ++i) keys[i] = spec.key(2 * i);
    return keys;
}

template <typename F>
std::vector<double> sample_ratios(std::size_t count, F&& ratio_of) {
    std::vector<double> out(count);
    parallel_for(count, [&](std::size_t i) { out[i] = ratio_of(i); });
    return out;
}

} // namespace detail

/// eq3: ||Lap v||^2 / (||grad v|| ||grad Lap v||) and eq4: ||grad Lap v||^2 / (||Lap v|| ||Lap^2 v||).
inline std::array<double, 2> interp_ratios(const SpectralField& v) {
    const double g = spectral_seminorm(v, 1), l = spectral_seminorm(v, 2);
    const double gl = spectral_seminorm(v, 3), ll = spectral_seminorm(v, 4);
    return {guarded_ratio(l * l, g * gl), guarded_ratio(gl * gl, l * ll)};
}

inline std::vector<RatioReport> check_interp(const SampleSpec& spec, double tolerance = 1e-9) {
    spec.validate();
    std::vector<double> r3(spec.count), r4(spec.count);
    parallel_for(static_cast<std::size_t>(spec.count), [&](std::size_t i) {
        const auto r = interp_ratios(spec.draw(i));
        r3[i] = r[0];
        r4[i] = r[1];
    });
    return {summarize("eq3", r3, spec, 1.0, tolerance), summarize("eq4", r4, spec, 1.0, tolerance)};
}

/// Ratios for eq1, eq2, eq5, eq6, eq8 in that order. eq2 uses C = 1/(4 eps),
/// which makes its constant exactly 1.
inline std::array<double, 5> elliptic_ratios(const SpectralField& v, double eps) {
    double s[6];
    for (int p = 0; p <= 5; ++p) s[p] = weighted_energy(v, [p](double lam) { return std::pow(lam, p); });
    const double h2 = s[0] + s[1] + s[2];
    const double h3 = h2 + s[3];
    const double h4 = h3 + s[4];
    const double h5 = h4 + s[5];
    return {guarded_ratio(h2, s[0] + s[2]), guarded_ratio(s[1], s[0] / (4.0 * eps) + eps * s[2]),
            guarded_ratio(h3, s[0] + s[1] + s[3]), guarded_ratio(h4, s[0] + s[2] + s[4]),
            guarded_ratio(h5, s[0] + s[1] + s[3] + s[5])};
}

/// Only eq2 asserts a constant; the others report the empirical constant for
/// band-stability comparison.
inline std::vector<RatioReport> check_elliptic(const SampleSpec& spec, double eps = 0.25,
                                               double tolerance = 1e-9) {
    spec.validate();
    require(eps > 0.0, "check_elliptic: eps must be positive");
    const std::size_t n = static_cast<std::size_t>(spec.count);
    std::array<std::vector<double>, 5> e;
    for (auto& v : e) v.resize(n);
    parallel_for(n, [&](std::size_t i) {
        const auto r = elliptic_ratios(spec.draw(i), eps);
        for (int j = 0; j < 5; ++j) e[j][i] = r[j];
    });
    return {summarize("eq1", e[0], spec, std::nullopt, tolerance),
            summarize("eq2", e[1], spec, 1.0, tolerance),
            summarize("eq5", e[2], spec, std::nullopt, tolerance),
            summarize("eq6", e[3], spec, std::nullopt, tolerance),
            summarize("eq8", e[4], spec, std::nullopt, tolerance)};
}

/// H^s norm of a scalar sampled on a grid, via its full cosine expansion there.
inline double scalar_hs_norm(const ScalarField& f, int s) {
    VectorField v(f.grid);
    for (std::size_t n = 0; n < f.nodes(); ++n) v.at(n)[0] = f.data[n];
    return hs_norm(forward(v), s);
}

/// || |u||v| ||_{H^s} / (||u||_{H^s} ||v||_{H^s}) with the product on `fine`.
inline double product_hs_ratio(const SpectralField& u, const SpectralField& v, int s, const GridSpec& fine) {
    const ScalarField prod = [&] {
        ScalarField a = magnitude(evaluate(u, fine));
        const ScalarField b = magnitude(evaluate(v, fine));
        for (std::size_t n = 0; n < a.nodes(); ++n) a.data[n] *= b.data[n];
        return a;
    }();
    return guarded_ratio(scalar_hs_norm(prod, s), hs_norm(u, s) * hs_norm(v, s));
}

/// eq7: || |u||v| ||_{H^s} <= C ||u||_{H^s} ||v||_{H^s}, s integer > d/2.
/// Pair i uses samples 2i and 2i+1.
inline RatioReport check_product_hs(const SampleSpec& spec, int s) {
    spec.validate();
    require(2 * s > spec.grid.dim, "check_product_hs: requires s > d/2");
    require(s == 1 || s == 2, "check_product_hs: only integer s in {1, 2} is supported");
    const GridSpec fine = spec.grid.padded();
    const auto ratios = detail::sample_ratios(spec.count, [&](std::size_t i) {
        const SpectralField u = spec.draw(2 * i);
        const SpectralField v = spec.draw(2 * i + 1);
        return product_hs_ratio(u, v, s, fine);
    });
    return summarize("eq7_s" + std::to_string(s), ratios, spec, std::nullopt, 0.0, detail::pair_keys(spec));
}

inline double cubic_lipschitz_ratio(const SpectralField& u, const SpectralField& v, int k_order,
                                    const GridSpec& fine) {
    const SpectralField w = u - v;
    switch (k_order) {
    case 0: {
        const VectorField up = evaluate(u, fine);
        const VectorField vp = evaluate(v, fine);
        VectorField diff = cubic(up);
        diff -= cubic(vp);
        VectorField wp = up;
        wp -= vp;
        const double a = norm_linf(up), b = norm_linf(vp);
        return guarded_ratio(norm_l2(diff), (a * a + b * b) * norm_l2(wp));
    }
    case 1: {
        JacobianField diff = nabla_cubic(u, fine);
        diff -= nabla_cubic(v, fine);
        return guarded_ratio(norm_l2(diff),
                             (hs_norm(u, 1) + hs_norm(v, 1)) * (hs_norm(u, 2) + hs_norm(v, 2)) * hs_norm(w, 1));
    }
    default: {
        VectorField diff = delta_cubic(u, fine);
        diff -= delta_cubic(v, fine);
        return guarded_ratio(norm_l2(diff), (hs_norm_squared(u, 2) + hs_norm_squared(v, 2)) * hs_norm(w, 2));
    }
    }
}

/// |k| = 0: || |u|^2 u - |v|^2 v || <= 3/2 (||u||_inf^2 + ||v||_inf^2) ||u - v||,
/// from |u|^2 u - |v|^2 v = |u|^2 w + (|u|^2 - |v|^2) v and |u||v| <= (|u|^2+|v|^2)/2.
/// Everything is on the padded grid, so the pointwise bound carries over to
/// the quadrature exactly. |k| = 1 uses the full gradient, |k| = 2 the
/// Laplacian; those report the empirical constant only.
inline RatioReport check_cubic_lipschitz(const SampleSpec& spec, int k_order) {
    spec.validate();
    require(k_order >= 0 && k_order <= 2, "check_cubic_lipschitz: k_order must be 0, 1 or 2");
    const GridSpec fine = spec.grid.padded();
    const auto ratios = detail::sample_ratios(spec.count, [&](std::size_t i) {
        return cubic_lipschitz_ratio(spec.draw(2 * i), spec.draw(2 * i + 1), k_order, fine);
    });
    const std::optional<double> c = k_order == 0 ? std::optional<double>(1.5) : std::nullopt;
    return summarize("cubic_k" + std::to_string(k_order), ratios, spec, c, 1e-9, detail::pair_keys(spec));
}

/// || u x D^k u - v x D^k v || <= ||u||_inf ||D^k (u - v)|| + || |u - v| |D^k v| ||,
/// constant 1 by the pointwise triangle inequality.
inline double cross_diff_ratio(const SpectralField& u, const SpectralField& v, const Index3& order,
                               const GridSpec& fine) {
    const VectorField up = evaluate(u, fine);
    const VectorField vp = evaluate(v, fine);
    const VectorField du = evaluate(u, fine, order);
    const VectorField dv = evaluate(v, fine, order);
    VectorField lhs = cross(up, du);
    lhs -= cross(vp, dv);
    VectorField dw = du;
    dw -= dv;
    double tail = 0.0;
    for (std::size_t n = 0; n < up.nodes(); ++n) {
        double w2 = 0.0;
        for (int c = 0; c < 3; ++c) w2 += (up.at(n)[c] - vp.at(n)[c]) * (up.at(n)[c] - vp.at(n)[c]);
        tail += w2 * dot3(dv.at(n), dv.at(n));
    }
    tail = std::sqrt(tail * fine.cell_volume());
    return guarded_ratio(norm_l2(lhs), norm_linf(up) * norm_l2(dw) + tail);
}

inline RatioReport check_cross_diff(const SampleSpec& spec, const Index3& order, double tolerance = 1e-9) {
    spec.validate();
    const GridSpec fine = spec.grid.padded();
    Index3 ord = order;
    std::string id = "cross_diff_k";
    for (int j = 0; j < spec.grid.dim; ++j) id += std::to_string(ord[j]);
    for (int j = spec.grid.dim; j < 3; ++j) ord[j] = 0;
    const auto ratios = detail::sample_ratios(spec.count, [&](std::size_t i) {
        return cross_diff_ratio(spec.draw(2 * i), spec.draw(2 * i + 1), ord, fine);
    });
    return summarize(id, ratios, spec, 1.0, tolerance, detail::pair_keys(spec));
}

// ---------------------------------------------------------------------------
// Gagliardo-Nirenberg exponents.

using Rational = boost::rational<long long>;

/// (d, q, r, s1, s2); q = nullopt stands for q = infinity.
struct GNTuple {
    int d = 1;
    std::optional<int> q = 4;
    int r = 0;
    int s1 = 0;
    int s2 = 1;
};

inline std::string describe(const GNTuple& t) {
    std::ostringstream os;
    os << "(d=" << t.d << ", q=" << (t.q ? std::to_string(*t.q) : std::string("inf")) << ", r=" << t.r
       << ", s1=" << t.s1 << ", s2=" << t.s2 << ")";
    return os.str();
}

/// theta = (2q(s2 - r) - d(q - 2)) / (2q(s2 - s1)) for finite q; for q = inf
/// the scaling relation 0 = 1/2 + (s2 - s1) theta / d - (s2 - r)/d gives
/// theta = (2(s2 - r) - d) / (2(s2 - s1)). Inadmissible tuples are rejected
/// with every violated constraint named.
inline Rational gn_theta(const GNTuple& t) {
    std::vector<std::string> bad;
    if (t.d < 1 || t.d > 3) bad.push_back("d in {1,2,3}");
    if (t.s1 < 0) bad.push_back("0 <= s1");
    if (!(t.s1 < t.s2)) bad.push_back("s1 < s2");
    if (t.r < 0) bad.push_back("0 <= r");
    if (t.q && *t.q <= 2) bad.push_back("q in (2, inf]");
    if (!bad.empty()) {
        std::string msg = "gn: inadmissible " + describe(t) + ": violates";
        for (const auto& b : bad) msg += " [" + b + "]";
        fail(msg);
    }
    Rational theta;
    if (t.q) {
        const long long q = *t.q;
        theta = Rational(2 * q * (t.s2 - t.r) - t.d * (q - 2), 2 * q * (t.s2 - t.s1));
    } else {
        theta = Rational(2LL * (t.s2 - t.r) - t.d, 2LL * (t.s2 - t.s1));
    }
    if (!(theta > 0 && theta < 1)) bad.push_back("theta in (0,1), got " + std::to_string(theta.numerator()) +
                                                 "/" + std::to_string(theta.denominator()));
    else if (!(Rational(t.r) < theta * t.s1 + (1 - theta) * t.s2))
        bad.push_back("r < theta s1 + (1 - theta) s2");
    if (!bad.empty()) {
        std::string msg = "gn: inadmissible " + describe(t) + ": violates";
        for (const auto& b : bad) msg += " [" + b + "]";
        fail(msg);
    }
    return theta;
}

inline double to_double(const Rational& r) {
    return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

/// A GN application from the a priori estimates with the exponent read off
/// the resulting bound.
struct GNReference {
    std::string where;
    GNTuple tuple;
    Rational theta;
};

/// The distinct tuples used by the H1 and time-derivative estimates.
inline std::vector<GNReference> gn_reference_tuples() {
    return {
        {"H1 estimate, d=1: ||grad u||_4^4 <~ ||u||^(7/3) ||u||_H3^(5/3)", {1, 4, 1, 0, 3}, Rational(7, 12)},
        {"H1 estimate, d=2: ||grad u||_4^4 <~ ||grad u||^2 ||grad u||_H1^2", {2, 4, 0, 0, 1}, Rational(1, 2)},
        {"H1 estimate, d=3: ||grad u||_4^4 <~ ||grad u||^(5/2) ||grad u||_H2^(3/2)", {3, 4, 0, 0, 2}, Rational(5, 8)},
        {"dt estimate, d=1: ||grad u||_4^4 <~ ||u||_H1^3 ||u||_H2", {1, 4, 1, 1, 2}, Rational(3, 4)},
        {"dt estimate, d=2: ||u||_inf^2 <~ ||u|| ||u||_H2", {2, std::nullopt, 0, 0, 2}, Rational(1, 2)},
        {"dt estimate, d=3: ||u||_inf^2 <~ ||u||_H1 ||u||_H2", {3, std::nullopt, 0, 1, 2}, Rational(1, 2)},
        {"dt estimate, d=3: ||grad u||_4^4 <~ ||grad u|| ||grad u||_H1^3", {3, 4, 0, 0, 1}, Rational(1, 4)},
    };
}

/// ||v||_{W^{r,q}} = sum_{m <= r} ||D^m v||_{L^q} (Frobenius pointwise), r <= 1.
inline double w_rq_norm(const SpectralField& v, int r, std::optional<int> q, const GridSpec& fine) {
    require(r == 0 || r == 1, "gn: only r in {0, 1} is supported");
    const VectorField vp = evaluate(v, fine);
    double out = q ? norm_lp(vp, *q) : norm_linf(vp);
    if (r == 1) {
        const JacobianField g = gradient(v, fine);
        out += q ? norm_lp(g, *q) : norm_linf(g);
    }
    return out;
}

inline double gn_ratio(const SpectralField& v, const GNTuple& t, const GridSpec& fine) {
    const double theta = to_double(gn_theta(t));
    const double lhs = w_rq_norm(v, t.r, t.q, fine);
    const double rhs = std::pow(hs_norm(v, t.s1), theta) * std::pow(hs_norm(v, t.s2), 1.0 - theta);
    return guarded_ratio(lhs, rhs);
}

/// Empirical GN constant over the samples; the tuple's d must match the grid.
inline RatioReport gn_check(const SampleSpec& spec, const GNTuple& t) {
    spec.validate();
    require(t.d == spec.grid.dim, "gn_check: tuple dimension differs from the sample grid");
    gn_theta(t);
    const GridSpec fine = spec.grid.padded();
    const auto ratios = detail::sample_ratios(spec.count, [&](std::size_t i) { return gn_ratio(spec.draw(i), t, fine); });
    return summarize("gn" + describe(t), ratios, spec, std::nullopt, 0.0);
}

/// max/min of empirical constants across bands within `factor`.
inline bool band_stable(const std::vector<double>& constants, double factor) {
    require(!constants.empty(), "band_stable: no constants");
    const auto [lo, hi] = std::minmax_element(constants.begin(), constants.end());
    if (!std::isfinite(*hi)) return false;
    if (*hi < degenerate_floor) return true;
    return *lo > 0.0 && *hi <= factor * *lo;
}

inline std::string ratio_csv_header() { return "inequality,max_ratio,median_ratio,violations,witness_seed"; }

inline std::string ratio_csv_row(const RatioReport& r) {
    std::string id = r.id;
    if (id.find(',') != std::string::npos) id = "\"" + id + "\"";
    return id + "," + detail::format_g17(r.max_ratio) + "," + detail::format_g17(r.median_ratio) + "," +
           std::to_string(r.violations) + "," + std::to_string(r.witness_seed);
}

inline std::string ratio_summary(const RatioReport& r) {
    std::ostringstream os;
    os << r.id << ": " << r.samples << " samples, max " << r.max_ratio << ", median " << r.median_ratio;
    if (r.constant) os << ", constant " << *r.constant << ", " << r.violations << " violation(s)";
    os << ", worst sample #" << r.witness_index << " (key " << r.witness_seed << ")";
    return os.str();
}

} // namespace llbar

#endif // LLBAR_INEQUALITY_LAB_HPP
