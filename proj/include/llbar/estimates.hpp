#ifndef LLBAR_ESTIMATES_HPP
#define LLBAR_ESTIMATES_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "llbar/calculus.hpp"
#include "llbar/galerkin.hpp"
#include "llbar/integrator.hpp"

namespace llbar {

/// Monitored norms of one state. Every entry is a norm, not a square.
struct NormSuite {
    double t = 0.0;
    double L2 = 0.0;
    double L4 = 0.0;
    double L6 = 0.0;
    double Linf = 0.0;
    double gradL2 = 0.0;
    double deltaL2 = 0.0;
    double gradDeltaL2 = 0.0;
    double delta2L2 = 0.0;
    double gradDelta2L2 = 0.0;
    double uDotGradU = 0.0;
    double absUabsGradU = 0.0;
    double uDotDeltaU = 0.0;
    double absUabsDeltaU = 0.0;
};

inline constexpr std::size_t norm_column_count = 14;

inline const std::array<const char*, norm_column_count>& norm_column_names() {
    static const std::array<const char*, norm_column_count> names{
        "t",           "L2",           "L4",        "L6",          "Linf",
        "gradL2",      "deltaL2",      "gradDeltaL2", "delta2L2",  "gradDelta2L2",
        "uDotGradU",   "absUabsGradU", "uDotDeltaU", "absUabsDeltaU"};
    return names;
}

inline std::array<double, norm_column_count> to_array(const NormSuite& s) {
    return {s.t,           s.L2,           s.L4,        s.L6,          s.Linf,
            s.gradL2,      s.deltaL2,      s.gradDeltaL2, s.delta2L2,  s.gradDelta2L2,
            s.uDotGradU,   s.absUabsGradU, s.uDotDeltaU, s.absUabsDeltaU};
}

inline NormSuite from_array(const std::array<double, norm_column_count>& a) {
    return NormSuite{a[0], a[1], a[2],  a[3],  a[4],  a[5],  a[6],
                     a[7], a[8], a[9], a[10], a[11], a[12], a[13]};
}

/// sqrt(sum_k lambda_k^power |a_k|^2) = ||D^power u||_{L2} for the cosine span.
inline double spectral_seminorm(const SpectralField& u, int power) {
    return std::sqrt(weighted_energy(u, [power](double lam) { return std::pow(lam, power); }));
}

/// |u|^6 needs three times the node count for exact cosine quadrature.
inline double sextic_l6(const SpectralField& u) {
    return norm_lp(evaluate(u, u.grid.refined(3)), 6.0);
}

/// ||u||_{H^s}^2 = sum_{j<=s} ||D^j u||^2, i.e. weight sum_{j<=s} lambda^j.
inline double hs_norm_squared(const SpectralField& u, int s) {
    require(s >= 0, "hs_norm: order must be a non-negative integer");
    return weighted_energy(u, [s](double lam) {
        double w = 0.0;
        double p = 1.0;
        for (int j = 0; j <= s; ++j, p *= lam) w += p;
        return w;
    });
}

inline double hs_norm(const SpectralField& u, int s) { return std::sqrt(hs_norm_squared(u, s)); }

/// L2 family by Parseval; L4, Linf and the mixed products on the padded grid.
inline NormSuite norms(const SpectralField& u, double t = 0.0) {
    require(u.finite(), "norms: non-finite coefficients");
    NormSuite s;
    s.t = t;
    s.L2 = norm_l2(u);
    s.gradL2 = spectral_seminorm(u, 1);
    s.deltaL2 = spectral_seminorm(u, 2);
    s.gradDeltaL2 = spectral_seminorm(u, 3);
    s.delta2L2 = spectral_seminorm(u, 4);
    s.gradDelta2L2 = spectral_seminorm(u, 5);

    const GridSpec fine = u.grid.padded();
    const VectorField up = evaluate(u, fine);
    const JacobianField g = gradient(u, fine);
    const VectorField lap = evaluate(laplacian(u), fine);
    s.L4 = norm_lp(up, 4.0);
    s.L6 = sextic_l6(u);
    s.Linf = norm_linf(up);
    s.uDotGradU = norm_l2(dot(up, g));
    s.uDotDeltaU = norm_l2(dot(up, lap));

    const std::size_t cols = 3 * static_cast<std::size_t>(fine.dim);
    double ug = 0.0;
    double ul = 0.0;
    for (std::size_t n = 0; n < up.nodes(); ++n) {
        const double m = dot3(up.at(n), up.at(n));
        double gg = 0.0;
        for (std::size_t i = 0; i < cols; ++i) gg += g.at(n)[i] * g.at(n)[i];
        ug += m * gg;
        ul += m * dot3(lap.at(n), lap.at(n));
    }
    s.absUabsGradU = std::sqrt(ug * fine.cell_volume());
    s.absUabsDeltaU = std::sqrt(ul * fine.cell_volume());
    return s;
}

/// Norm records at a uniform time spacing plus the per-record L2 balance residual.
struct EnergyLedger {
    std::vector<NormSuite> records;
    std::vector<double> balance_residual;
};

namespace detail {

inline std::string format_g17(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

} // namespace detail

inline std::string ledger_header() {
    std::string h;
    for (const char* name : norm_column_names()) {
        h += name;
        h += ',';
    }
    return h + "balance_residual";
}

inline std::string ledger_to_csv(const EnergyLedger& ledger) {
    std::string out = ledger_header() + "\n";
    for (std::size_t i = 0; i < ledger.records.size(); ++i) {
        for (double x : to_array(ledger.records[i])) out += detail::format_g17(x) + ",";
        const double r = i < ledger.balance_residual.size()
                             ? ledger.balance_residual[i]
                             : std::numeric_limits<double>::quiet_NaN();
        out += detail::format_g17(r) + "\n";
    }
    return out;
}

inline void write_ledger(const std::string& path, const EnergyLedger& ledger) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, path + ": cannot open ledger for writing");
    out << ledger_to_csv(ledger);
    if (!out) throw Error(ErrorCode::io, path + ": ledger write failed");
}

inline EnergyLedger parse_ledger(const std::string& text, const std::string& origin = "ledger") {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != ledger_header())
        throw Error(ErrorCode::io, origin + ": unexpected header");
    EnergyLedger ledger;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::array<double, norm_column_count + 1> v{};
        std::size_t pos = 0;
        for (std::size_t c = 0; c < v.size(); ++c) {
            const std::size_t end = line.find(',', pos);
            const std::string cell = line.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
            char* stop = nullptr;
            v[c] = std::strtod(cell.c_str(), &stop);
            if (cell.empty() || *stop != '\0' || (end == std::string::npos) != (c + 1 == v.size()))
                throw Error(ErrorCode::io, origin + ": malformed row " + std::to_string(row));
            pos = end + 1;
        }
        std::array<double, norm_column_count> a{};
        std::copy(v.begin(), v.begin() + norm_column_count, a.begin());
        ledger.records.push_back(from_array(a));
        ledger.balance_residual.push_back(v.back());
    }
    return ledger;
}

inline EnergyLedger read_ledger(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, path + ": cannot open ledger for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_ledger(ss.str(), path);
}

/// Second-order derivative of uniformly spaced samples: centred inside,
/// one-sided three-point stencils at both ends.
inline std::vector<double> time_derivative(const std::vector<double>& y, double h) {
    require(y.size() >= 3, "time_derivative: at least 3 records are required");
    require(h > 0.0, "time_derivative: spacing must be positive");
    const std::size_t n = y.size();
    std::vector<double> d(n);
    d[0] = (-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * h);
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (y[i + 1] - y[i - 1]) / (2.0 * h);
    d[n - 1] = (3.0 * y[n - 1] - 4.0 * y[n - 2] + y[n - 3]) / (2.0 * h);
    return d;
}

/// Common spacing of the record times; rejects non-uniform or non-increasing series.
inline double uniform_spacing(const std::vector<double>& t) {
    require(t.size() >= 3, "balance residual: at least 3 records are required");
    const double h = t[1] - t[0];
    require(h > 0.0, "balance residual: times must be strictly increasing");
    for (std::size_t i = 1; i + 1 < t.size(); ++i)
        require(std::abs((t[i + 1] - t[i]) - h) <= 1e-9 * std::max(h, std::abs(t[i + 1])),
                "balance residual: records are not uniformly spaced");
    return h;
}

/// Residual of 1/2 d/dt||u||^2 + b1||grad u||^2 + b2||Lap u||^2 + b3||u||_4^4
/// + 2 b5||u.grad u||^2 + b5|| |u||grad u| ||^2 - b3||u||^2 = 0 per record.
inline std::vector<double> energy_balance_residual(const std::vector<NormSuite>& rec,
                                                   const LLBarParams& p) {
    std::vector<double> t(rec.size()), e(rec.size());
    for (std::size_t i = 0; i < rec.size(); ++i) {
        t[i] = rec[i].t;
        e[i] = rec[i].L2 * rec[i].L2;
    }
    const double h = uniform_spacing(t);
    const std::vector<double> de = time_derivative(e, h);
    std::vector<double> r(rec.size());
    for (std::size_t i = 0; i < rec.size(); ++i) {
        const NormSuite& s = rec[i];
        r[i] = 0.5 * de[i] + p.beta1 * s.gradL2 * s.gradL2 + p.beta2 * s.deltaL2 * s.deltaL2 +
               p.beta3 * std::pow(s.L4, 4) + 2.0 * p.beta5 * s.uDotGradU * s.uDotGradU +
               p.beta5 * s.absUabsGradU * s.absUabsGradU - p.beta3 * s.L2 * s.L2;
    }
    return r;
}

inline double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

/// Least-squares slope of log(err) against log(h).
inline double convergence_order(const std::vector<double>& h, const std::vector<double>& err) {
    require(h.size() == err.size() && h.size() >= 2, "convergence_order: need >= 2 matching points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
        require(h[i] > 0.0 && err[i] > 0.0, "convergence_order: values must be positive");
        const double x = std::log(h[i]);
        const double y = std::log(err[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// <grad(|u|^2 u), grad u> and <Lap(|u|^2 u), Lap u> by padded quadrature.
struct CubicPairings {
    double grad = 0.0;
    double lap = 0.0;
};

inline CubicPairings cubic_pairings(const SpectralField& u) {
    const GridSpec fine = u.grid.padded();
    CubicPairings out;
    out.grad = inner(nabla_cubic(u, fine), gradient(u, fine));
    out.lap = inner(delta_cubic(u, fine), evaluate(laplacian(u), fine));
    return out;
}

/// Residual of the H1-level identity
///   1/2 d/dt||grad u||^2 + b1||Lap u||^2 + b2||grad Lap u||^2 - b3||grad u||^2
///   + b3 <grad(|u|^2 u), grad u> + b5 <Lap(|u|^2 u), Lap u> = 0,
/// the precession term dropping out since (u x Lap u) . Lap u = 0.
inline std::vector<double> h1_balance_residual(const Trajectory& tr, const LLBarParams& p) {
    const std::size_t n = tr.snapshots.size();
    std::vector<double> t(n), e(n), rest(n);
    for (std::size_t i = 0; i < n; ++i) {
        const SpectralField& u = tr.snapshots[i].u;
        t[i] = tr.snapshots[i].t;
        const double g2 = weighted_energy(u, [](double lam) { return lam; });
        const double l2 = weighted_energy(u, [](double lam) { return lam * lam; });
        const double gl2 = weighted_energy(u, [](double lam) { return lam * lam * lam; });
        const CubicPairings c = cubic_pairings(u);
        e[i] = g2;
        rest[i] = p.beta1 * l2 + p.beta2 * gl2 - p.beta3 * g2 + p.beta3 * c.grad + p.beta5 * c.lap;
    }
    const double h = uniform_spacing(t);
    const std::vector<double> de = time_derivative(e, h);
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = 0.5 * de[i] + rest[i];
    return r;
}

/// Both sides of the bounds at level r: sup_t ||D^r u|| and int_0^T ||D^(r+2) u||^2.
struct AprioriReport {
    int level = 0;
    double sup_coarse = 0.0;
    double sup_fine = 0.0;
    double integral_coarse = 0.0;
    double integral_fine = 0.0;
    bool finite = false;
    bool band_stable = false;
    bool pass = false;
};

namespace detail {

inline double level_norm(const NormSuite& s, int r) {
    switch (r) {
    case 0: return s.L2;
    case 1: return s.gradL2;
    case 2: return s.deltaL2;
    case 3: return s.gradDeltaL2;
    case 4: return s.delta2L2;
    case 5: return s.gradDelta2L2;
    }
    fail("apriori: level out of range");
}

inline double trapezoid(const std::vector<double>& t, const std::vector<double>& y) {
    double acc = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i) acc += 0.5 * (t[i] - t[i - 1]) * (y[i] + y[i - 1]);
    return acc;
}

/// a and b agree within `factor`; two values below 1e-14 count as agreement.
inline bool within_factor(double a, double b, double factor) {
    if (std::abs(a) < 1e-14 && std::abs(b) < 1e-14) return true;
    if (a <= 0.0 || b <= 0.0) return false;
    return std::max(a, b) <= factor * std::min(a, b);
}

} // namespace detail

/// n-independence witness: ledgers from bands n and 2n must give finite,
/// factor-2 consistent sup and integral quantities at level r in 0..3.
inline AprioriReport apriori_monitor(const std::vector<NormSuite>& coarse,
                                     const std::vector<NormSuite>& fine, int r,
                                     double factor = 2.0) {
    require(r >= 0 && r <= 3, "apriori_monitor: level must be in 0..3");
    require(coarse.size() >= 2 && fine.size() >= 2, "apriori_monitor: ledgers need >= 2 records");
    AprioriReport rep;
    rep.level = r;
    const auto measure = [r](const std::vector<NormSuite>& led, double& sup, double& integral) {
        std::vector<double> t, y;
        sup = 0.0;
        for (const NormSuite& s : led) {
            sup = std::max(sup, detail::level_norm(s, r));
            const double top = detail::level_norm(s, r + 2);
            t.push_back(s.t);
            y.push_back(top * top);
        }
        integral = detail::trapezoid(t, y);
    };
    measure(coarse, rep.sup_coarse, rep.integral_coarse);
    measure(fine, rep.sup_fine, rep.integral_fine);
    rep.finite = std::isfinite(rep.sup_coarse) && std::isfinite(rep.sup_fine) &&
                 std::isfinite(rep.integral_coarse) && std::isfinite(rep.integral_fine);
    rep.band_stable = detail::within_factor(rep.sup_coarse, rep.sup_fine, factor) &&
                      detail::within_factor(rep.integral_coarse, rep.integral_fine, factor);
    rep.pass = rep.finite && rep.band_stable;
    return rep;
}

/// Integrand of the weak form against phi, assembled from the Green forms:
/// -b1<grad u, grad phi> - b2<Lap u, Lap phi> + b3<(1-|u|^2)u, phi>
/// + b4<u x grad u, grad phi> - b5<grad(|u|^2 u), grad phi>.
inline double weak_integrand(const SpectralField& u, const SpectralField& phi, const LLBarParams& p) {
    const GridSpec fine = u.grid.padded();
    const VectorField up = evaluate(u, fine);
    const JacobianField gu = gradient(u, fine);
    const VectorField ph = evaluate(phi, fine);
    const JacobianField gph = gradient(phi, fine);
    const VectorField lu = evaluate(laplacian(u), fine);
    const VectorField lph = evaluate(laplacian(phi), fine);
    VectorField react = up;
    react -= cubic(up);
    return -p.beta1 * inner(gu, gph) - p.beta2 * inner(lu, lph) + p.beta3 * inner(react, ph) +
           p.beta4 * inner(cross(up, gu), gph) - p.beta5 * inner(nabla_cubic(u, fine), gph);
}

/// <u(t), phi> - <u0, phi> - int_0^t (weak integrand) ds per snapshot, with
/// the time integral by the composite trapezoid rule.
inline std::vector<double> weak_residual(const Trajectory& tr, const VectorField& phi,
                                         const LLBarParams& p) {
    require(!tr.snapshots.empty(), "weak_residual: empty trajectory");
    require(phi.grid == tr.grid, "weak_residual: test function lives on a different grid");
    const SpectralField full = forward(phi);
    const SpectralField in_band = project(full, tr.band);
    const double total = norm_l2(full);
    require(norm_l2(full - in_band) <= 1e-10 * std::max(1.0, total),
            "weak_residual: test function is not representable in the retained band");
    const SpectralField ph = resize_modes(in_band, tr.snapshots.front().u.modes);

    std::vector<double> out;
    const double base = inner(tr.snapshots.front().u, ph);
    double integral = 0.0;
    double prev = weak_integrand(tr.snapshots.front().u, ph, p);
    out.push_back(0.0);
    for (std::size_t i = 1; i < tr.snapshots.size(); ++i) {
        const Snapshot& s = tr.snapshots[i];
        const double g = weak_integrand(s.u, ph, p);
        integral += 0.5 * (s.t - tr.snapshots[i - 1].t) * (g + prev);
        prev = g;
        out.push_back(inner(s.u, ph) - base - integral);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Gronwall-Bihari horizon.

/// f(x) = x^5 with constant forcing folded into y0: T* = (y0 + c)^-4 / 4.
inline double bihari_tstar(double y0, double c) {
    require(y0 > 0.0 && std::isfinite(y0), "bihari_tstar: y0 must be positive");
    require(c >= 0.0 && std::isfinite(c), "bihari_tstar: c must be non-negative");
    const double s = y0 + c;
    return 0.25 / (s * s * s * s);
}

/// f and F(x) = int_x^inf 1/f, the antiderivative of -1/f vanishing at infinity.
struct BihariKernel {
    std::function<double(double)> f;
    std::function<double(double)> F;
};

/// f(x) = x^p (p > 1) with F(x) = x^(1-p)/(p-1).
inline BihariKernel power_kernel(double p) {
    require(p > 1.0, "power_kernel: exponent must exceed 1 for a finite horizon");
    return BihariKernel{[p](double x) { return std::pow(x, p); },
                        [p](double x) { return std::pow(x, 1.0 - p) / (p - 1.0); }};
}

/// F by exp-sinh quadrature of 1/f on [x, inf).
inline BihariKernel numeric_kernel(std::function<double(double)> f) {
    auto F = [f](double x) {
        boost::math::quadrature::exp_sinh<double> rule;
        const auto integrand = [&f](double y) { return 1.0 / f(y); };
        return rule.integrate(integrand, x, std::numeric_limits<double>::infinity());
    };
    return BihariKernel{f, F};
}

struct BihariResult {
    double tstar = 0.0;
    /// |T* - F(y0 + int_0^T* g)|.
    double residual = 0.0;
};

namespace detail {

inline void check_bihari_f(const std::function<double(double)>& f, double y0) {
    double prev = 0.0;
    for (int i = 0; i <= 200; ++i) {
        const double x = y0 * std::pow(10.0, 8.0 * i / 200.0);
        const double v = f(x);
        require(std::isfinite(v) && v > 0.0,
                "bihari: f must be positive (f(" + format_g17(x) + ") = " + format_g17(v) + ")");
        require(i == 0 || v >= prev, "bihari: f must be non-decreasing (fails near x = " +
                                         format_g17(x) + ")");
        prev = v;
    }
}

} // namespace detail

/// Solves T = F(y0 + int_0^T g) by bisection on [0, F(y0)].
inline BihariResult bihari_general(double y0, const std::function<double(double)>& g,
                                   const BihariKernel& kernel) {
    require(y0 > 0.0 && std::isfinite(y0), "bihari_general: y0 must be positive");
    detail::check_bihari_f(kernel.f, y0);
    const auto G = [&g](double T) {
        if (T <= 0.0) return 0.0;
        return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(g, 0.0, T, 15, 1e-15);
    };
    const auto h = [&](double T) { return T - kernel.F(y0 + G(T)); };
    double lo = 0.0;
    double hi = kernel.F(y0);
    require(std::isfinite(hi) && hi > 0.0, "bihari_general: F(y0) must be finite and positive");
    for (int it = 0; it < 400 && hi - lo > 0.0; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (h(mid) < 0.0 ? lo : hi) = mid;
    }
    BihariResult r;
    r.tstar = 0.5 * (lo + hi);
    r.residual = std::abs(h(r.tstar));
    return r;
}

// ---------------------------------------------------------------------------
// Time regularity and continuous dependence.

enum class HolderNorm { L2, Linf };

inline const char* holder_norm_name(HolderNorm n) { return n == HolderNorm::L2 ? "L2" : "Linf"; }

struct HolderReport {
    double exponent = 0.5;
    HolderNorm norm = HolderNorm::L2;
    double sup_quotient = 0.0;
    std::size_t pair_count = 0;
};

/// sup over snapshot pairs of ||u(t) - u(tau)|| / |t - tau|^exponent, using
/// every `stride`-th snapshot.
inline HolderReport holder_quotient(const Trajectory& tr, double exponent, HolderNorm norm,
                                    std::size_t stride = 1) {
    require(exponent > 0.0 && exponent < 1.0, "holder_quotient: exponent must lie in (0,1)");
    require(stride >= 1, "holder_quotient: stride must be positive");
    std::vector<const Snapshot*> snaps;
    for (std::size_t i = 0; i < tr.snapshots.size(); i += stride) snaps.push_back(&tr.snapshots[i]);
    require(snaps.size() >= 10, "holder_quotient: at least 10 snapshots are required");

    std::vector<VectorField> samples;
    if (norm == HolderNorm::Linf) {
        const GridSpec fine = tr.grid.padded();
        for (const Snapshot* s : snaps) samples.push_back(evaluate(s->u, fine));
    }
    HolderReport rep;
    rep.exponent = exponent;
    rep.norm = norm;
    for (std::size_t i = 0; i < snaps.size(); ++i) {
        for (std::size_t j = i + 1; j < snaps.size(); ++j) {
            double diff = 0.0;
            if (norm == HolderNorm::L2) {
                diff = norm_l2(snaps[j]->u - snaps[i]->u);
            } else {
                const VectorField& a = samples[i];
                const VectorField& b = samples[j];
                for (std::size_t n = 0; n < a.nodes(); ++n) {
                    const double d0 = b.at(n)[0] - a.at(n)[0];
                    const double d1 = b.at(n)[1] - a.at(n)[1];
                    const double d2 = b.at(n)[2] - a.at(n)[2];
                    diff = std::max(diff, std::sqrt(d0 * d0 + d1 * d1 + d2 * d2));
                }
            }
            const double q = diff / std::pow(snaps[j]->t - snaps[i]->t, exponent);
            rep.sup_quotient = std::max(rep.sup_quotient, q);
            ++rep.pair_count;
        }
    }
    require(std::isfinite(rep.sup_quotient), "holder_quotient: non-finite quotient");
    return rep;
}

/// Pointwise Linf norm of every snapshot on the padded grid.
inline std::vector<double> sup_norms(const Trajectory& tr) {
    std::vector<double> out;
    const GridSpec fine = tr.grid.padded();
    for (const Snapshot& s : tr.snapshots) out.push_back(norm_linf(evaluate(s.u, fine)));
    return out;
}

struct DependenceReport {
    std::vector<double> deltas;
    std::vector<double> initial_diffs;
    std::vector<double> terminal_diffs;
    /// exp(int_0^T (1 + ||u||_inf^4 + ||v||_inf^4)) per perturbation.
    std::vector<double> gronwall_factors;
    /// max of terminal / (sqrt(factor) * initial); the envelope holds with
    /// constant 1 when this is <= 1.
    double c_margin = 0.0;
    bool within_envelope = true;
    /// terminal / delta agrees within factor 3 across the deltas whose terminal
    /// difference is above dependence_roundoff.
    bool linear_scaling = true;
    std::size_t at_roundoff = 0;
};

inline constexpr double dependence_roundoff = 1e-12;

namespace detail {

inline double gronwall_factor(const Trajectory& a, const Trajectory& b) {
    require(a.snapshots.size() == b.snapshots.size(), "dependence: trajectories differ in length");
    const std::vector<double> sa = sup_norms(a);
    const std::vector<double> sb = sup_norms(b);
    std::vector<double> t, y;
    for (std::size_t i = 0; i < sa.size(); ++i) {
        t.push_back(a.snapshots[i].t);
        y.push_back(1.0 + std::pow(sa[i], 4) + std::pow(sb[i], 4));
    }
    return std::exp(trapezoid(t, y));
}

inline void finish_dependence(DependenceReport& rep) {
    rep.c_margin = 0.0;
    for (std::size_t i = 0; i < rep.deltas.size(); ++i) {
        const double env = std::sqrt(rep.gronwall_factors[i]) * rep.initial_diffs[i];
        if (env > 0.0) rep.c_margin = std::max(rep.c_margin, rep.terminal_diffs[i] / env);
        else if (rep.terminal_diffs[i] > 1e-14) rep.c_margin = std::numeric_limits<double>::infinity();
    }
    rep.within_envelope = rep.c_margin <= 1.0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    rep.at_roundoff = 0;
    for (std::size_t i = 0; i < rep.deltas.size(); ++i) {
        if (rep.deltas[i] <= 0.0) continue;
        // Differences damped to round-off carry no scaling information.
        if (rep.terminal_diffs[i] < dependence_roundoff) {
            ++rep.at_roundoff;
            continue;
        }
        const double s = rep.terminal_diffs[i] / rep.deltas[i];
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    }
    rep.linear_scaling = hi == 0.0 || hi <= 3.0 * lo;
}

} // namespace detail

/// Runs u0 and v0 to t_end and records the terminal L2 difference against
/// the Gronwall envelope.
inline DependenceReport continuous_dependence(const SpectralField& u0, const SpectralField& v0,
                                              const LLBarParams& p, const IntegratorPolicy& policy,
                                              const ModeBand& band) {
    require(u0.grid == v0.grid && u0.modes == v0.modes, "dependence: data on different layouts");
    const Trajectory a = integrate(u0, p, band, policy);
    const Trajectory b = integrate(v0, p, band, policy);
    DependenceReport rep;
    const double d0 = norm_l2(project(u0, band) - project(v0, band));
    rep.deltas.push_back(d0);
    rep.initial_diffs.push_back(d0);
    rep.terminal_diffs.push_back(norm_l2(a.final_state() - b.final_state()));
    rep.gronwall_factors.push_back(detail::gronwall_factor(a, b));
    detail::finish_dependence(rep);
    return rep;
}

/// Perturbations v0 = u0 + delta * direction for each delta.
inline DependenceReport continuous_dependence(const SpectralField& u0, const SpectralField& direction,
                                              const std::vector<double>& deltas, const LLBarParams& p,
                                              const IntegratorPolicy& policy, const ModeBand& band) {
    require(!deltas.empty(), "dependence: no perturbation sizes given");
    const Trajectory a = integrate(u0, p, band, policy);
    DependenceReport rep;
    for (double delta : deltas) {
        require(std::isfinite(delta) && delta >= 0.0, "dependence: deltas must be non-negative");
        const SpectralField v0 = u0 + delta * direction;
        const Trajectory b = integrate(v0, p, band, policy);
        rep.deltas.push_back(delta);
        rep.initial_diffs.push_back(norm_l2(project(u0, band) - project(v0, band)));
        rep.terminal_diffs.push_back(norm_l2(a.final_state() - b.final_state()));
        rep.gronwall_factors.push_back(detail::gronwall_factor(a, b));
    }
    detail::finish_dependence(rep);
    return rep;
}

/// Applies a fixed 3x3 matrix to every coefficient vector.
inline SpectralField rotate(SpectralField s, const std::array<std::array<double, 3>, 3>& R) {
    for (std::size_t m = 0; m < s.mode_count(); ++m) {
        double* c = s.at(m);
        const double x = c[0], y = c[1], z = c[2];
        for (int i = 0; i < 3; ++i) c[i] = R[i][0] * x + R[i][1] * y + R[i][2] * z;
    }
    return s;
}

// ---------------------------------------------------------------------------
// Completed-square identity behind the three-dimensional estimate.

struct CompletedSquare {
    double t = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
    /// |lhs - rhs| relative to the sum of the term magnitudes.
    double residual = 0.0;
    double L4_pow4 = 0.0;
    /// int_0^t ||u||_6^6 (trapezoid over snapshots).
    double L6_pow6_integral = 0.0;
};

/// With alpha = beta5 / (2 beta2):
///   2 b2 |A|^2 - (4 alpha b2 + 2 b5)<A, B> + 4 alpha b5 |B|^2 = |sqrt(2 b2) A - sqrt(4 alpha b5) B|^2
/// for A = grad Lap u, B = grad(|u|^2 u), evaluated on the padded grid.
inline std::vector<CompletedSquare> three_d_energy_identity(const Trajectory& tr, const LLBarParams& p) {
    require(p.beta2 > 0.0, "three_d_energy_identity: beta2 must be positive");
    const double alpha = p.beta5 / (2.0 * p.beta2);
    const GridSpec fine = tr.grid.padded();
    std::vector<CompletedSquare> out;
    double integral = 0.0;
    double prev_t = 0.0;
    double prev_l6 = 0.0;
    for (std::size_t i = 0; i < tr.snapshots.size(); ++i) {
        const Snapshot& s = tr.snapshots[i];
        const JacobianField A = gradient(laplacian(s.u), fine);
        const JacobianField B = nabla_cubic(s.u, fine);
        const double aa = inner(A, A);
        const double ab = inner(A, B);
        const double bb = inner(B, B);
        CompletedSquare c;
        c.t = s.t;
        const double t1 = 2.0 * p.beta2 * aa;
        const double t2 = (4.0 * alpha * p.beta2 + 2.0 * p.beta5) * ab;
        const double t3 = 4.0 * alpha * p.beta5 * bb;
        c.lhs = t1 - t2 + t3;
        JacobianField diff = A;
        diff *= std::sqrt(2.0 * p.beta2);
        JacobianField scaled = B;
        scaled *= std::sqrt(4.0 * alpha * p.beta5);
        diff -= scaled;
        c.rhs = inner(diff, diff);
        const double scale = std::abs(t1) + std::abs(t2) + std::abs(t3);
        c.residual = scale > 0.0 ? std::abs(c.lhs - c.rhs) / scale : std::abs(c.lhs - c.rhs);
        const VectorField up = evaluate(s.u, fine);
        c.L4_pow4 = std::pow(norm_lp(up, 4.0), 4);
        const double l6 = std::pow(sextic_l6(s.u), 6);
        if (i > 0) integral += 0.5 * (s.t - prev_t) * (l6 + prev_l6);
        prev_t = s.t;
        prev_l6 = l6;
        c.L6_pow6_integral = integral;
        out.push_back(c);
    }
    return out;
}

} // namespace llbar

#endif // LLBAR_ESTIMATES_HPP
