#ifndef LLBAR_EXPERIMENTS_HPP
#define LLBAR_EXPERIMENTS_HPP

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "llbar/config.hpp"
#include "llbar/estimates.hpp"
#include "llbar/inequality_lab.hpp"

namespace llbar {

/// Output of `run`: the ledger as written plus the terminal state.
struct RunResult {
    EnergyLedger ledger;
    Trajectory trajectory;
    std::vector<std::string> snapshot_files;
};

inline std::string snapshot_path(const std::string& prefix, std::int64_t step) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "_%06lld.llbr", static_cast<long long>(step));
    return prefix + buf;
}

namespace detail {

inline void finish_ledger(EnergyLedger& ledger, const LLBarParams& p) {
    ledger.balance_residual.clear();
    if (ledger.records.size() >= 3) ledger.balance_residual = energy_balance_residual(ledger.records, p);
}

} // namespace detail

/// Integrates the configured problem, recording a NormSuite per monitor tick
/// and writing snapshots as they are produced. On blow-up the ledger so far
/// is still written before the error propagates.
inline RunResult run(const RunConfig& cfg) {
    const SpectralField u0 = make_initial(cfg);
    RunResult out;
    const auto monitor = [&](const Snapshot& s) {
        out.ledger.records.push_back(norms(s.u, s.t));
        if (!cfg.output.snapshots.empty()) {
            const std::string path = snapshot_path(cfg.output.snapshots, s.step);
            write_snapshot(path, inverse(s.u));
            out.snapshot_files.push_back(path);
        }
    };
    try {
        out.trajectory = integrate(u0, cfg.params, cfg.band, cfg.integrator, cfg.output.cadence, monitor);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::blowup && !cfg.output.ledger.empty()) {
            detail::finish_ledger(out.ledger, cfg.params);
            write_ledger(cfg.output.ledger, out.ledger);
        }
        throw;
    }
    detail::finish_ledger(out.ledger, cfg.params);
    if (!cfg.output.ledger.empty()) write_ledger(cfg.output.ledger, out.ledger);
    return out;
}

inline std::string describe_norms(const NormSuite& s) {
    std::ostringstream os;
    const auto names = norm_column_names();
    const auto values = to_array(s);
    for (std::size_t i = 0; i < names.size(); ++i)
        os << names[i] << " = " << detail::format_g17(values[i]) << "\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// Harness reports.

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct HarnessReport {
    std::string title;
    std::vector<CheckResult> checks;
    /// Optional CSV body written by --report.
    std::string csv;

    bool pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }

    void add(std::string name, bool ok, std::string detail) {
        checks.push_back({std::move(name), ok, std::move(detail)});
    }

    std::string text() const {
        std::ostringstream os;
        os << title << "\n";
        for (const auto& c : checks) os << (c.pass ? "  ok    " : "  FAIL  ") << c.name << ": " << c.detail << "\n";
        return os.str();
    }

    /// One line per failed check, for the assertion error message.
    std::string failures() const {
        std::string out;
        for (const auto& c : checks)
            if (!c.pass) out += (out.empty() ? "" : "; ") + c.name + " (" + c.detail + ")";
        return out;
    }
};

namespace detail {

inline std::string g(double x) {
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

inline std::string rational_text(const Rational& r) {
    std::ostringstream os;
    os << r;
    return os.str();
}

inline RunConfig with_dt(RunConfig cfg, double dt) {
    cfg.integrator.dt = dt;
    return cfg;
}

inline std::vector<NormSuite> ledger_of(const Trajectory& tr) {
    std::vector<NormSuite> out;
    for (const Snapshot& s : tr.snapshots) out.push_back(norms(s.u, s.t));
    return out;
}

/// Residual max for dt, dt/2, dt/4 and the fitted order. Values already
/// at roundoff level count as converged.
inline void refinement_check(HarnessReport& rep, const std::string& name, const std::vector<double>& h,
                             const std::vector<double>& err, double floor = 1e-11) {
    std::string detail = "max residual";
    for (std::size_t i = 0; i < h.size(); ++i) detail += " " + g(err[i]) + "@dt=" + g(h[i]);
    double worst = 0.0;
    for (double e : err) worst = std::max(worst, e);
    if (worst < floor) {
        rep.add(name, std::isfinite(worst), detail + " (at roundoff)");
        return;
    }
    const double order = convergence_order(h, err);
    rep.add(name, std::isfinite(order) && order >= 1.8, detail + ", order " + g(order));
}

} // namespace detail

/// Balance identities, interpolation invariants, weak form, completed square
/// and the n-independence monitor on the configured run.
inline HarnessReport verify_identities(const RunConfig& cfg) {
    HarnessReport rep;
    rep.title = "verify-identities";
    const SpectralField u0 = make_initial(cfg);
    const int cadence = cfg.output.cadence;

    std::vector<double> h, e_l2, e_h1, e_weak;
    Trajectory base;
    SpectralField phi0(cfg.grid, cfg.band.modes);
    phi0.at(0)[0] = phi0.at(0)[1] = phi0.at(0)[2] = 1.0;
    const VectorField phi = inverse(phi0);
    for (int level = 0; level < 3; ++level) {
        const int mult = 1 << level;
        RunConfig c = detail::with_dt(cfg, cfg.integrator.dt / mult);
        c.integrator.max_steps = cfg.integrator.max_steps * mult;
        const Trajectory tr = integrate(u0, c.params, c.band, c.integrator, cadence);
        if (tr.snapshots.size() < 3) fail("verify-identities: need at least 3 monitor ticks; lower output.cadence");
        h.push_back(c.integrator.dt);
        e_l2.push_back(max_abs(energy_balance_residual(detail::ledger_of(tr), c.params)));
        e_h1.push_back(max_abs(h1_balance_residual(tr, c.params)));
        e_weak.push_back(max_abs(weak_residual(tr, phi, c.params)));
        if (level == 0) base = tr;
    }
    // Ledger spacing is dt * cadence, so the difference quotients refine with dt.
    detail::refinement_check(rep, "L2 energy balance", h, e_l2);
    detail::refinement_check(rep, "H1 energy balance", h, e_h1);
    detail::refinement_check(rep, "weak form, constant test function", h, e_weak);

    double worst3 = 0.0, worst4 = 0.0;
    for (const Snapshot& s : base.snapshots) {
        const NormSuite n = norms(s.u, s.t);
        worst3 = std::max(worst3, n.deltaL2 * n.deltaL2 - n.gradL2 * n.gradDeltaL2);
        worst4 = std::max(worst4, n.gradDeltaL2 * n.gradDeltaL2 - n.deltaL2 * n.delta2L2);
    }
    rep.add("eq3 on snapshots", worst3 <= 1e-9, "max excess " + detail::g(worst3));
    rep.add("eq4 on snapshots", worst4 <= 1e-9, "max excess " + detail::g(worst4));

    if (cfg.params.beta2 > 0.0) {
        double worst = 0.0;
        bool finite = true;
        for (const auto& c : three_d_energy_identity(base, cfg.params)) {
            worst = std::max(worst, c.residual);
            finite = finite && std::isfinite(c.L4_pow4) && std::isfinite(c.L6_pow6_integral);
        }
        rep.add("completed square", worst < 1e-9 && finite, "max relative residual " + detail::g(worst));
    }

    // n-independence: half band against the configured band.
    Index3 half = cfg.band.modes;
    bool can_halve = true;
    for (int j = 0; j < cfg.grid.dim; ++j) {
        half[j] = cfg.band.modes[j] / 2;
        can_halve = can_halve && half[j] >= 2;
    }
    if (can_halve) {
        const ModeBand coarse_band{half};
        const Trajectory coarse = integrate(u0, cfg.params, coarse_band, cfg.integrator, cadence);
        const auto lc = detail::ledger_of(coarse);
        const auto lf = detail::ledger_of(base);
        for (int r = 0; r <= 3; ++r) {
            const AprioriReport a = apriori_monitor(lc, lf, r);
            rep.add("a priori level " + std::to_string(r), a.pass,
                    "sup " + detail::g(a.sup_coarse) + " vs " + detail::g(a.sup_fine) + ", integral " +
                        detail::g(a.integral_coarse) + " vs " + detail::g(a.integral_fine));
        }
    }
    return rep;
}

struct InequalityOptions {
    std::vector<int> bands{8, 16, 32};
    int count = 200;
    std::uint64_t seed = 1;
    double decay = 0.0;
    /// Band-stability tolerance for the empirical (non-asserted) constants.
    double stability = 1.05;
};

/// Runs every inequality family over each band; constant-1 families must
/// have no violations, the rest must give band-stable empirical constants.
inline HarnessReport verify_inequalities(const GridSpec& grid, const InequalityOptions& opt) {
    require(!opt.bands.empty(), "verify-inequalities: no bands given");
    HarnessReport rep;
    rep.title = "verify-inequalities (d=" + std::to_string(grid.dim) + ")";
    std::ostringstream csv;
    csv << ratio_csv_header() << ",band\n";

    std::map<std::string, std::vector<double>> empirical;
    std::map<std::string, int> violations;
    std::map<std::string, bool> asserted;
    for (int b : opt.bands) {
        require(b >= 2, "verify-inequalities: bands must be >= 2");
        SampleSpec spec;
        Index3 n{1, 1, 1};
        for (int j = 0; j < grid.dim; ++j) n[j] = b;
        spec.grid = grid.with_points(n);
        spec.band = n;
        spec.seed = opt.seed;
        spec.count = opt.count;
        spec.decay = opt.decay;

        std::vector<RatioReport> all = check_interp(spec);
        for (auto& r : check_elliptic(spec)) all.push_back(std::move(r));
        for (int s : {1, 2})
            if (2 * s > grid.dim) all.push_back(check_product_hs(spec, s));
        for (int k : {0, 1, 2}) all.push_back(check_cubic_lipschitz(spec, k));
        for (int k : {0, 1, 2}) all.push_back(check_cross_diff(spec, Index3{k, 0, 0}));
        for (const auto& ref : gn_reference_tuples())
            if (ref.tuple.d == grid.dim) all.push_back(gn_check(spec, ref.tuple));
        for (const RatioReport& r : all) {
            csv << ratio_csv_row(r) << "," << b << "\n";
            empirical[r.id].push_back(r.max_ratio);
            violations[r.id] += r.violations;
            asserted[r.id] = r.constant.has_value();
        }

        // Every ratio is homogeneous of degree 0.
        SampleSpec scaled = spec;
        scaled.count = std::min(spec.count, 50);
        const double ref = check_interp(scaled)[0].max_ratio;
        for (double c : {0.1, 10.0}) {
            scaled.amplitude = c * spec.amplitude;
            const double r = check_interp(scaled)[0].max_ratio;
            rep.add("scale invariance c=" + detail::g(c) + " band " + std::to_string(b),
                    std::abs(r - ref) <= 1e-9 * ref, "eq3 max " + detail::g(r) + " vs " + detail::g(ref));
        }
    }
    for (const auto& [id, values] : empirical) {
        std::string detail = "max ratio per band:";
        for (double v : values) detail += " " + detail::g(v);
        if (asserted[id]) {
            rep.add(id, violations[id] == 0, detail + ", " + std::to_string(violations[id]) + " violation(s)");
        } else {
            bool finite = true;
            for (double v : values) finite = finite && std::isfinite(v);
            rep.add(id, finite && band_stable(values, opt.stability), detail);
        }
    }

    for (const auto& ref : gn_reference_tuples()) {
        const Rational theta = gn_theta(ref.tuple);
        rep.add("theta " + describe(ref.tuple), theta == ref.theta,
                detail::rational_text(theta) + " (expected " + detail::rational_text(ref.theta) + ")");
    }
    rep.csv = csv.str();
    return rep;
}

struct ConvergeResult {
    std::vector<int> bands;
    /// ||u_{b_i} - u_{b_{i+1}}||_L2 at t_end.
    std::vector<double> differences;
};

/// Runs the configured problem on each band (grid N = band per axis, so the
/// padded products stay exact) from the same initial data.
inline ConvergeResult converge_runs(const RunConfig& cfg, const std::vector<int>& bands) {
    require(bands.size() >= 2, "converge: at least two bands are required");
    for (std::size_t i = 1; i < bands.size(); ++i)
        require(bands[i] > bands[i - 1], "converge: bands must increase");
    const SpectralField u0 = make_initial(cfg);
    ConvergeResult out;
    out.bands = bands;
    std::vector<SpectralField> finals;
    const int top = bands.back();
    Index3 top_n{1, 1, 1};
    for (int j = 0; j < cfg.grid.dim; ++j) top_n[j] = top;
    const GridSpec top_grid = cfg.grid.with_points(top_n);
    for (int b : bands) {
        Index3 n{1, 1, 1};
        for (int j = 0; j < cfg.grid.dim; ++j) n[j] = b;
        const GridSpec g = cfg.grid.with_points(n);
        SpectralField start = transfer(u0, g, n);
        const Trajectory tr = integrate(start, cfg.params, ModeBand{n}, cfg.integrator,
                                        static_cast<int>(std::max<std::int64_t>(1, cfg.integrator.step_count())));
        finals.push_back(transfer(tr.final_state(), top_grid, top_n));
    }
    for (std::size_t i = 0; i + 1 < finals.size(); ++i) out.differences.push_back(norm_l2(finals[i] - finals[i + 1]));
    return out;
}

inline HarnessReport converge(const RunConfig& cfg, const std::vector<int>& bands, double factor = 10.0) {
    const ConvergeResult r = converge_runs(cfg, bands);
    HarnessReport rep;
    rep.title = "converge";
    std::ostringstream csv;
    csv << "band,next_band,difference\n";
    for (std::size_t i = 0; i < r.differences.size(); ++i) {
        csv << r.bands[i] << "," << r.bands[i + 1] << "," << detail::format_g17(r.differences[i]) << "\n";
        rep.add("||u_" + std::to_string(r.bands[i]) + " - u_" + std::to_string(r.bands[i + 1]) + "||",
                std::isfinite(r.differences[i]), detail::g(r.differences[i]));
    }
    for (std::size_t i = 0; i + 1 < r.differences.size(); ++i) {
        const double a = r.differences[i], b = r.differences[i + 1];
        const bool at_roundoff = a < 1e-12 && b < 1e-12;
        rep.add("reduction " + std::to_string(r.bands[i + 1]) + " -> " + std::to_string(r.bands[i + 2]),
                at_roundoff || a >= factor * b,
                at_roundoff ? "both at roundoff" : "factor " + detail::g(a / b) + " (need >= " + detail::g(factor) + ")");
    }
    rep.csv = csv.str();
    return rep;
}

/// Hölder quotient on the configured run at full and half snapshot density.
inline HarnessReport holder(const RunConfig& cfg, double exponent, HolderNorm norm, double tolerance = 0.1) {
    HarnessReport rep;
    rep.title = "holder";
    const Trajectory tr = integrate(make_initial(cfg), cfg.params, cfg.band, cfg.integrator, cfg.output.cadence);
    const HolderReport fine = holder_quotient(tr, exponent, norm, 1);
    const HolderReport coarse = holder_quotient(tr, exponent, norm, 2);
    const double change = fine.sup_quotient > 0.0
                              ? std::abs(fine.sup_quotient - coarse.sup_quotient) / fine.sup_quotient
                              : std::abs(coarse.sup_quotient);
    rep.add(std::string("sup quotient (") + holder_norm_name(norm) + ", exponent " + detail::g(exponent) + ")",
            std::isfinite(fine.sup_quotient), detail::g(fine.sup_quotient) + " over " + std::to_string(fine.pair_count) + " pairs");
    rep.add("refinement stability", change < tolerance,
            "half density " + detail::g(coarse.sup_quotient) + ", relative change " + detail::g(change));
    std::ostringstream csv;
    csv << "norm,exponent,stride,sup_quotient,pairs\n";
    for (const HolderReport* h : {&fine, &coarse})
        csv << holder_norm_name(norm) << "," << detail::format_g17(exponent) << "," << (h == &fine ? 1 : 2) << ","
            << detail::format_g17(h->sup_quotient) << "," << h->pair_count << "\n";
    rep.csv = csv.str();
    return rep;
}

/// Unit-L2 perturbation direction: e_k for k = (1, 0, 0), pointing along y.
inline SpectralField dependence_direction(const RunConfig& cfg) {
    SpectralField d(cfg.grid, cfg.band.modes);
    Index3 k{0, 0, 0};
    if (cfg.band.modes[0] > 1) k[0] = 1;
    d.at(d.flat_index(k))[1] = 1.0;
    return d;
}

inline HarnessReport depend(const RunConfig& cfg, const std::vector<double>& deltas) {
    HarnessReport rep;
    rep.title = "depend";
    const DependenceReport r = continuous_dependence(make_initial(cfg), dependence_direction(cfg), deltas,
                                                     cfg.params, cfg.integrator, cfg.band);
    std::ostringstream csv;
    csv << "delta,initial_diff,terminal_diff,gronwall_factor\n";
    for (std::size_t i = 0; i < r.deltas.size(); ++i) {
        csv << detail::format_g17(r.deltas[i]) << "," << detail::format_g17(r.initial_diffs[i]) << ","
            << detail::format_g17(r.terminal_diffs[i]) << "," << detail::format_g17(r.gronwall_factors[i]) << "\n";
        rep.add("delta " + detail::g(r.deltas[i]), std::isfinite(r.terminal_diffs[i]),
                "terminal diff " + detail::g(r.terminal_diffs[i]) + ", envelope factor " + detail::g(r.gronwall_factors[i]));
    }
    rep.add("linear scaling", r.linear_scaling,
            r.at_roundoff == r.deltas.size()
                ? "all terminal differences below " + detail::g(dependence_roundoff)
                : "terminal/delta within factor 3" +
                      (r.at_roundoff ? " (" + std::to_string(r.at_roundoff) + " at round-off)" : std::string()));
    rep.add("Gronwall envelope", r.within_envelope, "C_margin " + detail::g(r.c_margin));
    rep.csv = csv.str();
    return rep;
}

} // namespace llbar

#endif // LLBAR_EXPERIMENTS_HPP
