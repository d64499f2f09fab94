#ifndef LLBAR_INTEGRATOR_HPP
#define LLBAR_INTEGRATOR_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "llbar/galerkin.hpp"

namespace llbar {

enum class Scheme { etdrk2, imex_cnab2, imex_euler };

inline const char* scheme_name(Scheme s) {
    switch (s) {
    case Scheme::etdrk2: return "ETDRK2";
    case Scheme::imex_cnab2: return "IMEX-CNAB2";
    case Scheme::imex_euler: return "IMEX-Euler";
    }
    return "?";
}

inline std::optional<Scheme> parse_scheme(const std::string& name) {
    if (name == "ETDRK2") return Scheme::etdrk2;
    if (name == "IMEX-CNAB2") return Scheme::imex_cnab2;
    if (name == "IMEX-Euler") return Scheme::imex_euler;
    return std::nullopt;
}

struct IntegratorPolicy {
    Scheme scheme = Scheme::etdrk2;
    double dt = 1e-3;
    double t_end = 1.0;
    std::int64_t max_steps = 1'000'000'000;
    double blowup_threshold = 1e6;

    void validate() const {
        require(std::isfinite(dt) && dt > 0.0, "integrator: dt must be positive");
        // t_end = 0 is allowed and yields the initial snapshot only.
        require(std::isfinite(t_end) && t_end >= 0.0, "integrator: t_end must be >= 0");
        require(max_steps >= 1, "integrator: max_steps must be positive");
        require(blowup_threshold > 0.0, "integrator: blowup_threshold must be positive");
    }

    /// Number of fixed steps reaching t_end, capped by max_steps.
    std::int64_t step_count() const {
        const double ratio = t_end / dt;
        const auto n = static_cast<std::int64_t>(std::llround(ratio));
        require(std::abs(ratio - static_cast<double>(n)) <= 1e-9 * std::max(1.0, ratio),
                "integrator: t_end must be an integer multiple of dt");
        return std::min(n, max_steps);
    }
};

struct SolverState {
    double t = 0.0;
    SpectralField u;
    std::int64_t step_index = 0;
    /// Nonlinear term at the previous step (CNAB2 history).
    std::optional<SpectralField> previous_nonlinear;
};

namespace detail {

/// phi1(z) = (e^z - 1)/z and phi2(z) = (e^z - 1 - z)/z^2; Taylor series
/// below |z| < 1e-4.
inline double phi1(double z) {
    if (std::abs(z) < 1e-4) return 1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0;
    return std::expm1(z) / z;
}

inline double phi2(double z) {
    if (std::abs(z) < 1e-4) return 0.5 + z / 6.0 + z * z / 24.0 + z * z * z / 120.0;
    return (std::expm1(z) - z) / (z * z);
}

} // namespace detail

/// Fixed-step integrator for the Galerkin system; per-mode coefficients of
/// the diagonal linear part are precomputed once for the step size. A
/// Stepper owns scratch buffers and must not step from two threads at once.
class Stepper {
public:
    Stepper(const GridSpec& grid, const Index3& modes, const ModeBand& band,
            const LLBarParams& params, const IntegratorPolicy& policy)
        : grid_(grid), band_(band), params_(params), policy_(policy),
          work_(std::make_shared<NonlinearWorkspace>(grid, modes, band, params)) {
        params.validate_dynamics();
        policy.validate();
        band.check(grid);
        const double h = policy.dt;
        const std::vector<double> m = rhs_linear_factor(grid, modes, params);
        const SpectralField shape(grid, modes);
        a_.resize(m.size());
        b_.resize(m.size());
        c_.resize(m.size());
        for (std::size_t i = 0; i < m.size(); ++i) {
            const bool inside = band.contains(grid.dim, shape.mode_index(i));
            const double z = h * m[i];
            switch (policy.scheme) {
            case Scheme::etdrk2:
                a_[i] = std::exp(z);
                b_[i] = h * detail::phi1(z);
                c_[i] = h * detail::phi2(z);
                break;
            case Scheme::imex_euler:
                require(1.0 - z > 0.0, "IMEX-Euler: dt too large for the unstable linear modes");
                a_[i] = 1.0 / (1.0 - z);
                b_[i] = h / (1.0 - z);
                c_[i] = 0.0;
                break;
            case Scheme::imex_cnab2:
                require(1.0 - z / 2.0 > 0.0, "IMEX-CNAB2: dt too large for the unstable linear modes");
                a_[i] = (1.0 + z / 2.0) / (1.0 - z / 2.0);
                b_[i] = h / (1.0 - z / 2.0);
                c_[i] = 0.0;
                break;
            }
            if (!inside) a_[i] = b_[i] = c_[i] = 0.0;
        }
    }

    const IntegratorPolicy& policy() const { return policy_; }
    const ModeBand& band() const { return band_; }

    SolverState step(const SolverState& s) const {
        require(s.u.coeffs.size() == 3 * a_.size(), "step: state layout does not match stepper");
        if (!s.u.finite()) throw Error(ErrorCode::blowup, "step: non-finite state at t=" + std::to_string(s.t));
        const SpectralField n0 = nonlinear(s.u);
        SolverState next;
        next.step_index = s.step_index + 1;
        next.t = static_cast<double>(next.step_index) * policy_.dt;
        switch (policy_.scheme) {
        case Scheme::etdrk2: {
            SpectralField a = combine(s.u, n0);
            const SpectralField n1 = nonlinear(a);
            for (std::size_t i = 0; i < a_.size(); ++i)
                for (int c = 0; c < 3; ++c)
                    a.coeffs[3 * i + c] += c_[i] * (n1.coeffs[3 * i + c] - n0.coeffs[3 * i + c]);
            next.u = std::move(a);
            break;
        }
        case Scheme::imex_euler:
            next.u = combine(s.u, n0);
            break;
        case Scheme::imex_cnab2: {
            // First step: N^{-1} = N^0.
            const SpectralField& prev = s.previous_nonlinear ? *s.previous_nonlinear : n0;
            SpectralField extrap = 1.5 * n0;
            extrap -= 0.5 * prev;
            next.u = combine(s.u, extrap);
            next.previous_nonlinear = n0;
            break;
        }
        }
        check_state(next, "after step");
        return next;
    }

    /// Pointwise maximum of |u| on the base grid.
    static double sup_norm(const SpectralField& u) { return norm_linf(inverse(u)); }

private:
    SpectralField nonlinear(const SpectralField& u) const {
        SpectralField out(u.grid, u.modes);
        work_->apply(u, out);
        return out;
    }

    SpectralField combine(const SpectralField& u, const SpectralField& n) const {
        SpectralField out = u;
        for (std::size_t i = 0; i < a_.size(); ++i)
            for (int c = 0; c < 3; ++c)
                out.coeffs[3 * i + c] = a_[i] * u.coeffs[3 * i + c] + b_[i] * n.coeffs[3 * i + c];
        return out;
    }

    void check_state(const SolverState& s, const char* stage) const {
        std::ostringstream msg;
        if (!s.u.finite()) {
            msg << "blow-up " << stage << ": non-finite coefficients at t=" << s.t;
            throw Error(ErrorCode::blowup, msg.str());
        }
        const double sup = sup_norm(s.u);
        if (sup > policy_.blowup_threshold) {
            msg << "blow-up " << stage << ": |u|_Linf=" << sup << " exceeds threshold "
                << policy_.blowup_threshold << " at t=" << s.t;
            throw Error(ErrorCode::blowup, msg.str());
        }
    }

    GridSpec grid_;
    ModeBand band_;
    LLBarParams params_;
    IntegratorPolicy policy_;
    std::shared_ptr<NonlinearWorkspace> work_;
    std::vector<double> a_, b_, c_;
};

/// One step of the selected scheme.
inline SolverState step(const SolverState& state, const LLBarParams& p, const IntegratorPolicy& policy,
                        const ModeBand& band) {
    return Stepper(state.u.grid, state.u.modes, band, p, policy).step(state);
}

inline SolverState step(const SolverState& state, const LLBarParams& p, const IntegratorPolicy& policy) {
    return step(state, p, policy, ModeBand{state.u.modes});
}

struct Snapshot {
    double t = 0.0;
    std::int64_t step = 0;
    SpectralField u;
};

/// Snapshots at a fixed step cadence, starting with the projected initial data.
struct Trajectory {
    GridSpec grid;
    ModeBand band;
    double dt = 0.0;
    int cadence = 1;
    std::vector<Snapshot> snapshots;

    double spacing() const { return dt * cadence; }
    const SpectralField& final_state() const { return snapshots.back().u; }
};

using Monitor = std::function<void(const Snapshot&)>;

/// Projects u0 onto the band and steps to t_end. `monitor` sees every stored
/// snapshot as it is produced, so partial output survives a blow-up abort.
inline Trajectory integrate(const SpectralField& u0, const LLBarParams& p, const ModeBand& band,
                            const IntegratorPolicy& policy, int cadence = 1,
                            const Monitor& monitor = {}) {
    require(cadence >= 1, "integrate: cadence must be >= 1");
    require(u0.finite(), "integrate: initial data must be finite");
    const Stepper stepper(u0.grid, u0.modes, band, p, policy);
    Trajectory traj;
    traj.grid = u0.grid;
    traj.band = band;
    traj.dt = policy.dt;
    traj.cadence = cadence;

    SolverState state;
    state.u = project(u0, band);
    const auto record = [&](const SolverState& s) {
        traj.snapshots.push_back(Snapshot{s.t, s.step_index, s.u});
        if (monitor) monitor(traj.snapshots.back());
    };
    record(state);
    const std::int64_t steps = policy.step_count();
    for (std::int64_t n = 0; n < steps; ++n) {
        state = stepper.step(state);
        if (state.step_index % cadence == 0) record(state);
    }
    return traj;
}

inline Trajectory integrate(const VectorField& u0, const LLBarParams& p, const ModeBand& band,
                            const IntegratorPolicy& policy, int cadence = 1,
                            const Monitor& monitor = {}) {
    return integrate(forward(u0), p, band, policy, cadence, monitor);
}

} // namespace llbar

#endif // LLBAR_INTEGRATOR_HPP
