#ifndef LLBAR_CONFIG_HPP
#define LLBAR_CONFIG_HPP

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "llbar/error.hpp"
#include "llbar/galerkin.hpp"
#include "llbar/integrator.hpp"
#include "llbar/random.hpp"
#include "llbar/snapshot.hpp"

namespace llbar {

enum class InitialKind { constant, eigenmode, random_band, file };

struct InitialSpec {
    InitialKind kind = InitialKind::constant;
    Vec3 value{1.0, 0.0, 0.0};
    Index3 mode{0, 0, 0};
    double amplitude = 1.0;
    Vec3 direction{1.0, 0.0, 0.0};
    double decay = 0.0;
    /// Modes drawn by random_band; defaults to the run band.
    std::optional<Index3> band;
    std::string path;
    /// Rescale so that ||u0||_Linf (padded grid) equals this.
    std::optional<double> normalize_linf;
    std::uint64_t seed = 1;
};

struct OutputSpec {
    std::string ledger;
    std::string snapshots;
    int cadence = 1;
};

struct RunConfig {
    GridSpec grid;
    ModeBand band;
    LLBarParams params;
    IntegratorPolicy integrator;
    InitialSpec initial;
    OutputSpec output;
};

namespace detail {

using Tree = boost::property_tree::ptree;

/// Collects every problem before reporting, one "section.key: message" per line.
class Issues {
public:
    void add(const std::string& where, const std::string& what) { items_.push_back(where + ": " + what); }
    bool empty() const { return items_.empty(); }
    [[noreturn]] void raise() const {
        std::string msg = "invalid configuration (" + std::to_string(items_.size()) + " problem" +
                          (items_.size() == 1 ? "" : "s") + ")";
        for (const auto& i : items_) msg += "\n  " + i;
        throw Error(ErrorCode::config, msg);
    }

private:
    std::vector<std::string> items_;
};

inline std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(text);
    while (std::getline(in, cur, ',')) {
        const auto b = cur.find_first_not_of(" \t");
        const auto e = cur.find_last_not_of(" \t");
        out.push_back(b == std::string::npos ? std::string() : cur.substr(b, e - b + 1));
    }
    return out;
}

inline std::optional<double> parse_real(const std::string& s) {
    if (s.empty()) return std::nullopt;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (*end != '\0' || !std::isfinite(v)) return std::nullopt;
    return v;
}

inline std::optional<long long> parse_int(const std::string& s) {
    if (s.empty()) return std::nullopt;
    char* end = nullptr;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (*end != '\0') return std::nullopt;
    return v;
}

/// Typed reader for one section that records unknown keys and bad values.
class Section {
public:
    Section(const Tree* tree, std::string name, Issues& issues, std::set<std::string> allowed)
        : tree_(tree), name_(std::move(name)), issues_(issues) {
        if (!tree_) return;
        for (const auto& [key, child] : *tree_) {
            if (!allowed.count(key)) issues_.add(name_ + "." + key, "unknown key");
            if (!child.empty()) issues_.add(name_ + "." + key, "nested values are not supported");
        }
    }

    bool present() const { return tree_ != nullptr; }
    bool has(const std::string& key) const { return tree_ && tree_->find(key) != tree_->not_found(); }
    std::string where(const std::string& key) const { return name_ + "." + key; }

    std::optional<std::string> text(const std::string& key) const {
        if (!has(key)) return std::nullopt;
        return tree_->get<std::string>(key);
    }

    std::optional<double> real(const std::string& key, bool required = false) const {
        const auto t = text(key);
        if (!t) {
            if (required) issues_.add(where(key), "missing required key");
            return std::nullopt;
        }
        const auto v = parse_real(*t);
        if (!v) issues_.add(where(key), "expected a finite decimal number, got '" + *t + "'");
        return v;
    }

    std::optional<long long> integer(const std::string& key, bool required = false) const {
        const auto t = text(key);
        if (!t) {
            if (required) issues_.add(where(key), "missing required key");
            return std::nullopt;
        }
        const auto v = parse_int(*t);
        if (!v) issues_.add(where(key), "expected an integer, got '" + *t + "'");
        return v;
    }

    std::optional<std::vector<double>> reals(const std::string& key, std::size_t min_n,
                                             std::size_t max_n) const {
        const auto t = text(key);
        if (!t) return std::nullopt;
        std::vector<double> out;
        for (const auto& item : split_list(*t)) {
            const auto v = parse_real(item);
            if (!v) {
                issues_.add(where(key), "bad list entry '" + item + "'");
                return std::nullopt;
            }
            out.push_back(*v);
        }
        if (out.size() < min_n || out.size() > max_n) {
            issues_.add(where(key), "expected " + std::to_string(min_n) +
                                        (min_n == max_n ? "" : ".." + std::to_string(max_n)) +
                                        " comma-separated values");
            return std::nullopt;
        }
        return out;
    }

    Issues& issues() const { return issues_; }

private:
    const Tree* tree_;
    std::string name_;
    Issues& issues_;
};

inline const Tree* child(const Tree& root, const std::string& name) {
    const auto it = root.find(name);
    return it == root.not_found() ? nullptr : &it->second;
}

/// Per-axis list: one value broadcasts to every axis, otherwise exactly dim values.
inline std::optional<std::array<double, 3>> axis_values(const Section& s, const std::string& key, int dim) {
    const auto v = s.reals(key, 1, 3);
    if (!v) return std::nullopt;
    if (v->size() != 1 && static_cast<int>(v->size()) != dim) {
        s.issues().add(s.where(key), "expected 1 or " + std::to_string(dim) + " values");
        return std::nullopt;
    }
    std::array<double, 3> out{};
    for (int j = 0; j < 3; ++j) out[j] = v->size() == 1 ? (*v)[0] : (j < dim ? (*v)[j] : 1.0);
    return out;
}

inline std::optional<Index3> axis_ints(const Section& s, const std::string& key, int dim) {
    const auto v = axis_values(s, key, dim);
    if (!v) return std::nullopt;
    Index3 out{1, 1, 1};
    for (int j = 0; j < dim; ++j) {
        if ((*v)[j] != std::floor((*v)[j]) || (*v)[j] < 1 || (*v)[j] > 1 << 20) {
            s.issues().add(s.where(key), "entries must be positive integers");
            return std::nullopt;
        }
        out[j] = static_cast<int>((*v)[j]);
    }
    return out;
}

inline std::optional<Vec3> vec3(const Section& s, const std::string& key) {
    const auto v = s.reals(key, 3, 3);
    if (!v) return std::nullopt;
    return Vec3{(*v)[0], (*v)[1], (*v)[2]};
}

inline std::string strip_hash_comments(const std::string& text) {
    std::istringstream in(text);
    std::string out, line;
    while (std::getline(in, line)) {
        const auto b = line.find_first_not_of(" \t");
        if (b != std::string::npos && line[b] == '#') line = ";" + line.substr(b + 1);
        out += line + "\n";
    }
    return out;
}

} // namespace detail

/// Applies "section.key=value" overrides to INI text before validation.
inline std::string apply_overrides(const std::string& text, const std::vector<std::string>& overrides);

/// Parses flat INI text with sections [grid], [params], [integrator],
/// [initial] and the optional [output]; every problem is reported with its
/// section and key in a single Error(config).
inline RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides = {}) {
    detail::Tree root;
    try {
        std::istringstream in(detail::strip_hash_comments(text));
        boost::property_tree::ini_parser::read_ini(in, root);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw Error(ErrorCode::config, std::string("config syntax: ") + e.what());
    }
    for (const auto& ov : overrides) {
        const auto eq = ov.find('=');
        const auto dot = ov.find('.');
        if (eq == std::string::npos || dot == std::string::npos || dot > eq || dot == 0 || dot + 1 == eq)
            throw Error(ErrorCode::config, "override '" + ov + "': expected section.key=value");
        const std::string section = ov.substr(0, dot);
        const std::string key = ov.substr(dot + 1, eq - dot - 1);
        detail::Tree* sec = nullptr;
        auto it = root.find(section);
        if (it == root.not_found()) sec = &root.push_back({section, detail::Tree()})->second;
        else sec = &it->second;
        sec->put(detail::Tree::path_type(key, '\0'), ov.substr(eq + 1));
    }

    detail::Issues issues;
    for (const auto& [name, sec] : root) {
        static const std::set<std::string> known{"grid", "params", "integrator", "initial", "output"};
        if (!known.count(name)) issues.add(name, "unknown section");
        if (sec.empty() && !sec.data().empty()) issues.add(name, "key outside of any section");
    }
    for (const char* required : {"grid", "params", "integrator", "initial"})
        if (!detail::child(root, required)) issues.add(required, "missing section");

    RunConfig cfg;

    // [grid]
    const detail::Section grid(detail::child(root, "grid"), "grid", issues, {"dim", "N", "L", "dealias_pad", "modes"});
    if (grid.present()) {
        const auto dim = grid.integer("dim", true);
        if (dim && (*dim < 1 || *dim > 3)) issues.add("grid.dim", "must be 1, 2 or 3");
        const int d = dim && *dim >= 1 && *dim <= 3 ? static_cast<int>(*dim) : 1;
        if (!grid.has("N")) issues.add("grid.N", "missing required key");
        const auto n = detail::axis_ints(grid, "N", d);
        const auto len = grid.has("L") ? detail::axis_values(grid, "L", d) : std::array<double, 3>{1.0, 1.0, 1.0};
        const auto pad = grid.integer("dealias_pad");
        if (pad && *pad < 1) issues.add("grid.dealias_pad", "must be >= 1");
        if (n && len) {
            for (int j = 0; j < d; ++j) {
                if ((*n)[j] < 4) issues.add("grid.N", "axis " + std::to_string(j) + " has N < 4");
                if (!((*len)[j] > 0.0)) issues.add("grid.L", "axis " + std::to_string(j) + " must be positive");
            }
            cfg.grid.dim = d;
            cfg.grid.points = *n;
            cfg.grid.extents = *len;
            cfg.grid.dealias_pad = pad && *pad >= 1 ? static_cast<int>(*pad) : 2;
            cfg.band = ModeBand{cfg.grid.points};
            if (grid.has("modes")) {
                if (const auto m = detail::axis_ints(grid, "modes", d)) {
                    for (int j = 0; j < d; ++j)
                        if ((*m)[j] > (*n)[j]) issues.add("grid.modes", "exceeds N on axis " + std::to_string(j));
                    cfg.band = ModeBand{*m};
                }
            }
        }
    }

    // [params]
    const detail::Section params(detail::child(root, "params"), "params", issues,
                                 {"beta1", "beta2", "beta3", "beta4", "beta5", "lambda_r", "lambda_e", "chi", "gamma"});
    if (params.present()) {
        const bool any_beta = params.has("beta1") || params.has("beta2") || params.has("beta3") ||
                              params.has("beta4") || params.has("beta5");
        const bool any_phys = params.has("lambda_r") || params.has("lambda_e") || params.has("chi") ||
                              params.has("gamma");
        if (any_beta && any_phys) {
            issues.add("params", "exactly one of {beta1..beta5} or {lambda_r, lambda_e, chi, gamma} must be given");
        } else if (!any_beta && !any_phys) {
            issues.add("params", "exactly one of {beta1..beta5} or {lambda_r, lambda_e, chi, gamma} must be given");
        } else if (any_beta) {
            const auto b1 = params.real("beta1", true);
            const auto b2 = params.real("beta2", true);
            const auto b3 = params.real("beta3", true);
            const auto b4 = params.real("beta4", true);
            const auto b5 = params.real("beta5", true);
            if (b1) cfg.params.beta1 = *b1;
            if (b2) cfg.params.beta2 = *b2;
            if (b3) cfg.params.beta3 = *b3;
            if (b4) cfg.params.beta4 = *b4;
            if (b5) cfg.params.beta5 = *b5;
            const std::pair<const char*, std::optional<double>> pos[] = {
                {"params.beta2", b2}, {"params.beta3", b3}, {"params.beta4", b4}, {"params.beta5", b5}};
            for (const auto& [key, v] : pos)
                if (v && !(*v >= 0.0)) issues.add(key, "must be non-negative");
        } else {
            PhysicalInputs in;
            const auto lr = params.real("lambda_r", true);
            const auto le = params.real("lambda_e", true);
            const auto chi = params.real("chi", true);
            const auto gamma = params.real("gamma");
            bool ok = lr && le && chi;
            const std::pair<const char*, std::optional<double>> pos[] = {
                {"params.lambda_r", lr}, {"params.lambda_e", le}, {"params.chi", chi}, {"params.gamma", gamma}};
            for (const auto& [key, v] : pos)
                if (v && !(*v > 0.0)) {
                    issues.add(key, "must be positive");
                    ok = false;
                }
            if (ok) {
                in.lambda_r = *lr;
                in.lambda_e = *le;
                in.chi = *chi;
                in.gamma = gamma.value_or(1.0);
                cfg.params = LLBarParams::from_physical(in);
            }
        }
    }

    // [integrator]
    const detail::Section integ(detail::child(root, "integrator"), "integrator", issues,
                                {"scheme", "dt", "t_end", "max_steps", "blowup_threshold"});
    if (integ.present()) {
        if (const auto s = integ.text("scheme")) {
            if (const auto sc = parse_scheme(*s)) cfg.integrator.scheme = *sc;
            else issues.add("integrator.scheme", "expected ETDRK2, IMEX-CNAB2 or IMEX-Euler, got '" + *s + "'");
        }
        const auto dt = integ.real("dt", true);
        const auto tend = integ.real("t_end", true);
        const auto ms = integ.integer("max_steps");
        const auto bt = integ.real("blowup_threshold");
        if (dt) {
            if (*dt > 0.0) cfg.integrator.dt = *dt;
            else issues.add("integrator.dt", "must be positive");
        }
        if (tend) {
            if (*tend >= 0.0) cfg.integrator.t_end = *tend;
            else issues.add("integrator.t_end", "must be >= 0");
        }
        if (ms) {
            if (*ms >= 1) cfg.integrator.max_steps = *ms;
            else issues.add("integrator.max_steps", "must be positive");
        }
        if (bt) {
            if (*bt > 0.0) cfg.integrator.blowup_threshold = *bt;
            else issues.add("integrator.blowup_threshold", "must be positive");
        }
        if (dt && tend && *dt > 0.0 && *tend >= 0.0) {
            const double ratio = *tend / *dt;
            if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio))
                issues.add("integrator.t_end", "must be an integer multiple of dt");
        }
    }

    // [initial]
    const detail::Section init(detail::child(root, "initial"), "initial", issues,
                               {"kind", "value", "mode", "amplitude", "direction", "decay", "band", "path",
                                "normalize_linf", "seed"});
    if (init.present()) {
        InitialSpec& is = cfg.initial;
        const auto kind = init.text("kind");
        if (!kind) issues.add("initial.kind", "missing required key");
        else if (*kind == "constant") is.kind = InitialKind::constant;
        else if (*kind == "eigenmode") is.kind = InitialKind::eigenmode;
        else if (*kind == "random_band") is.kind = InitialKind::random_band;
        else if (*kind == "file") is.kind = InitialKind::file;
        else issues.add("initial.kind", "expected constant, eigenmode, random_band or file, got '" + *kind + "'");
        const int d = cfg.grid.dim;
        if (is.kind == InitialKind::constant && kind) {
            if (!init.has("value")) issues.add("initial.value", "missing required key for kind=constant");
            if (const auto v = detail::vec3(init, "value")) is.value = *v;
        }
        if (is.kind == InitialKind::eigenmode && kind) {
            if (!init.has("mode")) issues.add("initial.mode", "missing required key for kind=eigenmode");
            if (const auto v = init.reals("mode", static_cast<std::size_t>(d), static_cast<std::size_t>(d))) {
                for (int j = 0; j < d; ++j) {
                    if ((*v)[j] < 0 || (*v)[j] != std::floor((*v)[j])) issues.add("initial.mode", "entries must be non-negative integers");
                    is.mode[j] = static_cast<int>((*v)[j]);
                    if (is.mode[j] >= cfg.band.modes[j]) issues.add("initial.mode", "outside the retained band");
                }
            }
            if (const auto v = detail::vec3(init, "direction")) is.direction = *v;
        }
        if (const auto a = init.real("amplitude")) is.amplitude = *a;
        if (is.kind == InitialKind::random_band && kind) {
            if (const auto p = init.real("decay")) {
                if (*p >= 0.0) is.decay = *p;
                else issues.add("initial.decay", "must be >= 0");
            }
            if (init.has("band")) {
                if (const auto b = detail::axis_ints(init, "band", d)) {
                    for (int j = 0; j < d; ++j)
                        if ((*b)[j] > cfg.grid.points[j]) issues.add("initial.band", "exceeds N on axis " + std::to_string(j));
                    is.band = *b;
                }
            }
            if (!(is.amplitude > 0.0)) issues.add("initial.amplitude", "must be positive");
        }
        if (is.kind == InitialKind::file && kind) {
            const auto p = init.text("path");
            if (!p || p->empty()) issues.add("initial.path", "missing required key for kind=file");
            else is.path = *p;
        }
        if (const auto nl = init.real("normalize_linf")) {
            if (*nl > 0.0) is.normalize_linf = *nl;
            else issues.add("initial.normalize_linf", "must be positive");
        }
        if (const auto s = init.text("seed")) {
            char* end = nullptr;
            const unsigned long long v = std::strtoull(s->c_str(), &end, 10);
            if (s->empty() || *end != '\0' || (*s)[0] == '-') issues.add("initial.seed", "expected an unsigned 64-bit integer");
            else is.seed = v;
        }
    }

    // [output]
    const detail::Section out(detail::child(root, "output"), "output", issues, {"ledger", "snapshots", "cadence"});
    if (out.present()) {
        if (const auto l = out.text("ledger")) cfg.output.ledger = *l;
        if (const auto s = out.text("snapshots")) cfg.output.snapshots = *s;
        if (const auto c = out.integer("cadence")) {
            if (*c >= 1) cfg.output.cadence = static_cast<int>(*c);
            else issues.add("output.cadence", "must be >= 1");
        }
    }

    if (!issues.empty()) issues.raise();
    return cfg;
}

inline RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, path + ": cannot open config");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), overrides);
}

/// Builds u0 in the run band from the initial-condition spec.
inline SpectralField make_initial(const RunConfig& cfg) {
    const GridSpec& g = cfg.grid;
    const InitialSpec& is = cfg.initial;
    SpectralField u(g, cfg.band.modes);
    switch (is.kind) {
    case InitialKind::constant: {
        // The constant is sqrt(volume) times the k=0 coefficient.
        double* c = u.at(0);
        const double s = std::sqrt(g.volume());
        for (int i = 0; i < 3; ++i) c[i] = s * is.value[i];
        break;
    }
    case InitialKind::eigenmode: {
        double* c = u.at(u.flat_index(is.mode));
        for (int i = 0; i < 3; ++i) c[i] = is.amplitude * is.direction[i];
        break;
    }
    case InitialKind::random_band: {
        Index3 band = is.band.value_or(cfg.band.modes);
        for (int j = g.dim; j < 3; ++j) band[j] = 1;
        const SpectralField r = random_spectral(g, band, is.decay, is.amplitude, stream_key(is.seed, 0));
        u = project(resize_modes(r, cfg.band.modes), cfg.band);
        break;
    }
    case InitialKind::file: {
        const VectorField f = read_snapshot(is.path, g.dealias_pad);
        if (!(f.grid == g))
            throw Error(ErrorCode::config, "initial.path: snapshot grid does not match the configured grid");
        u = project(forward(f, cfg.band.modes), cfg.band);
        break;
    }
    }
    if (is.normalize_linf) {
        const double sup = norm_linf(evaluate(u, g.padded()));
        if (!(sup > 0.0)) throw Error(ErrorCode::config, "initial.normalize_linf: initial field is zero");
        u *= *is.normalize_linf / sup;
    }
    return u;
}

} // namespace llbar

#endif // LLBAR_CONFIG_HPP
