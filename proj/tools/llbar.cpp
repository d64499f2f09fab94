// llbar command-line driver.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "llbar/llbar.hpp"

namespace {

using namespace llbar;

std::vector<int> parse_int_list(const std::string& text, const char* flag) {
    std::vector<int> out;
    for (const auto& item : detail::split_list(text)) {
        const auto v = detail::parse_int(item);
        if (!v || *v < 1 || *v > 1 << 20) throw Error(ErrorCode::invalid_argument, std::string(flag) + ": bad entry '" + item + "'");
        out.push_back(static_cast<int>(*v));
    }
    return out;
}

std::vector<double> parse_real_list(const std::string& text, const char* flag) {
    std::vector<double> out;
    for (const auto& item : detail::split_list(text)) {
        const auto v = detail::parse_real(item);
        if (!v) throw Error(ErrorCode::invalid_argument, std::string(flag) + ": bad entry '" + item + "'");
        out.push_back(*v);
    }
    return out;
}

void write_text(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::io, path + ": cannot open for writing");
    out << body;
    out.flush();
    if (!out) throw Error(ErrorCode::io, path + ": write failed");
}

/// Prints the report, writes the optional CSV and turns failures into exit 4.
int finish(const HarnessReport& rep, const std::string& report_path) {
    std::cout << rep.text();
    if (!report_path.empty()) write_text(report_path, rep.csv);
    if (!rep.pass()) throw Error(ErrorCode::assertion, rep.title + ": " + rep.failures());
    return 0;
}

int dispatch(int argc, char** argv) {
    CLI::App app{"Galerkin solver and estimate checks for the Landau-Lifshitz-Baryakhtar equation"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    std::string config_path;
    std::vector<std::string> overrides;
    std::string report_path;
    const auto add_config = [&](CLI::App* sub) {
        sub->add_option("config", config_path, "INI run configuration")->required();
        sub->add_option("--override", overrides, "section.key=value, applied before validation");
    };

    CLI::App* run_cmd = app.add_subcommand("run", "Integrate a configuration, writing ledger and snapshots");
    add_config(run_cmd);

    CLI::App* ident = app.add_subcommand("verify-identities", "Balance laws, weak form and a priori monitors");
    add_config(ident);

    CLI::App* ineq = app.add_subcommand("verify-inequalities", "Randomized inequality checks");
    add_config(ineq);
    std::string ineq_bands = "8,16,32";
    int ineq_count = 200;
    double ineq_stability = 1.05;
    ineq->add_option("--bands", ineq_bands, "comma-separated band sizes");
    ineq->add_option("--count", ineq_count, "samples per band and inequality");
    ineq->add_option("--stability", ineq_stability, "allowed max/min of empirical constants across bands");
    ineq->add_option("--report", report_path, "ratio CSV output");

    CLI::App* conv = app.add_subcommand("converge", "Band-doubling self-convergence");
    add_config(conv);
    std::string conv_bands = "8,16,32";
    std::optional<double> conv_tend;
    double conv_factor = 10.0;
    conv->add_option("--bands", conv_bands, "comma-separated increasing band sizes");
    conv->add_option("--tend", conv_tend, "final time (overrides integrator.t_end)");
    conv->add_option("--factor", conv_factor, "required reduction per band doubling");
    conv->add_option("--report", report_path, "CSV output");

    CLI::App* hold = app.add_subcommand("holder", "Hölder quotient and its refinement stability");
    add_config(hold);
    double hold_exponent = 0.5;
    std::string hold_norm = "L2";
    hold->add_option("--exponent", hold_exponent, "exponent in (0,1)");
    hold->add_option("--norm", hold_norm, "L2 or Linf")->check(CLI::IsMember({"L2", "Linf"}));
    hold->add_option("--report", report_path, "CSV output");

    CLI::App* dep = app.add_subcommand("depend", "Continuous dependence on initial data");
    add_config(dep);
    std::string dep_deltas = "1e-3,1e-4,1e-5";
    dep->add_option("--delta", dep_deltas, "comma-separated perturbation sizes");
    dep->add_option("--report", report_path, "CSV output");

    CLI::App* ts = app.add_subcommand("tstar", "Bihari existence horizon for f(x) = x^5");
    double y0 = 1.0, c = 0.0;
    ts->add_option("--y0", y0, "initial value, > 0")->required();
    ts->add_option("--c", c, "constant forcing, >= 0");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        throw Error(ErrorCode::invalid_argument, e.what());
    }

    if (ts->parsed()) {
        std::printf("%.17g\n", bihari_tstar(y0, c));
        return 0;
    }

    RunConfig cfg = load_config(config_path, overrides);

    if (run_cmd->parsed()) {
        const RunResult r = run(cfg);
        std::cout << "steps = " << r.trajectory.snapshots.back().step << "\n"
                  << describe_norms(norms(r.trajectory.final_state(), r.trajectory.snapshots.back().t));
        return 0;
    }
    if (ident->parsed()) return finish(verify_identities(cfg), "");
    if (ineq->parsed()) {
        InequalityOptions opt;
        opt.bands = parse_int_list(ineq_bands, "--bands");
        opt.count = ineq_count;
        opt.seed = cfg.initial.seed;
        opt.decay = cfg.initial.decay;
        opt.stability = ineq_stability;
        return finish(verify_inequalities(cfg.grid, opt), report_path);
    }
    if (conv->parsed()) {
        if (conv_tend) {
            if (!(*conv_tend >= 0.0)) throw Error(ErrorCode::invalid_argument, "--tend: must be >= 0");
            cfg.integrator.t_end = *conv_tend;
        }
        return finish(converge(cfg, parse_int_list(conv_bands, "--bands"), conv_factor), report_path);
    }
    if (hold->parsed())
        return finish(holder(cfg, hold_exponent, hold_norm == "L2" ? HolderNorm::L2 : HolderNorm::Linf), report_path);
    if (dep->parsed()) return finish(depend(cfg, parse_real_list(dep_deltas, "--delta")), report_path);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const llbar::Error& e) {
        std::string what = e.what();
        // Keep the first line machine-parsable; itemized detail follows.
        const auto nl = what.find('\n');
        std::cerr << "llbar-error " << llbar::error_code_name(e.code()) << ": " << what.substr(0, nl) << "\n";
        if (nl != std::string::npos) std::cerr << what.substr(nl + 1) << "\n";
        // Argument errors share the configuration exit status.
        return e.code() == llbar::ErrorCode::invalid_argument ? static_cast<int>(llbar::ErrorCode::config)
                                                              : static_cast<int>(e.code());
    } catch (const std::exception& e) {
        std::cerr << "llbar-error " << llbar::error_code_name(llbar::ErrorCode::assertion) << ": " << e.what() << "\n";
        return static_cast<int>(llbar::ErrorCode::assertion);
    }
}
