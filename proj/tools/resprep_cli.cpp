#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "resprep/csv.hpp"
#include "resprep/errors.hpp"
#include "resprep/experiment.hpp"

using namespace resprep;

namespace {

/// Flags shared by every subcommand that runs something.
struct Common {
    std::string spec_path;
    std::string out;
    std::vector<std::string> overrides;
    std::optional<double> t_switch;
    std::optional<double> dx;
    std::optional<double> dt;
    bool quiet = false;
};

void add_common(CLI::App* app, Common& c, bool spec_required)
{
    auto* opt = app->add_option("spec", c.spec_path, "experiment spec (YAML)");
    if (spec_required) {
        opt->required()->check(CLI::ExistingFile);
    } else {
        opt->check(CLI::ExistingFile);
    }
    app->add_option("-o,--out", c.out, "output directory (overrides outputs.directory)");
    app->add_option("-s,--set", c.overrides, "override a spec field, e.g. --set numerics.dx=0.025");
    app->add_option("--t-switch", c.t_switch, "physics.t_switch in s");
    app->add_option("--dx", c.dx, "numerics.dx in um");
    app->add_option("--dt", c.dt, "numerics.dt in s");
    app->add_flag("-q,--quiet", c.quiet, "no progress output");
}

ExperimentSpec load(const Common& c)
{
    auto spec = c.spec_path.empty() ? ExperimentSpec{} : load_spec(c.spec_path);
    for (const auto& o : c.overrides) {
        spec = apply_override(spec, o);
    }
    if (c.t_switch) {
        spec.t_switch = *c.t_switch;
    }
    if (c.dx) {
        spec.numerics.dx = *c.dx;
    }
    if (c.dt) {
        spec.numerics.dt = *c.dt;
    }
    return spec;
}

int execute(const ExperimentSpec& spec, const Common& c)
{
    RunOptions options;
    options.output_directory = c.out;
    options.log = c.quiet ? nullptr : &std::cerr;
    const auto report = run_experiment(spec, options);
    report.write(std::cout);
    return report.all_passed() ? 0 : 1;
}

/// T in units of the final configuration's lifetime.
double lifetime(const ExperimentSpec& spec)
{
    const auto pole = lowest_resonance(spec.final, make_unit_system(spec.mass_amu));
    if (!pole) {
        throw Error("the final configuration has no resonance");
    }
    return pole->tau;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Bound-state-to-resonance release: poles, propagation and energy spectra"};
    app.require_subcommand(1);

    Common run_c;
    auto* run = app.add_subcommand("run", "run every experiment listed in the spec");
    add_common(run, run_c, true);

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "check a spec without running it");
    validate->add_option("spec", validate_path, "experiment spec (YAML)")->required();

    Common poles_c;
    auto* poles = app.add_subcommand("poles", "poles of both configurations");
    add_common(poles, poles_c, false);

    Common iso_c;
    std::vector<double> iso_targets;
    auto* iso = app.add_subcommand("isocurve", "iso-resonance curves");
    add_common(iso, iso_c, false);
    iso->add_option("--target", iso_targets, "resonance energies in s^-1");

    Common gs_c;
    auto* gs = app.add_subcommand("groundstate", "initial ground state on the grid");
    add_common(gs, gs_c, false);

    Common prop_c;
    std::vector<double> prop_t;
    double prop_end = 0.0;
    auto* prop = app.add_subcommand("propagate", "decay curves P_W(t)");
    add_common(prop, prop_c, false);
    prop->add_option("--t-over-tau", prop_t, "switching times in units of tau (default: physics.t_switch)");
    prop->add_option("--t-end", prop_end, "propagation end in s");

    Common spec_c;
    std::vector<double> spec_t;
    auto* spectrum = app.add_subcommand("spectrum", "energy distributions P(E)");
    add_common(spectrum, spec_c, false);
    spectrum->add_option("--t-over-tau", spec_t, "switching times in units of tau (default: physics.t_switch)");

    Common scan_c;
    std::string objective = "both";
    auto* scan = app.add_subcommand("scan-t", "optimal switching time");
    add_common(scan, scan_c, false);
    scan->add_option("--objective", objective, "lorentzian, exponential or both")
        ->check(CLI::IsMember({"lorentzian", "exponential", "both"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (*validate) {
            const auto diagnostics = validate_spec_file(validate_path);
            for (const auto& d : diagnostics) {
                std::cout << d.field << ": " << d.message << '\n';
            }
            if (diagnostics.empty()) {
                std::cout << "ok\n";
            }
            return diagnostics.empty() ? 0 : 1;
        }
        if (*run) {
            return execute(load(run_c), run_c);
        }
        if (*poles) {
            auto spec = load(poles_c);
            spec.experiments = {ExperimentKind::poles};
            return execute(spec, poles_c);
        }
        if (*iso) {
            auto spec = load(iso_c);
            spec.experiments = {ExperimentKind::iso_curves};
            if (!iso_targets.empty()) {
                spec.iso_curves.targets = iso_targets;
            }
            return execute(spec, iso_c);
        }
        if (*gs) {
            auto spec = load(gs_c);
            spec.experiments = {ExperimentKind::ground_state};
            return execute(spec, gs_c);
        }
        if (*prop) {
            auto spec = load(prop_c);
            spec.experiments = {ExperimentKind::decay_curves};
            if (prop_t.empty()) {
                prop_t = {spec.t_switch / lifetime(spec)};
            }
            const double t_min = spec.decay_curves.runs.empty() ? 0.5 : spec.decay_curves.runs.front().fit_t_min;
            spec.decay_curves.runs.clear();
            for (const double f : prop_t) {
                spec.decay_curves.runs.push_back({f, f >= 1.0 ? std::max(t_min, 2.0) : t_min});
            }
            if (prop_end > 0.0) {
                spec.decay_curves.t_end = prop_end;
            }
            return execute(spec, prop_c);
        }
        if (*spectrum) {
            auto spec = load(spec_c);
            spec.experiments = {ExperimentKind::spectrum_vs_t};
            if (spec_t.empty()) {
                spec_t = {spec.t_switch / lifetime(spec)};
            }
            spec.spectrum_vs_t.t_switch_over_tau = spec_t;
            return execute(spec, spec_c);
        }
        if (*scan) {
            auto spec = load(scan_c);
            spec.experiments = {ExperimentKind::t_scan};
            spec.t_scan.lorentzian = objective != "exponential";
            spec.t_scan.exponential = objective != "lorentzian";
            return execute(spec, scan_c);
        }
    } catch (const ParseError& e) {
        std::cerr << "parse error at line " << e.line() << ", column " << e.column() << ": " << e.what() << '\n';
        return 2;
    } catch (const StageError& e) {
        std::cerr << "error in stage " << e.stage() << ": " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
