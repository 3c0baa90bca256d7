#include "resprep/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <optional>
#include <ostream>

#include "resprep/csv.hpp"
#include "resprep/errors.hpp"

namespace resprep {

namespace {

namespace fs = std::filesystem;

std::string label(double t_over_tau)
{
    return "T" + format_number(t_over_tau) + "tau";
}

double relative_error(double value, double reference)
{
    return std::abs(value - reference) / std::abs(reference);
}

/// State of one run: output directory, report and the lazily built
/// pipeline shared by the propagation experiments.
class Runner {
public:
    Runner(const ExperimentSpec& spec, fs::path dir, std::ostream* log)
        : spec_(spec), dir_(std::move(dir)), log_(log), unit_(make_unit_system(spec.mass_amu))
    {
        report_.spec_name = spec.name;
        report_.config_hash = config_hash(spec);
    }

    RunReport finish() { return std::move(report_); }

    void run(ExperimentKind kind)
    {
        const auto name = to_string(kind);
        say("running " + name);
        try {
            switch (kind) {
            case ExperimentKind::poles: poles(); break;
            case ExperimentKind::ground_state: ground_state_experiment(); break;
            case ExperimentKind::delay_spectrum: delay_spectrum(); break;
            case ExperimentKind::iso_curves: iso_curves(); break;
            case ExperimentKind::decay_curves: decay_curves(); break;
            case ExperimentKind::spectrum_vs_t: spectrum_vs_t(); break;
            case ExperimentKind::t_scan: t_scan(); break;
            }
        } catch (const StageError&) {
            throw;
        } catch (const Error& e) {
            throw StageError(name, e.what());
        }
    }

private:
    void say(const std::string& message)
    {
        if (log_) {
            *log_ << message << std::endl;
        }
    }

    const Pipeline& pipeline()
    {
        if (!pipeline_) {
            pipeline_ = make_pipeline(spec_.initial, spec_.final, unit_, spec_.numerics);
        }
        return *pipeline_;
    }

    /// Writes the table and returns its path relative to the output root.
    std::string write(const std::string& rel, CsvTable& table)
    {
        table.add_meta("spec", spec_.name);
        table.add_meta("config_hash", report_.config_hash);
        table.add_meta("code_version", code_version());
        const auto path = dir_ / rel;
        fs::create_directories(path.parent_path());
        std::ofstream out(path);
        table.write(out);
        if (!out) {
            throw Error("cannot write " + path.string());
        }
        report_.files.push_back(rel);
        return rel;
    }

    void write_text(const std::string& rel, const std::string& text)
    {
        const auto path = dir_ / rel;
        fs::create_directories(path.parent_path());
        std::ofstream out(path);
        out << text;
        report_.files.push_back(rel);
    }

    static std::string cite(const std::string& rel, const std::string& column, std::size_t row)
    {
        return rel + ":" + column + ":" + std::to_string(row + 1);
    }

    /// Reports a cell of a written table and returns it.
    double value(const std::string& key, const std::string& rel, const CsvTable& table, const std::string& column,
                 std::size_t row)
    {
        const double v = table.number(column, row);
        report_.values.push_back({key, v, cite(rel, column, row)});
        return v;
    }

    void check(const std::string& name, bool pass, double v, const std::string& rule, const std::string& citation)
    {
        report_.checks.push_back({name, pass, v, rule, citation});
        say(std::string("  ") + (pass ? "pass " : "FAIL ") + name);
    }

    static std::string plot_header(const std::string& title)
    {
        return "# gnuplot script: " + title +
               "\nset datafile separator ','\nset key autotitle columnhead\nset grid\n";
    }

    // -- experiments -------------------------------------------------------

    void poles()
    {
        const double k_top = 1.2;
        const SearchRegion region{1e-4, k_top, -0.2, 0.01 * k_top};
        const auto final_poles = find_poles(spec_.final, unit_, region);
        const auto bound = find_bound_states(spec_.initial, unit_);
        const auto final_bound = find_bound_states(spec_.final, unit_);

        std::vector<std::string> config, kind;
        std::vector<double> k1, k2, e_r, gamma, tau;
        const auto add = [&](const std::string& which, const Resonance& r) {
            config.push_back(which);
            kind.push_back(to_string(r.kind));
            k1.push_back(r.k_res.real());
            k2.push_back(r.k_res.imag());
            e_r.push_back(r.e_r);
            gamma.push_back(r.gamma);
            tau.push_back(r.tau);
        };
        for (const auto& r : bound) {
            add("initial", r);
        }
        for (const auto& r : final_bound) {
            add("final", r);
        }
        std::optional<std::size_t> lowest;
        for (const auto& r : final_poles) {
            if (r.kind == PoleKind::resonance && r.e_r > 0.0 && !lowest) {
                lowest = config.size();
            }
            add("final", r);
        }
        CsvTable table("poles");
        table.add_text_column("config", config);
        table.add_text_column("kind", kind);
        table.add_column("k1", "um^-1", k1);
        table.add_column("k2", "um^-1", k2);
        table.add_column("e_r", "s^-1", e_r);
        table.add_column("gamma", "s^-1", gamma);
        table.add_column("tau", "s", tau);
        const auto rel = write("poles/poles.csv", table);
        write_text("poles/poles.gp", plot_header("poles of the final configuration in the k plane") +
                                         "set xlabel 'Re k [um^-1]'\nset ylabel 'Im k [um^-1]'\n"
                                         "plot 'poles.csv' using 3:4 with points pt 7 title 'poles'\n");

        check("poles.initial_single_bound_state", bound.size() == 1, static_cast<double>(bound.size()), "== 1",
              rel + ":kind");
        check("poles.final_no_bound_state", final_bound.empty(), static_cast<double>(final_bound.size()), "== 0",
              rel + ":kind");
        if (!bound.empty()) {
            value("initial.bound_e0", rel, table, "e_r", 0);
        }
        if (!lowest) {
            check("poles.resonance_found", false, 0.0, ">= 1 resonance in the region", rel);
            return;
        }
        const std::size_t row = *lowest;
        value("pole.k1", rel, table, "k1", row);
        value("pole.k2", rel, table, "k2", row);
        const double er = value("pole.e_r", rel, table, "e_r", row);
        const double g = value("pole.gamma", rel, table, "gamma", row);
        const double t = value("pole.tau", rel, table, "tau", row);
        const auto& ref = spec_.reference;
        const std::string tol = "<= " + format_number(ref.pole_tolerance);
        if (ref.e_r) {
            const double err = relative_error(er, *ref.e_r);
            check("poles.e_r_vs_reference", err <= ref.pole_tolerance, err, tol, cite(rel, "e_r", row));
        }
        if (ref.gamma) {
            // Per component of E_res = E_R - i Gamma/2.
            const double err = relative_error(g, *ref.gamma);
            check("poles.gamma_vs_reference", err <= ref.pole_tolerance, err, tol, cite(rel, "gamma", row));
        }
        if (ref.tau) {
            const double err = relative_error(t, *ref.tau);
            check("poles.tau_vs_reference", err <= ref.tau_tolerance, err, "<= " + format_number(ref.tau_tolerance),
                  cite(rel, "tau", row));
        }
    }

    void ground_state_experiment()
    {
        GroundStateOptions options;
        options.dx = spec_.numerics.dx;
        const auto gs = ground_state(spec_.initial, unit_, options);
        const auto& psi = gs.wavefunction;
        std::vector<double> x(psi.size()), re(psi.size()), im(psi.size()), density(psi.size());
        for (std::size_t j = 0; j < psi.size(); ++j) {
            x[j] = psi.x(j);
            re[j] = psi.values[j].real();
            im[j] = psi.values[j].imag();
            density[j] = std::norm(psi.values[j]);
        }
        CsvTable wave("ground-state wavefunction");
        wave.add_column("x", "um", x);
        wave.add_column("re_psi", "um^-1/2", re);
        wave.add_column("im_psi", "um^-1/2", im);
        wave.add_column("density", "um^-1", density);
        write("ground-state/wavefunction.csv", wave);

        CsvTable summary("ground-state summary");
        summary.add_column("e0", "s^-1", {gs.energy});
        summary.add_column("big_k", "um^-1", {gs.pole.k_res.imag()});
        summary.add_column("p_w0", "1", {non_escape_probability(psi, spec_.initial.d)});
        summary.add_column("norm", "1", {psi.norm()});
        summary.add_column("truncation_point", "um", {gs.truncation_point});
        summary.add_column("eigen_residual", "1", {eigen_residual(spec_.initial, unit_, psi, gs.energy)});
        const auto rel = write("ground-state/summary.csv", summary);
        write_text("ground-state/wavefunction.gp",
                   plot_header("initial ground state") +
                       "set xlabel 'x [um]'\nset ylabel '|psi|^2 [um^-1]'\nset logscale y\n"
                       "plot 'wavefunction.csv' using 1:4 with lines title '|psi|^2'\n");

        value("ground.e0", rel, summary, "e0", 0);
        const double pw = value("ground.p_w0", rel, summary, "p_w0", 0);
        const double norm = value("ground.norm", rel, summary, "norm", 0);
        value("ground.truncation_point", rel, summary, "truncation_point", 0);
        const double residual = value("ground.eigen_residual", rel, summary, "eigen_residual", 0);
        check("ground.norm", std::abs(norm - 1.0) <= 1e-10, std::abs(norm - 1.0), "<= 1e-10", cite(rel, "norm", 0));
        check("ground.p_w0_localized", pw > 0.5 && pw < 1.0, pw, "in (0.5, 1)", cite(rel, "p_w0", 0));
        check("ground.eigen_residual", residual < 1e-4, residual, "< 1e-4", cite(rel, "eigen_residual", 0));
    }

    void delay_spectrum()
    {
        const auto pole = lowest_resonance(spec_.final, unit_);
        if (!pole) {
            throw Error("no resonance in the final configuration");
        }
        const auto& s = spec_.delay_spectrum;
        const double lo = std::max(pole->e_r - s.half_width * pole->gamma, 1e-3 * pole->e_r);
        const double hi = pole->e_r + s.half_width * pole->gamma;
        const auto n = static_cast<std::size_t>(s.points);
        std::vector<double> e(n), k(n), delay(n);
        for (std::size_t i = 0; i < n; ++i) {
            e[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
            k[i] = unit_.wave_number(e[i]);
            delay[i] = delay_time(spec_.final, unit_, k[i]);
        }
        const auto delta = phase_shift_curve(spec_.final, unit_, k);
        CsvTable table("delay spectrum");
        table.add_column("e", "s^-1", e);
        table.add_column("k", "um^-1", k);
        table.add_column("delta", "rad", delta);
        table.add_column("delay", "s", delay);
        const auto rel = write("delay-spectrum/delay.csv", table);

        // The non-resonant phase adds a nearly constant (negative) delay.
        const auto fit = fit_lorentzian(e, delay, lo, hi, true);
        const double raw_rise = delta.back() - delta.front();
        const double resonant_rise = raw_rise - 0.5 * fit.background * (hi - lo);
        CsvTable fits("delay Lorentzian fit");
        fits.add_column("fit_e_r", "s^-1", {fit.e_r});
        fits.add_column("fit_gamma", "s^-1", {fit.gamma});
        fits.add_column("fit_amplitude", "s", {fit.amplitude});
        fits.add_column("fit_background", "s", {fit.background});
        fits.add_column("fit_iterations", "1", {static_cast<double>(fit.iterations)});
        fits.add_column("pole_e_r", "s^-1", {pole->e_r});
        fits.add_column("pole_gamma", "s^-1", {pole->gamma});
        fits.add_column("breit_wigner_peak", "s", {4.0 / pole->gamma});
        fits.add_column("phase_rise", "rad", {raw_rise});
        fits.add_column("resonant_phase_rise", "rad", {resonant_rise});
        const auto frel = write("delay-spectrum/fit.csv", fits);
        write_text("delay-spectrum/delay.gp",
                   plot_header("Wigner delay time around the resonance") +
                       "set xlabel 'E [s^-1]'\nset ylabel 'delay [s]'\n"
                       "plot 'delay.csv' using 1:4 with lines title 'delay time'\n");

        const double fe = value("delay.fit_e_r", frel, fits, "fit_e_r", 0);
        const double fg = value("delay.fit_gamma", frel, fits, "fit_gamma", 0);
        const double amp = value("delay.fit_amplitude", frel, fits, "fit_amplitude", 0);
        const double pe = value("delay.pole_e_r", frel, fits, "pole_e_r", 0);
        const double pg = value("delay.pole_gamma", frel, fits, "pole_gamma", 0);
        const double bw = value("delay.breit_wigner_peak", frel, fits, "breit_wigner_peak", 0);
        value("delay.fit_background", frel, fits, "fit_background", 0);
        value("delay.phase_rise", frel, fits, "phase_rise", 0);
        const double rise = value("delay.resonant_phase_rise", frel, fits, "resonant_phase_rise", 0);
        check("delay.fit_e_r_vs_pole", relative_error(fe, pe) <= 0.02, relative_error(fe, pe), "<= 0.02",
              cite(frel, "fit_e_r", 0));
        check("delay.fit_gamma_vs_pole", relative_error(fg, pg) <= 0.02, relative_error(fg, pg), "<= 0.02",
              cite(frel, "fit_gamma", 0));
        check("delay.peak_vs_4_over_gamma", relative_error(amp, bw) <= 0.05, relative_error(amp, bw), "<= 0.05",
              cite(frel, "fit_amplitude", 0));
        const double rise_pi = rise / std::numbers::pi;
        check("delay.resonant_phase_rise_pi", rise_pi > 0.8 && rise_pi < 1.2, rise_pi, "in (0.8, 1.2) pi",
              cite(frel, "resonant_phase_rise", 0));
        (void)rel;
    }

    void iso_curves()
    {
        const auto& s = spec_.iso_curves;
        IsoCurveOptions options;
        options.steps = s.steps;
        std::string plot = plot_header("iso-resonance curves") +
                           "set multiplot layout 2,1\nset xlabel 'V_w [s^-1]'\nset ylabel 'V_b [s^-1]'\nplot ";
        std::string gamma_plot = "set ylabel 'Gamma [s^-1]'\nset logscale y\nplot ";
        for (std::size_t c = 0; c < s.targets.size(); ++c) {
            const double target = s.targets[c];
            const auto curve = trace_iso_resonance(target, s.v_well_min, s.v_well_max, unit_, spec_.final.d,
                                                   spec_.final.b, options);
            const std::size_t n = curve.points.size();
            std::vector<double> vw(n), vb(n), er(n), g(n), verified(n), err(n);
            for (std::size_t i = 0; i < n; ++i) {
                const auto& p = curve.points[i];
                vw[i] = p.v_well;
                vb[i] = p.v_barrier;
                er[i] = p.pole.e_r;
                g[i] = p.pole.gamma;
                const auto check_pole =
                    lowest_resonance({p.v_well, p.v_barrier, spec_.final.d, spec_.final.b}, unit_);
                verified[i] = check_pole ? check_pole->e_r : std::nan("");
                err[i] = check_pole ? relative_error(verified[i], target) : 1.0;
            }
            CsvTable table("iso-resonance curve E_R = " + format_number(target));
            table.add_meta("target_e_r", format_number(target) + " s^-1");
            table.add_meta("truncated", curve.truncated ? "yes: " + curve.diagnostic : "no");
            table.add_column("v_well", "s^-1", vw);
            table.add_column("v_barrier", "s^-1", vb);
            table.add_column("e_r", "s^-1", er);
            table.add_column("gamma", "s^-1", g);
            table.add_column("verified_e_r", "s^-1", verified);
            table.add_column("relative_error", "1", err);
            const std::string file = "iso_" + format_number(target) + ".csv";
            const auto rel = write("iso-curves/" + file, table);
            plot += std::string(c ? ", " : "") + "'" + file + "' using 1:2 with lines title 'E_R = " +
                    format_number(target) + "'";
            gamma_plot += std::string(c ? ", " : "") + "'" + file + "' using 1:4 with lines title 'E_R = " +
                          format_number(target) + "'";

            const std::string key = "iso." + format_number(target);
            check(key + ".complete", !curve.truncated && n >= 3, static_cast<double>(n),
                  curve.truncated ? "not truncated (" + curve.diagnostic + ")" : "not truncated", rel);
            if (n < 3) {
                continue;
            }
            const auto worst = static_cast<std::size_t>(std::max_element(err.begin(), err.end()) - err.begin());
            check(key + ".reverified", err[worst] <= 1e-3, err[worst], "<= 1e-3 at every point",
                  cite(rel, "relative_error", worst));
            // Shallow third of the V_w range.
            const double cut = s.v_well_min + (s.v_well_max - s.v_well_min) / 3.0;
            double gmin = INFINITY, gmax = 0.0, bmin = INFINITY, bmax = 0.0, gsum = 0.0, bsum = 0.0;
            std::size_t m = 0;
            for (std::size_t i = 0; i < n && vw[i] <= cut; ++i, ++m) {
                gmin = std::min(gmin, g[i]);
                gmax = std::max(gmax, g[i]);
                bmin = std::min(bmin, vb[i]);
                bmax = std::max(bmax, vb[i]);
                gsum += g[i];
                bsum += vb[i];
            }
            if (m >= 2) {
                const double gvar = (gmax - gmin) / (gsum / static_cast<double>(m));
                const double bvar = (bmax - bmin) / (bsum / static_cast<double>(m));
                report_.values.push_back({key + ".shallow_gamma_variation", gvar, cite(rel, "gamma", 0)});
                report_.values.push_back({key + ".shallow_v_barrier_variation", bvar, cite(rel, "v_barrier", 0)});
                check(key + ".shallow_gamma_varies_more", gvar > bvar, gvar / bvar,
                      "relative variation of Gamma / that of V_b > 1", cite(rel, "gamma", 0));
            }
            const double slope_shallow = std::abs((vb[1] - vb[0]) / (vw[1] - vw[0]));
            const double slope_deep = std::abs((vb[n - 1] - vb[n - 2]) / (vw[n - 1] - vw[n - 2]));
            check(key + ".flat_at_shallow_end", slope_shallow < slope_deep, slope_shallow / slope_deep,
                  "|dV_b/dV_w| shallow / deep < 1", cite(rel, "v_barrier", 0));
        }
        write_text("iso-curves/iso_curves.gp", plot + "\n" + gamma_plot + "\nunset multiplot\n");
    }

    void decay_curves()
    {
        const auto& p = pipeline();
        const auto& s = spec_.decay_curves;
        CsvTable table("non-escape probability");
        std::vector<double> fit_t, fit_tt, fit_min, fit_tau, fit_q, fit_err;
        std::vector<std::string> names;
        bool have_time = false;
        for (const auto& run : s.runs) {
            const double t_switch = run.t_switch_over_tau * p.pole.tau;
            say("  decay run T = " + format_number(run.t_switch_over_tau) + " tau");
            const auto result = run_decay(p, t_switch, s.t_end);
            if (!have_time) {
                table.add_column("t", "s", result.record.times);
                have_time = true;
            }
            table.add_column("p_w_" + label(run.t_switch_over_tau), "1", result.record.p_w);
            table.add_column("norm_" + label(run.t_switch_over_tau), "1", result.record.norm);
            names.push_back("p_w_" + label(run.t_switch_over_tau));
            const auto fit = fit_exponential_decay(result.record, run.fit_t_min);
            fit_t.push_back(run.t_switch_over_tau);
            fit_tt.push_back(t_switch);
            fit_min.push_back(run.fit_t_min);
            fit_tau.push_back(fit.tau);
            fit_q.push_back(fit.quality);
            fit_err.push_back(relative_error(fit.tau, p.pole.tau));
        }
        if (!have_time) {
            return;
        }
        const auto rel = write("decay-curves/decay.csv", table);
        CsvTable fits("exponential fits");
        fits.add_column("t_switch_over_tau", "1", fit_t);
        fits.add_column("t_switch", "s", fit_tt);
        fits.add_column("fit_t_min", "s", fit_min);
        fits.add_column("tau", "s", fit_tau);
        fits.add_column("quality", "1", fit_q);
        fits.add_column("relative_error", "1", fit_err);
        fits.add_column("pole_tau", "s", std::vector<double>(fit_t.size(), p.pole.tau));
        const auto frel = write("decay-curves/fits.csv", fits);
        std::string plot = plot_header("non-escape probability") +
                           "set xlabel 't [s]'\nset ylabel 'P_W'\nset logscale y\nplot ";
        for (std::size_t i = 0; i < names.size(); ++i) {
            plot += std::string(i ? ", " : "") + "'decay.csv' using 1:" + std::to_string(2 + 2 * i) +
                    " with lines title '" + names[i] + "'";
        }
        write_text("decay-curves/decay.gp", plot + "\n");

        for (std::size_t i = 0; i < fit_t.size(); ++i) {
            const std::string key = "decay." + label(fit_t[i]);
            value(key + ".tau", frel, fits, "tau", i);
            const double tol = fit_t[i] == 0.0 ? 0.02 : 0.03;
            check(key + ".tau_vs_pole", fit_err[i] <= tol, fit_err[i], "<= " + format_number(tol),
                  cite(frel, "relative_error", i));
        }
        // Slower initial decay for the slowest switch.
        const auto& times = table.numbers("t");
        const auto at = static_cast<std::size_t>(std::lower_bound(times.begin(), times.end(), 0.2 - 1e-9) -
                                                 times.begin());
        const auto sudden = std::find(fit_t.begin(), fit_t.end(), 0.0);
        const auto slowest = std::max_element(fit_t.begin(), fit_t.end());
        if (sudden != fit_t.end() && *slowest >= 1.0 && at < times.size()) {
            const auto& a = table.numbers("p_w_" + label(*slowest));
            const auto& b = table.numbers("p_w_" + label(0.0));
            check("decay.slow_switch_holds_longer", a[at] > b[at], a[at] - b[at], "p_w(0.2 s; slowest T) > p_w(0.2 s; T = 0)",
                  cite(rel, "p_w_" + label(*slowest), at));
        }
    }

    void spectrum_vs_t()
    {
        const auto& p = pipeline();
        const auto grid = spectrum_energies(p);
        const auto ref = lorentzian_reference(p.pole, grid);
        CsvTable table("energy distributions");
        table.add_column("e", "s^-1", grid);
        table.add_column("lorentzian", "s", ref.density);
        std::vector<double> t_over, t_sw, t_star, total, window, peak_e, median, deviation, fit_gamma, fit_amp,
            points;
        for (const double f : spec_.spectrum_vs_t.t_switch_over_tau) {
            say("  spectrum T = " + format_number(f) + " tau");
            const double t_switch = f * p.pole.tau;
            const auto run = run_spectrum(p, t_switch);
            const auto dist = energy_distribution(run.state, p.final, p.unit, grid, run.projection_time);
            table.add_column("p_" + label(f), "s", dist.p);
            t_over.push_back(f);
            t_sw.push_back(t_switch);
            t_star.push_back(run.projection_time);
            total.push_back(dist.total);
            window.push_back(integrate_window(grid, dist.p, p.pole.e_r - 10.0 * p.pole.gamma,
                                              p.pole.e_r + 10.0 * p.pole.gamma));
            const auto top = std::max_element(dist.p.begin(), dist.p.end()) - dist.p.begin();
            peak_e.push_back(grid[static_cast<std::size_t>(top)]);
            median.push_back(distribution_median(dist));
            deviation.push_back(lorentzian_deviation(run.state, p.final, p.unit, p.pole));
            points.push_back(static_cast<double>(run.state.size()));
            double fg = std::nan(""), fa = std::nan("");
            try {
                const auto fit = fit_lorentzian(grid, dist.p, p.pole.e_r - 10.0 * p.pole.gamma,
                                                p.pole.e_r + 10.0 * p.pole.gamma);
                fg = fit.gamma;
                fa = fit.amplitude;
            } catch (const Error& e) {
                say(std::string("  Lorentzian fit failed: ") + e.what());
            }
            fit_gamma.push_back(fg);
            fit_amp.push_back(fa);
        }
        write("spectrum-vs-T/spectrum.csv", table);
        CsvTable summary("spectrum summary");
        summary.add_column("t_switch_over_tau", "1", t_over);
        summary.add_column("t_switch", "s", t_sw);
        summary.add_column("projection_time", "s", t_star);
        summary.add_column("grid_points", "1", points);
        summary.add_column("total", "1", total);
        summary.add_column("window_weight", "1", window);
        summary.add_column("peak_e", "s^-1", peak_e);
        summary.add_column("median", "s^-1", median);
        summary.add_column("lorentzian_deviation", "1", deviation);
        summary.add_column("fit_gamma", "s^-1", fit_gamma);
        summary.add_column("fit_amplitude", "s", fit_amp);
        const auto rel = write("spectrum-vs-T/summary.csv", summary);
        std::string plot = plot_header("energy distributions") +
                           "set xlabel 'E [s^-1]'\nset ylabel 'P(E) [s]'\nset xrange [" +
                           format_number(p.pole.e_r - 10.0 * p.pole.gamma) + ":" +
                           format_number(p.pole.e_r + 10.0 * p.pole.gamma) +
                           "]\nplot 'spectrum.csv' using 1:2 with lines dt 2 title 'pole Lorentzian'";
        for (std::size_t i = 0; i < t_over.size(); ++i) {
            plot += ", 'spectrum.csv' using 1:" + std::to_string(3 + i) + " with lines title '" + label(t_over[i]) + "'";
        }
        write_text("spectrum-vs-T/spectrum.gp", plot + "\n");

        const double e_r = p.pole.e_r;
        const double gamma = p.pole.gamma;
        for (std::size_t i = 0; i < t_over.size(); ++i) {
            const std::string key = "spectrum." + label(t_over[i]);
            const double tot = value(key + ".total", rel, summary, "total", i);
            value(key + ".window_weight", rel, summary, "window_weight", i);
            value(key + ".median", rel, summary, "median", i);
            value(key + ".lorentzian_deviation", rel, summary, "lorentzian_deviation", i);
            check(key + ".normalization", std::abs(tot - 1.0) <= 1e-3, std::abs(tot - 1.0), "<= 1e-3",
                  cite(rel, "total", i));
            if (t_over[i] == 0.0) {
                check(key + ".peak_at_resonance", std::abs(peak_e[i] - e_r) <= 0.5 * gamma,
                      std::abs(peak_e[i] - e_r) / gamma, "|peak - E_R| / Gamma <= 0.5", cite(rel, "peak_e", i));
                check(key + ".weight_leaks_to_higher_resonances", window[i] < 1.0, window[i],
                      "weight in E_R +- 10 Gamma < 1", cite(rel, "window_weight", i));
                if (!std::isnan(fit_gamma[i])) {
                    check(key + ".fit_gamma", relative_error(fit_gamma[i], gamma) <= 0.05,
                          relative_error(fit_gamma[i], gamma), "<= 0.05", cite(rel, "fit_gamma", i));
                    check(key + ".fit_amplitude_reduced", fit_amp[i] < 2.0 / (std::numbers::pi * gamma),
                          fit_amp[i] * std::numbers::pi * gamma / 2.0, "amplitude / (2/(pi Gamma)) < 1",
                          cite(rel, "fit_amplitude", i));
                }
            }
            if (t_over[i] >= 1.0) {
                check(key + ".median_below_resonance", median[i] < e_r, median[i] - e_r, "median - E_R < 0",
                      cite(rel, "median", i));
            }
        }
    }

    void t_scan()
    {
        const auto& p = pipeline();
        const auto& s = spec_.t_scan;
        const double tau = p.pole.tau;
        ScanOptions options;
        options.coarse_points = s.coarse_points;
        options.relative_tolerance = s.relative_tolerance;
        std::optional<double> lorentzian_star, exponential_star;

        const auto emit = [&](const std::string& name, const ScanResult& r) {
            std::vector<double> t, f, obj;
            for (const auto& [ti, oi] : r.curve) {
                t.push_back(ti);
                f.push_back(ti / tau);
                obj.push_back(oi);
            }
            CsvTable curve(name + " objective curve");
            curve.add_meta("multimodal", r.multimodal ? "yes: " + r.warning : "no");
            curve.add_column("t_switch", "s", t);
            curve.add_column("t_switch_over_tau", "1", f);
            curve.add_column("objective", "1", obj);
            write("t-scan/" + name + ".csv", curve);
            CsvTable best(name + " optimum");
            best.add_column("t_star", "s", {r.t_star});
            best.add_column("t_star_over_tau", "1", {r.t_star / tau});
            best.add_column("objective_at_star", "1", {r.objective_at_star});
            best.add_column("multimodal", "1", {r.multimodal ? 1.0 : 0.0});
            const auto rel = write("t-scan/" + name + "_optimum.csv", best);
            value("scan." + name + ".t_star", rel, best, "t_star", 0);
            value("scan." + name + ".t_star_over_tau", rel, best, "t_star_over_tau", 0);
            value("scan." + name + ".objective_at_star", rel, best, "objective_at_star", 0);
            if (r.multimodal) {
                say("  warning: " + r.warning);
            }
            return rel;
        };

        std::string plot = plot_header("switching-time scans") + "set xlabel 'T / tau'\nset logscale x\nplot ";
        bool first = true;
        if (s.lorentzian) {
            say("  Lorentzian-deviation scan");
            const auto r = optimal_switch_time(
                [&](double t) {
                    const double v = lorentzian_objective(p, t);
                    say("    T/tau = " + format_number(t / tau) + "  deviation = " + format_number(v));
                    return v;
                },
                s.lorentzian_lo * tau, s.lorentzian_hi * tau, options);
            const auto rel = emit("lorentzian", r);
            lorentzian_star = r.t_star / tau;
            // Limits on both sides of the scan range.
            const double at_zero = lorentzian_objective(p, 0.0);
            const double at_tau = lorentzian_objective(p, tau);
            CsvTable ends("Lorentzian deviation at the limits");
            ends.add_column("t_switch_over_tau", "1", {0.0, 1.0});
            ends.add_column("objective", "1", {at_zero, at_tau});
            const auto erel = write("t-scan/lorentzian_limits.csv", ends);
            value("scan.lorentzian.objective_T0", erel, ends, "objective", 0);
            value("scan.lorentzian.objective_Ttau", erel, ends, "objective", 1);
            const double best = r.objective_at_star;
            check("scan.lorentzian.interior_minimum", 2.0 * best < at_zero && 2.0 * best < at_tau,
                  best / std::min(at_zero, at_tau), "objective at t_star / min(T = 0, T = tau) < 0.5",
                  cite(rel, "objective_at_star", 0));
            check("scan.lorentzian.large_T_distortion", at_tau >= 3.0 * best, at_tau / best,
                  "objective(T = tau) / objective(t_star) >= 3", cite(erel, "objective", 1));
            if (spec_.reference.lorentzian_t_star) {
                const auto [lo, hi] = *spec_.reference.lorentzian_t_star;
                check("scan.lorentzian.t_star_in_reference_range", *lorentzian_star >= lo && *lorentzian_star <= hi,
                      *lorentzian_star, "in [" + format_number(lo) + ", " + format_number(hi) + "] tau",
                      cite(rel, "t_star_over_tau", 0));
            }
            plot += "'lorentzian.csv' using 2:3 with linespoints title 'Lorentzian deviation'";
            first = false;
        }
        if (s.exponential) {
            say("  exponential-deviation scan");
            const double horizon = s.horizon_over_tau * tau;
            const auto r = optimal_switch_time(
                [&](double t) {
                    const double v = exponential_objective(p, t, s.fit_t_min, horizon, s.t_end);
                    say("    T/tau = " + format_number(t / tau) + "  deviation = " + format_number(v));
                    return v;
                },
                s.exponential_lo * tau, s.exponential_hi * tau, options);
            const auto rel = emit("exponential", r);
            exponential_star = r.t_star / tau;
            if (spec_.reference.exponential_t_star) {
                const auto [lo, hi] = *spec_.reference.exponential_t_star;
                check("scan.exponential.t_star_in_reference_range",
                      *exponential_star >= lo && *exponential_star <= hi, *exponential_star,
                      "in [" + format_number(lo) + ", " + format_number(hi) + "] tau", cite(rel, "t_star_over_tau", 0));
            }
            plot += std::string(first ? "" : ", ") +
                    "'exponential.csv' using 2:3 with linespoints title 'exponential deviation'";
        }
        if (lorentzian_star && exponential_star) {
            check("scan.lorentzian_before_exponential", *lorentzian_star < *exponential_star,
                  *lorentzian_star / *exponential_star, "lorentzian t_star / exponential t_star < 1",
                  "t-scan/lorentzian_optimum.csv:t_star:1");
        }
        write_text("t-scan/scan.gp", plot + "\n");
    }

    const ExperimentSpec& spec_;
    fs::path dir_;
    std::ostream* log_;
    UnitSystem unit_;
    std::optional<Pipeline> pipeline_;
    RunReport report_;
};

}  // namespace

bool RunReport::all_passed() const
{
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

void RunReport::write(std::ostream& out) const
{
    out << "spec: " << spec_name << '\n';
    out << "config_hash: " << config_hash << '\n';
    out << "code_version: " << code_version() << '\n';
    for (const auto& v : values) {
        out << "value " << v.key << ": " << format_number(v.value) << "  [" << v.citation << "]\n";
    }
    for (const auto& c : checks) {
        out << "check " << c.name << ": " << (c.pass ? "pass" : "FAIL") << "  value " << format_number(c.value)
            << ", rule " << c.rule << "  [" << c.citation << "]\n";
    }
    out << "result: " << (all_passed() ? "pass" : "FAIL") << '\n';
}

std::string config_hash(const ExperimentSpec& spec)
{
    return "fnv1a64:" + hex64(fnv1a64(serialize_spec(spec)));
}

RunReport run_experiment(const ExperimentSpec& spec, const RunOptions& options)
{
    const auto problems = validate_spec(spec);
    if (!problems.empty()) {
        std::string message = "invalid spec:";
        for (const auto& d : problems) {
            message += "\n  " + d.field + ": " + d.message;
        }
        throw InvalidArgument(message);
    }
    const fs::path target = options.output_directory.empty() ? fs::path(spec.output_directory)
                                                              : options.output_directory;
    const fs::path partial = target.parent_path() / (target.filename().string() + ".partial");
    fs::remove_all(partial);
    fs::create_directories(partial);
    try {
        Runner runner(spec, partial, options.log);
        for (const auto kind : spec.experiments) {
            runner.run(kind);
        }
        auto report = runner.finish();
        {
            std::ofstream spec_copy(partial / "spec.yaml");
            spec_copy << serialize_spec(spec);
            std::ofstream summary(partial / "summary.txt");
            report.write(summary);
        }
        fs::remove_all(target);
        fs::rename(partial, target);
        return report;
    } catch (...) {
        fs::remove_all(partial);
        throw;
    }
}

}  // namespace resprep
