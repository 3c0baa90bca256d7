#include <cmath>
#include <sstream>

#include "resprep/errors.hpp"
#include "resprep/poles.hpp"

namespace resprep {

namespace {

struct Tracker {
    const UnitSystem& unit;
    double d;
    double b;
    double v_well;
    double target;

    PotentialConfig config(double v_barrier) const { return {v_well, v_barrier, d, b}; }

    /// Follow the pole from `seed` to barrier height v_barrier.
    std::optional<complex> follow(double v_barrier, complex seed) const
    {
        const auto k = refine_pole(config(v_barrier), unit, seed);
        if (!k || !(k->real() > 0.0) || !(k->imag() < 0.0)) {
            return std::nullopt;
        }
        return k;
    }

    double mismatch(complex k) const { return 0.5 * unit.kappa * (k * k).real() - target; }
};

struct Solved {
    double v_barrier;
    complex k;
};

/// Secant in V_b on Re E(pole) - target, re-finding the pole by Newton from
/// the latest iterate. nullopt if the pole is lost on the way.
std::optional<Solved> solve_barrier(const Tracker& tr, double vb0, complex k0, double vb1, complex k_seed)
{
    auto k1 = tr.follow(vb1, k_seed);
    if (!k1) {
        return std::nullopt;
    }
    double f0 = tr.mismatch(k0);
    double f1 = tr.mismatch(*k1);
    complex k_prev = k0;
    complex k_cur = *k1;
    double a = vb0;
    double c = vb1;
    for (int it = 0; it < 80; ++it) {
        if (std::abs(f1) <= 1e-10 * tr.target) {
            return Solved{c, k_cur};
        }
        if (f1 == f0) {
            return std::nullopt;
        }
        double next = c - f1 * (c - a) / (f1 - f0);
        // Keep the step modest so the pole can be followed.
        const double max_step = 0.25 * std::max(c, 1.0);
        if (std::abs(next - c) > max_step) {
            next = c + std::copysign(max_step, next - c);
        }
        if (!(next > 0.0)) {
            next = 0.5 * c;
        }
        const complex predicted = k_cur + (k_cur - k_prev) * ((next - c) / (c - a == 0.0 ? 1.0 : c - a));
        auto k_next = tr.follow(next, predicted);
        if (!k_next || std::abs(*k_next - k_cur) > 0.2 * std::abs(k_cur)) {
            k_next = tr.follow(next, k_cur);
        }
        if (!k_next || std::abs(*k_next - k_cur) > 0.2 * std::abs(k_cur)) {
            return std::nullopt;
        }
        a = c;
        f0 = f1;
        k_prev = k_cur;
        c = next;
        k_cur = *k_next;
        f1 = tr.mismatch(k_cur);
    }
    return std::nullopt;
}

std::optional<IsoCurvePoint> continue_to(const UnitSystem& unit, double d, double b, double target, double vw,
                                         const IsoCurvePoint& last, const std::optional<IsoCurvePoint>& before)
{
    Tracker tr{unit, d, b, vw, target};
    double vb_guess = last.v_barrier;
    complex k_guess = last.pole.k_res;
    if (before) {
        const double ratio = (vw - last.v_well) / (last.v_well - before->v_well);
        vb_guess += ratio * (last.v_barrier - before->v_barrier);
        k_guess += ratio * (last.pole.k_res - before->pole.k_res);
    }
    const auto k_at_last_vb = tr.follow(last.v_barrier, last.pole.k_res);
    if (!k_at_last_vb || std::abs(*k_at_last_vb - last.pole.k_res) >= 0.2 * std::abs(last.pole.k_res)) {
        return std::nullopt;
    }
    if (vb_guess == last.v_barrier) {
        vb_guess *= 1.01;
    }
    const auto solved = solve_barrier(tr, last.v_barrier, *k_at_last_vb, vb_guess, k_guess);
    if (!solved) {
        return std::nullopt;
    }
    return IsoCurvePoint{vw, solved->v_barrier, make_resonance(solved->k, unit)};
}

}  // namespace

IsoCurve trace_iso_resonance(double e_r_target, double v_well_min, double v_well_max, const UnitSystem& unit,
                             double d, double b, const IsoCurveOptions& options)
{
    if (!(e_r_target > 0.0)) {
        throw InvalidArgument("trace_iso_resonance: target energy must be positive");
    }
    if (!(v_well_max > v_well_min) || v_well_min < 0.0 || options.steps < 1) {
        throw InvalidArgument("trace_iso_resonance: invalid V_w range");
    }
    PotentialConfig{0.0, 0.0, d, b}.validate();

    IsoCurve curve;
    curve.e_r_target = e_r_target;
    const double k_scale = 4.0 * std::sqrt(2.0 * e_r_target / unit.kappa) + 0.2;

    // First point: scan V_b at the shallow end for a bracket of the target.
    Tracker tracker{unit, d, b, v_well_min, e_r_target};
    std::optional<Resonance> prev_pole;
    double prev_vb = 0.0;
    std::optional<Solved> start;
    const int n_scan = std::max(options.barrier_scan_points, 4);
    for (int i = 0; i < n_scan && !start; ++i) {
        const double vb = options.v_barrier_min *
                          std::pow(options.v_barrier_max / options.v_barrier_min, static_cast<double>(i) / (n_scan - 1));
        const auto pole = lowest_resonance(tracker.config(vb), unit, k_scale);
        if (pole && prev_pole && (prev_pole->e_r - e_r_target) * (pole->e_r - e_r_target) <= 0.0) {
            start = solve_barrier(tracker, prev_vb, prev_pole->k_res, vb, pole->k_res);
            if (!start) {
                start = solve_barrier(tracker, vb, pole->k_res, prev_vb, prev_pole->k_res);
            }
        }
        if (pole) {
            prev_pole = pole;
            prev_vb = vb;
        }
    }
    if (!start) {
        std::ostringstream msg;
        msg << "trace_iso_resonance: no barrier height in [" << options.v_barrier_min << ", "
            << options.v_barrier_max << "] puts the lowest resonance at " << e_r_target << " for V_w = " << v_well_min;
        throw ContinuationFailure(msg.str());
    }
    curve.points.push_back({v_well_min, start->v_barrier, make_resonance(start->k, unit)});

    const double step = (v_well_max - v_well_min) / options.steps;
    // Continuation state: the latest two solved points, emitted or not.
    IsoCurvePoint last = curve.points.back();
    std::optional<IsoCurvePoint> before;
    for (int i = 1; i <= options.steps && !curve.truncated; ++i) {
        const double vw_target = v_well_min + step * i;
        double sub = step;
        while (last.v_well < vw_target) {
            const double vw = std::min(vw_target, last.v_well + sub);
            const auto next = continue_to(unit, d, b, e_r_target, vw, last, before);
            if (!next || next->v_barrier < options.v_barrier_min || next->v_barrier > options.v_barrier_max) {
                sub *= 0.5;
                if (sub < 1e-6 * step) {
                    std::ostringstream msg;
                    msg << "pole lost while continuing to V_w = " << vw;
                    curve.truncated = true;
                    curve.diagnostic = msg.str();
                    break;
                }
                continue;
            }
            before = last;
            last = *next;
            sub = std::min(step, 2.0 * sub);
        }
        if (!curve.truncated) {
            curve.points.push_back(last);
        }
    }
    return curve;
}

}  // namespace resprep
