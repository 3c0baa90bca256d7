#include "resprep/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "resprep/errors.hpp"

namespace resprep {

namespace {

constexpr complex I{0.0, 1.0};

double trapezoid(std::span<const double> x, std::span<const double> y)
{
    double s = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) {
        s += 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
    }
    return s;
}

/// <psi_k|state> with the free-region exponentials carried by recurrence.
complex overlap(const ScatteringSolution& sol, const WavefunctionGrid& state)
{
    const double edge = sol.d + sol.b;
    const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    complex inner{0.0, 0.0};
    complex plus{0.0, 0.0};   // sum exp(ikx) psi
    complex minus{0.0, 0.0};  // sum exp(-ikx) psi
    const complex step = std::exp(I * sol.k * state.dx);
    constexpr std::size_t resync = 512;
    complex phase;
    std::size_t since_sync = resync;
    for (std::size_t j = 1; j < state.size(); ++j) {
        const double x = state.x(j);
        const complex v = state.values[j];
        if (x <= edge) {
            inner += std::conj(sol.evaluate(x)) * v;
            continue;
        }
        if (since_sync >= resync) {
            phase = std::exp(I * sol.k * x);
            since_sync = 0;
        } else {
            phase *= step;
        }
        ++since_sync;
        plus += phase * v;
        minus += std::conj(phase) * v;
    }
    // conj(psi_k) = (2 pi)^(-1/2) [exp(ikx) - conj(S) exp(-ikx)] outside.
    const complex outer = inv_sqrt_2pi * (plus - std::conj(sol.s) * minus);
    return (inner + outer) * state.dx;
}

/// Scattering state of the discrete operator at energy e: recurrence from
/// the wall through the potential, then a fit to lattice plane waves
/// exp(+-i k x_j) with cos(k dx) = 1 - e/(2a).
struct LatticeState {
    std::vector<complex> inner;  // nodes 0..match, already normalized
    double k = 0.0;
    complex s;
    double group_velocity = 0.0;  // dE/dk on the lattice
};

LatticeState lattice_state(std::span<const double> v, double dx, double kappa, std::size_t match, double e)
{
    const double a = kappa / (2.0 * dx * dx);
    const double c = 1.0 - e / (2.0 * a);
    if (!(c > -1.0 && c < 1.0)) {
        throw InvalidArgument("energy_distribution: energy outside the lattice band");
    }
    LatticeState st;
    st.k = std::acos(c) / dx;
    st.group_velocity = 2.0 * a * dx * std::sin(st.k * dx);
    std::vector<double> u(match + 2, 0.0);
    u[1] = 1.0;
    for (std::size_t j = 1; j <= match; ++j) {
        const double h = 2.0 * a + (v[j - 1] + v[j]) / 3.0;
        const double g_left = -a + v[j - 1] / 6.0;
        const double g_right = -a + v[j] / 6.0;
        u[j + 1] = -((h - e) * u[j] + g_left * u[j - 1]) / g_right;
    }
    // u_j = A exp(-ikx_j) + B exp(ikx_j) at j = match, match + 1.
    const double x0 = static_cast<double>(match) * dx;
    const complex p0 = std::exp(I * st.k * x0);
    const complex p1 = std::exp(I * st.k * (x0 + dx));
    const complex det = p1 / p0 - p0 / p1;  // [1/p0, p0; 1/p1, p1]
    const complex amp_a = (u[match] * p1 - u[match + 1] * p0) / det;
    const complex amp_b = (u[match + 1] / p0 - u[match] / p1) / det;
    st.s = -amp_b / amp_a;
    const complex scale = 1.0 / (amp_a * std::sqrt(2.0 * std::numbers::pi));
    st.inner.resize(match + 1);
    for (std::size_t j = 0; j <= match; ++j) {
        st.inner[j] = u[j] * scale;
    }
    return st;
}

complex lattice_overlap(const LatticeState& st, const WavefunctionGrid& state)
{
    const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    complex inner{0.0, 0.0};
    const std::size_t match = st.inner.size() - 1;
    for (std::size_t j = 1; j <= match && j < state.size(); ++j) {
        inner += std::conj(st.inner[j]) * state.values[j];
    }
    complex plus{0.0, 0.0};
    complex minus{0.0, 0.0};
    const complex step = std::exp(I * st.k * state.dx);
    constexpr std::size_t resync = 512;
    complex phase;
    std::size_t since_sync = resync;
    for (std::size_t j = match + 1; j < state.size(); ++j) {
        if (since_sync >= resync) {
            phase = std::exp(I * st.k * state.x(j));
            since_sync = 0;
        } else {
            phase *= step;
        }
        ++since_sync;
        plus += phase * state.values[j];
        minus += std::conj(phase) * state.values[j];
    }
    return (inner + inv_sqrt_2pi * (plus - std::conj(st.s) * minus)) * state.dx;
}

}  // namespace

double projection_time(const SwitchingSchedule& schedule, double epsilon_v)
{
    if (schedule.is_sudden()) {
        return 0.0;
    }
    const double change = schedule.max_potential_change();
    if (change <= epsilon_v) {
        return 0.0;
    }
    return schedule.t_switch * std::log(change / epsilon_v);
}

std::vector<double> energy_grid(double e_r, double gamma, const EnergyGridSpec& spec)
{
    if (!(e_r > 0.0) || !(gamma > 0.0) || !(spec.e_max > e_r) || spec.points < 100) {
        throw InvalidArgument("energy_grid: need E_R > 0, Gamma > 0, e_max > E_R and at least 100 points");
    }
    const double lo_dense = std::max(e_r - spec.dense_half_width * gamma, 0.5 * e_r);
    const double hi_dense = std::min(e_r + spec.dense_half_width * gamma, 0.5 * (e_r + spec.e_max));
    const auto n_dense = static_cast<std::size_t>(std::ceil((hi_dense - lo_dense) / (spec.dense_spacing * gamma))) + 1;
    if (n_dense + 20 > spec.points) {
        throw InvalidArgument("energy_grid: too few points for the dense window");
    }
    const double e_min = spec.e_min_fraction * e_r;
    // Share the remaining points between the two geometric flanks by their
    // logarithmic lengths.
    const double log_lo = std::log(lo_dense / e_min);
    const double log_hi = std::log(spec.e_max / hi_dense);
    const std::size_t rest = spec.points - n_dense;
    const auto n_lo = static_cast<std::size_t>(std::round(static_cast<double>(rest) * log_lo / (log_lo + log_hi)));
    const std::size_t n_hi = rest - n_lo;

    std::vector<double> grid;
    grid.reserve(spec.points);
    for (std::size_t i = 0; i < n_lo; ++i) {
        grid.push_back(e_min * std::exp(log_lo * static_cast<double>(i) / static_cast<double>(n_lo)));
    }
    for (std::size_t i = 0; i < n_dense; ++i) {
        grid.push_back(lo_dense + (hi_dense - lo_dense) * static_cast<double>(i) / static_cast<double>(n_dense - 1));
    }
    for (std::size_t i = 1; i <= n_hi; ++i) {
        grid.push_back(hi_dense * std::exp(log_hi * static_cast<double>(i) / static_cast<double>(n_hi)));
    }
    return grid;
}

EnergyDistribution energy_distribution(const WavefunctionGrid& state, const PotentialConfig& final_config,
                                       const UnitSystem& unit, std::span<const double> energies,
                                       double projection_time, ProjectionBasis basis)
{
    final_config.validate();
    if (!find_bound_states(final_config, unit).empty()) {
        throw CompletenessViolation("energy_distribution: the final configuration holds a bound state");
    }
    if (state.size() < 3 || state.x0 != 0.0) {
        throw InvalidArgument("energy_distribution: state grid must start at the wall");
    }
    double peak = 0.0;
    for (const auto& v : state.values) {
        peak = std::max(peak, std::abs(v));
    }
    const std::size_t tail = std::max<std::size_t>(2, state.size() / 100);
    double edge = 0.0;
    for (std::size_t j = state.size() - tail; j < state.size(); ++j) {
        edge = std::max(edge, std::abs(state.values[j]));
    }
    if (edge > 1e-8 * peak) {
        std::ostringstream msg;
        msg << "energy_distribution: packet reaches the box edge (|psi| = " << edge << " vs max " << peak << ")";
        throw ContainmentError(msg.str());
    }
    EnergyDistribution dist;
    dist.projection_time = projection_time;
    dist.energies.assign(energies.begin(), energies.end());
    dist.p.resize(energies.size());
    // First node whose left and right intervals are both free space.
    const auto match =
        static_cast<std::size_t>(std::ceil(final_config.outer_edge() / state.dx - 1e-9)) + 1;
    const auto intervals = sample_interval_averages(final_config, state.dx, match + 1);
    for (std::size_t i = 0; i < energies.size(); ++i) {
        if (!(energies[i] > 0.0) || (i > 0 && !(energies[i] > energies[i - 1]))) {
            throw InvalidArgument("energy_distribution: energies must be positive and ascending");
        }
        if (basis == ProjectionBasis::lattice) {
            const auto st = lattice_state(intervals, state.dx, unit.kappa, match, energies[i]);
            dist.p[i] = std::norm(lattice_overlap(st, state)) / st.group_velocity;
        } else {
            const double k = unit.wave_number(energies[i]);
            const auto sol = solve_scattering(final_config, unit, k);
            dist.p[i] = std::norm(overlap(sol, state)) / (unit.kappa * k);
        }
    }
    dist.total = trapezoid(dist.energies, dist.p);
    return dist;
}

double integrate_window(std::span<const double> energies, std::span<const double> p, double lo, double hi)
{
    double s = 0.0;
    for (std::size_t i = 1; i < energies.size(); ++i) {
        if (energies[i - 1] >= lo && energies[i] <= hi) {
            s += 0.5 * (p[i] + p[i - 1]) * (energies[i] - energies[i - 1]);
        }
    }
    return s;
}

double distribution_median(const EnergyDistribution& dist)
{
    const double half = 0.5 * dist.total;
    double s = 0.0;
    for (std::size_t i = 1; i < dist.energies.size(); ++i) {
        const double piece = 0.5 * (dist.p[i] + dist.p[i - 1]) * (dist.energies[i] - dist.energies[i - 1]);
        if (s + piece >= half && piece > 0.0) {
            const double f = (half - s) / piece;
            return dist.energies[i - 1] + f * (dist.energies[i] - dist.energies[i - 1]);
        }
        s += piece;
    }
    return dist.energies.back();
}

LorentzianReference lorentzian_reference(const Resonance& resonance, std::span<const double> energies)
{
    if (resonance.kind != PoleKind::resonance || !(resonance.gamma > 0.0)) {
        throw InvalidArgument("lorentzian_reference: needs a resonance with positive width");
    }
    const double g = resonance.gamma;
    const double e_r = resonance.e_r;
    LorentzianReference ref;
    ref.density.reserve(energies.size());
    for (double e : energies) {
        ref.density.push_back((g / (2.0 * std::numbers::pi)) / ((e - e_r) * (e - e_r) + 0.25 * g * g));
    }
    if (!energies.empty()) {
        const double inside = (std::atan(2.0 * (energies.back() - e_r) / g) - std::atan(2.0 * (energies.front() - e_r) / g)) /
                              std::numbers::pi;
        ref.truncation_deficit = 1.0 - inside;
    }
    return ref;
}

LorentzianFit fit_lorentzian(std::span<const double> e, std::span<const double> y, double lo, double hi,
                             bool with_background)
{
    if (e.size() != y.size()) {
        throw InvalidArgument("fit_lorentzian: sample arrays differ in length");
    }
    std::vector<double> xs;
    std::vector<double> ys;
    for (std::size_t i = 0; i < e.size(); ++i) {
        if (e[i] >= lo && e[i] <= hi) {
            xs.push_back(e[i]);
            ys.push_back(y[i]);
        }
    }
    const std::size_t m = xs.size();
    if (m < 10) {
        throw InsufficientData("fit_lorentzian: fewer than ten samples in the window");
    }
    const auto peak_it = std::max_element(ys.begin(), ys.end());
    const auto peak_index = static_cast<std::size_t>(peak_it - ys.begin());
    if (peak_index == 0 || peak_index + 1 == m) {
        throw WindowError("fit_lorentzian: peak at the window edge");
    }
    // Starting values from the half-maximum crossings.
    const double a0 = *peak_it;
    std::size_t left = peak_index;
    while (left > 0 && ys[left] > 0.5 * a0) {
        --left;
    }
    std::size_t right = peak_index;
    while (right + 1 < m && ys[right] > 0.5 * a0) {
        ++right;
    }
    const double g0 = std::max(xs[right] - xs[left], 1e-12 * std::abs(xs[peak_index]));
    if (xs.back() - xs.front() < 4.0 * g0) {
        throw InsufficientData("fit_lorentzian: window spans fewer than four widths");
    }

    // Parameters E_R, Gamma, A and optionally the constant c.
    const Eigen::Index np = with_background ? 4 : 3;
    Eigen::VectorXd p(np);
    p.head<3>() << xs[peak_index], g0, a0;
    if (with_background) {
        p[3] = 0.5 * (ys.front() + ys.back());
        p[2] -= p[3];
    }
    auto residuals = [&](const Eigen::VectorXd& q, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
        r.resize(static_cast<Eigen::Index>(m));
        if (jac) {
            jac->resize(static_cast<Eigen::Index>(m), np);
        }
        const double h = 0.5 * q[1];
        const double c = with_background ? q[3] : 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double u = xs[i] - q[0];
            const double den = u * u + h * h;
            const double shape = h * h / den;
            const auto ii = static_cast<Eigen::Index>(i);
            r[ii] = q[2] * shape + c - ys[i];
            if (jac) {
                (*jac)(ii, 0) = q[2] * 2.0 * u * h * h / (den * den);
                (*jac)(ii, 1) = q[2] * (h * u * u / (den * den));
                (*jac)(ii, 2) = shape;
                if (with_background) {
                    (*jac)(ii, 3) = 1.0;
                }
            }
        }
    };
    Eigen::VectorXd r;
    Eigen::MatrixXd jac;
    residuals(p, r, &jac);
    double cost = r.squaredNorm();
    double lambda = 1e-3;
    LorentzianFit fit;
    for (int it = 1; it <= 200; ++it) {
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd g = jac.transpose() * r;
        Eigen::MatrixXd a = jtj;
        for (Eigen::Index i = 0; i < np; ++i) {
            a(i, i) += lambda * std::max(jtj(i, i), 1e-300);
        }
        const Eigen::VectorXd delta = a.ldlt().solve(-g);
        const Eigen::VectorXd trial = p + delta;
        Eigen::VectorXd r_trial;
        residuals(trial, r_trial, nullptr);
        const double trial_cost = r_trial.squaredNorm();
        // Relative updates; the background is measured against the amplitude.
        Eigen::VectorXd scale = p.array().abs().max(1e-300);
        if (with_background) {
            scale[3] = std::max(std::abs(p[2]), 1e-300);
        }
        const bool small = (delta.array().abs() / scale.array()).maxCoeff() < 1e-10;
        if (trial_cost <= cost && trial[1] > 0.0) {
            p = trial;
            cost = trial_cost;
            residuals(p, r, &jac);
            lambda = std::max(lambda * 0.3, 1e-12);
        } else {
            lambda *= 10.0;
        }
        if (small || cost == 0.0) {
            fit.e_r = p[0];
            fit.gamma = std::abs(p[1]);
            fit.amplitude = p[2];
            fit.background = with_background ? p[3] : 0.0;
            fit.iterations = it;
            fit.rms_residual = std::sqrt(cost / static_cast<double>(m));
            return fit;
        }
    }
    std::ostringstream msg;
    msg.precision(12);
    msg << "fit_lorentzian: no convergence in 200 iterations; last iterate E_R = " << p[0] << ", Gamma = " << p[1]
        << ", A = " << p[2];
    throw FitFailure(msg.str());
}

ExponentialFit fit_exponential_decay(const DecayRecord& record, double t_min)
{
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < record.times.size(); ++i) {
        if (record.times[i] >= t_min && record.p_w[i] > 0.0) {
            const double x = record.times[i];
            const double y = std::log(record.p_w[i]);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            ++n;
        }
    }
    if (n < 10) {
        throw InsufficientData("fit_exponential_decay: fewer than ten usable samples after t_min");
    }
    const double nn = static_cast<double>(n);
    const double denom = nn * sxx - sx * sx;
    const double slope = (nn * sxy - sx * sy) / denom;
    if (!(slope < 0.0)) {
        throw FitFailure("fit_exponential_decay: p_w does not decay over the window");
    }
    ExponentialFit fit;
    fit.intercept = (sy - slope * sx) / nn;
    fit.tau = -1.0 / slope;
    fit.samples = n;
    for (std::size_t i = 0; i < record.times.size(); ++i) {
        if (record.times[i] >= t_min && record.p_w[i] > 0.0) {
            const double line = fit.intercept + slope * record.times[i];
            fit.quality = std::max(fit.quality, std::abs(std::log(record.p_w[i]) - line));
        }
    }
    return fit;
}

double lorentzian_deviation(const WavefunctionGrid& state, const PotentialConfig& final_config,
                            const UnitSystem& unit, const Resonance& resonance, ProjectionBasis basis,
                            double half_width, std::size_t window_points)
{
    if (window_points < 3) {
        throw InvalidArgument("lorentzian_deviation: need at least three window points");
    }
    const double lo = std::max(resonance.e_r - half_width * resonance.gamma, 1e-6 * resonance.e_r);
    const double hi = resonance.e_r + half_width * resonance.gamma;
    std::vector<double> grid(window_points);
    for (std::size_t i = 0; i < window_points; ++i) {
        grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(window_points - 1);
    }
    const auto dist = energy_distribution(state, final_config, unit, grid, 0.0, basis);
    const auto ref = lorentzian_reference(resonance, grid);
    std::vector<double> diff(window_points);
    for (std::size_t i = 0; i < window_points; ++i) {
        diff[i] = std::abs(dist.p[i] - ref.density[i]);
    }
    return trapezoid(grid, diff);
}

double exponential_deviation(const DecayRecord& record, double t_fit_min, double horizon)
{
    const auto fit = fit_exponential_decay(record, t_fit_min);
    double worst = 0.0;
    bool any = false;
    for (std::size_t i = 0; i < record.times.size(); ++i) {
        const double t = record.times[i];
        if (t <= horizon && record.p_w[i] > 0.0) {
            worst = std::max(worst, std::abs(std::log(record.p_w[i]) - (fit.intercept - t / fit.tau)));
            any = true;
        }
    }
    if (!any) {
        throw InsufficientData("exponential_deviation: no samples before the horizon");
    }
    return worst;
}

ScanResult optimal_switch_time(const std::function<double(double)>& objective, double t_lo, double t_hi,
                               const ScanOptions& options)
{
    if (!(t_lo > 0.0) || !(t_hi > t_lo) || options.coarse_points < 3 || !(options.relative_tolerance > 0.0)) {
        throw InvalidArgument("optimal_switch_time: need 0 < t_lo < t_hi and at least three coarse points");
    }
    ScanResult result;
    auto eval = [&](double t) {
        const double v = objective(t);
        result.curve.emplace_back(t, v);
        return v;
    };
    const std::size_t n = options.coarse_points;
    const double log_lo = std::log(t_lo);
    const double log_hi = std::log(t_hi);
    std::vector<double> ts(n);
    std::vector<double> vs(n);
    for (std::size_t i = 0; i < n; ++i) {
        ts[i] = std::exp(log_lo + (log_hi - log_lo) * static_cast<double>(i) / static_cast<double>(n - 1));
        vs[i] = eval(ts[i]);
    }
    const auto best = static_cast<std::size_t>(std::min_element(vs.begin(), vs.end()) - vs.begin());

    // Other interior local minima of similar depth make the answer ambiguous.
    for (std::size_t i = 0; i < n; ++i) {
        if (i == best) {
            continue;
        }
        const bool left = i == 0 || vs[i] < vs[i - 1];
        const bool right = i + 1 == n || vs[i] < vs[i + 1];
        const bool separated = (i > best ? i - best : best - i) > 1;
        if (left && right && separated && vs[i] <= 1.1 * vs[best]) {
            result.multimodal = true;
            std::ostringstream msg;
            msg << "objective has a second local minimum at T = " << ts[i] << " within 10% of the global one at T = "
                << ts[best] << "; returning the global grid minimum";
            result.warning = msg.str();
        }
    }

    if (result.multimodal || best == 0 || best + 1 == n) {
        result.t_star = ts[best];
        result.objective_at_star = vs[best];
        if (!result.multimodal) {
            result.warning = "minimum at the edge of the scanned range";
        }
    } else {
        // Golden section in log T on the bracket around the best point.
        const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
        double a = std::log(ts[best - 1]);
        double b = std::log(ts[best + 1]);
        double c = b - phi * (b - a);
        double d = a + phi * (b - a);
        double fc = eval(std::exp(c));
        double fd = eval(std::exp(d));
        int it = 0;
        while (std::exp(0.5 * (b - a)) - 1.0 > options.relative_tolerance && it < options.max_refinements) {
            if (fc < fd) {
                b = d;
                d = c;
                fd = fc;
                c = b - phi * (b - a);
                fc = eval(std::exp(c));
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + phi * (b - a);
                fd = eval(std::exp(d));
            }
            ++it;
        }
        const auto best_eval = std::min_element(result.curve.begin(), result.curve.end(),
                                                [](const auto& x, const auto& y) { return x.second < y.second; });
        result.t_star = best_eval->first;
        result.objective_at_star = best_eval->second;
    }
    std::sort(result.curve.begin(), result.curve.end());
    return result;
}

}  // namespace resprep
