#include "resprep/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/tools/minima.hpp>

#include "resprep/errors.hpp"

namespace resprep {

namespace {

constexpr complex I{0.0, 1.0};

std::size_t node_count(double length, double dx)
{
    return static_cast<std::size_t>(std::floor(length / dx + 1e-9)) + 1;
}

bool all_finite(std::span<const complex> psi)
{
    return std::all_of(psi.begin(), psi.end(),
                        [](const complex& v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); });
}

double grid_norm(std::span<const complex> psi, double dx)
{
    double s = 0.0;
    for (const auto& v : psi) {
        s += std::norm(v);
    }
    return s * dx;
}

double max_abs(std::span<const complex> psi)
{
    double m = 0.0;
    for (const auto& v : psi) {
        m = std::max(m, std::norm(v));
    }
    return std::sqrt(m);
}

/// Largest |psi| over the outer `fraction` of the grid.
double edge_abs(std::span<const complex> psi, double fraction)
{
    const auto n = psi.size();
    const auto start = n - std::max<std::size_t>(1, static_cast<std::size_t>(fraction * static_cast<double>(n)));
    return max_abs(psi.subspan(start));
}

long steps_for(double t, double dt) { return std::lround(t / dt); }

}  // namespace

double PropagationSetup::dx_bound() const
{
    const double v_w = std::max(schedule.initial.v_well, schedule.final.v_well);
    const double k_max = std::sqrt(2.0 * (e_cut + v_w) / unit.kappa);
    return 2.0 * std::numbers::pi / (20.0 * k_max);
}

void PropagationSetup::validate() const
{
    schedule.validate();
    if (!(dx > 0.0) || !(dt > 0.0) || !(t_end >= 0.0) || !(e_cut > 0.0) || !(record_interval > 0.0)) {
        throw InvalidArgument("PropagationSetup: dx, dt, e_cut and record_interval must be positive, t_end >= 0");
    }
    const double edge = std::max(schedule.initial.outer_edge(), schedule.final.outer_edge());
    if (!(box_length > edge)) {
        throw InvalidArgument("PropagationSetup: box must extend beyond the barrier");
    }
    if (dx > dx_bound()) {
        std::ostringstream msg;
        msg << "PropagationSetup: dx = " << dx << " um exceeds the wavelength bound " << dx_bound() << " um";
        throw ResolutionError(msg.str());
    }
    if (absorber) {
        if (!(absorber->width_fraction > 0.0 && absorber->width_fraction < 1.0) || absorber->strength < 0.0 ||
            !(absorber->band_hi > absorber->band_lo && absorber->band_lo > 0.0)) {
            throw InvalidArgument("PropagationSetup: invalid absorber");
        }
        if (grow_box) {
            throw InvalidArgument("PropagationSetup: a growing box cannot carry an absorber");
        }
        if (box_length * (1.0 - absorber->width_fraction) <= edge) {
            throw InvalidArgument("PropagationSetup: absorber overlaps the potential");
        }
    } else if (!grow_box) {
        const double v_cut = unit.kappa * std::sqrt(2.0 * e_cut / unit.kappa);
        if (box_length < edge + v_cut * t_end) {
            std::ostringstream msg;
            msg << "PropagationSetup: box of " << box_length << " um without absorber is shorter than "
                << edge + v_cut * t_end << " um needed to hold the outgoing flux";
            throw InvalidArgument(msg.str());
        }
    }
    for (double t : snapshot_times) {
        if (t < 0.0 || t > t_end + 0.5 * dt) {
            throw InvalidArgument("PropagationSetup: snapshot time outside [0, t_end]");
        }
    }
}

PropagationSetup decay_profile(const SwitchingSchedule& schedule, const UnitSystem& unit)
{
    PropagationSetup s;
    s.schedule = schedule;
    s.unit = unit;
    s.box_length = 300.0;
    s.t_end = 2.5;
    s.absorber = AbsorberSpec{};
    return s;
}

PropagationSetup spectrum_profile(const SwitchingSchedule& schedule, double t_end, const UnitSystem& unit)
{
    PropagationSetup s;
    s.schedule = schedule;
    s.unit = unit;
    s.t_end = t_end;
    s.box_length = std::max(schedule.initial.outer_edge(), schedule.final.outer_edge()) + 100.0;
    s.grow_box = true;
    // Once the switch is over the step is unitary and commutes with H, so a
    // longer step only needs to resolve the switching itself.
    s.dt = std::clamp(schedule.t_switch / 100.0, 2e-4, 1e-3);
    return s;
}

double non_escape_probability(const WavefunctionGrid& psi, double d)
{
    if (!(d > 0.0) || psi.size() < 2 || psi.length() < d * (1.0 - 1e-12)) {
        throw InvalidArgument("non_escape_probability: grid does not cover [0, d]");
    }
    const double cells = (d - psi.x0) / psi.dx;
    auto whole = static_cast<std::size_t>(std::floor(cells + 1e-9));
    whole = std::min(whole, psi.size() - 1);
    double sum = 0.0;
    for (std::size_t j = 0; j < whole; ++j) {
        sum += 0.5 * (std::norm(psi.values[j]) + std::norm(psi.values[j + 1]));
    }
    sum *= psi.dx;
    const double rest = cells - static_cast<double>(whole);
    if (rest > 1e-9 && whole + 1 < psi.size()) {
        const double a = std::norm(psi.values[whole]);
        const double b = std::norm(psi.values[whole + 1]);
        const double at_d = a + rest * (b - a);
        sum += 0.5 * (a + at_d) * rest * psi.dx;
    }
    return sum;
}

CrankNicolson::CrankNicolson(const SwitchingSchedule& schedule, const UnitSystem& unit, double dx, std::size_t n,
                             std::vector<double> absorber)
    : schedule_(schedule),
      kappa_(unit.kappa),
      dx_(dx),
      v_initial_(sample_interval_averages(schedule.initial, dx, n)),
      v_final_(sample_interval_averages(schedule.final, dx, n)),
      absorber_(std::move(absorber))
{
    if (n < 3) {
        throw InvalidArgument("CrankNicolson: grid needs at least three nodes");
    }
    if (absorber_.empty()) {
        absorber_.assign(n, 0.0);
    } else if (absorber_.size() != n) {
        throw InvalidArgument("CrankNicolson: absorber size mismatch");
    }
}

void CrankNicolson::extend(std::size_t extra)
{
    if (absorber_.back() != 0.0) {
        throw InvalidArgument("CrankNicolson: cannot extend a box with an absorber");
    }
    const auto n = size() + extra;
    v_initial_ = sample_interval_averages(schedule_.initial, dx_, n);
    v_final_ = sample_interval_averages(schedule_.final, dx_, n);
    absorber_.resize(n, 0.0);
}

std::vector<double> CrankNicolson::potential(double t) const
{
    const double w = schedule_.initial_weight(t);
    std::vector<double> v(size());
    for (std::size_t j = 0; j < v.size(); ++j) {
        v[j] = v_final_[j] + (v_initial_[j] - v_final_[j]) * w;
    }
    return v;
}

void CrankNicolson::step(std::vector<complex>& psi, double t, double dt)
{
    const std::size_t n = size();
    if (psi.size() != n) {
        throw InvalidArgument("CrankNicolson::step: state size mismatch");
    }
    const double a = kappa_ / (2.0 * dx_ * dx_);
    // For negative dt the half step lies before t; only static potentials
    // are run backwards, where the weight no longer matters.
    const double w = schedule_.initial_weight(std::max(0.0, t + 0.5 * dt));
    const complex half = 0.5 * I * dt;
    diag_.resize(n);
    upper_.resize(n);
    rhs_.resize(n);
    cprime_.resize(n);
    psi[0] = 0.0;
    // H is tridiagonal: h_j on the diagonal, g_j coupling nodes j and j + 1.
    double v_left = v_final_[0] + (v_initial_[0] - v_final_[0]) * w;
    for (std::size_t j = 1; j < n; ++j) {
        const double v_right = v_final_[j] + (v_initial_[j] - v_final_[j]) * w;
        const complex h{2.0 * a + (v_left + v_right) / 3.0, -absorber_[j]};
        const double g_left = -a + v_left / 6.0;
        const double g_right = -a + v_right / 6.0;
        diag_[j] = 1.0 + half * h;
        upper_[j] = half * g_right;
        const complex right = j + 1 < n ? psi[j + 1] : complex{0.0, 0.0};
        rhs_[j] = (1.0 - half * h) * psi[j] - half * (g_left * psi[j - 1] + g_right * right);
        v_left = v_right;
    }
    // Thomas algorithm on unknowns 1..n-1; the matrix is symmetric, so the
    // sub-diagonal entry of row j is upper_[j - 1].
    cprime_[1] = upper_[1] / diag_[1];
    rhs_[1] /= diag_[1];
    for (std::size_t j = 2; j < n; ++j) {
        const complex m = 1.0 / (diag_[j] - upper_[j - 1] * cprime_[j - 1]);
        cprime_[j] = upper_[j] * m;
        rhs_[j] = (rhs_[j] - upper_[j - 1] * rhs_[j - 1]) * m;
    }
    psi[n - 1] = rhs_[n - 1];
    for (std::size_t j = n - 1; j-- > 1;) {
        psi[j] = rhs_[j] - cprime_[j] * psi[j + 1];
    }
}

std::pair<std::vector<complex>, std::vector<complex>> CrankNicolson::apply_parts(std::span<const complex> psi,
                                                                                 double t) const
{
    const std::size_t n = size();
    if (psi.size() != n) {
        throw InvalidArgument("CrankNicolson::apply: state size mismatch");
    }
    const double a = kappa_ / (2.0 * dx_ * dx_);
    const auto v = potential(t);
    std::vector<complex> kinetic(n, complex{0.0, 0.0});
    std::vector<complex> pot(n, complex{0.0, 0.0});
    for (std::size_t j = 1; j < n; ++j) {
        const complex right = j + 1 < n ? psi[j + 1] : complex{0.0, 0.0};
        kinetic[j] = -a * (right - 2.0 * psi[j] + psi[j - 1]);
        pot[j] = (v[j - 1] + v[j]) / 3.0 * psi[j] + (v[j - 1] * psi[j - 1] + v[j] * right) / 6.0;
    }
    return {std::move(kinetic), std::move(pot)};
}

std::vector<complex> CrankNicolson::apply(std::span<const complex> psi, double t) const
{
    auto [out, pot] = apply_parts(psi, t);
    for (std::size_t j = 0; j < out.size(); ++j) {
        out[j] += pot[j] - I * absorber_[j] * psi[j];
    }
    return out;
}

double CrankNicolson::energy(std::span<const complex> psi, double t) const
{
    const auto h = apply(psi, t);
    complex num{0.0, 0.0};
    double den = 0.0;
    for (std::size_t j = 0; j < psi.size(); ++j) {
        num += std::conj(psi[j]) * h[j];
        den += std::norm(psi[j]);
    }
    return num.real() / den;
}

std::vector<complex> CrankNicolson::solve_shifted(std::span<const complex> rhs, double t, double shift) const
{
    const std::size_t n = size();
    if (rhs.size() != n) {
        throw InvalidArgument("CrankNicolson::solve_shifted: size mismatch");
    }
    const double a = kappa_ / (2.0 * dx_ * dx_);
    const auto v = potential(t);
    std::vector<complex> c(n), x(n, complex{0.0, 0.0});
    std::vector<complex> r(rhs.begin(), rhs.end());
    auto diag = [&](std::size_t j) { return complex{2.0 * a + (v[j - 1] + v[j]) / 3.0 - shift, -absorber_[j]}; };
    auto upper = [&](std::size_t j) { return -a + v[j] / 6.0; };
    complex d = diag(1);
    c[1] = upper(1) / d;
    r[1] /= d;
    for (std::size_t j = 2; j < n; ++j) {
        const complex m = 1.0 / (diag(j) - upper(j - 1) * c[j - 1]);
        c[j] = upper(j) * m;
        r[j] = (r[j] - upper(j - 1) * r[j - 1]) * m;
    }
    x[n - 1] = r[n - 1];
    for (std::size_t j = n - 1; j-- > 1;) {
        x[j] = r[j] - c[j] * x[j + 1];
    }
    return x;
}

std::vector<complex> refine_eigenstate(const CrankNicolson& stepper, std::span<const complex> psi, double t,
                                       int iterations)
{
    const double shift = stepper.energy(psi, t);
    std::vector<complex> x(psi.begin(), psi.end());
    for (int it = 0; it < iterations; ++it) {
        x = stepper.solve_shifted(x, t, shift);
        const double scale = 1.0 / std::sqrt(grid_norm(x, stepper.dx()));
        for (auto& v : x) {
            v *= scale;
        }
    }
    complex proj{0.0, 0.0};
    for (std::size_t j = 0; j < x.size(); ++j) {
        proj += std::conj(x[j]) * psi[j];
    }
    const complex phase = std::abs(proj) > 0.0 ? proj / std::abs(proj) : complex{1.0, 0.0};
    for (auto& v : x) {
        v *= phase;
    }
    x[0] = 0.0;
    return x;
}

std::vector<double> absorber_profile(std::size_t n, double width_fraction, double strength)
{
    std::vector<double> w(n, 0.0);
    const double start = (1.0 - width_fraction) * static_cast<double>(n - 1);
    const double width = static_cast<double>(n - 1) - start;
    for (std::size_t j = 0; j < n; ++j) {
        const double s = (static_cast<double>(j) - start) / width;
        if (s > 0.0) {
            w[j] = strength * s * s * s;
        }
    }
    return w;
}

double absorber_reflection(std::span<const double> layer, double dx, double kappa, double e)
{
    const double a = kappa / (2.0 * dx * dx);
    const double c = 1.0 - e / (2.0 * a);
    if (!(e > 0.0) || c <= -1.0) {
        throw InvalidArgument("absorber_reflection: energy outside the lattice band");
    }
    // Two free nodes in front of the layer and the wall node behind it.
    std::vector<double> w;
    w.reserve(layer.size() + 3);
    w.push_back(0.0);
    w.push_back(0.0);
    w.insert(w.end(), layer.begin(), layer.end());
    w.push_back(0.0);
    const std::size_t m = w.size();
    std::vector<complex> psi(m + 1, complex{0.0, 0.0});
    psi[m - 1] = 1.0;  // psi[m] = 0 is the wall
    for (std::size_t j = m - 1; j >= 1; --j) {
        psi[j - 1] = ((complex{2.0 * a - e, -w[j]}) * psi[j] - a * psi[j + 1]) / a;
        // Keep the recurrence in range; only the ratio psi[0]/psi[1] matters.
        const double mag = std::abs(psi[j - 1]);
        if (mag > 1e100) {
            for (std::size_t i = j - 1; i <= m; ++i) {
                psi[i] /= mag;
            }
        }
    }
    const double k = std::acos(c) / dx;
    // psi_j = A e^{ikx_j} + B e^{-ikx_j} on the first two nodes.
    const complex p = std::exp(I * k * dx);
    const complex det = 1.0 / p - p;
    const complex amp_in = (psi[0] / p - psi[1]) / det;
    const complex amp_out = (psi[1] - psi[0] * p) / det;
    return std::abs(amp_out / amp_in);
}

double tune_absorber_strength(double layer_width, double dx, double kappa, double band_lo, double band_hi)
{
    const auto n = node_count(layer_width, dx);
    constexpr int band_points = 24;
    auto worst = [&](double log_strength) {
        const auto layer = absorber_profile(n, 1.0, std::exp(log_strength));
        double r = 0.0;
        for (int i = 0; i < band_points; ++i) {
            const double e = band_lo * std::pow(band_hi / band_lo, static_cast<double>(i) / (band_points - 1));
            r = std::max(r, absorber_reflection(layer, dx, kappa, e));
        }
        return std::log(r);
    };
    // Coarse scan, then Brent around the best sample.
    const double lo = std::log(1.0);
    const double hi = std::log(1e6);
    constexpr int scan = 25;
    int best = 0;
    double best_value = worst(lo);
    for (int i = 1; i < scan; ++i) {
        const double v = worst(lo + (hi - lo) * i / (scan - 1));
        if (v < best_value) {
            best_value = v;
            best = i;
        }
    }
    const double step = (hi - lo) / (scan - 1);
    const double centre = lo + step * best;
    const auto [x, fx] = boost::math::tools::brent_find_minima(worst, centre - step, centre + step, 30);
    (void)fx;
    return std::exp(x);
}

PropagationResult propagate(const WavefunctionGrid& initial, const PropagationSetup& setup)
{
    setup.validate();
    if (!(std::abs(initial.dx - setup.dx) <= 1e-12 * setup.dx) || initial.x0 != 0.0) {
        throw InvalidArgument("propagate: initial grid does not match the setup");
    }
    if (setup.accuracy_check) {
        check_time_resolution(initial, setup);
    }
    const std::size_t n = std::max(node_count(setup.box_length, setup.dx), initial.size());
    std::vector<complex> psi(n, complex{0.0, 0.0});
    std::copy(initial.values.begin(), initial.values.end(), psi.begin());
    psi[0] = 0.0;

    PropagationResult result;
    std::vector<double> layer;
    if (setup.absorber) {
        const auto& ab = *setup.absorber;
        result.absorber_strength =
            ab.strength > 0.0 ? ab.strength
                              : tune_absorber_strength(ab.width_fraction * setup.box_length, setup.dx,
                                                       setup.unit.kappa, ab.band_lo, ab.band_hi);
        layer = absorber_profile(n, ab.width_fraction, result.absorber_strength);
    }
    CrankNicolson stepper(setup.schedule, setup.unit, setup.dx, n, std::move(layer));
    if (setup.refine_initial_state) {
        psi = refine_eigenstate(stepper, psi, 0.0);
    }

    const long total = steps_for(setup.t_end, setup.dt);
    const long record_every = std::max(1L, steps_for(setup.record_interval, setup.dt));
    std::vector<std::pair<long, double>> wanted;
    for (double t : setup.snapshot_times) {
        wanted.emplace_back(steps_for(t, setup.dt), t);
    }
    std::stable_sort(wanted.begin(), wanted.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::size_t next_snapshot = 0;
    const double d = setup.schedule.final.d;

    auto as_grid = [&](const std::vector<complex>& v) {
        WavefunctionGrid g;
        g.dx = setup.dx;
        g.values = v;
        return g;
    };
    auto observe = [&](long step) {
        const double t = static_cast<double>(step) * setup.dt;
        WavefunctionGrid view;
        view.dx = setup.dx;
        const auto cells = std::min(psi.size(), node_count(d, setup.dx) + 2);
        view.values.assign(psi.begin(), psi.begin() + static_cast<std::ptrdiff_t>(cells));
        result.record.times.push_back(t);
        result.record.p_w.push_back(non_escape_probability(view, d));
        result.record.norm.push_back(grid_norm(psi, setup.dx));
        while (next_snapshot < wanted.size() && wanted[next_snapshot].first == step) {
            result.snapshots.push_back({wanted[next_snapshot].second, t, step, as_grid(psi)});
            ++next_snapshot;
        }
    };

    constexpr long growth_check_every = 20;
    observe(0);
    for (long s = 0; s < total; ++s) {
        stepper.step(psi, static_cast<double>(s) * setup.dt, setup.dt);
        const long step = s + 1;
        if (step % 256 == 0 && !all_finite(psi)) {
            throw NumericalBlowup("propagate: non-finite wavefunction at step " + std::to_string(step), step);
        }
        if (setup.grow_box && step % growth_check_every == 0) {
            const double peak = max_abs(psi);
            if (edge_abs(psi, 0.05) > setup.growth_threshold * peak) {
                const std::size_t extra = std::max<std::size_t>(psi.size() / 4, node_count(100.0, setup.dx));
                if (psi.size() + extra > setup.max_points) {
                    throw ContainmentError("propagate: growing box exceeded " + std::to_string(setup.max_points) +
                                           " nodes at t = " + std::to_string(step * setup.dt) + " s");
                }
                stepper.extend(extra);
                psi.resize(psi.size() + extra, complex{0.0, 0.0});
            }
        }
        const bool snapshot_due = next_snapshot < wanted.size() && wanted[next_snapshot].first == step;
        if (step % record_every == 0 || step == total || snapshot_due) {
            if (!all_finite(psi)) {
                throw NumericalBlowup("propagate: non-finite wavefunction at step " + std::to_string(step), step);
            }
            observe(step);
        }
    }
    result.steps = total;
    result.final_state = as_grid(psi);
    return result;
}

void check_time_resolution(const WavefunctionGrid& initial, const PropagationSetup& setup)
{
    const double window = std::min(setup.accuracy_window, setup.t_end);
    if (!(window > 0.0)) {
        return;
    }
    const std::size_t n = std::max(node_count(setup.box_length, setup.dx), initial.size());
    auto run = [&](double dt) {
        std::vector<complex> psi(n, complex{0.0, 0.0});
        std::copy(initial.values.begin(), initial.values.end(), psi.begin());
        CrankNicolson stepper(setup.schedule, setup.unit, setup.dx, n);
        const long steps = steps_for(window, dt);
        for (long s = 0; s < steps; ++s) {
            stepper.step(psi, static_cast<double>(s) * dt, dt);
        }
        return stepper.energy(psi, window);
    };
    const double coarse = run(setup.dt);
    const double fine = run(0.5 * setup.dt);
    const double drift = std::abs(coarse - fine) / std::max(std::abs(fine), 1e-300);
    if (drift > 1e-3) {
        std::ostringstream msg;
        msg << "time step " << setup.dt << " s too coarse: energy expectation differs by " << drift * 100.0
            << "% from the dt/2 run; reduce dt";
        throw ResolutionError(msg.str());
    }
}

double eigen_residual(const PotentialConfig& config, const UnitSystem& unit, const WavefunctionGrid& psi,
                      double energy)
{
    const CrankNicolson op({config, config, 0.0}, unit, psi.dx, psi.size());
    const auto [kinetic, potential] = op.apply_parts(psi.values, 0.0);
    double r = 0.0, k = 0.0, v = 0.0;
    for (std::size_t j = 0; j < psi.size(); ++j) {
        r += std::norm(kinetic[j] + potential[j] - energy * psi.values[j]);
        k += std::norm(kinetic[j]);
        v += std::norm(potential[j]);
    }
    return std::sqrt(r) / (std::sqrt(k) + std::sqrt(v));
}

}  // namespace resprep
