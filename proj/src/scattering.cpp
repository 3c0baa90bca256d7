#include "resprep/scattering.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "resprep/errors.hpp"

namespace resprep {

namespace {

constexpr complex I{0.0, 1.0};
const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);

/// cos(z w), sin(z w)/z and their derivatives with respect to s = z^2.
struct EvenPairWithSlope {
    complex cosine;
    complex sine_over;
    complex cosine_ds;
    complex sine_over_ds;
};

// Below this |s w^2| the power series is used; 12 terms reach machine precision.
constexpr double series_threshold = 1e-2;

EvenPairWithSlope even_pair_with_slope(complex s, double w)
{
    EvenPairWithSlope p;
    const complex x = s * w * w;
    if (std::abs(x) < series_threshold) {
        // cos = sum (-x)^n/(2n)!, sin/z = w sum (-x)^n/(2n+1)!,
        // d(sin/z)/ds = w^3 sum_{n>=1} (-1)^n n x^(n-1) / (2n+1)!
        complex term_c{1.0, 0.0};
        complex term_s{1.0, 0.0};
        complex term_d{-1.0 / 6.0, 0.0};  // (-1)^n x^(n-1) / (2n+1)!, starting at n = 1
        complex cos_sum{0.0, 0.0};
        complex sin_sum{0.0, 0.0};
        complex dsin_sum{0.0, 0.0};
        for (int n = 0; n < 12; ++n) {
            cos_sum += term_c;
            sin_sum += term_s;
            dsin_sum += static_cast<double>(n + 1) * term_d;
            term_c *= -x / static_cast<double>((2 * n + 1) * (2 * n + 2));
            term_s *= -x / static_cast<double>((2 * n + 2) * (2 * n + 3));
            term_d *= -x / static_cast<double>((2 * n + 4) * (2 * n + 5));
        }
        p.cosine = cos_sum;
        p.sine_over = w * sin_sum;
        p.cosine_ds = -0.5 * w * p.sine_over;
        p.sine_over_ds = w * w * w * dsin_sum;
        return p;
    }
    const complex z = std::sqrt(s);
    p.cosine = std::cos(z * w);
    p.sine_over = std::sin(z * w) / z;
    p.cosine_ds = -0.5 * w * p.sine_over;
    p.sine_over_ds = (w * p.cosine - p.sine_over) / (2.0 * s);
    return p;
}

double wrap_to_pi(double a)
{
    const double two_pi = 2.0 * std::numbers::pi;
    a = std::remainder(a, two_pi);
    return a;
}

}  // namespace

ChannelWavenumbers channel_wavenumbers(const PotentialConfig& config, const UnitSystem& unit, complex k)
{
    return {k, std::sqrt(k * k + 2.0 * config.v_well / unit.kappa),
            std::sqrt(k * k - 2.0 * config.v_barrier / unit.kappa)};
}

EvenPair even_pair(complex z_squared, double width)
{
    const auto p = even_pair_with_slope(z_squared, width);
    return {p.cosine, p.sine_over};
}

EvenPair even_pair_from_root(complex z, double width)
{
    if (z == complex{0.0, 0.0}) {
        return {1.0, width};
    }
    return {std::cos(z * width), std::sin(z * width) / z};
}

EdgeValues edge_values(const PotentialConfig& config, const UnitSystem& unit, complex k)
{
    const complex s_well = k * k + 2.0 * config.v_well / unit.kappa;
    const auto well = even_pair_with_slope(s_well, config.d);
    const complex u_d = well.sine_over;
    const complex v_d = well.cosine;
    const complex du_d = 2.0 * k * well.sine_over_ds;
    const complex dv_d = 2.0 * k * well.cosine_ds;
    if (config.b == 0.0) {
        return {u_d, v_d, du_d, dv_d};
    }
    const complex s_bar = k * k - 2.0 * config.v_barrier / unit.kappa;
    const auto bar = even_pair_with_slope(s_bar, config.b);
    const complex dc = 2.0 * k * bar.cosine_ds;
    const complex ds = 2.0 * k * bar.sine_over_ds;

    EdgeValues e;
    e.value = u_d * bar.cosine + v_d * bar.sine_over;
    e.slope = -s_bar * u_d * bar.sine_over + v_d * bar.cosine;
    e.value_dk = du_d * bar.cosine + u_d * dc + dv_d * bar.sine_over + v_d * ds;
    e.slope_dk = -2.0 * k * u_d * bar.sine_over - s_bar * (du_d * bar.sine_over + u_d * ds) +
                 dv_d * bar.cosine + v_d * dc;
    return e;
}

OmegaTerms omega_terms(const PotentialConfig& config, const UnitSystem& unit, complex k)
{
    const auto e = edge_values(config, unit, k);
    OmegaTerms t;
    t.value = e.slope - I * k * e.value;
    // Channel split of the outermost interior region (the well when b = 0).
    complex z;
    complex value_in;
    complex slope_in;
    double width;
    if (config.b == 0.0) {
        z = std::sqrt(k * k + 2.0 * config.v_well / unit.kappa);
        value_in = 0.0;
        slope_in = 1.0;
        width = config.d;
    } else {
        z = std::sqrt(k * k - 2.0 * config.v_barrier / unit.kappa);
        const auto well = even_pair(k * k + 2.0 * config.v_well / unit.kappa, config.d);
        value_in = well.sine_over;
        slope_in = well.cosine;
        width = config.b;
    }
    if (std::abs(z) * width < 1e-6) {
        // At the branch point the split degenerates; fall back to the edge terms.
        t.growing_term = e.slope;
        t.decaying_term = I * k * e.value;
        return t;
    }
    t.magnitude_bound = std::exp(std::abs(z.imag()) * width) * (std::abs(z) + std::abs(k)) *
                        (std::abs(slope_in) + std::abs(z) * std::abs(value_in)) / (2.0 * std::abs(z));
    t.growing_term = std::exp(I * z * width) * (z - k) * (slope_in + I * z * value_in) / (2.0 * z);
    t.decaying_term = std::exp(-I * z * width) * (z + k) * (slope_in - I * z * value_in) / (2.0 * z);
    return t;
}

complex omega(const PotentialConfig& config, const UnitSystem& unit, complex k)
{
    const auto e = edge_values(config, unit, k);
    return e.slope - I * k * e.value;
}

complex omega_derivative(const PotentialConfig& config, const UnitSystem& unit, complex k)
{
    const auto e = edge_values(config, unit, k);
    return e.slope_dk - I * e.value - I * k * e.value_dk;
}

bool is_pole(const PotentialConfig& config, const UnitSystem& unit, complex k, double relative_tolerance)
{
    const auto t = omega_terms(config, unit, k);
    return std::abs(t.value) < relative_tolerance * t.scale();
}

complex s_matrix(const PotentialConfig& config, const UnitSystem& unit, double k)
{
    const auto e = edge_values(config, unit, k);
    const double edge = config.outer_edge();
    return std::exp(-2.0 * I * k * edge) * (e.slope + I * k * e.value) / (e.slope - I * k * e.value);
}

ScatteringSolution solve_scattering(const PotentialConfig& config, const UnitSystem& unit, double k)
{
    if (!(k > 0.0) || !std::isfinite(k)) {
        throw InvalidArgument("solve_scattering: k must be positive");
    }
    config.validate();
    const auto e = edge_values(config, unit, k);
    const double edge = config.outer_edge();
    const complex om = e.slope - I * k * e.value;

    ScatteringSolution sol;
    sol.k = k;
    sol.d = config.d;
    sol.b = config.b;
    const auto ch = channel_wavenumbers(config, unit, k);
    sol.q = ch.q;
    sol.q_prime = ch.q_prime;
    sol.q_squared = k * k + 2.0 * config.v_well / unit.kappa;
    sol.q_prime_squared = k * k - 2.0 * config.v_barrier / unit.kappa;
    sol.s = std::exp(-2.0 * I * k * edge) * (e.slope + I * k * e.value) / om;
    sol.delta = 0.5 * std::arg(sol.s);
    if (sol.delta <= -0.5 * std::numbers::pi) {
        sol.delta += std::numbers::pi;
    }
    sol.amplitude = -2.0 * I * k * std::exp(-I * k * edge) / om;

    const auto well = even_pair(sol.q_squared, config.d);
    sol.u_d = well.sine_over;
    sol.slope_d = well.cosine;

    sol.c1 = sol.amplitude / (2.0 * I * sol.q);
    sol.c2 = -sol.c1;
    if (sol.q_prime == complex{0.0, 0.0}) {
        sol.c3 = sol.amplitude * sol.u_d;
        sol.c4 = sol.amplitude * sol.slope_d;
    } else {
        const complex qp = sol.q_prime;
        sol.c3 = sol.amplitude * std::exp(-I * qp * config.d) * (0.5 * sol.u_d + sol.slope_d / (2.0 * I * qp));
        sol.c4 = sol.amplitude * std::exp(I * qp * config.d) * (0.5 * sol.u_d - sol.slope_d / (2.0 * I * qp));
    }
    return sol;
}

complex ScatteringSolution::evaluate(double x) const
{
    if (x <= 0.0) {
        return 0.0;
    }
    if (x <= d) {
        return inv_sqrt_2pi * amplitude * even_pair(q_squared, x).sine_over;
    }
    if (x <= d + b) {
        const auto p = even_pair(q_prime_squared, x - d);
        return inv_sqrt_2pi * amplitude * (u_d * p.cosine + slope_d * p.sine_over);
    }
    return inv_sqrt_2pi * (std::exp(-I * k * x) - s * std::exp(I * k * x));
}

complex ScatteringSolution::derivative(double x) const
{
    if (x < 0.0) {
        return 0.0;
    }
    if (x <= d) {
        return inv_sqrt_2pi * amplitude * even_pair(q_squared, x).cosine;
    }
    if (x <= d + b) {
        const auto p = even_pair(q_prime_squared, x - d);
        return inv_sqrt_2pi * amplitude * (-q_prime_squared * u_d * p.sine_over + slope_d * p.cosine);
    }
    return inv_sqrt_2pi * (-I * k) * (std::exp(-I * k * x) + s * std::exp(I * k * x));
}

std::vector<complex> ScatteringSolution::sample(double dx, std::size_t n) const
{
    std::vector<complex> out(n);
    const double edge = d + b;
    const complex step = std::exp(I * k * dx);
    constexpr std::size_t resync = 512;
    complex forward;  // exp(ikx) carried by recurrence in the free region
    std::size_t since_sync = resync;
    for (std::size_t j = 0; j < n; ++j) {
        const double x = static_cast<double>(j) * dx;
        if (x <= edge) {
            out[j] = evaluate(x);
            continue;
        }
        if (since_sync >= resync) {
            forward = std::exp(I * k * x);
            since_sync = 0;
        } else {
            forward *= step;
        }
        ++since_sync;
        out[j] = inv_sqrt_2pi * (std::conj(forward) / std::norm(forward) - s * forward);
    }
    return out;
}

std::vector<double> unwrap_phase(std::span<const double> wrapped)
{
    std::vector<double> out(wrapped.begin(), wrapped.end());
    for (std::size_t i = 1; i < out.size(); ++i) {
        out[i] = out[i - 1] + wrap_to_pi(wrapped[i] - wrapped[i - 1]);
    }
    return out;
}

namespace {

/// Change of arg S across [k_lo, k_hi], subdividing until every piece moves
/// by at most pi/2 and agrees with its own midpoint split.
double arg_change(const PotentialConfig& config, const UnitSystem& unit, double k_lo, double a_lo, double k_hi,
                  double a_hi, int depth, int max_depth)
{
    const double half_pi = 0.5 * std::numbers::pi;
    const double k_mid = 0.5 * (k_lo + k_hi);
    const double a_mid = std::arg(s_matrix(config, unit, k_mid));
    const double whole = wrap_to_pi(a_hi - a_lo);
    const double first = wrap_to_pi(a_mid - a_lo);
    const double second = wrap_to_pi(a_hi - a_mid);
    if (std::abs(first) <= half_pi && std::abs(second) <= half_pi && std::abs(first + second - whole) < 1e-9) {
        return first + second;
    }
    if (depth >= max_depth || !(k_mid > k_lo && k_mid < k_hi)) {
        std::ostringstream msg;
        msg.precision(12);
        msg << "phase_shift_curve: cannot resolve the phase on [" << k_lo << ", " << k_hi << "]";
        throw RefinementFailure(msg.str(), k_lo, k_hi);
    }
    return arg_change(config, unit, k_lo, a_lo, k_mid, a_mid, depth + 1, max_depth) +
           arg_change(config, unit, k_mid, a_mid, k_hi, a_hi, depth + 1, max_depth);
}

}  // namespace

std::vector<double> phase_shift_curve(const PotentialConfig& config, const UnitSystem& unit,
                                      std::span<const double> k_grid, int max_depth)
{
    config.validate();
    std::vector<double> delta(k_grid.size());
    if (k_grid.empty()) {
        return delta;
    }
    for (std::size_t i = 0; i < k_grid.size(); ++i) {
        if (!(k_grid[i] > 0.0) || (i > 0 && !(k_grid[i] > k_grid[i - 1]))) {
            throw InvalidArgument("phase_shift_curve: grid must be positive and strictly ascending");
        }
    }
    double a_prev = std::arg(s_matrix(config, unit, k_grid[0]));
    double total = a_prev;
    delta[0] = 0.5 * total;
    for (std::size_t i = 1; i < k_grid.size(); ++i) {
        const double a = std::arg(s_matrix(config, unit, k_grid[i]));
        total += arg_change(config, unit, k_grid[i - 1], a_prev, k_grid[i], a, 0, max_depth);
        delta[i] = 0.5 * total;
        a_prev = a;
    }
    return delta;
}

double delay_time(const PotentialConfig& config, const UnitSystem& unit, double k)
{
    if (!(k > 0.0)) {
        throw InvalidArgument("delay_time: k must be positive");
    }
    auto central = [&](double h) {
        const double a_plus = std::arg(s_matrix(config, unit, k + h));
        const double a_minus = std::arg(s_matrix(config, unit, k - h));
        const double change = wrap_to_pi(a_plus - a_minus);
        if (std::abs(change) > 0.5 * std::numbers::pi) {
            return std::numeric_limits<double>::quiet_NaN();
        }
        return 0.5 * change / (2.0 * h);
    };
    double h = 1e-5 * k;
    for (int attempt = 0; attempt < 30; ++attempt, h *= 0.5) {
        const double coarse = central(h);
        const double fine = central(0.5 * h);
        if (std::isnan(coarse) || std::isnan(fine)) {
            continue;
        }
        const double slope = (4.0 * fine - coarse) / 3.0;
        return 2.0 * slope / (unit.kappa * k);
    }
    throw RefinementFailure("delay_time: phase varies too fast near k", k, k);
}

}  // namespace resprep
