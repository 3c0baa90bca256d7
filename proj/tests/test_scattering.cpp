#include <doctest.h>

#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "resprep/errors.hpp"
#include "resprep/poles.hpp"
#include "resprep/scattering.hpp"
#include "resprep/spectral.hpp"

using namespace resprep;

namespace {

const PotentialConfig initial_config{350.0, 400.0, 5.0, 10.0};
const PotentialConfig final_config{100.0, 200.0, 5.0, 10.0};
const UnitSystem unit = sodium23();
constexpr double pi = std::numbers::pi;
const complex I{0.0, 1.0};

/// u'' = (2/kappa)(V - E) u from u(0) = 0, u'(0) = 1 by classical RK4,
/// with the steps aligned to the region boundaries.
struct Shooting {
    std::vector<double> x;
    std::vector<double> u;
    double u_end = 0.0;
    double slope_end = 0.0;
};

Shooting shoot(const PotentialConfig& c, double energy, int steps_per_region)
{
    Shooting out;
    double pos = 0.0;
    double u = 0.0;
    double p = 1.0;
    out.x.push_back(pos);
    out.u.push_back(u);
    const std::array<std::pair<double, double>, 2> regions{{{c.d, -c.v_well}, {c.b, c.v_barrier}}};
    for (const auto& [width, v] : regions) {
        if (width <= 0.0) {
            continue;
        }
        const double h = width / steps_per_region;
        const double f = 2.0 * (v - energy) / unit.kappa;
        for (int i = 0; i < steps_per_region; ++i) {
            const double k1u = p, k1p = f * u;
            const double k2u = p + 0.5 * h * k1p, k2p = f * (u + 0.5 * h * k1u);
            const double k3u = p + 0.5 * h * k2p, k3p = f * (u + 0.5 * h * k2u);
            const double k4u = p + h * k3p, k4p = f * (u + h * k3u);
            u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
            p += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
            pos += h;
            out.x.push_back(pos);
            out.u.push_back(u);
        }
    }
    out.u_end = u;
    out.slope_end = p;
    return out;
}

/// S and the interior scale c from matching exp(-ikx) - S exp(ikx) = c u
/// at the outer edge.
std::pair<complex, complex> match_outside(double k, double r, double u, double slope)
{
    const complex em = std::exp(-I * k * r);
    const complex c = -2.0 * I * k * em / (slope - I * k * u);
    const complex s = (em - c * u) / std::exp(I * k * r);
    return {s, c};
}

/// Hard-wall square well: tan(kd + delta) = (k/q) tan(qd).
double square_well_delta(double v_well, double d, double k)
{
    const double q = std::sqrt(k * k + 2.0 * v_well / unit.kappa);
    return std::atan(k / q * std::tan(q * d)) - k * d;
}

double square_well_delta_dk(double v_well, double d, double k)
{
    const double q = std::sqrt(k * k + 2.0 * v_well / unit.kappa);
    const double dq = k / q;
    const double t = std::tan(q * d);
    const double f = k / q * t;
    const double df = t / q - k * t * dq / (q * q) + k / q * (1.0 + t * t) * d * dq;
    return df / (1.0 + f * f) - d;
}

PotentialConfig random_config(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> vw(0.0, 500.0), vb(0.0, 1000.0), dd(0.5, 10.0), bb(0.0, 15.0);
    const double v_well = vw(rng);
    const double v_barrier = vb(rng);
    const double d = dd(rng);
    const double b = bb(rng);
    return {v_well, v_barrier, d, b};
}

}  // namespace

TEST_CASE("channel wave numbers satisfy the dispersion relations")
{
    for (const complex k : {complex(0.3, -0.01), complex(0.0, 0.4), complex(1.1, 0.2)}) {
        const auto w = channel_wavenumbers(final_config, unit, k);
        CHECK(std::abs(w.q * w.q - k * k - 2.0 * 100.0 / unit.kappa) < 1e-14);
        CHECK(std::abs(k * k - w.q_prime * w.q_prime - 2.0 * 200.0 / unit.kappa) < 1e-14);
    }
}

TEST_CASE("even pairs are independent of the root branch")
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> re(-3.0, 3.0), w(0.0, 12.0);
    for (int i = 0; i < 100; ++i) {
        const complex z{re(rng), re(rng)};
        const double width = w(rng);
        const auto a = even_pair(z * z, width);
        const auto p = even_pair_from_root(z, width);
        const auto m = even_pair_from_root(-z, width);
        const double scale = 1.0 + std::abs(a.cosine) + std::abs(a.sine_over);
        CHECK(std::abs(a.cosine - p.cosine) < 1e-12 * scale);
        CHECK(std::abs(a.sine_over - p.sine_over) < 1e-12 * scale);
        CHECK(std::abs(p.cosine - m.cosine) < 1e-12 * scale);
        CHECK(std::abs(p.sine_over - m.sine_over) < 1e-12 * scale);
    }
    CHECK(even_pair(0.0, 2.5).sine_over == complex(2.5));
    CHECK(even_pair(0.0, 2.5).cosine == complex(1.0));
}

TEST_CASE("bare hard wall")
{
    const PotentialConfig bare{0.0, 0.0, 5.0, 10.0};
    for (const double k : {0.05, 0.312, 1.7}) {
        const auto sol = solve_scattering(bare, unit, k);
        CHECK(std::abs(sol.s - 1.0) < 1e-12);
        // psi = -2i sin(kx) / sqrt(2 pi)
        for (const double x : {0.3, 5.0, 12.0, 40.0}) {
            const complex expected = -2.0 * I * std::sin(k * x) / std::sqrt(2.0 * pi);
            CHECK(std::abs(sol.evaluate(x) - expected) < 1e-12);
        }
        CHECK(delay_time(bare, unit, k) == doctest::Approx(0.0).epsilon(1e-9));
    }
    std::vector<double> grid;
    for (int i = 1; i <= 50; ++i) {
        grid.push_back(0.04 * i);
    }
    for (const double delta : phase_shift_curve(bare, unit, grid)) {
        CHECK(std::abs(delta) < 1e-12);
    }
}

TEST_CASE("final configuration against RK4 shooting")
{
    const double k = 0.312;
    const double energy = unit.kinetic_energy(k);
    const auto sol = solve_scattering(final_config, unit, k);
    CHECK(std::abs(std::abs(sol.s) - 1.0) < 1e-10);

    const auto shot = shoot(final_config, energy, 40000);
    const auto [s, c] = match_outside(k, final_config.outer_edge(), shot.u_end, shot.slope_end);
    CHECK(std::abs(sol.s - s) < 1e-8);
    double worst = 0.0;
    double largest = 0.0;
    for (std::size_t i = 0; i < shot.x.size(); i += 997) {
        const complex oracle = c * shot.u[i] / std::sqrt(2.0 * pi);
        worst = std::max(worst, std::abs(sol.evaluate(shot.x[i]) - oracle));
        largest = std::max(largest, std::abs(oracle));
    }
    CHECK(worst / largest < 1e-8);
}

TEST_CASE("matching conditions hold at the hard wall and both steps")
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> kd(0.01, 2.0);
    for (int i = 0; i < 20; ++i) {
        const auto c = random_config(rng);
        const double k = kd(rng);
        const auto sol = solve_scattering(c, unit, k);
        CHECK(std::abs(sol.evaluate(0.0)) < 1e-12);
        double scale = 0.0;
        for (double x = 0.0; x < c.outer_edge() + 5.0; x += 0.01) {
            scale = std::max({scale, std::abs(sol.evaluate(x)), std::abs(sol.derivative(x)) / k});
        }
        for (const double edge : {c.d, c.outer_edge()}) {
            const double lo = std::nextafter(edge, 0.0);
            const double hi = std::nextafter(edge, 1e9);
            CHECK(std::abs(sol.evaluate(lo) - sol.evaluate(hi)) < 1e-10 * scale);
            CHECK(std::abs(sol.derivative(lo) - sol.derivative(hi)) < 1e-10 * scale * k);
        }
    }
}

TEST_CASE("no barrier reduces to the hard-wall square well")
{
    const PotentialConfig well{100.0, 0.0, 5.0, 0.0};
    for (const double k : {0.05, 0.2, 0.5, 1.3}) {
        const complex expected = std::exp(2.0 * I * square_well_delta(100.0, 5.0, k));
        CHECK(std::abs(s_matrix(well, unit, k) - expected) < 1e-12);
        // the barrier height is irrelevant when b = 0
        CHECK(std::abs(s_matrix(PotentialConfig{100.0, 500.0, 5.0, 0.0}, unit, k) - expected) < 1e-12);
    }
}

TEST_CASE("delay time matches the analytic derivative without a barrier")
{
    const PotentialConfig well{100.0, 0.0, 5.0, 0.0};
    for (const double k : {0.07, 0.2, 0.5, 1.3}) {
        const double expected = 2.0 / (unit.kappa * k) * square_well_delta_dk(100.0, 5.0, k);
        CHECK(delay_time(well, unit, k) == doctest::Approx(expected).epsilon(1e-6));
    }
}

TEST_CASE("unitarity on random configurations")
{
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> kd(1e-3, 2.5);
    for (int i = 0; i < 100; ++i) {
        const auto c = random_config(rng);
        const double k = kd(rng);
        CHECK(std::abs(std::abs(s_matrix(c, unit, k)) - 1.0) < 1e-10);
    }
}

TEST_CASE("barrier branch point uses the linear limit")
{
    const double k0 = std::sqrt(2.0 * 200.0 / unit.kappa);
    const auto at = solve_scattering(final_config, unit, k0);
    CHECK(std::abs(std::abs(at.s) - 1.0) < 1e-10);
    const auto near = s_matrix(final_config, unit, k0 * (1.0 + 1e-9));
    CHECK(std::abs(at.s - near) < 1e-6);
    CHECK_THROWS_AS(solve_scattering(final_config, unit, 0.0), InvalidArgument);
    CHECK_THROWS_AS(solve_scattering(final_config, unit, -0.1), InvalidArgument);
}

TEST_CASE("phase unwrapping")
{
    std::vector<double> raw;
    for (int i = 0; i < 200; ++i) {
        raw.push_back(std::remainder(0.1 * i, 2.0 * pi));
    }
    const auto u = unwrap_phase(raw);
    for (int i = 0; i < 200; ++i) {
        CHECK(u[i] == doctest::Approx(0.1 * i).epsilon(1e-12));
    }
    SUBCASE("adding 2 pi leaves differences unchanged")
    {
        auto shifted = raw;
        for (auto& r : shifted) {
            r += 2.0 * pi;
        }
        const auto v = unwrap_phase(shifted);
        for (std::size_t i = 1; i < v.size(); ++i) {
            CHECK(v[i] - v[i - 1] == doctest::Approx(u[i] - u[i - 1]).epsilon(1e-12));
        }
    }
}

TEST_CASE("phase jumps by about pi across the resonance")
{
    const auto pole = lowest_resonance(final_config, unit);
    REQUIRE(pole);
    const double lo = pole->e_r - 10.0 * pole->gamma;
    const double hi = pole->e_r + 10.0 * pole->gamma;
    std::vector<double> e, k, delay;
    for (int i = 0; i <= 400; ++i) {
        e.push_back(lo + (hi - lo) * i / 400.0);
        k.push_back(unit.wave_number(e.back()));
        delay.push_back(delay_time(final_config, unit, k.back()));
    }
    const auto delta = phase_shift_curve(final_config, unit, k);
    const auto fit = fit_lorentzian(e, delay, lo, hi, true);
    // delta rises by half the integral of the delay; remove the flat background
    const double rise = delta.back() - delta.front() - 0.5 * fit.background * (hi - lo);
    CHECK(rise > 0.8 * pi);
    CHECK(rise < 1.2 * pi);
    CHECK(rise == doctest::Approx(2.0 * std::atan(20.0)).epsilon(0.02));
}

TEST_CASE("delay time peaks at 4/Gamma")
{
    const auto pole = lowest_resonance(final_config, unit);
    REQUIRE(pole);
    const double peak_expected = 4.0 / pole->gamma;
    CHECK(peak_expected == doctest::Approx(4.0 / 2.434).epsilon(1e-3));
    const double peak = delay_time(final_config, unit, unit.wave_number(pole->e_r));
    CHECK(peak == doctest::Approx(peak_expected).epsilon(0.05));
    for (const double sign : {-1.0, 1.0}) {
        const double half = delay_time(final_config, unit, unit.wave_number(pole->e_r + sign * 0.5 * pole->gamma));
        CHECK(half == doctest::Approx(0.5 * peak).epsilon(0.05));
    }
}

TEST_CASE("pole function")
{
    SUBCASE("vanishes at the lowest resonance of the final configuration")
    {
        // k from E = 134.509 - 1.217i, refined by Newton
        const complex e{134.509, -1.217};
        const complex seed = std::sqrt(2.0 * e / unit.kappa);
        CHECK(std::abs(seed - complex(0.31213, -0.0014113)) < 1e-4);
        const auto k = refine_pole(final_config, unit, seed);
        REQUIRE(k);
        const auto terms = omega_terms(final_config, unit, *k);
        CHECK(std::abs(terms.value) < 1e-8 * terms.scale());
        CHECK(is_pole(final_config, unit, *k));
        CHECK(std::abs(omega(final_config, unit, *k)) < 1e-8 * terms.scale());
    }
    SUBCASE("bound state of the initial configuration on the imaginary axis")
    {
        const auto bound = find_bound_states(initial_config, unit);
        REQUIRE(bound.size() == 1);
        const double big_k = bound[0].k_res.imag();
        const auto terms = omega_terms(initial_config, unit, complex(0.0, big_k));
        CHECK(std::abs(terms.value) < 1e-10 * terms.scale());
        CHECK(bound[0].e_r > -30.0);
        CHECK(bound[0].e_r < -20.0);
        // thick barrier: tan(qd) = -q/kappa_b of the step well
        const double e0 = bound[0].e_r;
        const double q = std::sqrt(2.0 * (e0 + 350.0) / unit.kappa);
        const double kb = std::sqrt(2.0 * (400.0 - e0) / unit.kappa);
        CHECK(std::abs(std::tan(q * 5.0) + q / kb) < 0.05 * q / kb);
    }
    SUBCASE("Omega(-conj k) = conj Omega(k)")
    {
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> re(-2.0, 2.0);
        for (int i = 0; i < 10; ++i) {
            const complex k{re(rng), re(rng) * 0.3};
            const complex a = omega(final_config, unit, -std::conj(k));
            const complex b = std::conj(omega(final_config, unit, k));
            CHECK(std::abs(a - b) < 1e-12 * omega_terms(final_config, unit, k).scale());
        }
    }
    SUBCASE("analytic derivative against a central difference")
    {
        const complex k{0.4, -0.05};
        const double h = 1e-6;
        const complex fd = (omega(final_config, unit, k + h) - omega(final_config, unit, k - h)) / (2.0 * h);
        const complex an = omega_derivative(final_config, unit, k);
        CHECK(std::abs(fd - an) < 1e-6 * std::abs(an));
    }
}
