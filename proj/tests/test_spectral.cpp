#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "resprep/errors.hpp"
#include "resprep/pipeline.hpp"

using namespace resprep;

namespace {

const PotentialConfig initial_config{350.0, 400.0, 5.0, 10.0};
const PotentialConfig final_config{100.0, 200.0, 5.0, 10.0};
const UnitSystem unit = sodium23();
constexpr double pi = std::numbers::pi;

const Pipeline& paper()
{
    static const Pipeline p = make_pipeline(initial_config, final_config, unit);
    return p;
}

std::vector<double> lorentzian(std::span<const double> e, double e_r, double gamma, double a, double c = 0.0)
{
    std::vector<double> y;
    for (const double x : e) {
        y.push_back(a * 0.25 * gamma * gamma / ((x - e_r) * (x - e_r) + 0.25 * gamma * gamma) + c);
    }
    return y;
}

std::vector<double> uniform(double lo, double hi, int n)
{
    std::vector<double> v;
    for (int i = 0; i < n; ++i) {
        v.push_back(lo + (hi - lo) * i / (n - 1));
    }
    return v;
}

/// Trapezoid integral of |p - q| on the common grid.
double l1(std::span<const double> e, std::span<const double> p, std::span<const double> q)
{
    double s = 0.0;
    for (std::size_t i = 1; i < e.size(); ++i) {
        s += 0.5 * (std::abs(p[i] - q[i]) + std::abs(p[i - 1] - q[i - 1])) * (e[i] - e[i - 1]);
    }
    return s;
}

}  // namespace

TEST_CASE("reference Lorentzian of the paper pole")
{
    Resonance r;
    r.e_r = 134.509;
    r.gamma = 2.434;
    const std::vector<double> e{r.e_r, r.e_r - 0.5 * r.gamma, r.e_r + 0.5 * r.gamma, r.e_r - 3.0, r.e_r + 3.0};
    const auto ref = lorentzian_reference(r, e);
    CHECK(ref.density[0] == doctest::Approx(2.0 / (pi * r.gamma)).epsilon(1e-14));
    CHECK(ref.density[0] == doctest::Approx(0.2616).epsilon(1e-3));
    CHECK(ref.density[1] == doctest::Approx(0.5 * ref.density[0]).epsilon(1e-14));
    CHECK(ref.density[2] == doctest::Approx(0.5 * ref.density[0]).epsilon(1e-14));
    CHECK(ref.density[3] == doctest::Approx(ref.density[4]).epsilon(1e-14));

    const auto window = uniform(r.e_r - 10.0 * r.gamma, r.e_r + 10.0 * r.gamma, 101);
    const auto w = lorentzian_reference(r, window);
    CHECK(w.truncation_deficit == doctest::Approx(1.0 - 2.0 / pi * std::atan(20.0)).epsilon(1e-10));
}

TEST_CASE("Lorentzian fit of exact samples")
{
    const double e_r = 134.509, gamma = 2.434;
    const auto e = uniform(e_r - 10.0 * gamma, e_r + 10.0 * gamma, 401);
    SUBCASE("without background")
    {
        const auto fit = fit_lorentzian(e, lorentzian(e, e_r, gamma, 1.0), e.front(), e.back());
        CHECK(fit.e_r == doctest::Approx(e_r).epsilon(1e-8));
        CHECK(fit.gamma == doctest::Approx(gamma).epsilon(1e-8));
        CHECK(fit.amplitude == doctest::Approx(1.0).epsilon(1e-8));
        const auto again = fit_lorentzian(e, lorentzian(e, e_r, gamma, 1.0), e.front(), e.back());
        CHECK(again.e_r == fit.e_r);
        CHECK(again.gamma == fit.gamma);
    }
    SUBCASE("with background")
    {
        const auto fit = fit_lorentzian(e, lorentzian(e, e_r, gamma, 1.6, -0.03), e.front(), e.back(), true);
        CHECK(fit.e_r == doctest::Approx(e_r).epsilon(1e-8));
        CHECK(fit.gamma == doctest::Approx(gamma).epsilon(1e-8));
        CHECK(fit.amplitude == doctest::Approx(1.6).epsilon(1e-8));
        CHECK(fit.background == doctest::Approx(-0.03).epsilon(1e-6));
    }
    SUBCASE("errors")
    {
        const auto y = lorentzian(e, e_r, gamma, 1.0);
        CHECK_THROWS_AS(fit_lorentzian(e, y, e_r, e_r + 0.05), InsufficientData);
        CHECK_THROWS_AS(fit_lorentzian(e, y, e_r, e.back()), WindowError);
    }
}

TEST_CASE("exponential fit of exact samples")
{
    DecayRecord r;
    for (int i = 0; i <= 500; ++i) {
        r.times.push_back(0.005 * i);
        r.p_w.push_back(std::exp(-r.times.back() / 0.411));
        r.norm.push_back(1.0);
    }
    const auto fit = fit_exponential_decay(r, 0.5);
    CHECK(fit.tau == doctest::Approx(0.411).epsilon(1e-10));
    CHECK(fit.quality < 1e-10);
    CHECK(exponential_deviation(r, 0.5, 1.233) < 1e-10);
    CHECK_THROWS_AS(fit_exponential_decay(r, 2.46), InsufficientData);
}

TEST_CASE("energy grid and projection time")
{
    const double e_r = 134.511, gamma = 2.433;
    const auto g = energy_grid(e_r, gamma);
    CHECK(g.size() == 2000);
    CHECK(std::is_sorted(g.begin(), g.end()));
    CHECK(g.back() == doctest::Approx(6000.0));
    CHECK(g.front() > 0.0);
    for (std::size_t i = 1; i < g.size(); ++i) {
        CHECK(g[i] > g[i - 1]);
        if (g[i - 1] >= e_r - 5.0 * gamma && g[i] <= e_r + 5.0 * gamma) {
            CHECK(g[i] - g[i - 1] <= gamma / 50.0 * (1.0 + 1e-12));
        }
    }
    const SwitchingSchedule sudden{initial_config, final_config, 0.0};
    CHECK(projection_time(sudden) == 0.0);
    const SwitchingSchedule slow{initial_config, final_config, 0.1};
    CHECK(projection_time(slow) == doctest::Approx(0.1 * std::log(250.0 / 1e-3)).epsilon(1e-14));
}

TEST_CASE("window integral and median")
{
    const auto e = uniform(0.0, 10.0, 1001);
    std::vector<double> p(e.size(), 0.1);
    CHECK(integrate_window(e, p, 2.0, 4.0) == doctest::Approx(0.2).epsilon(1e-12));
    EnergyDistribution dist;
    dist.energies = e;
    dist.p = p;
    dist.total = 1.0;
    CHECK(distribution_median(dist) == doctest::Approx(5.0).epsilon(1e-9));
}

TEST_CASE("sudden projection of the ground state")
{
    const auto& pl = paper();
    const auto e = spectrum_energies(pl);
    const auto dist = energy_distribution(pl.ground.wavefunction, final_config, unit, e);
    CHECK(std::abs(dist.total - 1.0) < 1e-3);
    for (const double p : dist.p) {
        CHECK(p >= 0.0);
    }
    const auto peak = std::max_element(dist.p.begin(), dist.p.end()) - dist.p.begin();
    CHECK(std::abs(e[peak] - 134.509) < 0.5 * 2.434);
    const double window = integrate_window(e, dist.p, pl.pole.e_r - 10.0 * pl.pole.gamma,
                                           pl.pole.e_r + 10.0 * pl.pole.gamma);
    CHECK(window < 0.95);
    const auto fit = fit_lorentzian(e, dist.p, pl.pole.e_r - 10.0 * pl.pole.gamma, pl.pole.e_r + 10.0 * pl.pole.gamma);
    CHECK(fit.gamma == doctest::Approx(2.434).epsilon(0.05));
    CHECK(fit.amplitude < 2.0 / (pi * pl.pole.gamma));

    SUBCASE("continuum and lattice bases agree to discretization accuracy")
    {
        const auto cont = energy_distribution(pl.ground.wavefunction, final_config, unit, e, 0.0,
                                              ProjectionBasis::continuum);
        CHECK(std::abs(cont.total - 1.0) < 1e-3);
        CHECK(l1(e, dist.p, cont.p) < 1e-3);
    }
}

TEST_CASE("projection commutes with propagation after a sudden switch")
{
    const auto& pl = paper();
    auto setup = spectrum_setup(pl, 0.0);
    setup.t_end = 0.1;
    const auto result = propagate(pl.ground.wavefunction, setup);
    const auto e = spectrum_energies(pl);
    const auto direct = energy_distribution(pl.ground.wavefunction, final_config, unit, e);
    const auto moved = energy_distribution(result.final_state, final_config, unit, e, 0.1);
    CHECK(l1(e, direct.p, moved.p) < 1e-4);
}

TEST_CASE("spectrum is stationary after the projection time")
{
    const auto& pl = paper();
    const double t_switch = 0.058 * pl.pole.tau;
    auto setup = spectrum_setup(pl, t_switch);
    const double t_star = setup.t_end;
    setup.t_end = t_star + 0.1;
    setup.snapshot_times = {t_star, t_star + 0.1};
    const auto result = propagate(pl.ground.wavefunction, setup);
    REQUIRE(result.snapshots.size() == 2);
    const auto e = spectrum_energies(pl);
    const auto a = energy_distribution(result.snapshots[0].psi, final_config, unit, e, result.snapshots[0].time);
    const auto b = energy_distribution(result.snapshots[1].psi, final_config, unit, e, result.snapshots[1].time);
    CHECK(std::abs(a.total - 1.0) < 1e-3);
    CHECK(l1(e, a.p, b.p) < 1e-4);
}

TEST_CASE("projection errors")
{
    const auto& pl = paper();
    const auto e = spectrum_energies(pl);
    CHECK_THROWS_AS(energy_distribution(pl.ground.wavefunction, initial_config, unit, e), CompletenessViolation);
    auto spilled = pl.ground.wavefunction;
    spilled.values.back() = 0.1;
    CHECK_THROWS_AS(energy_distribution(spilled, final_config, unit, e), ContainmentError);
}

TEST_CASE("delay-time Lorentzian recovers the pole")
{
    const auto& pl = paper();
    const auto e = uniform(pl.pole.e_r - 10.0 * pl.pole.gamma, pl.pole.e_r + 10.0 * pl.pole.gamma, 801);
    std::vector<double> delay;
    for (const double x : e) {
        delay.push_back(delay_time(final_config, unit, unit.wave_number(x)));
    }
    const auto fit = fit_lorentzian(e, delay, e.front(), e.back(), true);
    CHECK(fit.e_r == doctest::Approx(pl.pole.e_r).epsilon(0.02));
    CHECK(fit.gamma == doctest::Approx(pl.pole.gamma).epsilon(0.02));
}

TEST_CASE("optimal switching time on synthetic objectives")
{
    SUBCASE("single minimum")
    {
        int calls = 0;
        const auto f = [&](double t) {
            ++calls;
            return std::pow(std::log(t / 0.03), 2) + 1.0;
        };
        const auto r = optimal_switch_time(f, 1e-3, 1.0);
        CHECK(r.t_star == doctest::Approx(0.03).epsilon(0.05));
        CHECK_FALSE(r.multimodal);
        CHECK(r.warning.empty());
        CHECK(std::is_sorted(r.curve.begin(), r.curve.end()));
        CHECK(static_cast<int>(r.curve.size()) == calls);
    }
    SUBCASE("two comparable minima")
    {
        const auto f = [](double t) {
            return std::min(std::pow(std::log(t / 0.004), 2) + 1.0, std::pow(std::log(t / 0.3), 2) + 1.05);
        };
        const auto r = optimal_switch_time(f, 1e-3, 1.0);
        CHECK(r.multimodal);
        CHECK_FALSE(r.warning.empty());
        CHECK(r.t_star == doctest::Approx(0.004).epsilon(0.05));
    }
    SUBCASE("invalid range")
    {
        const auto f = [](double t) { return t; };
        CHECK_THROWS_AS(optimal_switch_time(f, 0.0, 1.0), InvalidArgument);
        CHECK_THROWS_AS(optimal_switch_time(f, 1.0, 0.5), InvalidArgument);
    }
}
