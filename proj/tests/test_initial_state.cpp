#include <doctest.h>

#include <cmath>

#include "resprep/errors.hpp"
#include "resprep/initial_state.hpp"
#include "resprep/propagator.hpp"

using namespace resprep;

namespace {

const PotentialConfig initial_config{350.0, 400.0, 5.0, 10.0};
const UnitSystem unit = sodium23();

}  // namespace

TEST_CASE("paper ground state")
{
    const auto gs = ground_state(initial_config, unit);
    const auto& psi = gs.wavefunction;
    CHECK(gs.energy > -30.0);
    CHECK(gs.energy < -20.0);
    CHECK(gs.energy == doctest::Approx(gs.pole.e_r).epsilon(1e-8));
    CHECK(std::abs(psi.norm() - 1.0) < 1e-10);
    CHECK(psi.values[0] == complex(0.0));

    SUBCASE("node free and positive inside, decaying outside")
    {
        for (std::size_t j = 1; j < psi.size() && psi.x(j) < initial_config.outer_edge(); ++j) {
            CHECK(psi.values[j].real() > 0.0);
            CHECK(std::abs(psi.values[j].imag()) < 1e-14);
        }
        for (std::size_t j = 1; j < psi.size(); ++j) {
            if (psi.x(j - 1) > initial_config.outer_edge() && psi.x(j) <= gs.truncation_point) {
                CHECK(std::abs(psi.values[j]) < std::abs(psi.values[j - 1]));
            }
        }
    }
    SUBCASE("non-escape probability regression")
    {
        const double p_w = non_escape_probability(psi, initial_config.d);
        CHECK(p_w > 0.5);
        CHECK(p_w < 1.0);
        CHECK(p_w == doctest::Approx(0.8853073718).epsilon(1e-9));
    }
    SUBCASE("residual of the discrete Hamiltonian")
    {
        CHECK(eigen_residual(initial_config, unit, psi, gs.energy) < 1e-4);
    }
}

TEST_CASE("grid halving only samples the closed form more densely")
{
    GroundStateOptions coarse;
    coarse.length = 40.0;
    auto fine = coarse;
    fine.dx = coarse.dx / 2.0;
    const auto a = ground_state(initial_config, unit, coarse);
    const auto b = ground_state(initial_config, unit, fine);
    CHECK(a.energy == b.energy);
    double diff = 0.0;
    for (std::size_t j = 0; j < a.wavefunction.size(); ++j) {
        diff += std::norm(a.wavefunction.values[j] - b.wavefunction.values[2 * j]) * coarse.dx;
    }
    CHECK(std::sqrt(diff) < 1e-8);
}

TEST_CASE("closed form agrees with the unnormalized bound-state function")
{
    const auto gs = ground_state(initial_config, unit);
    const double big_k = gs.pole.k_res.imag();
    const auto& psi = gs.wavefunction;
    const double ratio = psi.values[40].real() / bound_state_value(initial_config, unit, big_k, psi.x(40)).real();
    for (const std::size_t j : {10u, 100u, 250u, 400u}) {
        CHECK(psi.values[j].real() ==
              doctest::Approx(ratio * bound_state_value(initial_config, unit, big_k, psi.x(j)).real()).epsilon(1e-12));
    }
}

TEST_CASE("tail truncation")
{
    const auto gs = ground_state(initial_config, unit);
    const auto& psi = gs.wavefunction;
    double peak = 0.0;
    for (const auto& v : psi.values) {
        peak = std::max(peak, std::abs(v));
    }
    CHECK(std::abs(psi.values.back()) < 1e-12 * peak * 1.01);
    CHECK(gs.truncation_point > initial_config.outer_edge());
}

TEST_CASE("configurations without a unique bound state")
{
    CHECK_THROWS_AS(ground_state(PotentialConfig{0.0, 100.0, 5.0, 10.0}, unit), NoBoundState);
    CHECK_THROWS_AS(ground_state(PotentialConfig{100.0, 200.0, 5.0, 10.0}, unit), NoBoundState);
    const PotentialConfig deep{3000.0, 400.0, 5.0, 10.0};
    CHECK_THROWS_AS(ground_state(deep, unit), AmbiguousGroundState);
    GroundStateOptions lowest;
    lowest.select_lowest = true;
    const auto gs = ground_state(deep, unit, lowest);
    CHECK(gs.energy == doctest::Approx(find_bound_states(deep, unit).front().e_r));
}
