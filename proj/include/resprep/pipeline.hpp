#pragma once

#include <span>
#include <vector>

#include "resprep/spectral.hpp"

namespace resprep {

/// Numerical settings shared by the decay and spectrum runs.
struct Numerics {
    double dx = 0.05;           // um
    double dt = 2e-4;           // s, decay runs
    double spectrum_dt = 0.0;   // s; 0 picks T/100 clamped to [2e-4, 1e-3]
    double box_length = 300.0;  // um, decay runs
    double t_end = 2.5;         // s, decay runs
    double e_cut = 1000.0;      // s^-1
    double absorber_width_fraction = 0.25;
    double absorber_strength = 0.0;  // 0 tunes it
    double growth_threshold = 1e-8;
    std::size_t max_points = 400000;
    double epsilon_v = default_epsilon_v;
    bool refine_initial_state = true;
    EnergyGridSpec energy_grid;

    bool operator==(const Numerics&) const = default;
};

/// Everything that does not depend on the switching time: the initial
/// state on the grid and the resonance of the final configuration.
struct Pipeline {
    PotentialConfig initial;
    PotentialConfig final;
    UnitSystem unit;
    Numerics numerics;
    GroundState ground;
    Resonance pole;

    SwitchingSchedule schedule(double t_switch) const { return {initial, final, t_switch}; }
};

/// Throws NoBoundState / AmbiguousGroundState for the initial configuration
/// and Error when the final configuration has no resonance.
Pipeline make_pipeline(const PotentialConfig& initial, const PotentialConfig& final, const UnitSystem& unit,
                       const Numerics& numerics = {});

PropagationSetup decay_setup(const Pipeline& pipeline, double t_switch, double t_end);

/// Absorber-free setup ending at the projection time t*.
PropagationSetup spectrum_setup(const Pipeline& pipeline, double t_switch);

PropagationResult run_decay(const Pipeline& pipeline, double t_switch, double t_end);

struct SpectrumRun {
    WavefunctionGrid state;  // the packet at t*
    double projection_time = 0.0;
    long steps = 0;
};

/// The state projected for P(E): phi_0 itself for the sudden switch,
/// otherwise the propagated packet at t*.
SpectrumRun run_spectrum(const Pipeline& pipeline, double t_switch);

/// Energy grid around the pole from the numerics.
std::vector<double> spectrum_energies(const Pipeline& pipeline);

/// Integral of |P_T - pole Lorentzian| over E_R +- 10 Gamma.
double lorentzian_objective(const Pipeline& pipeline, double t_switch);

/// Largest |log p_w - late exponential| over [0, horizon].
double exponential_objective(const Pipeline& pipeline, double t_switch, double fit_t_min, double horizon,
                             double t_end);

}  // namespace resprep
