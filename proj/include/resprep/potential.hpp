#pragma once

#include <limits>
#include <span>
#include <vector>

namespace resprep {

/// Hard wall at the origin, a well of depth v_well on (0, d], a barrier of
/// height v_barrier on (d, d + b], and free space beyond.
/// Energies in s^-1 (hbar = 1), lengths in um.
struct PotentialConfig {
    double v_well = 0.0;
    double v_barrier = 0.0;
    double d = 1.0;
    double b = 0.0;

    /// Throws InvalidArgument when a field violates its range.
    void validate() const;

    double outer_edge() const { return d + b; }

    /// Value at x; +infinity marks the hard wall (x <= 0).
    double value_at(double x) const;

    /// Mean of the potential over [lo, hi] with lo >= 0.
    double cell_average(double lo, double hi) const;

    bool operator==(const PotentialConfig&) const = default;
};

inline constexpr double hard_wall = std::numeric_limits<double>::infinity();

/// Exponential interpolation between two configurations with time constant
/// t_switch; t_switch == 0 is the sudden switch.
struct SwitchingSchedule {
    PotentialConfig initial;
    PotentialConfig final;
    double t_switch = 0.0;

    void validate() const;

    bool is_sudden() const { return t_switch == 0.0; }

    /// Weight of the initial configuration at time t: exp(-t/T), or the step
    /// function for the sudden case. Throws for t < 0.
    double initial_weight(double t) const;

    /// Largest |V_fin(x) - V_init(x)| over x > 0.
    double max_potential_change() const;

    bool operator==(const SwitchingSchedule&) const = default;
};

/// V(t, x) = [V_fin(x) - V_init(x)](1 - exp(-t/T)) + V_init(x).
double potential_at(const SwitchingSchedule& schedule, double t, double x);

/// Mean potential over each grid interval [j dx, (j+1) dx], j = 0..n-1.
/// Steps falling on a node are thereby split exactly between intervals.
std::vector<double> sample_interval_averages(const PotentialConfig& config, double dx, std::size_t n);

}  // namespace resprep
