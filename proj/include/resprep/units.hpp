#pragma once

namespace resprep {

/// CODATA 2018 values used to build the internal unit system.
namespace constants {
inline constexpr double hbar_si = 1.054571817e-34;            // J s
inline constexpr double atomic_mass_unit_si = 1.66053906660e-27;  // kg
inline constexpr double sodium23_amu = 22.98976928;
}  // namespace constants

/// Internal units: hbar = 1, lengths in um, times in s, energies in s^-1.
/// The only surviving constant is kappa = hbar/m in um^2 s^-1, so that the
/// kinetic energy of wave number k (um^-1) is kappa k^2 / 2.
struct UnitSystem {
    double kappa = 0.0;
    double mass_amu = 0.0;

    double kinetic_energy(double k) const { return 0.5 * kappa * k * k; }
    double wave_number(double energy) const;
};

/// Throws InvalidArgument for non-positive or non-finite masses.
UnitSystem make_unit_system(double mass_amu);

inline UnitSystem sodium23() { return make_unit_system(constants::sodium23_amu); }

}  // namespace resprep
