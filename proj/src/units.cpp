#include "resprep/units.hpp"

#include <cmath>
#include <string>

#include "resprep/errors.hpp"

namespace resprep {

UnitSystem make_unit_system(double mass_amu)
{
    if (!(mass_amu > 0.0) || !std::isfinite(mass_amu)) {
        throw InvalidArgument("mass_amu must be positive and finite, got " + std::to_string(mass_amu));
    }
    // m^2/s -> um^2/s
    const double kappa = constants::hbar_si / (mass_amu * constants::atomic_mass_unit_si) * 1e12;
    return UnitSystem{kappa, mass_amu};
}

double UnitSystem::wave_number(double energy) const
{
    if (energy < 0.0) {
        throw InvalidArgument("wave_number: negative kinetic energy");
    }
    return std::sqrt(2.0 * energy / kappa);
}

}  // namespace resprep
