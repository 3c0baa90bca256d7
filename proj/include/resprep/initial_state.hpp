#pragma once

#include <complex>
#include <iosfwd>
#include <vector>

#include "resprep/poles.hpp"

namespace resprep {

/// Samples psi(j dx), j = 0..n-1, starting at the hard wall x = 0.
/// Norm convention: sum |psi_j|^2 dx.
struct WavefunctionGrid {
    double x0 = 0.0;
    double dx = 0.0;
    std::vector<complex> values;

    std::size_t size() const { return values.size(); }
    double x(std::size_t j) const { return x0 + dx * static_cast<double>(j); }
    double length() const { return values.empty() ? 0.0 : x(values.size() - 1); }
    double norm() const;
};

struct GroundStateOptions {
    double dx = 0.05;
    /// Grid length in um; 0 means "up to where the tail drops below
    /// tail_cutoff * max|psi|".
    double length = 0.0;
    double tail_cutoff = 1e-12;
    /// Pick the lowest level when the configuration binds more than one.
    bool select_lowest = false;
};

struct GroundState {
    WavefunctionGrid wavefunction;
    double energy = 0.0;  // s^-1
    Resonance pole;
    double truncation_point = 0.0;  // um; samples beyond it are zero
};

/// Closed-form bound state of `config` sampled on the grid and normalized.
/// Throws NoBoundState, or AmbiguousGroundState when several levels exist
/// and select_lowest is false.
GroundState ground_state(const PotentialConfig& config, const UnitSystem& unit, const GroundStateOptions& options = {});

/// Unnormalized closed-form bound-state function for a bound pole k = iK.
complex bound_state_value(const PotentialConfig& config, const UnitSystem& unit, double big_k, double x);

/// CSV rows x, Re psi, Im psi, |psi|^2.
void write_wavefunction_csv(std::ostream& out, const WavefunctionGrid& psi);

}  // namespace resprep
