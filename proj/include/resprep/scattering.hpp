#pragma once

#include <algorithm>
#include <complex>
#include <span>
#include <vector>

#include "resprep/potential.hpp"
#include "resprep/units.hpp"

namespace resprep {

using complex = std::complex<double>;

/// Wave numbers in the three regions for a (possibly complex) exterior k.
struct ChannelWavenumbers {
    complex k;
    complex q;        // well: q^2 = k^2 + 2 V_w / kappa
    complex q_prime;  // barrier: q'^2 = k^2 - 2 V_b / kappa
};

ChannelWavenumbers channel_wavenumbers(const PotentialConfig& config, const UnitSystem& unit, complex k);

/// cos(z w) and sin(z w)/z for a region of width w. Both are even in z, so
/// they depend on z^2 only and no branch of the square root ever enters.
struct EvenPair {
    complex cosine;
    complex sine_over;  // sin(z w)/z, equal to w at z = 0
};

EvenPair even_pair(complex z_squared, double width);

/// Same quantity from an explicit root z; used to check branch invariance.
EvenPair even_pair_from_root(complex z, double width);

/// Value and slope at x = d + b of the interior solution u with u(0) = 0,
/// u'(0) = 1. The pole function and the S-matrix are built from these.
struct EdgeValues {
    complex value;
    complex slope;
    complex value_dk;  // derivatives with respect to k
    complex slope_dk;
};

EdgeValues edge_values(const PotentialConfig& config, const UnitSystem& unit, complex k);

/// The pole function split into its two barrier channels,
///   Omega = exp(i q' b)(q' - k)(u'_d + i q' u_d)/(2q')
///         + exp(-i q' b)(q' + k)(u'_d - i q' u_d)/(2q'),
/// which mirrors the two additive terms of the matching determinant. The
/// scale bounds the intermediates met while evaluating Omega, so it sets
/// the rounding floor; it uses |Im q'| only and is branch independent.
struct OmegaTerms {
    complex value;  // evaluated through the even form, not as a sum of terms
    complex growing_term;
    complex decaying_term;
    double magnitude_bound = 0.0;

    double scale() const
    {
        return std::max({magnitude_bound, std::abs(growing_term), std::abs(decaying_term)});
    }
};

OmegaTerms omega_terms(const PotentialConfig& config, const UnitSystem& unit, complex k);

/// Pole function Omega(k) = u'(d+b) - i k u(d+b). Its zeros coincide with the
/// zeros of the three-region matching determinant: on the positive
/// imaginary axis they are bound states, in the fourth quadrant resonances.
/// Entire in k; Omega(-conj(k)) = conj(Omega(k)).
complex omega(const PotentialConfig& config, const UnitSystem& unit, complex k);

/// dOmega/dk, analytic.
complex omega_derivative(const PotentialConfig& config, const UnitSystem& unit, complex k);

/// Default relative residual accepted for a pole.
inline constexpr double pole_residual_tolerance = 1e-10;

bool is_pole(const PotentialConfig& config, const UnitSystem& unit, complex k,
             double relative_tolerance = pole_residual_tolerance);

/// Stationary scattering state for real k > 0, normalized as
///   psi_k(x) = (2 pi)^(-1/2) [exp(-ikx) - S(k) exp(ikx)]   for x >= d + b,
/// i.e. delta-normalized in k on the half line.
struct ScatteringSolution {
    double k = 0.0;
    complex q;
    complex q_prime;
    /// Region amplitudes inside the (2 pi)^(-1/2) prefactor:
    ///   well:    c1 exp(iqx) + c2 exp(-iqx)
    ///   barrier: c3 exp(iq'x) + c4 exp(-iq'x); when q' = 0 the barrier
    ///            solution is linear and c3 + c4 (x - d) is stored instead.
    complex c1, c2, c3, c4;
    complex s;
    /// Principal value of log(S)/(2i), in (-pi/2, pi/2].
    double delta = 0.0;

    double d = 0.0;
    double b = 0.0;
    complex amplitude;  // interior solution is amplitude * u(x)
    complex u_d, slope_d;
    complex q_squared, q_prime_squared;

    /// psi_k(x) including the (2 pi)^(-1/2) prefactor.
    complex evaluate(double x) const;
    /// d psi_k / dx.
    complex derivative(double x) const;
    /// psi_k at the nodes j dx, j = 0..n-1.
    std::vector<complex> sample(double dx, std::size_t n) const;
};

/// Throws InvalidArgument for k <= 0.
ScatteringSolution solve_scattering(const PotentialConfig& config, const UnitSystem& unit, double k);

/// S(k) for real k (no coefficients).
complex s_matrix(const PotentialConfig& config, const UnitSystem& unit, double k);

/// Unwrap a sequence of phases sampled modulo 2 pi.
std::vector<double> unwrap_phase(std::span<const double> wrapped);

/// Continuous phase shift on an ascending grid of positive k. Intervals in
/// which arg S moves by more than pi/2 are subdivided before stitching.
/// Throws RefinementFailure naming the interval when subdivision runs out.
std::vector<double> phase_shift_curve(const PotentialConfig& config, const UnitSystem& unit,
                                      std::span<const double> k_grid, int max_depth = 40);

/// Wigner delay 2 d(delta)/dE = (2/(kappa k)) d(delta)/dk in seconds, from a
/// Richardson-extrapolated central difference of the phase.
double delay_time(const PotentialConfig& config, const UnitSystem& unit, double k);

}  // namespace resprep
