#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "resprep/propagator.hpp"

namespace resprep {

/// Residual switching amplitude below which the potential counts as final.
inline constexpr double default_epsilon_v = 1e-3;  // s^-1

/// t* = T ln(max|V_fin - V_init| / eps_v); 0 for the sudden switch.
double projection_time(const SwitchingSchedule& schedule, double epsilon_v = default_epsilon_v);

struct EnergyGridSpec {
    std::size_t points = 2000;
    double e_max = 6000.0;          // s^-1
    double dense_half_width = 5.0;  // in units of Gamma around E_R
    double dense_spacing = 0.02;    // in units of Gamma
    double e_min_fraction = 1e-4;   // lowest energy as a fraction of E_R
    bool operator==(const EnergyGridSpec&) const = default;
};

/// Ascending grid: uniform with spacing <= dense_spacing * Gamma inside
/// E_R +- dense_half_width * Gamma, geometric outside up to e_max.
std::vector<double> energy_grid(double e_r, double gamma, const EnergyGridSpec& spec = {});

/// Scattering states used for the projection: the closed-form continuum
/// states, or the exact scattering states of the discrete operator that the
/// propagator uses (same dx, interval-averaged potential). Lattice states
/// make the projection of a propagated packet exactly time independent once
/// the potential is static.
enum class ProjectionBasis { continuum, lattice };

struct EnergyDistribution {
    std::vector<double> energies;  // s^-1
    std::vector<double> p;         // density per unit energy
    double total = 0.0;            // trapezoid integral over the grid
    double projection_time = 0.0;  // s
};

/// P(E) = |<psi_k|state>|^2 / (dE/dk) with delta-normalized scattering
/// states of final_config. Throws CompletenessViolation if final_config
/// binds, ContainmentError if |psi| near the right edge exceeds 1e-8 max|psi|.
EnergyDistribution energy_distribution(const WavefunctionGrid& state, const PotentialConfig& final_config,
                                       const UnitSystem& unit, std::span<const double> energies,
                                       double projection_time = 0.0,
                                       ProjectionBasis basis = ProjectionBasis::lattice);

/// Trapezoid integral of p over the part of the grid inside [lo, hi].
double integrate_window(std::span<const double> energies, std::span<const double> p, double lo, double hi);

/// Energy below which half of the grid's weight lies.
double distribution_median(const EnergyDistribution& dist);

struct LorentzianReference {
    std::vector<double> density;
    /// 1 minus the analytic weight of the Lorentzian inside the grid range.
    double truncation_deficit = 0.0;
};

/// (Gamma / 2 pi) / ((E - E_R)^2 + (Gamma/2)^2) on the grid.
LorentzianReference lorentzian_reference(const Resonance& resonance, std::span<const double> energies);

struct LorentzianFit {
    double e_r = 0.0;
    double gamma = 0.0;      // full width at half maximum
    double amplitude = 0.0;  // peak height above the background
    double background = 0.0;
    int iterations = 0;
    double rms_residual = 0.0;
};

/// Damped least-squares fit of A (Gamma/2)^2 / ((E - E_R)^2 + (Gamma/2)^2),
/// plus a constant when with_background is set, to the samples with
/// lo <= E <= hi. Throws InsufficientData for fewer than
/// ten samples or a window narrower than four widths, WindowError when the
/// peak sits at the window edge and FitFailure after 200 iterations.
LorentzianFit fit_lorentzian(std::span<const double> e, std::span<const double> y, double lo, double hi,
                             bool with_background = false);

struct ExponentialFit {
    double tau = 0.0;        // s
    double intercept = 0.0;  // log p_w extrapolated to t = 0
    double quality = 0.0;    // largest |residual| of the log fit
    std::size_t samples = 0;
};

/// Linear least squares on log p_w over t >= t_min. Throws InsufficientData
/// with fewer than ten positive samples.
ExponentialFit fit_exponential_decay(const DecayRecord& record, double t_min);

/// Integral of |P - pole Lorentzian| over E_R +- half_width * Gamma, on a
/// uniform grid of window_points energies.
double lorentzian_deviation(const WavefunctionGrid& state, const PotentialConfig& final_config,
                            const UnitSystem& unit, const Resonance& resonance,
                            ProjectionBasis basis = ProjectionBasis::lattice, double half_width = 10.0,
                            std::size_t window_points = 1001);

/// Largest |log p_w - fitted line| over t in [0, horizon], the line being
/// fitted to t >= t_fit_min.
double exponential_deviation(const DecayRecord& record, double t_fit_min, double horizon);

struct ScanOptions {
    std::size_t coarse_points = 15;
    double relative_tolerance = 0.05;
    int max_refinements = 30;
};

struct ScanResult {
    double t_star = 0.0;
    double objective_at_star = 0.0;
    /// Every evaluation, sorted by T.
    std::vector<std::pair<double, double>> curve;
    bool multimodal = false;
    std::string warning;
};

/// Minimizes objective(T) over [t_lo, t_hi] (t_lo > 0): log-spaced coarse
/// scan, then golden-section search in log T around the best coarse point
/// until the bracket is within relative_tolerance of T.
ScanResult optimal_switch_time(const std::function<double(double)>& objective, double t_lo, double t_hi,
                               const ScanOptions& options = {});

}  // namespace resprep
