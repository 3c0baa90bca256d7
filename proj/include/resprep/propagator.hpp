#pragma once

#include <optional>
#include <utility>
#include <span>
#include <vector>

#include "resprep/initial_state.hpp"

namespace resprep {

/// Negative-imaginary layer W(x) = strength * s^3 with s running from 0 to 1
/// over the outer width_fraction of the box.
struct AbsorberSpec {
    double width_fraction = 0.25;
    /// s^-1; 0 selects the strength with the lowest discrete reflection
    /// over [band_lo, band_hi].
    double strength = 0.0;
    double band_lo = 100.0;
    double band_hi = 1000.0;
};

struct PropagationSetup {
    SwitchingSchedule schedule;
    UnitSystem unit = sodium23();
    double dx = 0.05;          // um
    double box_length = 300.0; // um
    double dt = 2e-4;          // s
    double t_end = 2.5;        // s
    double e_cut = 1000.0;     // s^-1, sets the wavelength rule
    std::optional<AbsorberSpec> absorber;
    /// Extend the box with zeros whenever |psi| near the right wall exceeds
    /// growth_threshold * max|psi|, up to max_points nodes.
    bool grow_box = false;
    double growth_threshold = 1e-8;
    std::size_t max_points = 400000;
    std::vector<double> snapshot_times;
    double record_interval = 0.005;  // s between DecayRecord samples
    /// Replace the initial state by the nearest eigenvector of the discrete
    /// initial Hamiltonian (inverse iteration), so that the O(dx^2) mismatch
    /// between the closed form and the lattice does not radiate.
    bool refine_initial_state = true;
    /// Compare the energy expectation after accuracy_window with dt and dt/2.
    bool accuracy_check = false;
    double accuracy_window = 0.02;

    /// Largest dx allowed by the wavelength rule dx <= 2 pi / (20 k_max).
    double dx_bound() const;
    /// Throws InvalidArgument or ResolutionError.
    void validate() const;
};

/// Long run with an absorbing layer, for P_W(t).
PropagationSetup decay_profile(const SwitchingSchedule& schedule, const UnitSystem& unit = sodium23());

/// Absorber-free run up to t_end in a box that grows with the packet, for
/// P(E). The time step is T/100 clamped to [2e-4, 1e-3] s.
PropagationSetup spectrum_profile(const SwitchingSchedule& schedule, double t_end,
                                  const UnitSystem& unit = sodium23());

struct DecayRecord {
    std::vector<double> times;
    std::vector<double> p_w;
    std::vector<double> norm;
};

struct Snapshot {
    double requested_time = 0.0;
    double time = 0.0;  // exact step time
    long step = 0;
    WavefunctionGrid psi;
};

struct PropagationResult {
    WavefunctionGrid final_state;
    DecayRecord record;
    std::vector<Snapshot> snapshots;
    double absorber_strength = 0.0;
    long steps = 0;
};

/// Trapezoid integral of |psi|^2 over [0, d], linear in |psi|^2 on the last
/// partial cell. Throws InvalidArgument if the grid does not reach d.
double non_escape_probability(const WavefunctionGrid& psi, double d);

/// Crank-Nicolson stepper on nodes 1..n-1 with psi = 0 at the hard wall and
/// beyond the last node. The potential is taken at the half step and enters
/// through the linear finite-element weights: interval j contributes V_j/3
/// to both of its nodes and V_j/6 to the coupling between them, which keeps
/// the operator second order across the steps of the potential.
class CrankNicolson {
public:
    CrankNicolson(const SwitchingSchedule& schedule, const UnitSystem& unit, double dx, std::size_t n,
                  std::vector<double> absorber = {});

    std::size_t size() const { return v_initial_.size(); }
    double dx() const { return dx_; }

    /// Advance psi from t to t + dt; dt may be negative.
    void step(std::vector<complex>& psi, double t, double dt);

    /// Append `extra` nodes of free space on the right (no absorber allowed).
    void extend(std::size_t extra);

    /// Interval-averaged potential at time t (absorber excluded).
    std::vector<double> potential(double t) const;

    /// Kinetic and potential parts of H psi separately (absorber excluded).
    std::pair<std::vector<complex>, std::vector<complex>> apply_parts(std::span<const complex> psi,
                                                                      double t) const;

    /// H psi at time t including the absorber.
    std::vector<complex> apply(std::span<const complex> psi, double t) const;

    /// Re <psi|H(t)|psi> / <psi|psi>.
    double energy(std::span<const complex> psi, double t) const;

    /// Solves (H(t) - shift) x = rhs, absorber included.
    std::vector<complex> solve_shifted(std::span<const complex> rhs, double t, double shift) const;

private:
    SwitchingSchedule schedule_;
    double kappa_;
    double dx_;
    std::vector<double> v_initial_;
    std::vector<double> v_final_;
    std::vector<double> absorber_;
    std::vector<complex> diag_, upper_, rhs_, cprime_;
};

PropagationResult propagate(const WavefunctionGrid& initial, const PropagationSetup& setup);

/// Inverse iteration on the discrete Hamiltonian at time t, starting from
/// psi and shifted by its Rayleigh quotient. Normalized, with the phase of
/// the overlap with psi removed.
std::vector<complex> refine_eigenstate(const CrankNicolson& stepper, std::span<const complex> psi, double t,
                                       int iterations = 3);

/// ||H psi - energy psi|| / (||K psi|| + ||V psi||) for the discrete
/// operator of `config` on the grid of psi.
double eigen_residual(const PotentialConfig& config, const UnitSystem& unit, const WavefunctionGrid& psi,
                      double energy);

/// Cubic absorber samples on the last width_fraction of n nodes.
std::vector<double> absorber_profile(std::size_t n, double width_fraction, double strength);

/// |B/A| for a plane wave of energy e entering the absorber from free space,
/// on the discrete lattice with spacing dx.
double absorber_reflection(std::span<const double> layer, double dx, double kappa, double e);

/// Strength minimizing the largest reflection over the band.
double tune_absorber_strength(double layer_width, double dx, double kappa, double band_lo, double band_hi);

/// Throws ResolutionError if the energy expectation after the window differs
/// by more than 0.1% between dt and dt/2.
void check_time_resolution(const WavefunctionGrid& initial, const PropagationSetup& setup);

}  // namespace resprep
