#pragma once

#include <optional>
#include <string>
#include <vector>

#include "resprep/scattering.hpp"

namespace resprep {

enum class PoleKind {
    bound,          // positive imaginary axis
    resonance,      // fourth quadrant
    antiresonance,  // third quadrant
    virtual_state,  // negative imaginary axis
};

std::string to_string(PoleKind kind);

/// A zero of the pole function with its derived energy parameters.
/// e_complex = E_R - i Gamma/2; gamma > 0 for resonances, 0 for bound states.
struct Resonance {
    complex k_res;
    complex e_complex;
    double e_r = 0.0;
    double gamma = 0.0;
    double tau = 0.0;  // 1/gamma, +inf when gamma == 0
    PoleKind kind = PoleKind::resonance;
};

/// Builds the record for a pole at k; snaps near-axis poles onto the axis.
Resonance make_resonance(complex k, const UnitSystem& unit);

/// Closed rectangle in the complex k-plane.
struct SearchRegion {
    double re_min = 0.0;
    double re_max = 0.0;
    double im_min = 0.0;
    double im_max = 0.0;

    bool contains(complex k) const
    {
        return k.real() >= re_min && k.real() <= re_max && k.imag() >= im_min && k.imag() <= im_max;
    }
};

/// Region around the positive imaginary axis that holds every bound state.
SearchRegion bound_state_region(const PotentialConfig& config, const UnitSystem& unit);

/// Number of zeros of the pole function inside the rectangle, from the
/// change of log(Omega) around its boundary (adaptive in the step size).
/// Throws Error when the contour passes through a zero.
int winding_number(const PotentialConfig& config, const UnitSystem& unit, const SearchRegion& region);

/// Complex Newton from a seed; nullopt when it does not converge to a
/// residual below pole_residual_tolerance.
std::optional<complex> refine_pole(const PotentialConfig& config, const UnitSystem& unit, complex seed,
                                   int max_iterations = 60);

/// All poles in the region, sorted by e_r, each refined to the residual
/// tolerance and the total certified against the winding number.
/// Throws IncompleteSearch when the counts disagree or exceed max_count.
std::vector<Resonance> find_poles(const PotentialConfig& config, const UnitSystem& unit,
                                  const SearchRegion& region, int max_count = 64);

/// Bound states only (imaginary-axis bisection), sorted by energy.
std::vector<Resonance> find_bound_states(const PotentialConfig& config, const UnitSystem& unit);

/// Lowest resonance: the fourth-quadrant pole with the lowest positive e_r.
/// nullopt if none is found.
std::optional<Resonance> lowest_resonance(const PotentialConfig& config, const UnitSystem& unit,
                                          double k_max = 2.0);

// Iso-resonance curves ----------------------------------------------------

struct IsoCurveOptions {
    int steps = 60;
    double v_barrier_min = 1.0;
    double v_barrier_max = 2000.0;
    int barrier_scan_points = 80;
};

struct IsoCurvePoint {
    double v_well = 0.0;
    double v_barrier = 0.0;
    Resonance pole;
};

struct IsoCurve {
    double e_r_target = 0.0;
    std::vector<IsoCurvePoint> points;
    bool truncated = false;
    std::string diagnostic;  // why the curve stopped early, empty otherwise
};

/// Traces (V_w, V_b) pairs whose lowest resonance sits at e_r_target, for
/// V_w across v_well_range, by continuation from the first V_w.
/// Throws ContinuationFailure if no starting point exists.
IsoCurve trace_iso_resonance(double e_r_target, double v_well_min, double v_well_max, const UnitSystem& unit,
                             double d, double b, const IsoCurveOptions& options = {});

}  // namespace resprep
