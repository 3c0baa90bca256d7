#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "resprep/pipeline.hpp"

namespace resprep {

enum class ExperimentKind { iso_curves, delay_spectrum, decay_curves, spectrum_vs_t, t_scan, poles, ground_state };

std::string to_string(ExperimentKind kind);
std::optional<ExperimentKind> experiment_from_string(std::string_view name);
/// All kinds in the order run_experiment executes them.
std::vector<ExperimentKind> all_experiments();

struct IsoCurveSettings {
    std::vector<double> targets{53.391, 7.422};  // s^-1
    double v_well_min = 5.0;
    double v_well_max = 350.0;
    int steps = 60;
    bool operator==(const IsoCurveSettings&) const = default;
};

struct DelaySettings {
    double half_width = 10.0;  // in units of Gamma around E_R
    int points = 801;
    bool operator==(const DelaySettings&) const = default;
};

struct DecayRun {
    double t_switch_over_tau = 0.0;
    double fit_t_min = 0.5;  // s
    bool operator==(const DecayRun&) const = default;
};

struct DecaySettings {
    std::vector<DecayRun> runs{{0.0, 0.5}, {0.058, 0.5}, {0.13, 0.5}, {1.0, 2.0}};
    double t_end = 4.0;  // s
    bool operator==(const DecaySettings&) const = default;
};

struct SpectrumSettings {
    std::vector<double> t_switch_over_tau{0.0, 0.058, 0.13, 1.0};
    bool operator==(const SpectrumSettings&) const = default;
};

struct ScanSettings {
    bool lorentzian = true;
    bool exponential = true;
    double lorentzian_lo = 0.005;  // in units of tau
    double lorentzian_hi = 0.25;
    double exponential_lo = 0.02;
    double exponential_hi = 1.0;
    std::size_t coarse_points = 15;
    double relative_tolerance = 0.05;
    double fit_t_min = 1.25;        // s
    double horizon_over_tau = 3.0;  // exponential-deviation horizon
    double t_end = 2.5;             // s, decay runs of the exponential scan
    bool operator==(const ScanSettings&) const = default;
};

/// Published values to check against; every field is optional.
struct Reference {
    std::optional<double> e_r;
    std::optional<double> gamma;
    std::optional<double> tau;
    double pole_tolerance = 1e-3;  // relative, per component
    double tau_tolerance = 3e-3;   // relative
    std::optional<std::pair<double, double>> lorentzian_t_star;   // in units of tau
    std::optional<std::pair<double, double>> exponential_t_star;  // in units of tau
    bool operator==(const Reference&) const = default;
};

struct ExperimentSpec {
    std::string name = "experiment";
    std::vector<ExperimentKind> experiments = all_experiments();
    double mass_amu = 22.98976928;
    PotentialConfig initial{350.0, 400.0, 5.0, 10.0};
    PotentialConfig final{100.0, 200.0, 5.0, 10.0};
    double t_switch = 0.0;  // s, for single propagations
    Numerics numerics;
    IsoCurveSettings iso_curves;
    DelaySettings delay_spectrum;
    DecaySettings decay_curves;
    SpectrumSettings spectrum_vs_t;
    ScanSettings t_scan;
    Reference reference;
    std::string output_directory = "out";

    bool operator==(const ExperimentSpec&) const = default;
};

/// Throws ParseError (with 1-based line and column) for malformed text,
/// unknown keys and values of the wrong type. Range checks are left to
/// validate_spec.
ExperimentSpec parse_spec(std::string_view text);

/// Reads and parses a file; unreadable files throw Error.
ExperimentSpec load_spec(const std::filesystem::path& path);

/// YAML text that parse_spec maps back to an identical spec.
std::string serialize_spec(const ExperimentSpec& spec);

/// Applies "dotted.key=value" to the spec, the value read as YAML (so
/// lists like "[0, 0.5]" work). Throws ParseError for unknown keys or
/// malformed assignments.
ExperimentSpec apply_override(const ExperimentSpec& spec, std::string_view assignment);

struct Diagnostic {
    std::string field;  // dotted key path, e.g. "physics.t_switch"
    std::string message;
};

/// Every violated range or numerics rule; empty means runnable.
std::vector<Diagnostic> validate_spec(const ExperimentSpec& spec);

/// Parse errors become a single diagnostic carrying line and column.
/// Unreadable files throw Error.
std::vector<Diagnostic> validate_spec_file(const std::filesystem::path& path);

}  // namespace resprep
