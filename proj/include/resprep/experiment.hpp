#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "resprep/config.hpp"

namespace resprep {

/// A reported number and the CSV cell it was read from, cited as
/// "<dir>/<table>.csv:<column>:<row>" with 1-based data rows.
struct ReportValue {
    std::string key;
    double value = 0.0;
    std::string citation;
};

struct Check {
    std::string name;
    bool pass = false;
    double value = 0.0;
    std::string rule;  // human-readable tolerance, e.g. "<= 0.001"
    std::string citation;
};

struct RunReport {
    std::string spec_name;
    std::string config_hash;
    std::vector<ReportValue> values;
    std::vector<Check> checks;
    std::vector<std::string> files;  // relative to the output directory

    bool all_passed() const;
    /// "key: value" lines; the same text lands in summary.txt.
    void write(std::ostream& out) const;
};

struct RunOptions {
    /// Overrides spec.output_directory when non-empty.
    std::filesystem::path output_directory;
    /// Progress messages; nullptr keeps quiet.
    std::ostream* log = nullptr;
};

/// Runs the listed experiments into a sibling "<dir>.partial" directory and
/// renames it onto the output directory once everything succeeded; on
/// failure the partial directory is removed and a StageError names the
/// experiment. Throws InvalidArgument if validate_spec reports problems.
RunReport run_experiment(const ExperimentSpec& spec, const RunOptions& options = {});

/// Hash of the canonical serialization; written into every CSV.
std::string config_hash(const ExperimentSpec& spec);

}  // namespace resprep
