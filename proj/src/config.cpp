#include "resprep/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <tuple>

#include <yaml-cpp/yaml.h>

#include "resprep/csv.hpp"
#include "resprep/errors.hpp"

namespace resprep {

namespace {

constexpr std::pair<ExperimentKind, std::string_view> kind_names[] = {
    {ExperimentKind::poles, "poles"},
    {ExperimentKind::ground_state, "ground-state"},
    {ExperimentKind::delay_spectrum, "delay-spectrum"},
    {ExperimentKind::iso_curves, "iso-curves"},
    {ExperimentKind::decay_curves, "decay-curves"},
    {ExperimentKind::spectrum_vs_t, "spectrum-vs-T"},
    {ExperimentKind::t_scan, "t-scan"},
};

[[noreturn]] void fail(const YAML::Node& node, const std::string& message)
{
    const auto mark = node.Mark();
    throw ParseError(message + " (line " + std::to_string(mark.line + 1) + ", column " +
                         std::to_string(mark.column + 1) + ")",
                     mark.line + 1, mark.column + 1);
}

/// A mapping whose keys are checked against the allowed set up front.
class Section {
public:
    Section(const YAML::Node& node, std::string path, std::initializer_list<std::string_view> allowed)
        : node_(node), path_(std::move(path))
    {
        if (!node_.IsMap()) {
            fail(node_, "'" + path_ + "' must be a mapping");
        }
        for (const auto& entry : node_) {
            const auto key = entry.first.as<std::string>();
            bool known = false;
            for (const auto a : allowed) {
                known = known || key == a;
            }
            if (!known) {
                fail(entry.first, "unknown key '" + qualified(key) + "'");
            }
        }
    }

    std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    std::optional<YAML::Node> get(const std::string& key) const
    {
        const auto child = node_[key];
        if (!child) {
            return std::nullopt;
        }
        return child;
    }

    void read(const std::string& key, double& out) const
    {
        if (const auto n = get(key)) {
            out = to_double(*n, qualified(key));
        }
    }

    void read(const std::string& key, int& out) const
    {
        if (const auto n = get(key)) {
            out = static_cast<int>(to_integer(*n, qualified(key)));
        }
    }

    void read(const std::string& key, std::size_t& out) const
    {
        if (const auto n = get(key)) {
            const auto v = to_integer(*n, qualified(key));
            if (v < 0) {
                fail(*n, "'" + qualified(key) + "' must be a non-negative integer");
            }
            out = static_cast<std::size_t>(v);
        }
    }

    void read(const std::string& key, bool& out) const
    {
        if (const auto n = get(key)) {
            if (!n->IsScalar()) {
                fail(*n, "'" + qualified(key) + "' must be true or false");
            }
            try {
                out = n->as<bool>();
            } catch (const YAML::Exception&) {
                fail(*n, "'" + qualified(key) + "' must be true or false");
            }
        }
    }

    void read(const std::string& key, std::string& out) const
    {
        if (const auto n = get(key)) {
            if (!n->IsScalar()) {
                fail(*n, "'" + qualified(key) + "' must be a string");
            }
            out = n->as<std::string>();
        }
    }

    void read(const std::string& key, std::vector<double>& out) const
    {
        if (const auto n = get(key)) {
            out = to_doubles(*n, qualified(key));
        }
    }

    void read(const std::string& key, std::optional<double>& out) const
    {
        if (const auto n = get(key)) {
            out = to_double(*n, qualified(key));
        }
    }

    void read(const std::string& key, std::optional<std::pair<double, double>>& out) const
    {
        if (const auto n = get(key)) {
            const auto v = to_doubles(*n, qualified(key));
            if (v.size() != 2) {
                fail(*n, "'" + qualified(key) + "' must be a list of two numbers");
            }
            out = std::pair{v[0], v[1]};
        }
    }

    static double to_double(const YAML::Node& n, const std::string& path)
    {
        if (!n.IsScalar()) {
            fail(n, "'" + path + "' must be a number");
        }
        const auto text = n.Scalar();
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec != std::errc{} || ptr != text.data() + text.size()) {
            fail(n, "'" + path + "' must be a number, got '" + text + "'");
        }
        return v;
    }

    static long long to_integer(const YAML::Node& n, const std::string& path)
    {
        if (!n.IsScalar()) {
            fail(n, "'" + path + "' must be an integer");
        }
        const auto text = n.Scalar();
        long long v = 0;
        const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec != std::errc{} || ptr != text.data() + text.size()) {
            fail(n, "'" + path + "' must be an integer, got '" + text + "'");
        }
        return v;
    }

    static std::vector<double> to_doubles(const YAML::Node& n, const std::string& path)
    {
        if (!n.IsSequence()) {
            fail(n, "'" + path + "' must be a list of numbers");
        }
        std::vector<double> v;
        for (const auto& item : n) {
            v.push_back(to_double(item, path));
        }
        return v;
    }

private:
    YAML::Node node_;
    std::string path_;
};

PotentialConfig read_config(const Section& parent, const std::string& key, PotentialConfig config)
{
    if (const auto n = parent.get(key)) {
        const Section s(*n, parent.qualified(key), {"v_well", "v_barrier", "d", "b"});
        s.read("v_well", config.v_well);
        s.read("v_barrier", config.v_barrier);
        s.read("d", config.d);
        s.read("b", config.b);
    }
    return config;
}

// Shortest text that reads back to the same double.
std::string num(double v)
{
    if (std::isnan(v)) {
        return ".nan";
    }
    if (std::isinf(v)) {
        return v > 0.0 ? ".inf" : "-.inf";
    }
    char buffer[32];
    const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, v);
    return std::string(buffer, ptr);
}

std::string list(const std::vector<double>& v)
{
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        s += (i ? ", " : "") + num(v[i]);
    }
    return s + "]";
}

std::string quoted(const std::string& text)
{
    std::string s = "\"";
    for (const char c : text) {
        if (c == '"' || c == '\\') {
            s += '\\';
        }
        s += c;
    }
    return s + "\"";
}

void check(std::vector<Diagnostic>& out, bool ok, std::string field, std::string message)
{
    if (!ok) {
        out.push_back({std::move(field), std::move(message)});
    }
}

void check_config(std::vector<Diagnostic>& out, const PotentialConfig& c, const std::string& path)
{
    check(out, std::isfinite(c.d) && c.d > 0.0, path + ".d", "must be positive, got " + num(c.d));
    check(out, std::isfinite(c.b) && c.b >= 0.0, path + ".b", "must be >= 0, got " + num(c.b));
    check(out, std::isfinite(c.v_well) && c.v_well >= 0.0, path + ".v_well",
          "must be >= 0, got " + num(c.v_well));
    check(out, std::isfinite(c.v_barrier) && c.v_barrier >= 0.0, path + ".v_barrier",
          "must be >= 0, got " + num(c.v_barrier));
}

}  // namespace

std::string to_string(ExperimentKind kind)
{
    for (const auto& [k, name] : kind_names) {
        if (k == kind) {
            return std::string(name);
        }
    }
    return "unknown";
}

std::optional<ExperimentKind> experiment_from_string(std::string_view name)
{
    for (const auto& [k, n] : kind_names) {
        if (n == name) {
            return k;
        }
    }
    return std::nullopt;
}

std::vector<ExperimentKind> all_experiments()
{
    std::vector<ExperimentKind> v;
    for (const auto& entry : kind_names) {
        v.push_back(entry.first);
    }
    return v;
}

ExperimentSpec parse_spec(std::string_view text)
{
    YAML::Node root;
    try {
        root = YAML::Load(std::string(text));
    } catch (const YAML::ParserException& e) {
        throw ParseError(e.what(), e.mark.line + 1, e.mark.column + 1);
    }
    ExperimentSpec spec;
    if (!root || root.IsNull()) {
        return spec;
    }
    const Section top(root, "",
                      {"name", "experiments", "physics", "numerics", "iso_curves", "delay_spectrum",
                       "decay_curves", "spectrum_vs_t", "t_scan", "reference", "outputs"});
    top.read("name", spec.name);
    if (const auto n = top.get("experiments")) {
        if (!n->IsSequence()) {
            fail(*n, "'experiments' must be a list");
        }
        spec.experiments.clear();
        for (const auto& item : *n) {
            const auto kind = item.IsScalar() ? experiment_from_string(item.Scalar()) : std::nullopt;
            if (!kind) {
                fail(item, "unknown experiment '" + (item.IsScalar() ? item.Scalar() : std::string("?")) + "'");
            }
            spec.experiments.push_back(*kind);
        }
    }
    if (const auto n = top.get("physics")) {
        const Section s(*n, "physics", {"mass_amu", "t_switch", "initial", "final"});
        s.read("mass_amu", spec.mass_amu);
        s.read("t_switch", spec.t_switch);
        spec.initial = read_config(s, "initial", spec.initial);
        spec.final = read_config(s, "final", spec.final);
    }
    if (const auto n = top.get("numerics")) {
        auto& m = spec.numerics;
        const Section s(*n, "numerics",
                        {"dx", "dt", "spectrum_dt", "box_length", "t_end", "e_cut", "absorber_width_fraction",
                         "absorber_strength", "growth_threshold", "max_points", "epsilon_v",
                         "refine_initial_state", "energy_grid"});
        s.read("dx", m.dx);
        s.read("dt", m.dt);
        s.read("spectrum_dt", m.spectrum_dt);
        s.read("box_length", m.box_length);
        s.read("t_end", m.t_end);
        s.read("e_cut", m.e_cut);
        s.read("absorber_width_fraction", m.absorber_width_fraction);
        s.read("absorber_strength", m.absorber_strength);
        s.read("growth_threshold", m.growth_threshold);
        s.read("max_points", m.max_points);
        s.read("epsilon_v", m.epsilon_v);
        s.read("refine_initial_state", m.refine_initial_state);
        if (const auto g = s.get("energy_grid")) {
            const Section e(*g, "numerics.energy_grid",
                            {"points", "e_max", "dense_half_width", "dense_spacing", "e_min_fraction"});
            e.read("points", m.energy_grid.points);
            e.read("e_max", m.energy_grid.e_max);
            e.read("dense_half_width", m.energy_grid.dense_half_width);
            e.read("dense_spacing", m.energy_grid.dense_spacing);
            e.read("e_min_fraction", m.energy_grid.e_min_fraction);
        }
    }
    if (const auto n = top.get("iso_curves")) {
        const Section s(*n, "iso_curves", {"targets", "v_well_min", "v_well_max", "steps"});
        s.read("targets", spec.iso_curves.targets);
        s.read("v_well_min", spec.iso_curves.v_well_min);
        s.read("v_well_max", spec.iso_curves.v_well_max);
        s.read("steps", spec.iso_curves.steps);
    }
    if (const auto n = top.get("delay_spectrum")) {
        const Section s(*n, "delay_spectrum", {"half_width", "points"});
        s.read("half_width", spec.delay_spectrum.half_width);
        s.read("points", spec.delay_spectrum.points);
    }
    if (const auto n = top.get("decay_curves")) {
        const Section s(*n, "decay_curves", {"t_end", "runs"});
        s.read("t_end", spec.decay_curves.t_end);
        if (const auto runs = s.get("runs")) {
            if (!runs->IsSequence()) {
                fail(*runs, "'decay_curves.runs' must be a list");
            }
            spec.decay_curves.runs.clear();
            for (const auto& item : *runs) {
                const Section r(item, "decay_curves.runs", {"t_switch_over_tau", "fit_t_min"});
                DecayRun run;
                r.read("t_switch_over_tau", run.t_switch_over_tau);
                r.read("fit_t_min", run.fit_t_min);
                spec.decay_curves.runs.push_back(run);
            }
        }
    }
    if (const auto n = top.get("spectrum_vs_t")) {
        const Section s(*n, "spectrum_vs_t", {"t_switch_over_tau"});
        s.read("t_switch_over_tau", spec.spectrum_vs_t.t_switch_over_tau);
    }
    if (const auto n = top.get("t_scan")) {
        auto& t = spec.t_scan;
        const Section s(*n, "t_scan",
                        {"lorentzian", "exponential", "lorentzian_range", "exponential_range", "coarse_points",
                         "relative_tolerance", "fit_t_min", "horizon_over_tau", "t_end"});
        s.read("lorentzian", t.lorentzian);
        s.read("exponential", t.exponential);
        std::optional<std::pair<double, double>> range;
        s.read("lorentzian_range", range);
        if (range) {
            std::tie(t.lorentzian_lo, t.lorentzian_hi) = *range;
        }
        range.reset();
        s.read("exponential_range", range);
        if (range) {
            std::tie(t.exponential_lo, t.exponential_hi) = *range;
        }
        s.read("coarse_points", t.coarse_points);
        s.read("relative_tolerance", t.relative_tolerance);
        s.read("fit_t_min", t.fit_t_min);
        s.read("horizon_over_tau", t.horizon_over_tau);
        s.read("t_end", t.t_end);
    }
    if (const auto n = top.get("reference")) {
        auto& r = spec.reference;
        const Section s(*n, "reference",
                        {"e_r", "gamma", "tau", "pole_tolerance", "tau_tolerance", "lorentzian_t_star",
                         "exponential_t_star"});
        s.read("e_r", r.e_r);
        s.read("gamma", r.gamma);
        s.read("tau", r.tau);
        s.read("pole_tolerance", r.pole_tolerance);
        s.read("tau_tolerance", r.tau_tolerance);
        s.read("lorentzian_t_star", r.lorentzian_t_star);
        s.read("exponential_t_star", r.exponential_t_star);
    }
    if (const auto n = top.get("outputs")) {
        const Section s(*n, "outputs", {"directory"});
        s.read("directory", spec.output_directory);
    }
    return spec;
}

ExperimentSpec load_spec(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot read spec file " + path.string());
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse_spec(text.str());
}

std::string serialize_spec(const ExperimentSpec& spec)
{
    std::ostringstream o;
    const auto config = [&](const char* key, const PotentialConfig& c) {
        o << "  " << key << ": {v_well: " << num(c.v_well) << ", v_barrier: " << num(c.v_barrier)
          << ", d: " << num(c.d) << ", b: " << num(c.b) << "}\n";
    };
    const auto boolean = [](bool b) { return b ? "true" : "false"; };
    o << "name: " << quoted(spec.name) << "\n";
    o << "experiments: [";
    for (std::size_t i = 0; i < spec.experiments.size(); ++i) {
        o << (i ? ", " : "") << to_string(spec.experiments[i]);
    }
    o << "]\n";
    o << "physics:\n";
    o << "  mass_amu: " << num(spec.mass_amu) << "\n";
    o << "  t_switch: " << num(spec.t_switch) << "\n";
    config("initial", spec.initial);
    config("final", spec.final);
    const auto& m = spec.numerics;
    o << "numerics:\n";
    o << "  dx: " << num(m.dx) << "\n";
    o << "  dt: " << num(m.dt) << "\n";
    o << "  spectrum_dt: " << num(m.spectrum_dt) << "\n";
    o << "  box_length: " << num(m.box_length) << "\n";
    o << "  t_end: " << num(m.t_end) << "\n";
    o << "  e_cut: " << num(m.e_cut) << "\n";
    o << "  absorber_width_fraction: " << num(m.absorber_width_fraction) << "\n";
    o << "  absorber_strength: " << num(m.absorber_strength) << "\n";
    o << "  growth_threshold: " << num(m.growth_threshold) << "\n";
    o << "  max_points: " << m.max_points << "\n";
    o << "  epsilon_v: " << num(m.epsilon_v) << "\n";
    o << "  refine_initial_state: " << boolean(m.refine_initial_state) << "\n";
    o << "  energy_grid: {points: " << m.energy_grid.points << ", e_max: " << num(m.energy_grid.e_max)
      << ", dense_half_width: " << num(m.energy_grid.dense_half_width)
      << ", dense_spacing: " << num(m.energy_grid.dense_spacing)
      << ", e_min_fraction: " << num(m.energy_grid.e_min_fraction) << "}\n";
    o << "iso_curves:\n";
    o << "  targets: " << list(spec.iso_curves.targets) << "\n";
    o << "  v_well_min: " << num(spec.iso_curves.v_well_min) << "\n";
    o << "  v_well_max: " << num(spec.iso_curves.v_well_max) << "\n";
    o << "  steps: " << spec.iso_curves.steps << "\n";
    o << "delay_spectrum:\n";
    o << "  half_width: " << num(spec.delay_spectrum.half_width) << "\n";
    o << "  points: " << spec.delay_spectrum.points << "\n";
    o << "decay_curves:\n";
    o << "  t_end: " << num(spec.decay_curves.t_end) << "\n";
    o << "  runs:" << (spec.decay_curves.runs.empty() ? " []" : "") << "\n";
    for (const auto& r : spec.decay_curves.runs) {
        o << "    - {t_switch_over_tau: " << num(r.t_switch_over_tau) << ", fit_t_min: " << num(r.fit_t_min)
          << "}\n";
    }
    o << "spectrum_vs_t:\n";
    o << "  t_switch_over_tau: " << list(spec.spectrum_vs_t.t_switch_over_tau) << "\n";
    const auto& t = spec.t_scan;
    o << "t_scan:\n";
    o << "  lorentzian: " << boolean(t.lorentzian) << "\n";
    o << "  exponential: " << boolean(t.exponential) << "\n";
    o << "  lorentzian_range: " << list({t.lorentzian_lo, t.lorentzian_hi}) << "\n";
    o << "  exponential_range: " << list({t.exponential_lo, t.exponential_hi}) << "\n";
    o << "  coarse_points: " << t.coarse_points << "\n";
    o << "  relative_tolerance: " << num(t.relative_tolerance) << "\n";
    o << "  fit_t_min: " << num(t.fit_t_min) << "\n";
    o << "  horizon_over_tau: " << num(t.horizon_over_tau) << "\n";
    o << "  t_end: " << num(t.t_end) << "\n";
    const auto& r = spec.reference;
    o << "reference:\n";
    if (r.e_r) {
        o << "  e_r: " << num(*r.e_r) << "\n";
    }
    if (r.gamma) {
        o << "  gamma: " << num(*r.gamma) << "\n";
    }
    if (r.tau) {
        o << "  tau: " << num(*r.tau) << "\n";
    }
    o << "  pole_tolerance: " << num(r.pole_tolerance) << "\n";
    o << "  tau_tolerance: " << num(r.tau_tolerance) << "\n";
    if (r.lorentzian_t_star) {
        o << "  lorentzian_t_star: " << list({r.lorentzian_t_star->first, r.lorentzian_t_star->second}) << "\n";
    }
    if (r.exponential_t_star) {
        o << "  exponential_t_star: " << list({r.exponential_t_star->first, r.exponential_t_star->second})
          << "\n";
    }
    o << "outputs:\n";
    o << "  directory: " << quoted(spec.output_directory) << "\n";
    return o.str();
}

ExperimentSpec apply_override(const ExperimentSpec& spec, std::string_view assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0) {
        throw ParseError("override '" + std::string(assignment) + "' is not of the form key=value", 1, 1);
    }
    const std::string path(assignment.substr(0, eq));
    const std::string text(assignment.substr(eq + 1));
    YAML::Node root = YAML::Load(serialize_spec(spec));
    YAML::Node value;
    try {
        value = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ParseError("override " + path + ": " + e.what(), 1, static_cast<int>(eq) + 2);
    }
    // Walk the dotted path; missing levels become maps so that unknown keys
    // surface through parse_spec with their names.
    std::vector<YAML::Node> chain{root};
    std::size_t start = 0;
    std::vector<std::string> keys;
    while (true) {
        const auto dot = path.find('.', start);
        keys.push_back(path.substr(start, dot - start));
        if (dot == std::string::npos) {
            break;
        }
        start = dot + 1;
    }
    for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
        YAML::Node next = chain.back()[keys[i]];
        if (!next.IsMap()) {
            next = YAML::Node(YAML::NodeType::Map);
            chain.back()[keys[i]] = next;
        }
        chain.push_back(next);
    }
    chain.back()[keys.back()] = value;
    YAML::Emitter out;
    out << root;
    try {
        return parse_spec(out.c_str());
    } catch (const ParseError& e) {
        throw ParseError("override " + path + ": " + e.what(), 1, 1);
    }
}

std::vector<Diagnostic> validate_spec(const ExperimentSpec& spec)
{
    std::vector<Diagnostic> out;
    check(out, !spec.name.empty(), "name", "must not be empty");
    check(out, !spec.experiments.empty(), "experiments", "must list at least one experiment");
    check(out, std::isfinite(spec.mass_amu) && spec.mass_amu > 0.0, "physics.mass_amu",
          "must be positive, got " + num(spec.mass_amu));
    check(out, std::isfinite(spec.t_switch) && spec.t_switch >= 0.0, "physics.t_switch",
          "switching time T must be >= 0, got " + num(spec.t_switch));
    check_config(out, spec.initial, "physics.initial");
    check_config(out, spec.final, "physics.final");

    const auto& m = spec.numerics;
    check(out, m.dx > 0.0, "numerics.dx", "must be positive, got " + num(m.dx));
    check(out, m.dt > 0.0, "numerics.dt", "must be positive, got " + num(m.dt));
    check(out, m.spectrum_dt >= 0.0, "numerics.spectrum_dt", "must be >= 0 (0 selects T/100), got " + num(m.spectrum_dt));
    check(out, m.t_end > 0.0, "numerics.t_end", "must be positive, got " + num(m.t_end));
    check(out, m.e_cut > 0.0, "numerics.e_cut", "must be positive, got " + num(m.e_cut));
    check(out, m.epsilon_v > 0.0, "numerics.epsilon_v", "must be positive, got " + num(m.epsilon_v));
    check(out, m.growth_threshold > 0.0 && m.growth_threshold < 1.0, "numerics.growth_threshold",
          "must lie in (0, 1), got " + num(m.growth_threshold));
    check(out, m.absorber_width_fraction > 0.0 && m.absorber_width_fraction < 1.0,
          "numerics.absorber_width_fraction", "must lie in (0, 1), got " + num(m.absorber_width_fraction));
    check(out, m.absorber_strength >= 0.0, "numerics.absorber_strength",
          "must be >= 0 (0 tunes it), got " + num(m.absorber_strength));
    const bool configs_ok = out.empty() || std::none_of(out.begin(), out.end(), [](const Diagnostic& d) {
        return d.field.rfind("physics.", 0) == 0;
    });
    if (m.dx > 0.0 && m.e_cut > 0.0 && configs_ok && spec.mass_amu > 0.0) {
        PropagationSetup setup;
        setup.schedule = {spec.initial, spec.final, 0.0};
        setup.unit = make_unit_system(spec.mass_amu);
        setup.e_cut = m.e_cut;
        const double bound = setup.dx_bound();
        check(out, m.dx <= bound, "numerics.dx",
              "dx = " + num(m.dx) + " um violates the wavelength rule dx <= 2 pi/(20 k_max) = " +
                  format_number(bound) + " um");
        const double edge = std::max(spec.initial.outer_edge(), spec.final.outer_edge());
        check(out, m.box_length * (1.0 - m.absorber_width_fraction) > edge, "numerics.box_length",
              "absorber overlaps the potential: it starts at " +
                  num(m.box_length * (1.0 - m.absorber_width_fraction)) + " um, the potential ends at " +
                  num(edge) + " um");
    }
    const auto& g = m.energy_grid;
    check(out, g.points >= 100, "numerics.energy_grid.points", "need at least 100, got " + std::to_string(g.points));
    check(out, g.e_max > 0.0, "numerics.energy_grid.e_max", "must be positive, got " + num(g.e_max));
    check(out, g.dense_spacing > 0.0 && g.dense_half_width > 0.0, "numerics.energy_grid",
          "dense_spacing and dense_half_width must be positive");
    check(out, g.e_min_fraction > 0.0 && g.e_min_fraction < 1.0, "numerics.energy_grid.e_min_fraction",
          "must lie in (0, 1), got " + num(g.e_min_fraction));

    const auto& iso = spec.iso_curves;
    check(out, !iso.targets.empty(), "iso_curves.targets", "must list at least one energy");
    for (const double t : iso.targets) {
        check(out, t > 0.0, "iso_curves.targets", "energies must be positive, got " + num(t));
    }
    check(out, iso.v_well_min >= 0.0 && iso.v_well_max > iso.v_well_min, "iso_curves.v_well_min",
          "need 0 <= v_well_min < v_well_max");
    check(out, iso.steps >= 2, "iso_curves.steps", "need at least 2, got " + std::to_string(iso.steps));

    check(out, spec.delay_spectrum.half_width > 2.0, "delay_spectrum.half_width",
          "must exceed 2 widths for the Lorentzian fit, got " + num(spec.delay_spectrum.half_width));
    check(out, spec.delay_spectrum.points >= 10, "delay_spectrum.points",
          "need at least 10, got " + std::to_string(spec.delay_spectrum.points));

    check(out, spec.decay_curves.t_end > 0.0, "decay_curves.t_end", "must be positive");
    for (const auto& r : spec.decay_curves.runs) {
        check(out, r.t_switch_over_tau >= 0.0, "decay_curves.runs.t_switch_over_tau",
              "must be >= 0, got " + num(r.t_switch_over_tau));
        check(out, r.fit_t_min >= 0.0 && r.fit_t_min < spec.decay_curves.t_end, "decay_curves.runs.fit_t_min",
              "must lie in [0, t_end), got " + num(r.fit_t_min));
    }
    for (const double f : spec.spectrum_vs_t.t_switch_over_tau) {
        check(out, f >= 0.0, "spectrum_vs_t.t_switch_over_tau", "must be >= 0, got " + num(f));
    }

    const auto& t = spec.t_scan;
    check(out, t.lorentzian_lo > 0.0 && t.lorentzian_hi > t.lorentzian_lo && t.lorentzian_hi <= 2.0,
          "t_scan.lorentzian_range", "need 0 < lo < hi <= 2 (units of tau)");
    check(out, t.exponential_lo > 0.0 && t.exponential_hi > t.exponential_lo && t.exponential_hi <= 2.0,
          "t_scan.exponential_range", "need 0 < lo < hi <= 2 (units of tau)");
    check(out, t.coarse_points >= 3, "t_scan.coarse_points", "need at least 3");
    check(out, t.relative_tolerance > 0.0, "t_scan.relative_tolerance", "must be positive");
    check(out, t.fit_t_min >= 0.0 && t.fit_t_min < t.t_end, "t_scan.fit_t_min", "must lie in [0, t_end)");
    check(out, t.horizon_over_tau > 0.0, "t_scan.horizon_over_tau", "must be positive");

    check(out, spec.reference.pole_tolerance > 0.0, "reference.pole_tolerance", "must be positive");
    check(out, spec.reference.tau_tolerance > 0.0, "reference.tau_tolerance", "must be positive");
    check(out, !spec.output_directory.empty(), "outputs.directory", "must not be empty");
    return out;
}

std::vector<Diagnostic> validate_spec_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot read spec file " + path.string());
    }
    std::ostringstream text;
    text << in.rdbuf();
    try {
        return validate_spec(parse_spec(text.str()));
    } catch (const ParseError& e) {
        return {{path.string() + ":" + std::to_string(e.line()) + ":" + std::to_string(e.column()), e.what()}};
    }
}

}  // namespace resprep
