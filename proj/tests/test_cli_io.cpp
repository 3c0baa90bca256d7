#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>

#include "resprep/csv.hpp"
#include "resprep/errors.hpp"
#include "resprep/experiment.hpp"

using namespace resprep;
namespace fs = std::filesystem;

namespace {

const fs::path paper_defaults = fs::path(RESPREP_CONFIG_DIR) / "paper-defaults.yaml";

std::string read_file(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / ("resprep_test_" + name);
    fs::remove_all(dir);
    return dir;
}

std::map<std::string, std::string> tree(const fs::path& root)
{
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (entry.is_regular_file()) {
            files[fs::relative(entry.path(), root).string()] = read_file(entry.path());
        }
    }
    return files;
}

/// Cell text of a written CSV at a 1-based data row.
std::string csv_cell(const fs::path& file, const std::string& column, int row)
{
    std::ifstream in(file);
    std::string line;
    std::vector<std::string> header;
    int data_row = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') {
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            cells.push_back(cell);
        }
        if (header.empty()) {
            header = cells;
            continue;
        }
        if (++data_row == row) {
            for (std::size_t i = 0; i < header.size(); ++i) {
                if (header[i].substr(0, header[i].find('[')) == column) {
                    return cells.at(i);
                }
            }
        }
    }
    return {};
}

ExperimentSpec quick_spec()
{
    auto spec = load_spec(paper_defaults);
    spec.experiments = {ExperimentKind::poles, ExperimentKind::ground_state, ExperimentKind::delay_spectrum};
    return spec;
}

}  // namespace

TEST_CASE("number formatting and hashing")
{
    CHECK(format_number(134.50912345678901) == "134.509123457");
    CHECK(format_number(0.0) == "0");
    CHECK(format_number(-2.5e-12) == "-2.5e-12");
    CHECK(format_number(std::nan("")) == "nan");
    CHECK(format_number(INFINITY) == "inf");
    CHECK(format_number(-INFINITY) == "-inf");
    CHECK(hex64(fnv1a64("")) == "cbf29ce484222325");
    CHECK(hex64(fnv1a64("a")) == "af63dc4c8601ec8c");
    CHECK(hex64(fnv1a64("foobar")) == "85944171f73967e8");
}

TEST_CASE("CSV layout")
{
    CsvTable t("demo");
    t.add_meta("config_hash", "abc");
    t.add_column("e", "s^-1", {1.0, 2.5});
    t.add_text_column("label", {"x", "y"});
    std::ostringstream out;
    t.write(out);
    const std::string text = out.str();
    CHECK(text.find("# table: demo\n") == 0);
    CHECK(text.find("# units: e=s^-1 label=text\n") != std::string::npos);
    CHECK(text.find("# config_hash: abc\n") != std::string::npos);
    CHECK(text.find("e[s^-1],label\n1,x\n2.5,y\n") != std::string::npos);
    CHECK(t.number("e", 1) == 2.5);
    CHECK_THROWS_AS(t.column_index("missing"), InvalidArgument);
    t.add_column("short", "1", {1.0});
    std::ostringstream bad;
    CHECK_THROWS_AS(t.write(bad), InvalidArgument);
}

TEST_CASE("spec round trip")
{
    SUBCASE("defaults")
    {
        const ExperimentSpec spec;
        CHECK(parse_spec(serialize_spec(spec)) == spec);
    }
    SUBCASE("paper defaults file")
    {
        const auto spec = load_spec(paper_defaults);
        CHECK(spec.name == "paper-defaults");
        CHECK(spec.final == PotentialConfig{100.0, 200.0, 5.0, 10.0});
        CHECK(spec.reference.e_r == 134.509);
        CHECK(parse_spec(serialize_spec(spec)) == spec);
    }
    SUBCASE("awkward numbers")
    {
        ExperimentSpec spec;
        spec.t_switch = 0.1 + 0.2;
        spec.numerics.dx = 1.0 / 3.0;
        spec.spectrum_vs_t.t_switch_over_tau = {1e-300, 0.058};
        spec.reference.tau = 0.411;
        spec.experiments = {ExperimentKind::t_scan};
        CHECK(parse_spec(serialize_spec(spec)) == spec);
    }
}

TEST_CASE("parse errors carry line and column")
{
    SUBCASE("unknown key")
    {
        try {
            parse_spec("name: x\nphysics:\n  bogus: 1\n");
            FAIL("no error");
        } catch (const ParseError& e) {
            CHECK(e.line() == 3);
            CHECK(e.column() == 3);
            CHECK(std::string(e.what()).find("bogus") != std::string::npos);
        }
    }
    SUBCASE("wrong type")
    {
        try {
            parse_spec("physics:\n  t_switch: soon\n");
            FAIL("no error");
        } catch (const ParseError& e) {
            CHECK(e.line() == 2);
            CHECK(e.column() == 13);
        }
    }
    SUBCASE("unknown experiment")
    {
        CHECK_THROWS_AS(parse_spec("experiments: [poles, nonsense]\n"), ParseError);
    }
    SUBCASE("malformed YAML")
    {
        CHECK_THROWS_AS(parse_spec("physics: [\n"), ParseError);
    }
}

TEST_CASE("overrides")
{
    const ExperimentSpec spec;
    auto s = apply_override(spec, "numerics.dx=0.025");
    CHECK(s.numerics.dx == 0.025);
    s = apply_override(s, "physics.final.v_well=120");
    CHECK(s.final.v_well == 120.0);
    s = apply_override(s, "experiments=[poles, t-scan]");
    CHECK(s.experiments == std::vector<ExperimentKind>{ExperimentKind::poles, ExperimentKind::t_scan});
    CHECK_THROWS_AS(apply_override(spec, "numerics.nope=1"), ParseError);
    CHECK_THROWS_AS(apply_override(spec, "numerics.dx"), ParseError);
}

TEST_CASE("validation")
{
    SUBCASE("paper defaults are runnable")
    {
        CHECK(validate_spec(load_spec(paper_defaults)).empty());
        CHECK(validate_spec_file(paper_defaults).empty());
    }
    SUBCASE("negative switching time")
    {
        auto spec = load_spec(paper_defaults);
        spec.t_switch = -0.1;
        const auto d = validate_spec(spec);
        REQUIRE(d.size() == 1);
        CHECK(d[0].field == "physics.t_switch");
    }
    SUBCASE("dx beyond the wavelength rule")
    {
        auto spec = load_spec(paper_defaults);
        spec.numerics.dx = 0.5;
        const auto d = validate_spec(spec);
        REQUIRE(d.size() == 1);
        CHECK(d[0].field == "numerics.dx");
        CHECK(std::regex_search(d[0].message, std::regex("dx = 0\\.5 um .* = 0\\.3[0-9]+ um")));
    }
    SUBCASE("parse errors become a diagnostic")
    {
        const auto dir = scratch("validate");
        fs::create_directories(dir);
        std::ofstream(dir / "bad.yaml") << "name: x\nnumerics:\n  dxx: 1\n";
        const auto d = validate_spec_file(dir / "bad.yaml");
        REQUIRE(d.size() == 1);
        CHECK(d[0].message.find("line 3") != std::string::npos);
        CHECK_THROWS_AS(validate_spec_file(dir / "missing.yaml"), Error);
        fs::remove_all(dir);
    }
}

TEST_CASE("run outputs are deterministic and cited")
{
    const auto a = scratch("run_a");
    const auto b = scratch("run_b");
    const auto spec = quick_spec();
    const auto report = run_experiment(spec, {a});
    run_experiment(spec, {b});
    CHECK(report.all_passed());
    CHECK(tree(a) == tree(b));
    CHECK(fs::exists(a / "poles" / "poles.csv"));
    CHECK(fs::exists(a / "summary.txt"));
    CHECK(fs::exists(a / "spec.yaml"));
    CHECK(parse_spec(read_file(a / "spec.yaml")) == spec);
    CHECK_FALSE(fs::exists(fs::path(a.string() + ".partial")));

    SUBCASE("every reported number points at its CSV cell")
    {
        REQUIRE_FALSE(report.values.empty());
        const std::regex cite(R"(^(.+\.csv):([^:]+):([0-9]+)$)");
        for (const auto& v : report.values) {
            std::smatch m;
            REQUIRE_MESSAGE(std::regex_match(v.citation, m, cite), v.citation);
            CHECK(csv_cell(a / m[1].str(), m[2].str(), std::stoi(m[3].str())) == format_number(v.value));
        }
    }
    SUBCASE("pole and ground state values")
    {
        std::map<std::string, double> values;
        for (const auto& v : report.values) {
            values[v.key] = v.value;
        }
        REQUIRE(values.count("pole.e_r"));
        CHECK(values["pole.e_r"] == doctest::Approx(134.509).epsilon(1e-3));
        CHECK(-0.5 * values["pole.gamma"] == doctest::Approx(-1.217).epsilon(1e-3));
    }
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("failed runs leave no partial output")
{
    const auto dir = scratch("run_fail");
    auto spec = quick_spec();
    run_experiment(spec, {dir});
    const auto before = tree(dir);

    spec.final = PotentialConfig{0.0, 0.0, 5.0, 10.0};  // no resonance to release into
    spec.experiments = {ExperimentKind::delay_spectrum};
    try {
        run_experiment(spec, {dir});
        FAIL("no error");
    } catch (const StageError& e) {
        CHECK(e.stage() == "delay-spectrum");
    }
    CHECK_FALSE(fs::exists(fs::path(dir.string() + ".partial")));
    CHECK(tree(dir) == before);
    fs::remove_all(dir);
}

TEST_CASE("invalid specs are refused before running")
{
    auto spec = quick_spec();
    spec.t_switch = -1.0;
    const auto dir = scratch("run_invalid");
    CHECK_THROWS_AS(run_experiment(spec, {dir}), InvalidArgument);
    CHECK_FALSE(fs::exists(dir));
}
