#include "fieldqubit/cli.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace fieldqubit;
using cli::json;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "fieldqubit_test_cli" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_config(const fs::path& dir, const std::string& name, const json& config) {
    const fs::path p = dir / name;
    std::ofstream(p) << config.dump(2);
    return p;
}

std::string slurp(const fs::path& p) { return io::read_file(p); }

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

struct Outcome {
    int code;
    std::string out;
    json error;
};

Outcome run(cli::Mode mode, const fs::path& config, std::optional<std::string> root = std::nullopt) {
    std::ostringstream out, err;
    const int code = cli::execute(mode, config, out, err, root);
    Outcome o{code, out.str(), {}};
    if (!err.str().empty()) o.error = json::parse(err.str());
    return o;
}

int tool(const std::string& args) {
    const std::string cmd = std::string("\"") + FIELDQUBIT_TOOL + "\" " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const json device_energies{{"e_c_ghz", 14.1}, {"e_l_ghz", 0.454}, {"e_j_ghz", 32.2}};

json spectrum_config() {
    return {{"task", "spectrum"},
            {"parameters", {{"energies", device_energies}, {"flux_phi0", {{"start", 0.0}, {"stop", 1.0}, {"points", 21}}}}}};
}

} // namespace

TEST_CASE("spectrum task writes the transition table", "[cli]") {
    const auto dir = scratch("spectrum");
    const auto r = run(cli::Mode::run, write_config(dir, "spectrum.json", spectrum_config()));
    REQUIRE(r.code == 0);
    const auto summary = json::parse(r.out);
    CHECK(summary["status"] == "ok");
    const auto table = io::read_csv(dir / "out" / "spectrum.csv");
    CHECK(table.header == std::vector<std::string>{"flux_phi0", "f_ge_ghz", "f_gf_ghz"});
    const auto flux = table.numbers("flux_phi0");
    const auto ge = table.numbers("f_ge_ghz");
    REQUIRE(flux.size() == 21);
    CHECK(flux[10] == 0.5);
    CHECK_THAT(ge[10], WithinRel(2.365, 0.01));
    const auto report = read_json(dir / "out" / "report.json");
    CHECK(report["task"] == "spectrum");
    CHECK(report["seed"] == cli::default_seed);
    CHECK(report["input_digest"].get<std::string>().starts_with("fnv1a64:"));
    CHECK(report["results"]["f_ge_half_flux"]["unit"] == "GHz");
}

TEST_CASE("element values are accepted in place of energies", "[cli]") {
    const auto dir = scratch("elements");
    json c = spectrum_config();
    c["parameters"].erase("energies");
    c["parameters"]["elements"] = {{"capacitance_f", 1.3737751294084485e-15},
                                   {"inductance_h", 3.6004738503696287e-07},
                                   {"critical_current_a", 6.483001609948379e-08}};
    REQUIRE(run(cli::Mode::run, write_config(dir, "c.json", c)).code == 0);
    const auto report = read_json(dir / "out" / "report.json");
    CHECK_THAT(report["energies"]["e_c_ghz"].get<double>(), WithinRel(14.1, 1e-9));
    CHECK_THAT(report["energies"]["e_j_ghz"].get<double>(), WithinRel(32.2, 1e-9));
}

TEST_CASE("schema errors name the offending field", "[cli][errors]") {
    const auto dir = scratch("schema");
    SECTION("empty config") {
        std::ofstream(dir / "empty.json") << "";
        const auto r = run(cli::Mode::run, dir / "empty.json");
        CHECK(r.code == cli::exit_input);
        CHECK(r.error["category"] == "schema");
        CHECK(r.error["path"] == "task");
    }
    SECTION("unknown task") {
        const auto r = run(cli::Mode::run, write_config(dir, "c.json", {{"task", "nope"}}));
        CHECK(r.code == cli::exit_input);
        CHECK(r.error["path"] == "task");
    }
    SECTION("wrong type deep in the tree") {
        json c = spectrum_config();
        c["parameters"]["energies"]["e_j_ghz"] = "large";
        const auto r = run(cli::Mode::run, write_config(dir, "c.json", c));
        CHECK(r.code == cli::exit_input);
        CHECK(r.error["path"] == "parameters.energies.e_j_ghz");
    }
    SECTION("negative energy") {
        json c = spectrum_config();
        c["parameters"]["energies"]["e_c_ghz"] = -1.0;
        const auto r = run(cli::Mode::run, write_config(dir, "c.json", c));
        CHECK(r.code == cli::exit_input);
        CHECK(r.error["path"] == "parameters.energies.e_c_ghz");
    }
    SECTION("malformed JSON") {
        std::ofstream(dir / "bad.json") << "{\"task\": ";
        CHECK(run(cli::Mode::run, dir / "bad.json").code == cli::exit_input);
    }
    SECTION("missing file") {
        const auto r = run(cli::Mode::run, dir / "absent.json");
        CHECK(r.code == cli::exit_input);
    }
    SECTION("basis out of range") {
        json c = spectrum_config();
        c["parameters"]["basis"] = 5;
        const auto r = run(cli::Mode::run, write_config(dir, "c.json", c));
        CHECK(r.code == cli::exit_input);
        CHECK(r.error["path"] == "parameters.basis");
    }
}

TEST_CASE("numerical failures exit with code 3", "[cli][errors]") {
    const auto dir = scratch("numerical");
    // Echo curves taken only at sweet spots cannot separate the flux noise.
    const json gen{{"task", "echo-fit"},
                   {"output", {{"dir", "data"}}},
                   {"parameters",
                    {{"energies", device_energies},
                     {"fluxes_phi0", {0.5, 0.5}},
                     {"times_s", {{"start", 0.0}, {"stop", 2e-5}, {"points", 30}}},
                     {"gamma_exp_per_s", 5e4},
                     {"sqrt_a_phi_phi0", 1e-5}}}};
    REQUIRE(run(cli::Mode::generate, write_config(dir, "gen.json", gen)).code == 0);
    const auto r = run(cli::Mode::run, dir / "data" / "echo-fit.json");
    CHECK(r.code == cli::exit_numerical);
    CHECK(r.error["category"] == "non-identifiable");

    const json rising{{"task", "spin-freeze-fit"}, {"parameters", {{"data", "rising.csv"}}}};
    std::ofstream(dir / "rising.csv") << "field_t,amplitude_phi0\n0,1e-5\n0.2,2e-5\n0.4,3e-5\n";
    const auto r2 = run(cli::Mode::run, write_config(dir, "rising.json", rising));
    CHECK(r2.code == cli::exit_numerical);
    CHECK(r2.error["category"] == "non-physical");
}

TEST_CASE("runs are byte-for-byte deterministic", "[cli]") {
    const auto dir = scratch("determinism");
    const json c{{"task", "telegraph"},
                 {"seed", 9},
                 {"parameters",
                  {{"fluctuator", {{"gamma1_per_s", 1e4}, {"p_th", 0.2}, {"amplitude", 1.0}}},
                   {"samples", 20000},
                   {"dt_s", 5e-6},
                   {"segments", 8}}}};
    const auto path = write_config(dir, "c.json", c);
    REQUIRE(run(cli::Mode::run, path).code == 0);
    const std::string first = slurp(dir / "out" / "psd.csv");
    const std::string report = slurp(dir / "out" / "report.json");
    REQUIRE(run(cli::Mode::run, path).code == 0);
    CHECK(slurp(dir / "out" / "psd.csv") == first);
    CHECK(slurp(dir / "out" / "report.json") == report);
}

TEST_CASE("generated datasets round-trip through the fitters", "[cli]") {
    const auto dir = scratch("roundtrip");
    SECTION("echo") {
        const json gen{{"task", "echo-fit"},
                       {"seed", 5},
                       {"output", {{"dir", "echo"}}},
                       {"parameters",
                        {{"energies", device_energies},
                         {"fluxes_phi0", {{"start", 0.48}, {"stop", 0.52}, {"points", 12}}},
                         {"times_s", {{"start", 0.0}, {"stop", 2e-5}, {"points", 60}}},
                         {"gamma_exp_per_s", 5e4},
                         {"sqrt_a_phi_phi0", 1e-5},
                         {"noise", 0.01}}}};
        REQUIRE(run(cli::Mode::generate, write_config(dir, "gen.json", gen)).code == 0);
        REQUIRE(run(cli::Mode::run, dir / "echo" / "echo-fit.json").code == 0);
        const auto report = read_json(dir / "echo" / "fit" / "report.json");
        CHECK_THAT(report["parameters"]["sqrt_a_phi"]["value"].get<double>(), WithinRel(1e-5, 0.05));
        CHECK_THAT(report["parameters"]["gamma_exp"]["value"].get<double>(), WithinRel(5e4, 0.05));
        CHECK(fs::exists(dir / "echo" / "fit" / "echo_rates.csv"));
    }
    SECTION("spin freezing") {
        const json gen{{"task", "spin-freeze-fit"},
                       {"output", {{"dir", "sf"}}},
                       {"parameters",
                        {{"fields_t", {{"start", 0.0}, {"stop", 0.5}, {"points", 26}}},
                         {"sqrt_a0_phi0", 1e-5},
                         {"spin_temperature_k", 0.085},
                         {"noise", 0.01}}}};
        REQUIRE(run(cli::Mode::generate, write_config(dir, "gen.json", gen)).code == 0);
        REQUIRE(run(cli::Mode::run, dir / "sf" / "spin-freeze-fit.json").code == 0);
        const auto report = read_json(dir / "sf" / "fit" / "report.json");
        CHECK_THAT(report["parameters"]["spin_temperature"]["value"].get<double>(), WithinRel(0.085, 0.05));
    }
    SECTION("critical field") {
        const json gen{{"task", "field-sweep"},
                       {"output", {{"dir", "gap"}}},
                       {"parameters",
                        {{"fields_t", {{"start", 0.0}, {"stop", 6.0}, {"points", 25}}},
                         {"mode", "gap"},
                         {"critical_field_t", 6.8},
                         {"noise", 0.0}}}};
        REQUIRE(run(cli::Mode::generate, write_config(dir, "gen.json", gen)).code == 0);
        REQUIRE(run(cli::Mode::run, dir / "gap" / "field-sweep.json").code == 0);
        const auto report = read_json(dir / "gap" / "fit" / "report.json");
        CHECK_THAT(report["results"]["critical_field"]["value"].get<double>(), WithinRel(6.8, 1e-6));
    }
    SECTION("hyperpolarisation") {
        const json gen{{"task", "hyperpol-fit"},
                       {"output", {{"dir", "hp"}}},
                       {"parameters",
                        {{"model",
                          {{"gamma_q_per_s", 140e3},
                           {"p_th", 0.4},
                           {"ladder",
                            {{"count", 40},
                             {"spacing_per_s", 1e5},
                             {"offset_per_s", 2.5e4},
                             {"gamma_2_per_s", 1e6},
                             {"total_cross_relaxation_per_s", 45e3}}}}},
                         {"protocol", {{"trace_duration_s", 5e-4}, {"strobe_interval_s", 2.56e-6}}},
                         {"repetitions", {1, 100, 10000}},
                         {"noise", 0.01}}}};
        REQUIRE(run(cli::Mode::generate, write_config(dir, "gen.json", gen)).code == 0);
        const auto truth = read_json(dir / "hp" / "ground_truth.json");
        CHECK(truth["task"] == "hyperpol-fit");
        REQUIRE(run(cli::Mode::run, dir / "hp" / "hyperpol-fit.json").code == 0);
        const auto report = read_json(dir / "hp" / "fit" / "report.json");
        CHECK_THAT(report["derived"]["total_cross_relaxation"]["value"].get<double>(), WithinRel(45e3, 0.1));
        CHECK_THAT(report["derived"]["gamma1"]["value"].get<double>(), WithinRel(185e3, 0.05));
        CHECK(report["warnings"].empty());
    }
}

TEST_CASE("seeds change the data but not the fit config", "[cli]") {
    const auto dir = scratch("seeds");
    auto gen = [&](std::uint64_t seed, const std::string& out) {
        const json c{{"task", "spin-freeze-fit"},
                     {"seed", seed},
                     {"output", {{"dir", out}}},
                     {"parameters",
                      {{"fields_t", {{"start", 0.0}, {"stop", 0.5}, {"points", 11}}},
                       {"sqrt_a0_phi0", 1e-5},
                       {"spin_temperature_k", 0.085},
                       {"noise", 0.01}}}};
        REQUIRE(run(cli::Mode::generate, write_config(dir, out + ".json", c)).code == 0);
    };
    gen(1, "a");
    gen(2, "b");
    CHECK(slurp(dir / "a" / "spin-freeze-fit.json") == slurp(dir / "b" / "spin-freeze-fit.json"));
    CHECK(slurp(dir / "a" / "ground_truth.json") == slurp(dir / "b" / "ground_truth.json"));
    CHECK(slurp(dir / "a" / "spin_freeze.csv") != slurp(dir / "b" / "spin_freeze.csv"));
}

TEST_CASE("output root override", "[cli]") {
    const auto dir = scratch("root");
    const auto elsewhere = scratch("root_target");
    REQUIRE(run(cli::Mode::run, write_config(dir, "c.json", spectrum_config()), elsewhere.string()).code == 0);
    CHECK(fs::exists(elsewhere / "out" / "spectrum.csv"));
    CHECK_FALSE(fs::exists(dir / "out"));
}

TEST_CASE("hyperpolarisation simulation reports overshoot and undershoot", "[cli]") {
    const auto dir = scratch("hypersim");
    const json c{{"task", "hyperpol-sim"},
                 {"parameters",
                  {{"model",
                    {{"gamma_q_per_s", 140e3},
                     {"p_th", 0.4},
                     {"ladder",
                      {{"count", 100},
                       {"spacing_per_s", 1e5},
                       {"offset_per_s", 2.5e4},
                       {"gamma_2_per_s", 1e6},
                       {"total_cross_relaxation_per_s", 45e3}}}}},
                   {"protocol", {{"repetitions", 10000}, {"trace_duration_s", 2e-4}}},
                   {"targets", {"ground", "excited"}}}}};
    REQUIRE(run(cli::Mode::run, write_config(dir, "c.json", c)).code == 0);
    const auto report = read_json(dir / "out" / "report.json");
    REQUIRE(report["traces"].size() == 2);
    CHECK(report["traces"][0]["protocol"]["target"] == "ground");
    CHECK(report["traces"][0]["max_below_reference"].get<double>() > 0.05);
    CHECK(report["traces"][1]["max_above_reference"].get<double>() > 0.05);
    CHECK_THAT(report["derived"]["gamma1"]["value"].get<double>(), WithinRel(185e3, 1e-9));
    const auto table = io::read_csv(dir / "out" / "trace_excited.csv");
    CHECK(table.header == std::vector<std::string>{"t_s", "population", "reference_population"});
}

TEST_CASE("command-line tool", "[cli][tool]") {
    const auto dir = scratch("tool");
    const auto config = write_config(dir, "spectrum.json", spectrum_config());
    CHECK(tool("run \"" + config.string() + "\"") == 0);
    CHECK(fs::exists(dir / "out" / "spectrum.csv"));
    CHECK(tool("") == cli::exit_input);
    CHECK(tool("run") == cli::exit_input);
    CHECK(tool("run \"" + (dir / "absent.json").string() + "\"") == cli::exit_input);
    CHECK(tool("--help") == 0);
}
