// orbitfl: simulate federated learning over a LEO constellation.
//
//   orbitfl sim      --config FILE [--mode star|dnc] [--out DIR] [--seed N]
//   orbitfl windows  --config FILE [--hours H]
//   orbitfl link     --config FILE [--dmin KM] [--dmax KM] [--steps N]
//   orbitfl timing   --config FILE [--mode star|dnc]
//
// Exit codes: 0 ok, 2 usage, 3 invalid scenario, 4 horizon exhausted.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "orbitfl/error.hpp"
#include "orbitfl/report.hpp"
#include "orbitfl/scenario.hpp"
#include "orbitfl/sim.hpp"

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kUsage = 2, kInvalid = 3, kHorizon = 4 };

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("orbitfl");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    const char* env = std::getenv("ORBITFL_LOG");
    const std::string level = env ? env : "info";
    if (level == "error") spdlog::set_level(spdlog::level::err);
    else if (level == "debug") spdlog::set_level(spdlog::level::debug);
    else spdlog::set_level(spdlog::level::info);
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw orbitfl::Error("cannot write " + path.string());
    out << text;
}

const std::map<std::string, orbitfl::Mode> kModes{{"star", orbitfl::Mode::Star}, {"dnc", orbitfl::Mode::Dnc}};

}  // namespace

int main(int argc, char** argv) {
    setup_logging();
    CLI::App app{"Federated learning over a LEO constellation: event-driven simulator"};
    app.require_subcommand(1);

    std::string config;
    std::optional<orbitfl::Mode> mode;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    double hours = 24.0;
    double dmin = 500.0, dmax = 2500.0;
    int steps = 21;

    auto* sim = app.add_subcommand("sim", "run the event-driven simulation");
    sim->add_option("--config", config, "scenario YAML")->required()->check(CLI::ExistingFile);
    sim->add_option("--mode", mode, "star or dnc (overrides simulation.mode)")
        ->transform(CLI::CheckedTransformer(kModes, CLI::ignore_case));
    sim->add_option("--out", out_dir, "output directory");
    sim->add_option("--seed", seed, "overrides simulation.seed");

    auto* windows = app.add_subcommand("windows", "print visibility windows as CSV");
    windows->add_option("--config", config, "scenario YAML")->required()->check(CLI::ExistingFile);
    windows->add_option("--hours", hours, "search horizon [h]")->check(CLI::PositiveNumber);

    auto* link = app.add_subcommand("link", "print a link-budget sweep as CSV");
    link->add_option("--config", config, "scenario YAML")->required()->check(CLI::ExistingFile);
    link->add_option("--dmin", dmin, "smallest distance [km]")->check(CLI::PositiveNumber);
    link->add_option("--dmax", dmax, "largest distance [km]")->check(CLI::PositiveNumber);
    link->add_option("--steps", steps, "number of rows")->check(CLI::PositiveNumber);

    auto* timing = app.add_subcommand("timing", "closed-form round time of the first round");
    timing->add_option("--config", config, "scenario YAML")->required()->check(CLI::ExistingFile);
    timing->add_option("--mode", mode, "star or dnc (overrides simulation.mode)")
        ->transform(CLI::CheckedTransformer(kModes, CLI::ignore_case));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        orbitfl::Scenario scenario = orbitfl::load_scenario(config);
        if (mode) scenario.protocol.mode = *mode;
        if (seed) scenario.simulation.seed = *seed;

        if (*sim) {
            orbitfl::Simulator simulator(scenario);
            const orbitfl::RunResult result = simulator.run();
            const std::filesystem::path dir(out_dir);
            std::filesystem::create_directories(dir);
            write_file(dir / "trace.json", orbitfl::trace_json_text(result));
            write_file(dir / "trace.csv", orbitfl::trace_csv(result));
            write_file(dir / "summary.txt", orbitfl::summary_text(result, scenario));
            write_file(dir / "accuracy_vs_time.svg", orbitfl::accuracy_svg(result));
            std::cout << orbitfl::summary_text(result, scenario);
            if (result.stop == orbitfl::StopReason::HorizonExhausted) {
                spdlog::error("{}", result.error);
                return kHorizon;
            }
        } else if (*windows) {
            orbitfl::WindowSearch search = scenario.window_search();
            search.horizon_s = hours * 3600.0;
            std::cout << orbitfl::windows_csv(
                orbitfl::compute_windows(scenario.constellation, scenario.ground_station, search));
        } else if (*link) {
            if (dmax < dmin) throw CLI::ValidationError("--dmax", "must not be below --dmin");
            const auto lp = orbitfl::resolve_link(scenario.link, scenario.constellation.altitude_km,
                                                  scenario.ground_station.min_elevation_deg,
                                                  scenario.ground_station.altitude_km);
            std::cout << orbitfl::link_budget_csv(lp, dmin, dmax, steps);
        } else if (*timing) {
            orbitfl::Simulator simulator(scenario);
            std::cout << orbitfl::timing_report(simulator.closed_form(1, 0.0));
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << e.what() << "\n";
        return kUsage;
    } catch (const orbitfl::ValidationError& e) {
        std::cerr << e.what() << "\n";
        return kInvalid;
    } catch (const orbitfl::HorizonExhausted& e) {
        std::cerr << "horizon exhausted: " << e.what() << "\n";
        return kHorizon;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kOk;
}
