#include "memsflow/cli.hpp"

#include "memsflow/config.hpp"
#include "memsflow/errors.hpp"
#include "memsflow/io.hpp"
#include "memsflow/plate_operator.hpp"
#include "memsflow/verify.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>

namespace memsflow {
namespace {

struct CommonFlags {
    std::string config_path;
    std::string out_dir;
    long long seed = -1;
    int threads = 0;
    bool print_defaults = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_path, "INI configuration file");
    cmd->add_option("--out", f.out_dir, "output directory (overrides [output] dir)");
    cmd->add_option("--seed", f.seed, "seed for random initial data")->check(CLI::NonNegativeNumber);
    cmd->add_option("--threads", f.threads, "worker threads for concurrent runs")
        ->check(CLI::PositiveNumber);
    cmd->add_flag("--print-defaults", f.print_defaults, "print the default configuration and exit");
}

Config resolve(const CommonFlags& f) {
    Config c = f.config_path.empty() ? Config{} : load_config(f.config_path);
    if (!f.out_dir.empty()) c.out_dir = f.out_dir;
    if (f.seed >= 0) c.seed = static_cast<std::uint64_t>(f.seed);
    if (f.threads > 0) c.sweep.threads = f.threads;
    c.validate();
    return c;
}

std::string path_in(const Config& c, const std::string& name) {
    return (std::filesystem::path(c.out_dir) / name).string();
}

int run_simulate(const Config& c) {
    const CylinderGrid grid = c.grid();
    const PlateField u0 = make_initial_state(c);
    const SimulationTrace trace = simulate(u0, c.params, grid, c.sim, c.admissibility);

    std::ostringstream csv, energy;
    io::write_trace_csv(trace, csv);
    io::write_energy_csv(trace, energy);
    io::write_file(path_in(c, "trace.csv"), csv.str());
    io::write_file(path_in(c, "energy.csv"), energy.str());
    const std::string summary = io::summary_json(trace, c);
    io::write_file(path_in(c, "summary.json"), summary);

    if (c.dump_fields && trace.final_state.min() > -1.0) {
        PotentialSolver solver(grid, c.params, c.sim.solver);
        const PotentialField phi = solver.solve(trace.final_state);
        std::ostringstream phi_csv, g_csv, u_csv;
        io::write_cylinder_csv(phi, phi_csv);
        io::write_plate_csv(g_from_trace(trace.final_state, top_trace_derivative(phi), c.params), g_csv);
        io::write_plate_csv(trace.final_state, u_csv);
        io::write_file(path_in(c, "phi.csv"), phi_csv.str());
        io::write_file(path_in(c, "g.csv"), g_csv.str());
        io::write_file(path_in(c, "u.csv"), u_csv.str());
    }
    std::cout << summary;
    return 0;
}

int run_sweep(const Config& c) {
    const CylinderGrid grid = c.grid();
    const SweepResult r =
        estimate_lambda_star(make_initial_state(c), c.params, grid, c.sim, c.admissibility, c.sweep);
    const std::string text = io::sweep_json(r, c);
    io::write_file(path_in(c, "sweep.json"), text);
    std::cout << text;
    return 0;
}

int run_spectrum(const Config& c) {
    std::ostringstream csv;
    io::write_spectrum_csv(OperatorSpectrum(PlateGrid::make(c.n), c.params), csv);
    io::write_file(path_in(c, "spectrum.csv"), csv.str());
    std::cout << "wrote " << path_in(c, "spectrum.csv") << "\n";
    return 0;
}

int run_verify(const Config& c, bool quick) {
    verify::Options o;
    o.quick = quick;
    o.params = c.params;
    o.seed = c.seed;
    o.on_result = [](const verify::CheckResult& r) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << std::endl;
    };
    const auto results = verify::run_suite(o);
    nlohmann::json j = nlohmann::json::array();
    bool all = true;
    for (const auto& r : results) {
        all = all && r.passed;
        j.push_back({{"name", r.name}, {"passed", r.passed}, {"detail", r.detail}, {"metrics", r.metrics}});
    }
    io::write_file(path_in(c, "verify.json"), j.dump(2) + "\n");
    std::cout << (all ? "all checks passed" : "some checks failed") << std::endl;
    return all ? 0 : 1;
}

}  // namespace

int cli_main(int argc, char** argv) {
    CLI::App app{"Hinged-plate MEMS evolution with electrostatic coupling"};
    app.require_subcommand(1);
    CommonFlags flags;
    bool quick = false;
    auto* simulate_cmd = app.add_subcommand("simulate", "run one trajectory");
    auto* sweep_cmd = app.add_subcommand("sweep", "bisect the pull-in threshold in lambda");
    auto* spectrum_cmd = app.add_subcommand("spectrum", "write the plate operator eigenvalues");
    auto* verify_cmd = app.add_subcommand("verify", "run the invariant suite");
    for (auto* cmd : {simulate_cmd, sweep_cmd, spectrum_cmd, verify_cmd}) add_common(cmd, flags);
    verify_cmd->add_flag("--quick", quick, "reduced resolutions and no touchdown run");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (flags.print_defaults) {
            write_config(Config{}, std::cout);
            return 0;
        }
        const Config c = resolve(flags);
        if (simulate_cmd->parsed()) return run_simulate(c);
        if (sweep_cmd->parsed()) return run_sweep(c);
        if (spectrum_cmd->parsed()) return run_spectrum(c);
        return run_verify(c, quick);
    } catch (const InvalidParameter& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace memsflow
