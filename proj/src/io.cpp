#include "memsflow/io.hpp"

#include "memsflow/errors.hpp"

#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

namespace memsflow::io {

using nlohmann::json;

namespace {

// Shortest text that round-trips through strtod.
std::string num(double x) {
    char buf[32];
    for (int precision = 15; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof buf, "%.*g", precision, x);
        if (std::strtod(buf, nullptr) == x) break;
    }
    return buf;
}

json parameters_json(const Config& c) {
    return {{"eps", c.params.eps},     {"beta", c.params.beta},
            {"tau", c.params.tau},     {"sigma", c.params.sigma},
            {"lambda", c.params.lambda}};
}

json resolution_json(const Config& c) {
    return {{"n", c.n}, {"m", c.m}, {"dt", c.sim.dt}, {"t_end", c.sim.t_end},
            {"delta_stop", c.sim.delta_stop}};
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

void write_trace_csv(const SimulationTrace& trace, std::ostream& out) {
    out << "# " << kTraceVersion << "\n";
    out << "t,min_u,max_u,norm_proxy,E_m,E_e,E,dissipation,drift\n";
    for (const auto& s : trace.samples)
        out << num(s.time) << ',' << num(s.min_u) << ',' << num(s.max_u) << ','
            << num(s.norm_proxy) << ',' << num(s.energy.e_mech) << ',' << num(s.energy.e_elec)
            << ',' << num(s.energy.e_total) << ',' << num(s.energy.dissipation) << ','
            << num(s.drift) << '\n';
}

void write_energy_csv(const SimulationTrace& trace, std::ostream& out) {
    out << "# " << kTraceVersion << "\n";
    out << "t,E_m,E_e,E,dissipation,drift\n";
    for (const auto& s : trace.samples)
        out << num(s.time) << ',' << num(s.energy.e_mech) << ',' << num(s.energy.e_elec) << ','
            << num(s.energy.e_total) << ',' << num(s.energy.dissipation) << ',' << num(s.drift)
            << '\n';
}

void write_spectrum_csv(const OperatorSpectrum& spectrum, std::ostream& out) {
    out << "k,l,mu\n";
    const int n = spectrum.grid().n;
    for (int k = 1; k <= n; ++k)
        for (int l = 1; l <= n; ++l) out << k << ',' << l << ',' << num(spectrum(k, l)) << '\n';
}

void write_plate_csv(const PlateField& field, std::ostream& out) {
    out << "i,j,value\n";
    const int n = field.grid().n;
    for (int i = 1; i <= n; ++i)
        for (int j = 1; j <= n; ++j) out << i << ',' << j << ',' << num(field(i, j)) << '\n';
}

void write_cylinder_csv(const CylinderField& field, std::ostream& out) {
    out << "i,j,k,value\n";
    const CylinderGrid& g = field.grid();
    for (int i = 0; i <= g.plate.n + 1; ++i)
        for (int j = 0; j <= g.plate.n + 1; ++j)
            for (int k = 0; k <= g.m; ++k)
                out << i << ',' << j << ',' << k << ',' << num(field(i, j, k)) << '\n';
}

std::string summary_json(const SimulationTrace& trace, const Config& config) {
    json j;
    j["schema"] = kSummarySchema;
    j["status"] = to_string(trace.status);
    j["reason"] = trace.reason;
    j["terminal_time"] = trace.terminal_time;
    j["touchdown_time"] = optional_json(touchdown_time(trace));
    j["steady_state_detected_at"] = optional_json(trace.steady_state_time);
    j["steps"] = trace.steps;
    j["final_dt"] = trace.final_dt;
    j["parameters"] = parameters_json(config);
    j["resolution"] = resolution_json(config);
    j["initial"] = {{"shape", config.initial.shape},
                    {"amplitude", config.initial.amplitude},
                    {"seed", config.seed}};
    j["energy"] = {{"max_drift", trace.max_drift},
                   {"max_energy_increase", trace.max_energy_increase}};
    j["bound_violations"] = {{"g_l1", trace.g_bound_violations},
                             {"energy_lower", trace.energy_bound_violations}};
    j["solver"] = {{"pcg_iterations", trace.solver_iterations},
                   {"direct_solves", trace.direct_solves}};
    if (!trace.samples.empty()) {
        const auto& s = trace.samples.back();
        j["final"] = {{"min_u", s.min_u}, {"max_u", s.max_u}, {"norm_proxy", s.norm_proxy}};
    }
    return j.dump(2) + "\n";
}

std::string sweep_json(const SweepResult& r, const Config& config) {
    json j;
    j["schema"] = kSweepSchema;
    j["bracket"] = {r.lambda_lo, r.lambda_hi};
    j["width"] = r.width();
    j["midpoint"] = r.midpoint();
    j["tolerance"] = config.sweep.tol;
    j["touchdown_times_monotone"] = r.touchdown_times_monotone;
    j["parameters"] = parameters_json(config);
    j["parameters"].erase("lambda");
    j["resolution"] = {{"n", r.n}, {"m", r.m}, {"dt", r.dt}, {"t_end", r.t_end},
                       {"delta_stop", r.delta_stop}};
    json history = json::array();
    for (const auto& e : r.history)
        history.push_back({{"lambda", e.lambda},
                           {"status", to_string(e.status)},
                           {"touchdown_time", optional_json(e.touchdown)},
                           {"terminal_time", e.terminal_time},
                           {"steps", e.steps}});
    j["history"] = history;
    return j.dump(2) + "\n";
}

void write_file(const std::string& path, const std::string& text) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << text;
    if (!out) throw Error("write failed for " + path);
}

}  // namespace memsflow::io
