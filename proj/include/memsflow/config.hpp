#pragma once

#include "memsflow/evolution.hpp"
#include "memsflow/sweep.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>

namespace memsflow {

struct InitialCondition {
    // zero | mode | random
    std::string shape = "zero";
    double amplitude = 0.1;
    int k = 1, l = 1;
    // Random fields draw coefficients for modes k, l <= random_modes.
    int random_modes = 4;
};

struct Config {
    int n = 24;
    int m = 24;
    Parameters params{};
    SimulationSettings sim{};
    AdmissibleSetSpec admissibility{};
    InitialCondition initial{};
    SweepSettings sweep{};
    std::string out_dir = "out";
    bool dump_fields = false;
    std::uint64_t seed = 1;

    CylinderGrid grid() const { return CylinderGrid::make(n, m); }
    void validate() const;
};

// INI text with sections [domain], [parameters], [time], [admissibility],
// [output], [initial], [sweep], [solver]. Unknown sections or keys are rejected.
Config parse_config(std::istream& in);
Config load_config(const std::string& path);
void write_config(const Config& c, std::ostream& out);

PlateField make_initial_state(const Config& c);

}  // namespace memsflow
