#pragma once

#include "memsflow/config.hpp"
#include "memsflow/evolution.hpp"
#include "memsflow/plate_operator.hpp"
#include "memsflow/sweep.hpp"

#include <iosfwd>
#include <string>

namespace memsflow::io {

inline constexpr const char* kTraceVersion = "memsflow-trace/1";
inline constexpr const char* kSummarySchema = "memsflow-summary/1";
inline constexpr const char* kSweepSchema = "memsflow-sweep/1";

void write_trace_csv(const SimulationTrace& trace, std::ostream& out);
void write_energy_csv(const SimulationTrace& trace, std::ostream& out);
void write_spectrum_csv(const OperatorSpectrum& spectrum, std::ostream& out);
void write_plate_csv(const PlateField& field, std::ostream& out);
void write_cylinder_csv(const CylinderField& field, std::ostream& out);

std::string summary_json(const SimulationTrace& trace, const Config& config);
std::string sweep_json(const SweepResult& result, const Config& config);

// Writes text to path, creating parent directories.
void write_file(const std::string& path, const std::string& text);

}  // namespace memsflow::io
