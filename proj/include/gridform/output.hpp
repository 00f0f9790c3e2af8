#pragma once

// Trace, plot-data and report files. Every file starts with a '#' comment
// block naming the tool version, the scenario and all resolved parameters;
// numbers use the shortest round-trip decimal form so output is
// byte-deterministic.

#include "gridform/metrics.hpp"

#include <string>

namespace gridform::output {

const char* tool_version();

/// '#'-prefixed provenance lines (each ending in '\n').
std::string provenance(const Scenario& s, double tvi_gain = 0.0);

/// Header "t,P_pcc,...,delta" and one row per sample; channels the device
/// does not have are written as empty cells.
std::string format_csv(const TraceSet& tr, const std::string& provenance_block = {});

void write_file(const std::string& path, const std::string& content);

void emit_csv(const TraceSet& tr, const std::string& path, const std::string& provenance_block = {});

/// One two-column "t value" file per channel: <dir>/<stem>_<channel>.dat.
void emit_plot_data(const TraceSet& tr, const std::string& dir, const std::string& stem,
                    const std::string& provenance_block = {});

/// Append a machine-readable row to a summary CSV, writing the header first
/// when the file is new or empty.
void append_summary_row(const std::string& path, const metrics::MetricReport& r);

std::string summary_header();
std::string summary_row(const metrics::MetricReport& r);

}  // namespace gridform::output
