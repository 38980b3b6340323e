// Machine-readable outputs: SimReport as canonical JSON and flat CSV rows,
// contiguity histograms as JSON and an aligned text table.
#pragma once

#include "mesc/engine.hpp"
#include "mesc/mapping.hpp"

#include <string>

namespace mesc {

// Canonical key order (lexicographic), stable across runs.
std::string report_to_json(const SimReport& r);

std::string report_csv_header();
std::string report_to_csv_row(const SimReport& r, const std::string& axis = "",
                              const std::string& axis_value = "");

std::string histogram_to_json(const ContiguityHistogram& h, double coverage);
std::string histogram_to_table(const ContiguityHistogram& h, double coverage);

std::string report_summary_lines(const SimReport& r);

} // namespace mesc
