#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "sbx/panel.hpp"

namespace sbx {

/// Reads raw directional records, header `route,direction,date,value`,
/// direction in {AB, BA}, date ISO-8601.
std::vector<RawRecord> read_raw_records_csv(std::istream& in);

/// Reads a built panel, header `unit,date,outcome`. The cells must cover a
/// complete rectangle over a contiguous daily calendar.
PanelDataset read_panel_csv(std::istream& in);

/// Writes `unit,date,outcome` rows; outcomes are printed with enough digits to
/// round-trip exactly.
void write_panel_csv(const PanelDataset& panel, std::ostream& out);

// Path-based convenience wrappers. load_panel_file sniffs the header and
// accepts either CSV format (raw records are aggregated with Sum).
PanelDataset load_panel_file(const std::string& path);
void save_panel_file(const PanelDataset& panel, const std::string& path);

}  // namespace sbx
