#include "sbx/panel_io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "sbx/errors.hpp"

namespace sbx {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

double parse_value(const std::string& s, int line_no) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw Error(ErrorCode::IoError,
                "line " + std::to_string(line_no) + ": cannot parse value '" + s + "'");
  return v;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::vector<RawRecord> read_raw_records_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line))
    throw Error(ErrorCode::EmptyInput, "empty CSV stream");
  if (strip_cr(line) != "route,direction,date,value")
    throw Error(ErrorCode::IoError, "expected header 'route,direction,date,value'");

  std::vector<RawRecord> records;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 4)
      throw Error(ErrorCode::IoError, "line " + std::to_string(line_no) + ": expected 4 fields");
    RawRecord r;
    r.route = f[0];
    if (f[1] == "AB") r.direction = Direction::AtoB;
    else if (f[1] == "BA") r.direction = Direction::BtoA;
    else
      throw Error(ErrorCode::IoError,
                  "line " + std::to_string(line_no) + ": direction must be AB or BA");
    r.date = parse_date(f[2]);
    r.value = parse_value(f[3], line_no);
    records.push_back(std::move(r));
  }
  return records;
}

PanelDataset read_panel_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line))
    throw Error(ErrorCode::EmptyInput, "empty CSV stream");
  if (strip_cr(line) != "unit,date,outcome")
    throw Error(ErrorCode::IoError, "expected header 'unit,date,outcome'");

  std::vector<std::string> units;              // first-appearance order
  std::map<std::string, Eigen::Index> index;
  std::vector<std::map<int, double>> by_unit;  // day offset resolved later
  Date lo{}, hi{};
  bool any = false;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 3)
      throw Error(ErrorCode::IoError, "line " + std::to_string(line_no) + ": expected 3 fields");
    const Date d = parse_date(f[1]);
    const double v = parse_value(f[2], line_no);
    auto [it, fresh] = index.try_emplace(f[0], static_cast<Eigen::Index>(units.size()));
    if (fresh) {
      units.push_back(f[0]);
      by_unit.emplace_back();
    }
    if (!by_unit[it->second].emplace(d.days_since_epoch, v).second)
      throw Error(ErrorCode::IoError, "line " + std::to_string(line_no) + ": duplicate cell");
    if (!any) { lo = hi = d; any = true; }
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  if (!any) throw Error(ErrorCode::EmptyInput, "no data rows");

  const int n_days = hi - lo + 1;
  Eigen::MatrixXd outcomes(static_cast<Eigen::Index>(units.size()), n_days);
  for (Eigen::Index i = 0; i < outcomes.rows(); ++i) {
    if (static_cast<int>(by_unit[i].size()) != n_days)
      throw Error(ErrorCode::CalendarGapUnresolvable,
                  "unit '" + units[i] + "' does not cover the full calendar");
    for (const auto& [day, v] : by_unit[i]) outcomes(i, day - lo.days_since_epoch) = v;
  }
  return make_panel(std::move(units), lo, std::move(outcomes));
}

void write_panel_csv(const PanelDataset& panel, std::ostream& out) {
  out << "unit,date,outcome\n";
  for (Eigen::Index i = 0; i < panel.n_units(); ++i)
    for (Eigen::Index t = 0; t < panel.n_days(); ++t)
      out << panel.unit_ids[i] << ',' << format_date(panel.dates[t]) << ','
          << format_double(panel.outcomes(i, t)) << '\n';
}

PanelDataset load_panel_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  std::string header;
  if (!std::getline(in, header))
    throw Error(ErrorCode::EmptyInput, "empty file '" + path + "'");
  in.seekg(0);
  header = strip_cr(header);
  if (header == "route,direction,date,value")
    return build_panel(read_raw_records_csv(in), MetricAggregation::Sum);
  if (header == "unit,date,outcome") return read_panel_csv(in);
  throw Error(ErrorCode::IoError, "unrecognized CSV header in '" + path + "'");
}

void save_panel_file(const PanelDataset& panel, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
  write_panel_csv(panel, out);
}

}  // namespace sbx
