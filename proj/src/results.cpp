#include "binsim/results.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace binsim {

bool format_from_name(const std::string& name, OutputFormat& out) {
  if (name == "csv") {
    out = OutputFormat::csv;
    return true;
  }
  if (name == "jsonl" || name == "json-lines") {
    out = OutputFormat::jsonl;
    return true;
  }
  return false;
}

std::string format_double(double value) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.12g", value);
  return buf;
}

void write_rows_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
  os << kCsvHeader << '\n';
  for (const ResultRow& row : rows) {
    os << row.scenario << ',' << row.n << ',' << format_double(row.lambda) << ','
       << row.d << ',' << format_double(row.alpha) << ',' << row.seed << ',' << row.trial << ','
       << row.snapshot_t << ',' << row.max_load << ',' << row.min_load << ',' << row.spread << ','
       << row.psi << ',' << format_double(row.phi) << ',' << format_double(row.gamma) << ','
       << format_double(row.ratio) << ',' << (row.pass ? 1 : 0) << '\n';
  }
}

namespace {

// NaN/inf are not valid JSON numbers (gamma is undefined at lambda = 1).
std::string json_number(double value) {
  if (!std::isfinite(value)) return "null";
  return format_double(value);
}

}  // namespace

void write_rows_jsonl(std::ostream& os, const std::vector<ResultRow>& rows) {
  for (const ResultRow& row : rows) {
    os << "{\"scenario\":\"" << row.scenario << "\",\"n\":" << row.n
       << ",\"lambda\":" << json_number(row.lambda) << ",\"d\":" << row.d
       << ",\"alpha\":" << json_number(row.alpha) << ",\"seed\":" << row.seed
       << ",\"trial\":" << row.trial << ",\"snapshot_t\":" << row.snapshot_t
       << ",\"max_load\":" << row.max_load << ",\"min_load\":" << row.min_load
       << ",\"spread\":" << row.spread << ",\"psi\":" << row.psi
       << ",\"phi\":" << json_number(row.phi) << ",\"gamma\":" << json_number(row.gamma)
       << ",\"ratio\":" << json_number(row.ratio) << ",\"pass\":" << (row.pass ? "true" : "false")
       << "}\n";
  }
}

void emit_results(const std::vector<ResultRow>& rows, const std::string& path,
                  OutputFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("emit_results: cannot open " + path);
  if (format == OutputFormat::csv) {
    write_rows_csv(out, rows);
  } else {
    write_rows_jsonl(out, rows);
  }
  out.flush();
  if (!out) throw std::runtime_error("emit_results: write failed for " + path);
}

}  // namespace binsim
