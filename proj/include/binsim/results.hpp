#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "binsim/experiments.hpp"

namespace binsim {

enum class OutputFormat { csv, jsonl };

bool format_from_name(const std::string& name, OutputFormat& out);

// Floating values are printed with 12 significant digits so identical runs
// produce byte-identical files.
std::string format_double(double value);

inline constexpr const char* kCsvHeader =
    "scenario,n,lambda,d,alpha,seed,trial,snapshot_t,max_load,min_load,spread,psi,phi,gamma,"
    "ratio,pass";

void write_rows_csv(std::ostream& os, const std::vector<ResultRow>& rows);
void write_rows_jsonl(std::ostream& os, const std::vector<ResultRow>& rows);

// Writes rows to `path` in the requested format. Row order is whatever the
// producer emitted (grid order, then trial, then snapshot), so re-running an
// identical configuration reproduces the file byte for byte.
void emit_results(const std::vector<ResultRow>& rows, const std::string& path, OutputFormat format);

}  // namespace binsim
