#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace nclln {

inline constexpr const char* kLibraryVersion = "0.1.0";

// Experiment output record. The serialized forms are byte-stable functions
// of (config, seed override); timing goes to the run log, never into the
// report files.
struct RunReport {
  std::string law;
  nlohmann::json resolved;            // config echo + derived parameters
  nlohmann::json records;             // array of per-(n, seed) records
  std::vector<std::string> csv_columns;
  // Extra files to place next to the report (e.g. path dumps), name -> body.
  std::vector<std::pair<std::string, std::string>> artifacts;

  std::string to_json_text() const;
  std::string records_csv() const;
};

// Writes report.json / records.csv (per `format`: json, csv or both) into
// `dir`; filenames embed the subcommand, the n-range and the config hash.
// Returns the written paths. Overwrites idempotently.
std::vector<std::string> emit_report(const RunReport& report,
                                     const std::string& dir,
                                     const std::string& format);

std::string format_double(double v);  // 17 significant digits

}  // namespace nclln
