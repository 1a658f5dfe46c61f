#include "core/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "core/config.hpp"
#include "core/errors.hpp"

namespace nclln {

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string RunReport::to_json_text() const {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["library_version"] = kLibraryVersion;
  j["law"] = law;
  j["resolved"] = resolved;
  j["records"] = records;
  return j.dump(2) + "\n";
}

std::string RunReport::records_csv() const {
  std::string out;
  for (std::size_t i = 0; i < csv_columns.size(); ++i) {
    if (i) out += ',';
    out += csv_columns[i];
  }
  out += "\r\n";
  for (const auto& rec : records) {
    for (std::size_t i = 0; i < csv_columns.size(); ++i) {
      if (i) out += ',';
      const auto& col = csv_columns[i];
      if (!rec.contains(col)) continue;
      const auto& v = rec[col];
      if (v.is_number_float())
        out += format_double(v.get<double>());
      else if (v.is_string())
        out += v.get<std::string>();
      else
        out += v.dump();
    }
    out += "\r\n";
  }
  return out;
}

namespace {

std::string subcommand_for_law(const std::string& law) {
  if (law == "scalar") return "er-scalar";
  if (law == "classical") return "er-classical";
  if (law == "functional") return "er-functional";
  if (law == "lemma31") return "diagnose-lemma31";
  if (law == "ld-bounds") return "ld-check";
  return law;  // simulate, rate
}

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << body;
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

std::vector<std::string> emit_report(const RunReport& report,
                                     const std::string& dir,
                                     const std::string& format) {
  if (format != "json" && format != "csv" && format != "both")
    throw ValidationError("format must be json, csv or both");
  std::filesystem::path base(dir);
  std::error_code ec;
  std::filesystem::create_directories(base, ec);
  if (ec) throw IoError("cannot create output directory " + dir);

  std::string nrange = "na";
  if (report.resolved.contains("n_schedule") &&
      !report.resolved["n_schedule"].empty()) {
    auto& sched = report.resolved["n_schedule"];
    nrange = "n" + std::to_string(sched.front().get<long long>()) + "-" +
             std::to_string(sched.back().get<long long>());
  }
  std::string stem = subcommand_for_law(report.law) + "_" + nrange + "_" +
                     config_hash(report.resolved.contains("config")
                                     ? report.resolved["config"]
                                     : report.resolved);

  std::vector<std::string> paths;
  if (format == "json" || format == "both") {
    auto p = base / ("report_" + stem + ".json");
    write_file(p, report.to_json_text());
    paths.push_back(p.string());
  }
  if (format == "csv" || format == "both") {
    auto p = base / ("records_" + stem + ".csv");
    write_file(p, report.records_csv());
    paths.push_back(p.string());
  }
  for (const auto& [name, body] : report.artifacts) {
    auto p = base / name;
    write_file(p, body);
    paths.push_back(p.string());
  }
  return paths;
}

}  // namespace nclln
