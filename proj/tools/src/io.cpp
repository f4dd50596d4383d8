#include "thermnet_cli/io.hpp"

#include <chrono>
#include <ctime>
#include <fstream>

#include <fmt/format.h>

#include "thermnet/error.hpp"

namespace thermnet::cli {
namespace {

void write_text(const std::filesystem::path& path, const std::string& text, std::ios::openmode mode) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, mode | std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

}  // namespace

std::string format_number(double x) {
  if (x == 0.0) return "0";  // folds -0
  return fmt::format("{:.10g}", x);
}

CsvTable::CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {
  if (columns_.empty()) throw InvalidArgument("csv table needs at least one column");
}

void CsvTable::add_row(const std::vector<double>& values) {
  if (values.size() != columns_.size())
    throw InvalidArgument(fmt::format("csv row has {} values for {} columns", values.size(), columns_.size()));
  rows_.push_back(values);
}

std::string CsvTable::str() const {
  std::string s;
  for (std::size_t i = 0; i < columns_.size(); ++i) s += (i ? "," : "") + columns_[i];
  s += '\n';
  for (const auto& r : rows_) {
    for (std::size_t i = 0; i < r.size(); ++i) s += (i ? "," : "") + format_number(r[i]);
    s += '\n';
  }
  return s;
}

void CsvTable::write(const std::filesystem::path& path) const { write_text(path, str(), std::ios::trunc); }

nlohmann::json matrix_json(const Eigen::MatrixXcd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXcd matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) throw InvalidArgument("matrix json must be an array of rows");
  const auto n = static_cast<Eigen::Index>(j.size());
  const auto m = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXcd out(n, m);
  for (Eigen::Index r = 0; r < n; ++r) {
    if (!j[r].is_array() || static_cast<Eigen::Index>(j[r].size()) != m) throw InvalidArgument("ragged matrix json");
    for (Eigen::Index c = 0; c < m; ++c) {
      const auto& e = j[r][c];
      if (!e.is_array() || e.size() != 2) throw InvalidArgument("matrix entries must be [re, im]");
      out(r, c) = {e[0].get<double>(), e[1].get<double>()};
    }
  }
  return out;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n", std::ios::trunc);
}

std::string hash_hex(std::uint64_t h) { return fmt::format("{:016x}", h); }

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void append_ledger(const std::filesystem::path& path, const LedgerRow& row) {
  std::string line;
  if (!std::filesystem::exists(path)) line = "timestamp,experiment,config_hash,seed,scalars,artifacts\n";
  std::string scalars, artifacts;
  for (const auto& [k, v] : row.scalars) scalars += (scalars.empty() ? "" : ";") + k + "=" + format_number(v);
  for (const auto& a : row.artifacts) artifacts += (artifacts.empty() ? "" : ";") + a;
  line += fmt::format("{},{},{},{},{},{}\n", row.timestamp, csv_field(row.experiment), hash_hex(row.config_hash),
                      row.seed, csv_field(scalars), csv_field(artifacts));
  write_text(path, line, std::ios::app);
}

}  // namespace thermnet::cli
