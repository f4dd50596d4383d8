#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace thermnet::cli {

/// Fixed-header CSV with `%.10g` numbers and '\n' line endings.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns);

  void add_row(const std::vector<double>& values);
  std::size_t rows() const { return rows_.size(); }
  std::string str() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<double>> rows_;
};

std::string format_number(double x);

/// [[ [re, im], ... ], ...]
nlohmann::json matrix_json(const Eigen::MatrixXcd& m);
Eigen::MatrixXcd matrix_from_json(const nlohmann::json& j);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);

using Scalars = std::vector<std::pair<std::string, double>>;

struct LedgerRow {
  std::string experiment;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::string timestamp;  // ISO 8601 UTC
  Scalars scalars;
  std::vector<std::string> artifacts;
};

std::string hash_hex(std::uint64_t h);
std::string utc_timestamp();

/// Appends one row to `path`, writing the header when the file is new.
void append_ledger(const std::filesystem::path& path, const LedgerRow& row);

}  // namespace thermnet::cli
