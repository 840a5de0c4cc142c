#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lazyflow/flow.hpp"
#include "lazyflow/types.hpp"

namespace lazyflow {

/// Shortest round-trip text for a double ("%.17g"); "nan", "inf", "-inf" otherwise.
std::string format_double(double v);

/// A CSV table held in memory; cells are stored as text so output is byte-stable.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  CsvTable& add_row(std::vector<std::string> cells);
  static std::string cell(double v) { return format_double(v); }
  static std::string cell(long v) { return std::to_string(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(const std::string& s) { return s; }

  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }
  std::string str() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Trajectory as CSV: t, step, loss, grad_norm, dist_to_init.
CsvTable trajectory_table(const Trajectory& traj);

/// Writes a 2-D float64 array in NumPy .npy format (version 1.0, C order).
void write_npy(const std::filesystem::path& path, const RowMatrix& data);
RowMatrix read_npy(const std::filesystem::path& path);

/// Stored parameter states of a trajectory, one row per sample.
RowMatrix trajectory_states(const Trajectory& traj);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace lazyflow
