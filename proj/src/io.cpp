#include "lazyflow/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "lazyflow/errors.hpp"

namespace lazyflow {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

CsvTable& CsvTable::add_row(std::vector<std::string> cells) {
  if (cells.size() != header_.size())
    throw DimensionError("csv columns", long(header_.size()), long(cells.size()));
  rows_.push_back(std::move(cells));
  return *this;
}

std::string CsvTable::str() const {
  std::ostringstream os;
  auto line = [&os](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
    os << '\n';
  };
  line(header_);
  for (const auto& r : rows_) line(r);
  return os.str();
}

void CsvTable::write(const std::filesystem::path& path) const { write_text(path, str()); }

CsvTable trajectory_table(const Trajectory& traj) {
  CsvTable t({"t", "step", "loss", "grad_norm", "dist_to_init"});
  for (const Sample& s : traj.samples)
    t.add_row({CsvTable::cell(s.t), CsvTable::cell(s.step), CsvTable::cell(s.loss),
               CsvTable::cell(s.grad_norm), CsvTable::cell(s.dist_to_init)});
  return t;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

void write_npy(const std::filesystem::path& path, const RowMatrix& data) {
  std::string header = "{'descr': '<f8', 'fortran_order': False, 'shape': (" +
                       std::to_string(data.rows()) + ", " + std::to_string(data.cols()) + "), }";
  // magic (6) + version (2) + length (2) + header + '\n' is padded to a multiple of 64.
  const std::size_t unpadded = 10 + header.size() + 1;
  header.append((64 - unpadded % 64) % 64, ' ');
  header.push_back('\n');
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write("\x93NUMPY\x01\x00", 8);
  const std::uint16_t len = static_cast<std::uint16_t>(header.size());
  const char lenb[2] = {char(len & 0xff), char(len >> 8)};
  out.write(lenb, 2);
  out.write(header.data(), std::streamsize(header.size()));
  out.write(reinterpret_cast<const char*>(data.data()), std::streamsize(data.size() * sizeof(double)));
  if (!out) throw Error("failed writing " + path.string());
}

RowMatrix read_npy(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, "\x93NUMPY\x01\x00", 8) != 0) throw Error(path.string() + " is not a version 1.0 .npy file");
  unsigned char lenb[2];
  in.read(reinterpret_cast<char*>(lenb), 2);
  const std::size_t len = lenb[0] | (std::size_t(lenb[1]) << 8);
  std::string header(len, '\0');
  in.read(header.data(), std::streamsize(len));
  if (header.find("'<f8'") == std::string::npos || header.find("False") == std::string::npos)
    throw Error(path.string() + ": only C-ordered float64 arrays are supported");
  const auto open = header.find('('), close = header.find(')');
  long r = 0, c = 1;
  if (std::sscanf(header.substr(open + 1, close - open - 1).c_str(), "%ld, %ld", &r, &c) < 1)
    throw Error(path.string() + ": cannot parse shape");
  RowMatrix m(r, c);
  in.read(reinterpret_cast<char*>(m.data()), std::streamsize(m.size() * sizeof(double)));
  if (!in) throw Error(path.string() + ": truncated data");
  return m;
}

RowMatrix trajectory_states(const Trajectory& traj) {
  if (traj.samples.empty() || traj.front().w.size() == 0)
    throw InvalidArgument("trajectory does not store parameter states");
  RowMatrix m(traj.samples.size(), traj.front().w.size());
  for (std::size_t i = 0; i < traj.samples.size(); ++i) m.row(i) = traj.samples[i].w.transpose();
  return m;
}

}  // namespace lazyflow
