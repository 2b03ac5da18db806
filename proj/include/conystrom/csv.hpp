#pragma once

// CSV serialization. Two formats exist:
//   - matrix files: a header row `d=<cols>`, then one comma-separated row per
//     token, every value printed with 17 significant digits so doubles
//     round-trip exactly;
//   - stream reports: fixed columns `step,rel_error,flops_analytic,wall_ns,
//     landmark_updated`, one row per measured step.
// All output uses '\n' line endings; apart from wall_ns, identical inputs
// produce byte-identical files.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "conystrom/matrix.hpp"

namespace conystrom {

// Shortest representation that parses back to the identical double.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

inline void write_matrix_csv(std::ostream& out, const Matrix& mat) {
  out << "d=" << mat.cols() << "\n";
  for (std::size_t i = 0; i < mat.rows(); ++i) {
    const double* row = mat.row(i);
    for (std::size_t j = 0; j < mat.cols(); ++j) {
      if (j != 0) out << ",";
      out << format_double(row[j]);
    }
    out << "\n";
  }
}

inline void write_matrix_csv(const std::string& path, const Matrix& mat) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_matrix_csv: cannot open " + path);
  write_matrix_csv(out, mat);
  if (!out) throw std::runtime_error("write_matrix_csv: write failed for " + path);
}

namespace detail {
inline double parse_csv_double(const std::string& field, std::size_t line_no) {
  const char* begin = field.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  while (end && *end == ' ') ++end;
  if (end == begin || (end && *end != '\0'))
    throw std::invalid_argument("matrix csv line " + std::to_string(line_no) +
                                ": bad numeric field '" + field + "'");
  return v;
}
}  // namespace detail

// Parses the matrix format back; throws std::invalid_argument naming the
// offending line on any malformed content.
inline Matrix read_matrix_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t cols = 0;
  bool have_header = false;
  std::vector<double> data;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!have_header) {
      if (line.rfind("d=", 0) != 0)
        throw std::invalid_argument("matrix csv line " + std::to_string(line_no) +
                                    ": expected header d=<cols>");
      const std::string count = line.substr(2);
      char* end = nullptr;
      const unsigned long long parsed = std::strtoull(count.c_str(), &end, 10);
      if (count.empty() || (end && *end != '\0') || parsed == 0)
        throw std::invalid_argument("matrix csv line " + std::to_string(line_no) +
                                    ": bad column count '" + count + "'");
      cols = static_cast<std::size_t>(parsed);
      have_header = true;
      continue;
    }
    std::vector<double> row;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) row.push_back(detail::parse_csv_double(field, line_no));
    if (row.size() != cols)
      throw std::invalid_argument("matrix csv line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(cols) + " fields, got " +
                                  std::to_string(row.size()));
    data.insert(data.end(), row.begin(), row.end());
    rows += 1;
  }
  if (!have_header) throw std::invalid_argument("matrix csv: missing d=<cols> header");
  if (rows == 0) throw std::invalid_argument("matrix csv: no data rows");
  return Matrix(rows, cols, std::move(data));
}

inline Matrix read_matrix_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("read_matrix_csv: cannot open " + path);
  return read_matrix_csv(in);
}

// One measured step of a verification or benchmark stream.
struct StreamReport {
  std::uint64_t step = 0;
  double rel_error = 0.0;
  std::uint64_t flops_analytic = 0;
  std::uint64_t wall_ns = 0;
  bool landmark_updated = false;
};

inline void write_report_csv(std::ostream& out, const std::vector<StreamReport>& reports) {
  out << "step,rel_error,flops_analytic,wall_ns,landmark_updated\n";
  for (const StreamReport& r : reports) {
    out << r.step << "," << format_double(r.rel_error) << "," << r.flops_analytic << ","
        << r.wall_ns << "," << (r.landmark_updated ? 1 : 0) << "\n";
  }
}

inline void write_report_csv(const std::string& path, const std::vector<StreamReport>& reports) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_report_csv: cannot open " + path);
  write_report_csv(out, reports);
  if (!out) throw std::runtime_error("write_report_csv: write failed for " + path);
}

}  // namespace conystrom
