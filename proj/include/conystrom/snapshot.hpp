#pragma once

// State snapshot serialization: a self-describing text bundle holding every
// cache, ring buffer (in logical order, oldest row first), and schedule
// field, with doubles printed at 17 significant digits. Saving and reloading
// a state preserves all subsequent outputs bitwise, because every state
// computation iterates rings in logical order.
//
// Layout: a magic line `conystrom-state 1`, a `kind <StateName>` line, then
// named sections in a fixed per-kind order:
//   scalar <name> <unsigned>
//   vec <name> <len>      followed by one comma-separated line
//   uintvec <name> <len>  followed by one comma-separated line
//   mat <name> <rows> <cols>  followed by <rows> comma-separated lines
// Loaders verify the magic, the kind, and every section name and shape;
// mismatches throw std::invalid_argument.

#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "conystrom/continual.hpp"
#include "conystrom/csv.hpp"
#include "conystrom/matrix.hpp"

namespace conystrom {
namespace snapshot_detail {

inline void write_scalar(std::ostream& out, const char* name, std::uint64_t v) {
  out << "scalar " << name << " " << v << "\n";
}

inline void write_vec(std::ostream& out, const char* name, const std::vector<double>& v) {
  out << "vec " << name << " " << v.size() << "\n";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i != 0) out << ",";
    out << format_double(v[i]);
  }
  out << "\n";
}

inline void write_uintvec(std::ostream& out, const char* name, const std::vector<std::size_t>& v) {
  out << "uintvec " << name << " " << v.size() << "\n";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i != 0) out << ",";
    out << v[i];
  }
  out << "\n";
}

inline void write_mat(std::ostream& out, const char* name, const Matrix& m) {
  out << "mat " << name << " " << m.rows() << " " << m.cols() << "\n";
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double* row = m.row(i);
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j != 0) out << ",";
      out << format_double(row[j]);
    }
    out << "\n";
  }
}

inline void write_mat(std::ostream& out, const char* name, const RingMat& m) {
  write_mat(out, name, m.to_matrix());
}

inline void write_vec(std::ostream& out, const char* name, const RingVec& v) {
  write_vec(out, name, v.to_vector());
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  void expect_magic() {
    if (next_line() != "conystrom-state 1")
      throw std::invalid_argument("snapshot: bad or missing magic line");
  }

  void expect_kind(const std::string& kind) {
    const std::string line = next_line();
    if (line != "kind " + kind)
      throw std::invalid_argument("snapshot: expected kind " + kind + ", got '" + line + "'");
  }

  std::uint64_t scalar(const std::string& name) {
    std::istringstream header(next_line());
    std::string tag, got;
    std::uint64_t value = 0;
    if (!(header >> tag >> got >> value) || tag != "scalar" || got != name)
      throw std::invalid_argument("snapshot: expected scalar " + name);
    return value;
  }

  std::vector<double> vec(const std::string& name) {
    std::istringstream header(next_line());
    std::string tag, got;
    std::size_t len = 0;
    if (!(header >> tag >> got >> len) || tag != "vec" || got != name || len == 0)
      throw std::invalid_argument("snapshot: expected vec " + name);
    std::vector<double> out = parse_doubles(next_line(), len, name);
    return out;
  }

  std::vector<std::size_t> uintvec(const std::string& name) {
    std::istringstream header(next_line());
    std::string tag, got;
    std::size_t len = 0;
    if (!(header >> tag >> got >> len) || tag != "uintvec" || got != name || len == 0)
      throw std::invalid_argument("snapshot: expected uintvec " + name);
    std::vector<std::size_t> out;
    std::stringstream ss(next_line());
    std::string field;
    while (std::getline(ss, field, ',')) {
      char* end = nullptr;
      const unsigned long long v = std::strtoull(field.c_str(), &end, 10);
      if (field.empty() || (end && *end != '\0'))
        throw std::invalid_argument("snapshot: bad integer in " + name);
      out.push_back(static_cast<std::size_t>(v));
    }
    if (out.size() != len)
      throw std::invalid_argument("snapshot: wrong element count in " + name);
    return out;
  }

  Matrix mat(const std::string& name) {
    std::istringstream header(next_line());
    std::string tag, got;
    std::size_t rows = 0, cols = 0;
    if (!(header >> tag >> got >> rows >> cols) || tag != "mat" || got != name || rows == 0 ||
        cols == 0)
      throw std::invalid_argument("snapshot: expected mat " + name);
    std::vector<double> data;
    data.reserve(rows * cols);
    for (std::size_t i = 0; i < rows; ++i) {
      std::vector<double> row = parse_doubles(next_line(), cols, name);
      data.insert(data.end(), row.begin(), row.end());
    }
    return Matrix(rows, cols, std::move(data));
  }

 private:
  std::string next_line() {
    std::string line;
    if (!std::getline(in_, line))
      throw std::invalid_argument("snapshot: truncated file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  }

  std::vector<double> parse_doubles(const std::string& line, std::size_t expect,
                                    const std::string& name) {
    std::vector<double> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
      const char* begin = field.c_str();
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin || (end && *end != '\0'))
        throw std::invalid_argument("snapshot: bad value in " + name);
      out.push_back(v);
    }
    if (out.size() != expect)
      throw std::invalid_argument("snapshot: wrong element count in " + name);
    return out;
  }

  std::istream& in_;
};

}  // namespace snapshot_detail

inline void save_state(std::ostream& out, const CoReState& s) {
  namespace sd = snapshot_detail;
  out << "conystrom-state 1\nkind CoReState\n";
  sd::write_scalar(out, "refresh_interval", s.refresh_interval);
  sd::write_scalar(out, "steps", s.steps);
  sd::write_mat(out, "q_win", s.q_win);
  sd::write_mat(out, "k_win", s.k_win);
  sd::write_mat(out, "v_win", s.v_win);
  sd::write_mat(out, "av", s.av);
  sd::write_vec(out, "phi_a", s.phi_a);
}

inline void load_state(std::istream& in, CoReState& s) {
  snapshot_detail::Reader r(in);
  r.expect_magic();
  r.expect_kind("CoReState");
  s.refresh_interval = r.scalar("refresh_interval");
  s.steps = r.scalar("steps");
  s.q_win = RingMat(r.mat("q_win"));
  s.k_win = RingMat(r.mat("k_win"));
  s.v_win = RingMat(r.mat("v_win"));
  s.av = RingMat(r.mat("av"));
  s.phi_a = RingVec(r.vec("phi_a"));
  if (s.k_win.rows() != s.q_win.rows() || s.v_win.rows() != s.q_win.rows() ||
      s.av.rows() != s.q_win.rows() || s.phi_a.size() != s.q_win.rows() ||
      s.k_win.cols() != s.q_win.cols() || s.v_win.cols() != s.q_win.cols() ||
      s.av.cols() != s.q_win.cols())
    throw std::invalid_argument("snapshot: inconsistent CoReState shapes");
}

inline void save_state(std::ostream& out, const CoSiState& s) {
  namespace sd = snapshot_detail;
  out << "conystrom-state 1\nkind CoSiState\n";
  sd::write_scalar(out, "steps", s.steps);
  sd::write_mat(out, "k_win", s.k_win);
  sd::write_mat(out, "v_win", s.v_win);
}

inline void load_state(std::istream& in, CoSiState& s) {
  snapshot_detail::Reader r(in);
  r.expect_magic();
  r.expect_kind("CoSiState");
  s.steps = r.scalar("steps");
  s.k_win = RingMat(r.mat("k_win"));
  s.v_win = RingMat(r.mat("v_win"));
  if (s.v_win.rows() != s.k_win.rows() || s.v_win.cols() != s.k_win.cols())
    throw std::invalid_argument("snapshot: inconsistent CoSiState shapes");
}

inline void save_state(std::ostream& out, const CoNyContState& s) {
  namespace sd = snapshot_detail;
  out << "conystrom-state 1\nkind CoNyContState\n";
  sd::write_scalar(out, "pinv_iters", s.pinv_iters);
  sd::write_scalar(out, "refresh_interval", s.refresh_interval);
  sd::write_scalar(out, "steps", s.steps);
  sd::write_uintvec(out, "segment_sizes", s.schedule.segment_sizes);
  sd::write_scalar(out, "schedule_phase", s.schedule.phase);
  sd::write_scalar(out, "schedule_next_slot", s.schedule.next_slot);
  sd::write_vec(out, "accumulator_q", s.schedule.accumulator_q);
  sd::write_vec(out, "accumulator_k", s.schedule.accumulator_k);
  sd::write_mat(out, "q_win", s.q_win);
  sd::write_mat(out, "k_win", s.k_win);
  sd::write_mat(out, "v_win", s.v_win);
  sd::write_mat(out, "q_land", s.q_land);
  sd::write_mat(out, "k_land", s.k_land);
  sd::write_mat(out, "b", s.b);
  sd::write_vec(out, "phi_b", s.phi_b);
  sd::write_mat(out, "gamma", s.gamma);
  sd::write_vec(out, "phi_gamma", s.phi_gamma);
  sd::write_mat(out, "gamma_pinv", s.gamma_pinv);
  sd::write_mat(out, "b_gamma", s.b_gamma);
  sd::write_vec(out, "phi_delta", s.phi_delta);
  sd::write_mat(out, "delta_v", s.delta_v);
}

inline void load_state(std::istream& in, CoNyContState& s) {
  snapshot_detail::Reader r(in);
  r.expect_magic();
  r.expect_kind("CoNyContState");
  s.pinv_iters = r.scalar("pinv_iters");
  s.refresh_interval = r.scalar("refresh_interval");
  s.steps = r.scalar("steps");
  s.schedule.segment_sizes = r.uintvec("segment_sizes");
  s.schedule.phase = r.scalar("schedule_phase");
  s.schedule.next_slot = r.scalar("schedule_next_slot");
  s.schedule.accumulator_q = r.vec("accumulator_q");
  s.schedule.accumulator_k = r.vec("accumulator_k");
  s.schedule.d = s.schedule.accumulator_q.size();
  s.q_win = RingMat(r.mat("q_win"));
  s.k_win = RingMat(r.mat("k_win"));
  s.v_win = RingMat(r.mat("v_win"));
  s.q_land = r.mat("q_land");
  s.k_land = r.mat("k_land");
  s.b = RingMat(r.mat("b"));
  s.phi_b = RingVec(r.vec("phi_b"));
  s.gamma = r.mat("gamma");
  s.phi_gamma = r.vec("phi_gamma");
  s.gamma_pinv = r.mat("gamma_pinv");
  s.b_gamma = RingMat(r.mat("b_gamma"));
  s.phi_delta = r.vec("phi_delta");
  s.delta_v = r.mat("delta_v");
  const std::size_t n = s.q_win.rows(), d = s.q_win.cols(), m = s.q_land.rows();
  if (s.k_win.rows() != n || s.v_win.rows() != n || s.k_win.cols() != d ||
      s.v_win.cols() != d || s.q_land.cols() != d || s.k_land.rows() != m ||
      s.k_land.cols() != d || s.b.rows() != n || s.b.cols() != m || s.phi_b.size() != n ||
      s.gamma.rows() != m || s.gamma.cols() != m || s.phi_gamma.size() != m ||
      s.gamma_pinv.rows() != m || s.gamma_pinv.cols() != m || s.b_gamma.rows() != n ||
      s.b_gamma.cols() != m || s.phi_delta.size() != m || s.delta_v.rows() != m ||
      s.delta_v.cols() != d || s.schedule.segment_sizes.size() != m ||
      s.schedule.d != d || s.schedule.next_slot >= m ||
      s.schedule.accumulator_k.size() != d)
    throw std::invalid_argument("snapshot: inconsistent CoNyContState shapes");
}

inline void save_state(std::ostream& out, const CoNyFixedState& s) {
  namespace sd = snapshot_detail;
  out << "conystrom-state 1\nkind CoNyFixedState\n";
  sd::write_scalar(out, "refresh_interval", s.refresh_interval);
  sd::write_scalar(out, "steps", s.steps);
  sd::write_mat(out, "q_land", s.q_land);
  sd::write_mat(out, "k_land", s.k_land);
  sd::write_mat(out, "gamma_pinv", s.gamma_pinv);
  sd::write_mat(out, "k_win", s.k_win);
  sd::write_mat(out, "v_win", s.v_win);
  sd::write_mat(out, "b_gamma", s.b_gamma);
  sd::write_vec(out, "phi_delta", s.phi_delta);
  sd::write_mat(out, "delta_v", s.delta_v);
}

inline void load_state(std::istream& in, CoNyFixedState& s) {
  snapshot_detail::Reader r(in);
  r.expect_magic();
  r.expect_kind("CoNyFixedState");
  s.refresh_interval = r.scalar("refresh_interval");
  s.steps = r.scalar("steps");
  s.q_land = r.mat("q_land");
  s.k_land = r.mat("k_land");
  s.gamma_pinv = r.mat("gamma_pinv");
  s.k_win = RingMat(r.mat("k_win"));
  s.v_win = RingMat(r.mat("v_win"));
  s.b_gamma = RingMat(r.mat("b_gamma"));
  s.phi_delta = r.vec("phi_delta");
  s.delta_v = r.mat("delta_v");
  const std::size_t n = s.k_win.rows(), d = s.k_win.cols(), m = s.q_land.rows();
  if (s.v_win.rows() != n || s.v_win.cols() != d || s.q_land.cols() != d ||
      s.k_land.rows() != m || s.k_land.cols() != d || s.gamma_pinv.rows() != m ||
      s.gamma_pinv.cols() != m || s.b_gamma.rows() != n || s.b_gamma.cols() != m ||
      s.phi_delta.size() != m || s.delta_v.rows() != m || s.delta_v.cols() != d)
    throw std::invalid_argument("snapshot: inconsistent CoNyFixedState shapes");
}

template <typename State>
inline void save_state_file(const std::string& path, const State& s) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_state_file: cannot open " + path);
  save_state(out, s);
  if (!out) throw std::runtime_error("save_state_file: write failed for " + path);
}

template <typename State>
inline void load_state_file(const std::string& path, State& s) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("load_state_file: cannot open " + path);
  load_state(in, s);
}

}  // namespace conystrom
