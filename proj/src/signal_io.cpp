#include "dynsync/signal_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "dynsync/errors.hpp"

namespace dynsync {

namespace {

void write_double(std::ostream& os, double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  os << buf;
}

struct Row {
  int k, i, j;
  double re, im;
};

// parses "k,i,j,re,im"; returns false on blank lines
bool parse_row(const std::string& line, Row& row, int lineno) {
  std::size_t pos = line.find_first_not_of(" \t\r");
  if (pos == std::string::npos) return false;
  const char* s = line.data();
  const char* end = s + line.size();
  auto field = [&](auto& out) {
    while (s < end && (*s == ' ' || *s == '\t')) ++s;
    auto [p, ec] = std::from_chars(s, end, out);
    if (ec != std::errc())
      throw ValidationError("line " + std::to_string(lineno) + ": bad field");
    s = p;
    while (s < end && (*s == ' ' || *s == '\t' || *s == '\r')) ++s;
    if (s < end && *s == ',') ++s;
  };
  s += pos;
  field(row.k);
  field(row.i);
  field(row.j);
  field(row.re);
  field(row.im);
  return true;
}

void parse_header(std::istream& is, int& n, int& T) {
  std::string line;
  if (!std::getline(is, line)) throw ValidationError("empty input");
  std::istringstream hs(line);
  char comma = 0;
  if (!(hs >> n >> comma >> T) || comma != ',' || n < 1 || T < 1)
    throw ValidationError("bad header, expected n,T");
}

}  // namespace

void save_signal(const StackedSignal& g, std::ostream& os) {
  os << g.n() << ',' << g.T() << '\n';
  for (int k = 0; k < g.T(); ++k) {
    const VectorXcd& v = g.block(k).values();
    for (int i = 0; i < g.n(); ++i) {
      os << (k + 1) << ',' << (i + 1) << ",0,";
      write_double(os, v[i].real());
      os << ',';
      write_double(os, v[i].imag());
      os << '\n';
    }
  }
}

void save_signal(const StackedSignal& g, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ValidationError("cannot open for writing: " + path);
  save_signal(g, f);
  if (!f.good()) throw ValidationError("write failed: " + path);
}

StackedSignal load_signal(std::istream& is) {
  int n = 0, T = 0;
  parse_header(is, n, T);
  std::vector<VectorXcd> vals(T, VectorXcd::Zero(n));
  std::vector<std::vector<char>> seen(T, std::vector<char>(n, 0));
  std::string line;
  int lineno = 1;
  Row r;
  while (std::getline(is, line)) {
    ++lineno;
    if (!parse_row(line, r, lineno)) continue;
    if (r.j != 0)
      throw ValidationError("line " + std::to_string(lineno) +
                            ": expected signal row (j = 0)");
    if (r.k < 1 || r.k > T || r.i < 1 || r.i > n)
      throw ValidationError("line " + std::to_string(lineno) + ": index out of range");
    vals[r.k - 1][r.i - 1] = cplx(r.re, r.im);
    seen[r.k - 1][r.i - 1] = 1;
  }
  for (int k = 0; k < T; ++k)
    for (int i = 0; i < n; ++i)
      if (!seen[k][i])
        throw ValidationError("missing signal entry k=" + std::to_string(k + 1) +
                              " i=" + std::to_string(i + 1));
  std::vector<UnitSignal> blocks;
  blocks.reserve(T);
  for (int k = 0; k < T; ++k) blocks.emplace_back(std::move(vals[k]));
  return StackedSignal{std::move(blocks)};
}

StackedSignal load_signal(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot open: " + path);
  return load_signal(f);
}

void save_measurements(const MeasurementStack& A, std::ostream& os) {
  os << A.n() << ',' << A.T() << '\n';
  for (int k = 0; k < A.T(); ++k) {
    const MatrixXcd& B = A.block(k);
    for (int i = 0; i < A.n(); ++i)
      for (int j = i + 1; j < A.n(); ++j) {
        os << (k + 1) << ',' << (i + 1) << ',' << (j + 1) << ',';
        write_double(os, B(i, j).real());
        os << ',';
        write_double(os, B(i, j).imag());
        os << '\n';
      }
  }
}

void save_measurements(const MeasurementStack& A, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ValidationError("cannot open for writing: " + path);
  save_measurements(A, f);
  if (!f.good()) throw ValidationError("write failed: " + path);
}

MeasurementStack load_measurements(std::istream& is) {
  int n = 0, T = 0;
  parse_header(is, n, T);
  std::vector<MatrixXcd> blocks(T, MatrixXcd::Zero(n, n));
  std::string line;
  int lineno = 1;
  Row r;
  while (std::getline(is, line)) {
    ++lineno;
    if (!parse_row(line, r, lineno)) continue;
    if (r.k < 1 || r.k > T || r.i < 1 || r.i > n || r.j < 1 || r.j > n)
      throw ValidationError("line " + std::to_string(lineno) + ": index out of range");
    if (r.i >= r.j)
      throw ValidationError("line " + std::to_string(lineno) +
                            ": measurement rows need i < j");
    blocks[r.k - 1](r.i - 1, r.j - 1) = cplx(r.re, r.im);
    blocks[r.k - 1](r.j - 1, r.i - 1) = std::conj(cplx(r.re, r.im));
  }
  return MeasurementStack{std::move(blocks)};
}

MeasurementStack load_measurements(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot open: " + path);
  return load_measurements(f);
}

}  // namespace dynsync
