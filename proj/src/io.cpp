#include "csdesign/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace csd {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_matrix(std::ostream& os, const SensingMatrix& a) {
  os << a.m() << ' ' << a.l() << ' ' << to_string(a.method) << ' ';
  if (a.seed) {
    os << *a.seed;
  } else {
    os << '-';
  }
  os << '\n';
  for (Eigen::Index i = 0; i < a.a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.a.cols(); ++j) {
      if (j) os << ' ';
      os << format_double(a.a(i, j));
    }
    os << '\n';
  }
}

void write_matrix_file(const std::string& path, const SensingMatrix& a) {
  std::ofstream f(path);
  if (!f) throw ParameterError("cannot open '" + path + "' for writing");
  write_matrix(f, a);
}

SensingMatrix read_matrix(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw ParameterError("matrix file: missing header");
  std::istringstream hs(header);
  long m = 0, l = 0;
  std::string method, seed;
  if (!(hs >> m >> l >> method >> seed) || m < 1 || l < 1) {
    throw ParameterError("matrix file: header must be 'M L method seed'");
  }
  SensingMatrix out;
  out.method = parse_design_method(method);
  if (seed != "-") {
    try {
      out.seed = std::stoull(seed);
    } catch (const std::exception&) {
      throw ParameterError("matrix file: bad seed '" + seed + "'");
    }
  }
  out.a.resize(m, l);
  for (long i = 0; i < m; ++i) {
    for (long j = 0; j < l; ++j) {
      if (!(is >> out.a(i, j))) throw ParameterError("matrix file: expected " + std::to_string(m * l) + " values");
    }
  }
  std::string rest;
  if (is >> rest) throw ParameterError("matrix file: trailing data after " + std::to_string(m * l) + " values");
  return out;
}

SensingMatrix read_matrix_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParameterError("cannot open '" + path + "'");
  return read_matrix(f);
}

void write_matrix_csv(std::ostream& os, const Matrix& a) {
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      if (j) os << ',';
      os << format_double(a(i, j));
    }
    os << '\n';
  }
}

void write_bound_csv(std::ostream& os, const BoundReport& report) {
  os << "support,term\n";
  for (const auto& [support, term] : report.per_support_terms) {
    for (std::size_t i = 0; i < support.size(); ++i) os << (i ? " " : "") << support[i];
    os << ',' << format_double(term) << '\n';
  }
}

void write_trace_csv(std::ostream& os, const SolverTrace& trace) {
  os << "iteration,objective,step,gradient_norm,gap,power_active\n";
  for (const auto& it : trace.iterates) {
    os << it.iteration << ',' << format_double(it.objective) << ',' << format_double(it.step) << ','
       << format_double(it.gradient_norm) << ',' << format_double(it.gap) << ',' << (it.power_active ? 1 : 0) << '\n';
  }
  os << "# termination: " << to_string(trace.termination) << '\n';
}

}  // namespace csd
