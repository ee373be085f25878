#ifndef CSDESIGN_IO_HPP
#define CSDESIGN_IO_HPP

#include "csdesign/designer.hpp"
#include "csdesign/metrics.hpp"
#include "csdesign/sdr.hpp"

#include <iosfwd>
#include <string>

namespace csd {

// Plain-text matrix file:
//   M L method seed      (seed is "-" when the design is deterministic)
//   one row per line, full precision (%.17g), space separated
void write_matrix(std::ostream& os, const SensingMatrix& a);
void write_matrix_file(const std::string& path, const SensingMatrix& a);
SensingMatrix read_matrix(std::istream& is);
SensingMatrix read_matrix_file(const std::string& path);

/// Comma-separated rows, no header.
void write_matrix_csv(std::ostream& os, const Matrix& a);

/// Columns: support (space-separated 0-based indices), term.
void write_bound_csv(std::ostream& os, const BoundReport& report);

/// Columns: iteration, objective, step, gradient_norm, gap, power_active;
/// a trailing comment line holds the termination status.
void write_trace_csv(std::ostream& os, const SolverTrace& trace);

/// %.17g formatting.
std::string format_double(double v);

}  // namespace csd

#endif  // CSDESIGN_IO_HPP
