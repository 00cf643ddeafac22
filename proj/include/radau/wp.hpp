#pragma once

// Work-precision benchmarking: reference solutions, tolerance sweeps, CSV
// and SVG output, and tableau export.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "radau/mp_real.hpp"
#include "radau/solver.hpp"

namespace radau {

class ReferenceFailure : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

struct SweepSpec {
  std::string problem;
  std::vector<int> rtol_exponents;
  int atol_offset = 0;           // atol exponent = rtol exponent + offset
  std::string ref_tol = "1e-14";  // decimal text, parsed at the working precision
  long precision_bits = 53;
  long ref_precision_bits = 0;   // 0 selects max(precision_bits, 128)
  int min_order = 5;
  int max_order = 25;
  std::optional<int> fixed_order;
  int repetitions = 3;
  bool parallel_blocks = false;
  std::optional<std::filesystem::path> cache_dir;  // default: reference_cache_dir()
};

// Sweep following a registered problem's tolerance protocol.
SweepSpec default_sweep(const std::string& problem);

// Throws ConfigError (or UnknownProblem) before any solve is attempted.
void validate(const SweepSpec& spec);

long reference_precision(const SweepSpec& spec);

struct OrderSummary {
  int min = 0;
  int max = 0;
  int mode = 0;  // most frequent; ties resolve to the lower order
};

OrderSummary summarize_orders(const std::vector<int>& orders);

struct WpRecord {
  std::string problem;
  double rtol = 0.0;
  double atol = 0.0;
  std::optional<double> error;  // absent for failed points
  std::optional<double> wall_time_s;
  StepStats stats;
  OrderSummary orders;
  std::string status;  // "success" or "failed"

  bool ok() const noexcept { return status == "success"; }
};

struct ReferenceSolution {
  std::string problem;
  std::string ref_tol;
  long precision_bits = 0;
  Vector<mp::Real> ts;
  Vector<mp::Real> y;  // state at tf
  bool from_cache = false;
};

// RADAU_CACHE_DIR, else $XDG_CACHE_HOME/radau, else ~/.cache/radau.
std::filesystem::path reference_cache_dir();
std::filesystem::path reference_cache_path(const std::filesystem::path& dir, const std::string& problem,
                                           const std::string& ref_tol, long bits);

std::string serialize_reference(const ReferenceSolution& ref);
ReferenceSolution deserialize_reference(std::string_view text);

// Solves at rtol = atol = ref_tol, or reads the cached result.
ReferenceSolution compute_reference(const std::string& problem, const std::string& ref_tol, long bits,
                                    const std::optional<std::filesystem::path>& cache_dir = {});

// Scaled RMS of y - y_ref with both scaling tolerances equal to ref_tol.
double reference_error(const ReferenceSolution& ref, const Vector<mp::Real>& y);

std::vector<WpRecord> run_sweep(const SweepSpec& spec);
std::vector<WpRecord> run_sweep(const SweepSpec& spec, const ReferenceSolution& ref);

std::string csv_text(const std::vector<WpRecord>& records);
void emit_csv(const std::vector<WpRecord>& records, const std::filesystem::path& path);
std::vector<WpRecord> parse_csv(std::string_view text);
std::vector<WpRecord> read_csv(const std::filesystem::path& path);

struct PlotSeries {
  std::string label;
  std::vector<WpRecord> records;
};

// Log-log error (x) against wall time (y), one curve per series.
std::string plot_svg(const std::vector<PlotSeries>& series);
void emit_plot(const std::vector<PlotSeries>& series, const std::filesystem::path& path);
void emit_plot(const std::vector<WpRecord>& records, const std::filesystem::path& path);

// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

// Rank correlation between rtol and achieved error over successful records.
double tolerance_error_correlation(const std::vector<WpRecord>& records);

// Text export of the method coefficients at the given precision.
std::string export_tableau(int s, long bits);

// Shortest round-trip decimal for a double.
std::string format_double(double x);

}  // namespace radau
