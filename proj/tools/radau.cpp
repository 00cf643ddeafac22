// radau: benchmark sweeps, tableau export and single solves.
// Exit codes: 0 success, 1 configuration error, 2 solver failure.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

#include "radau/problems.hpp"
#include "radau/wp.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfig = 1;
constexpr int kSolver = 2;

// "-5..-12" (inclusive, either direction) or "-5,-7,-9".
std::vector<int> parse_exponents(const std::string& text) {
  std::vector<int> out;
  try {
    if (const auto dots = text.find(".."); dots != std::string::npos) {
      std::size_t used = 0;
      const int from = std::stoi(text.substr(0, dots), &used);
      if (used != dots) throw std::invalid_argument(text);
      const std::string rest = text.substr(dots + 2);
      const int to = std::stoi(rest, &used);
      if (used != rest.size()) throw std::invalid_argument(text);
      return radau::exponent_range(from, to);
    }
    std::size_t start = 0;
    while (start <= text.size()) {
      const auto comma = text.find(',', start);
      const std::string item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(text);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  } catch (const std::logic_error&) {
    throw radau::ConfigError("malformed exponent list: " + text);
  }
  return out;
}

struct BenchArgs {
  std::string problem;
  std::string rtol_exps;
  std::optional<int> atol_offset;
  std::string ref_tol;
  long precision = 53;
  long ref_precision = 0;
  int min_order = 5;
  int max_order = 25;
  std::optional<int> fixed_order;
  int reps = 3;
  std::string out;
  std::string plot;
  bool parallel_blocks = false;
};

int run_bench(const BenchArgs& a) {
  radau::SweepSpec spec = radau::default_sweep(a.problem);
  if (!a.rtol_exps.empty()) spec.rtol_exponents = parse_exponents(a.rtol_exps);
  if (a.atol_offset) spec.atol_offset = *a.atol_offset;
  if (!a.ref_tol.empty()) spec.ref_tol = a.ref_tol;
  spec.precision_bits = a.precision;
  spec.ref_precision_bits = a.ref_precision;
  spec.min_order = a.min_order;
  spec.max_order = a.max_order;
  spec.fixed_order = a.fixed_order;
  spec.repetitions = a.reps;
  spec.parallel_blocks = a.parallel_blocks;
  radau::validate(spec);

  const long ref_bits = radau::reference_precision(spec);
  const auto ref = radau::compute_reference(spec.problem, spec.ref_tol, ref_bits);
  std::fprintf(stderr, "reference %s tol=%s prec=%ld (%s)\n", spec.problem.c_str(), spec.ref_tol.c_str(), ref_bits,
               ref.from_cache ? "cached" : "computed");
  const auto records = radau::run_sweep(spec, ref);

  radau::emit_csv(records, a.out);
  std::printf("%-10s %-8s %-8s %-11s %-11s %7s %7s %9s %6s\n", "problem", "rtol", "atol", "error", "time_s",
              "steps", "rej", "f_evals", "orders");
  bool all_ok = true;
  for (const auto& r : records) {
    all_ok = all_ok && r.ok();
    char err[32] = "-", secs[32] = "-";
    if (r.error) std::snprintf(err, sizeof err, "%.3e", *r.error);
    if (r.wall_time_s) std::snprintf(secs, sizeof secs, "%.3e", *r.wall_time_s);
    std::printf("%-10s %-8.0e %-8.0e %-11s %-11s %7zu %7zu %9zu %2d..%-2d %s\n", r.problem.c_str(), r.rtol, r.atol,
                err, secs, r.stats.n_steps, r.stats.n_rejected, r.stats.n_f_evals, r.orders.min, r.orders.max,
                r.ok() ? "" : r.status.c_str());
  }
  std::size_t good = 0;
  for (const auto& r : records) good += r.ok() ? 1 : 0;
  if (good >= 2) std::printf("rank correlation (rtol, error): %.3f\n", radau::tolerance_error_correlation(records));
  if (!a.plot.empty()) radau::emit_plot(records, a.plot);
  return all_ok ? kOk : kSolver;
}

template <class T>
int solve_and_print(const std::string& name, const std::string& rtol, const std::string& atol, long bits,
                    int min_order, int max_order, bool parallel, std::size_t max_steps) {
  typename radau::ScalarTraits<T>::Scope scope(bits);
  const auto np = radau::make_problem<T>(name);
  radau::SolverOptions<T> opts;
  try {
    opts.rtol = radau::constant<T>(rtol);
    opts.atol = {radau::constant<T>(atol)};
  } catch (const std::invalid_argument&) {
    throw radau::ConfigError("malformed tolerance");
  }
  opts.min_order = min_order;
  opts.max_order = max_order;
  opts.initial_order = min_order;
  opts.parallel_blocks = parallel;
  opts.store_trajectory = false;
  opts.max_steps = max_steps;
  const auto sol = radau::solve(np.prob, opts);
  const auto summary = radau::summarize_orders(sol.orders);
  std::printf("status: %s\n", std::string(radau::to_string(sol.status)).c_str());
  if (!sol.message.empty()) std::printf("message: %s\n", sol.message.c_str());
  if (!sol.ts.empty()) {
    std::printf("t: %s\n", radau::ScalarTraits<T>::to_string(sol.ts.back()).c_str());
    for (std::size_t i = 0; i < sol.ys.back().size(); ++i)
      std::printf("y[%zu]: %s\n", i + 1, radau::ScalarTraits<T>::to_string(sol.ys.back()[i]).c_str());
  }
  const auto& s = sol.stats;
  std::printf("steps: %zu\nrejected: %zu\nnewton_failures: %zu\nf_evals: %zu\njac_evals: %zu\nlu: %zu\n"
              "newton_iters: %zu\norders: %d..%d (mode %d)\n",
              s.n_steps, s.n_rejected, s.n_newton_failures, s.n_f_evals, s.n_jac_evals, s.n_lu_factorizations,
              s.n_newton_iters, summary.min, summary.max, summary.mode);
  return sol.ok() ? kOk : kSolver;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Radau IIA solver: work-precision benchmarks, tableau export, single solves"};
  app.require_subcommand(1);

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "Run a tolerance sweep against a cached reference");
  b->add_option("--problem", bench.problem, "oregonator, robertson, hires or pollution")->required();
  b->add_option("--rtol-exps", bench.rtol_exps, "Exponent range such as -5..-12 or a list -5,-7")
      ->allow_extra_args(false);
  b->add_option("--atol-offset", bench.atol_offset, "atol exponent minus rtol exponent");
  b->add_option("--ref-tol", bench.ref_tol, "Reference tolerance (default: protocol value)");
  b->add_option("--precision", bench.precision, "Significand bits; 53 selects double")->capture_default_str();
  b->add_option("--ref-precision", bench.ref_precision, "Reference bits (default max(precision, 128))");
  b->add_option("--min-order", bench.min_order)->capture_default_str();
  b->add_option("--max-order", bench.max_order)->capture_default_str();
  b->add_option("--fixed-order", bench.fixed_order, "Disable order adaptation at this order");
  b->add_option("--reps", bench.reps, "Timed repetitions after one warmup")->capture_default_str();
  b->add_option("--out", bench.out, "CSV output path")->required();
  b->add_option("--plot", bench.plot, "SVG work-precision plot path");
  b->add_flag("--parallel-blocks", bench.parallel_blocks, "Factor and solve Newton blocks concurrently");

  int stages = 3;
  long tab_bits = 53;
  std::string tab_out;
  auto* t = app.add_subcommand("tableau", "Export method coefficients");
  t->add_option("--stages", stages)->required();
  t->add_option("--precision", tab_bits)->capture_default_str();
  t->add_option("--out", tab_out, "Output file (default: stdout)");

  std::string problem, rtol, atol;
  long solve_bits = 53;
  int min_order = 5, max_order = 25;
  std::optional<int> fixed_order;
  bool parallel = false;
  std::size_t max_steps = 1000000;
  auto* s = app.add_subcommand("solve", "Solve one problem and print the final state");
  s->add_option("--problem", problem)->required();
  s->add_option("--rtol", rtol)->required();
  s->add_option("--atol", atol)->required();
  s->add_option("--precision", solve_bits)->capture_default_str();
  s->add_option("--min-order", min_order)->capture_default_str();
  s->add_option("--max-order", max_order)->capture_default_str();
  s->add_option("--fixed-order", fixed_order);
  s->add_flag("--parallel-blocks", parallel);
  s->add_option("--max-steps", max_steps)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*b) return run_bench(bench);
    if (*t) {
      if (tab_bits < 53) throw radau::ConfigError("precision must be at least 53 bits");
      const std::string text = radau::export_tableau(stages, tab_bits);
      if (tab_out.empty()) {
        std::fputs(text.c_str(), stdout);
      } else {
        std::ofstream out(tab_out);
        if (!(out << text)) throw radau::IoError("cannot write " + tab_out);
      }
      return kOk;
    }
    if (*s) {
      if (solve_bits < 53) throw radau::ConfigError("precision must be at least 53 bits");
      if (fixed_order) min_order = max_order = *fixed_order;
      return solve_bits == 53
                 ? solve_and_print<double>(problem, rtol, atol, solve_bits, min_order, max_order, parallel, max_steps)
                 : solve_and_print<radau::mp::Real>(problem, rtol, atol, solve_bits, min_order, max_order, parallel, max_steps);
    }
  } catch (const radau::ReferenceFailure& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kSolver;
  } catch (const radau::SingularMatrix& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kSolver;
  } catch (const radau::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kConfig;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kConfig;
  }
  return kConfig;
}
