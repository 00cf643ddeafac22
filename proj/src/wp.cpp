#include "radau/wp.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "radau/problems.hpp"

namespace radau {

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Writes through a temporary file so readers never see a partial file.
void write_file(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out.flush()) throw IoError("write failed for " + path.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot write " + path.string() + ": " + ec.message());
}

std::string power_of_ten(int e) { return "1e" + std::to_string(e); }

double parse_double(std::string_view s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw IoError("malformed number: " + std::string(s));
  return v;
}

std::size_t parse_count(std::string_view s) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw IoError("malformed integer: " + std::string(s));
  return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  for (auto line : split(text, '\n')) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.push_back(line);
  }
  while (!out.empty() && out.back().empty()) out.pop_back();
  return out;
}

template <class T>
Vector<mp::Real> widen_all(const Vector<T>& v) {
  Vector<mp::Real> out;
  out.reserve(v.size());
  for (const auto& x : v) out.push_back(mp::Real(x, ScalarTraits<T>::precision_of(x)));
  return out;
}

template <class T>
ReferenceSolution solve_reference(const std::string& problem, const std::string& ref_tol, long bits) {
  typename ScalarTraits<T>::Scope scope(bits);
  const auto np = make_problem<T>(problem);
  SolverOptions<T> opts;
  opts.rtol = constant<T>(ref_tol);
  opts.atol = {constant<T>(ref_tol)};
  opts.store_trajectory = true;
  const auto sol = solve(np.prob, opts);
  if (!sol.ok())
    throw ReferenceFailure("reference for " + problem + " at tolerance " + ref_tol + " with " +
                           std::to_string(bits) + " bits failed: " + std::string(to_string(sol.status)) +
                           (sol.message.empty() ? "" : " (" + sol.message + ")"));
  ReferenceSolution ref;
  ref.problem = problem;
  ref.ref_tol = ref_tol;
  ref.precision_bits = bits;
  ref.ts = widen_all(sol.ts);
  ref.y = widen_all(sol.ys.back());
  return ref;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

template <class T>
WpRecord run_point(const NamedProblem<T>& np, const SweepSpec& spec, int exponent, const ReferenceSolution& ref) {
  WpRecord rec;
  rec.problem = spec.problem;
  rec.rtol = parse_double(power_of_ten(exponent));
  rec.atol = parse_double(power_of_ten(exponent + spec.atol_offset));
  rec.status = "failed";

  SolverOptions<T> opts;
  opts.rtol = constant<T>(power_of_ten(exponent));
  opts.atol = {constant<T>(power_of_ten(exponent + spec.atol_offset))};
  opts.min_order = spec.fixed_order.value_or(spec.min_order);
  opts.max_order = spec.fixed_order.value_or(spec.max_order);
  opts.initial_order = opts.min_order;
  opts.parallel_blocks = spec.parallel_blocks;
  opts.store_trajectory = false;

  // The warmup run supplies the statistics and the final state.
  Solution<T> sol;
  try {
    sol = solve(np.prob, opts);
  } catch (const Error&) {
    return rec;
  }
  rec.stats = sol.stats;
  rec.orders = summarize_orders(sol.orders);
  if (!sol.ok()) return rec;

  double best = 0.0;
  for (int r = 0; r < spec.repetitions; ++r) {
    const auto start = std::chrono::steady_clock::now();
    const auto again = solve(np.prob, opts);
    const double elapsed = seconds_since(start);
    if (r == 0 || elapsed < best) best = elapsed;
  }
  rec.error = reference_error(ref, widen_all(sol.ys.back()));
  rec.wall_time_s = std::max(best, 1e-9);
  rec.status = "success";
  return rec;
}

template <class T>
std::vector<WpRecord> sweep_with(const SweepSpec& spec, const ReferenceSolution& ref) {
  typename ScalarTraits<T>::Scope scope(spec.precision_bits);
  const auto np = make_problem<T>(spec.problem);
  std::vector<WpRecord> out;
  for (int e : spec.rtol_exponents) out.push_back(run_point(np, spec, e, ref));
  return out;
}

std::string sanitize(std::string s) {
  for (char& ch : s)
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '.')) ch = '_';
  return s;
}

constexpr std::string_view kCsvHeader =
    "problem,rtol,atol,error,wall_time_s,n_steps,n_rejected,n_f_evals,n_jac_evals,n_lu,order_min,"
    "order_max,order_mode,status";

template <class T>
void append_vector(std::ostringstream& out, std::string_view label, const Vector<T>& v) {
  out << '[' << label << "]\n";
  for (const auto& x : v) out << ScalarTraits<T>::to_string(x) << '\n';
}

template <class T>
void append_matrix(std::ostringstream& out, std::string_view label, const Matrix<T>& m) {
  out << '[' << label << "]\n";
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) out << (j ? " " : "") << ScalarTraits<T>::to_string(m(i, j));
    out << '\n';
  }
}

template <class T>
std::string export_with(int s, long bits) {
  typename ScalarTraits<T>::Scope scope(bits);
  const auto tab = build_tableau<T>(s, bits);
  const auto m = build_method<T>(s, bits);
  std::ostringstream out;
  out << "# radau-iia s=" << s << " prec=" << bits << '\n';
  append_vector(out, "c", tab.c);
  append_matrix(out, "a", tab.a);
  append_vector(out, "b", tab.b);
  out << "[b_tilde0]\n" << ScalarTraits<T>::to_string(tab.b_tilde0) << '\n';
  append_vector(out, "b_tilde", tab.b_tilde);
  out << "[gamma]\n" << ScalarTraits<T>::to_string(m.gamma) << '\n';
  out << "[alpha beta]\n";
  for (const auto& p : m.pairs)
    out << ScalarTraits<T>::to_string(p.alpha) << ' ' << ScalarTraits<T>::to_string(p.beta) << '\n';
  append_matrix(out, "T", m.T_fwd);
  append_matrix(out, "T_inv", m.T_inv);
  return out.str();
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

SweepSpec default_sweep(const std::string& problem) {
  const auto np = make_problem<double>(problem);
  SweepSpec spec;
  spec.problem = problem;
  spec.rtol_exponents = np.protocol.rtol_exponents;
  spec.atol_offset = np.protocol.atol_offset;
  spec.ref_tol = power_of_ten(np.protocol.ref_exponent);
  return spec;
}

void validate(const SweepSpec& spec) {
  make_problem<double>(spec.problem);
  if (spec.rtol_exponents.empty()) throw ConfigError("empty tolerance sweep");
  for (int e : spec.rtol_exponents)
    if (e >= 0) throw ConfigError("rtol exponents must be negative");
  if (spec.repetitions < 1) throw ConfigError("repetitions must be positive");
  if (spec.precision_bits < 53) throw ConfigError("precision must be at least 53 bits");
  if (spec.ref_precision_bits != 0 && spec.ref_precision_bits < 53)
    throw ConfigError("reference precision must be at least 53 bits");
  double ref = 0.0;
  try {
    ref = parse_double(spec.ref_tol);
  } catch (const IoError&) {
    throw ConfigError("malformed reference tolerance: " + spec.ref_tol);
  }
  if (!(ref > 0.0)) throw ConfigError("reference tolerance must be positive");
  const int tightest = *std::min_element(spec.rtol_exponents.begin(), spec.rtol_exponents.end());
  if (!(ref < parse_double(power_of_ten(tightest))))
    throw ConfigError("reference tolerance " + spec.ref_tol + " is not tighter than rtol " +
                      power_of_ten(tightest));
  const int lo = spec.fixed_order.value_or(spec.min_order);
  const int hi = spec.fixed_order.value_or(spec.max_order);
  for (int o : {lo, hi})
    if (o < 1 || o % 4 != 1) throw ConfigError("orders must be of the form 4k + 1");
  if (lo > hi) throw ConfigError("min order exceeds max order");
  if (hi > 2 * kDefaultMaxStages - 1) throw ConfigError("order above the supported maximum");
}

long reference_precision(const SweepSpec& spec) {
  return spec.ref_precision_bits != 0 ? spec.ref_precision_bits : std::max<long>(spec.precision_bits, 128);
}

OrderSummary summarize_orders(const std::vector<int>& orders) {
  OrderSummary out;
  if (orders.empty()) return out;
  std::map<int, std::size_t> counts;
  for (int o : orders) ++counts[o];
  out.min = counts.begin()->first;
  out.max = counts.rbegin()->first;
  std::size_t best = 0;
  for (const auto& [order, n] : counts)
    if (n > best) {
      best = n;
      out.mode = order;
    }
  return out;
}

fs::path reference_cache_dir() {
  if (const char* dir = std::getenv("RADAU_CACHE_DIR"); dir && *dir) return dir;
  if (const char* xdg = std::getenv("XDG_CACHE_HOME"); xdg && *xdg) return fs::path(xdg) / "radau";
  if (const char* home = std::getenv("HOME"); home && *home) return fs::path(home) / ".cache" / "radau";
  return fs::temp_directory_path() / "radau-cache";
}

fs::path reference_cache_path(const fs::path& dir, const std::string& problem, const std::string& ref_tol,
                              long bits) {
  return dir / (sanitize(problem) + "_tol" + sanitize(ref_tol) + "_p" + std::to_string(bits) + ".ref");
}

std::string serialize_reference(const ReferenceSolution& ref) {
  std::ostringstream out;
  out << "# radau-reference problem=" << ref.problem << " ref_tol=" << ref.ref_tol
      << " prec=" << ref.precision_bits << '\n';
  out << "ts " << ref.ts.size() << '\n';
  for (const auto& t : ref.ts) out << mp::to_shortest_string(t) << '\n';
  out << "y " << ref.y.size() << '\n';
  for (const auto& v : ref.y) out << mp::to_shortest_string(v) << '\n';
  return out.str();
}

ReferenceSolution deserialize_reference(std::string_view text) {
  const auto lines = lines_of(text);
  if (lines.empty() || !lines[0].starts_with("# radau-reference "))
    throw IoError("not a reference file");
  ReferenceSolution ref;
  for (auto field : split(lines[0].substr(18), ' ')) {
    const auto eq = field.find('=');
    if (eq == std::string_view::npos) continue;
    const auto key = field.substr(0, eq);
    const auto value = field.substr(eq + 1);
    if (key == "problem") ref.problem = value;
    if (key == "ref_tol") ref.ref_tol = value;
    if (key == "prec") ref.precision_bits = static_cast<long>(parse_count(value));
  }
  if (ref.problem.empty() || ref.ref_tol.empty() || ref.precision_bits < 2)
    throw IoError("incomplete reference header");
  std::size_t at = 1;
  auto section = [&](std::string_view name) {
    if (at >= lines.size() || !lines[at].starts_with(std::string(name) + " "))
      throw IoError("missing section " + std::string(name));
    const std::size_t count = parse_count(lines[at].substr(name.size() + 1));
    ++at;
    if (at + count > lines.size()) throw IoError("truncated section " + std::string(name));
    Vector<mp::Real> v;
    v.reserve(count);
    for (std::size_t i = 0; i < count; ++i, ++at) {
      try {
        v.push_back(mp::Real::parse(lines[at], ref.precision_bits));
      } catch (const std::invalid_argument&) {
        throw IoError("malformed value in section " + std::string(name));
      }
    }
    return v;
  };
  ref.ts = section("ts");
  ref.y = section("y");
  if (ref.y.empty()) throw IoError("reference has no final state");
  return ref;
}

ReferenceSolution compute_reference(const std::string& problem, const std::string& ref_tol, long bits,
                                    const std::optional<fs::path>& cache_dir) {
  make_problem<double>(problem);
  const fs::path path = reference_cache_path(cache_dir.value_or(reference_cache_dir()), problem, ref_tol, bits);
  std::error_code ec;
  if (fs::exists(path, ec)) {
    try {
      auto ref = deserialize_reference(read_file(path));
      if (ref.problem == problem && ref.ref_tol == ref_tol && ref.precision_bits == bits) {
        ref.from_cache = true;
        return ref;
      }
    } catch (const IoError&) {
      // Unreadable cache entries are recomputed and overwritten.
    }
  }
  ReferenceSolution ref = bits == 53 ? solve_reference<double>(problem, ref_tol, bits)
                                     : solve_reference<mp::Real>(problem, ref_tol, bits);
  try {
    write_file(path, serialize_reference(ref));
  } catch (const IoError&) {
    // A read-only cache location only costs recomputation next time.
  }
  return ref;
}

double reference_error(const ReferenceSolution& ref, const Vector<mp::Real>& y) {
  if (y.size() != ref.y.size()) throw DimensionMismatch("state and reference dimensions differ");
  long bits = ref.precision_bits;
  for (const auto& v : y) bits = std::max<long>(bits, v.precision());
  mp::PrecisionScope scope(bits);
  const mp::Real tol = mp::Real::parse(ref.ref_tol, bits);
  mp::Real acc(0);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const mp::Real d = (y[i] - ref.y[i]) / (tol + tol * mp::abs(ref.y[i]));
    acc += d * d;
  }
  return mp::sqrt(acc / mp::Real(static_cast<long>(y.size()))).to_double();
}

std::vector<WpRecord> run_sweep(const SweepSpec& spec) {
  validate(spec);
  const auto ref = compute_reference(spec.problem, spec.ref_tol, reference_precision(spec), spec.cache_dir);
  return run_sweep(spec, ref);
}

std::vector<WpRecord> run_sweep(const SweepSpec& spec, const ReferenceSolution& ref) {
  validate(spec);
  if (ref.problem != spec.problem) throw ConfigError("reference belongs to a different problem");
  return spec.precision_bits == 53 ? sweep_with<double>(spec, ref) : sweep_with<mp::Real>(spec, ref);
}

std::string csv_text(const std::vector<WpRecord>& records) {
  std::ostringstream out;
  out << kCsvHeader << '\n';
  for (const auto& r : records) {
    out << r.problem << ',' << format_double(r.rtol) << ',' << format_double(r.atol) << ','
        << (r.error ? format_double(*r.error) : "") << ','
        << (r.wall_time_s ? format_double(*r.wall_time_s) : "") << ',' << r.stats.n_steps << ','
        << r.stats.n_rejected << ',' << r.stats.n_f_evals << ',' << r.stats.n_jac_evals << ','
        << r.stats.n_lu_factorizations << ',' << r.orders.min << ',' << r.orders.max << ','
        << r.orders.mode << ',' << r.status << '\n';
  }
  return out.str();
}

void emit_csv(const std::vector<WpRecord>& records, const fs::path& path) {
  if (records.empty()) throw ConfigError("no records to write");
  write_file(path, csv_text(records));
}

std::vector<WpRecord> parse_csv(std::string_view text) {
  const auto lines = lines_of(text);
  if (lines.empty() || lines[0] != kCsvHeader) throw IoError("unexpected CSV header");
  std::vector<WpRecord> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split(lines[i], ',');
    if (f.size() != 14) throw IoError("CSV row " + std::to_string(i) + " has " + std::to_string(f.size()) + " fields");
    WpRecord r;
    r.problem = f[0];
    r.rtol = parse_double(f[1]);
    r.atol = parse_double(f[2]);
    if (!f[3].empty()) r.error = parse_double(f[3]);
    if (!f[4].empty()) r.wall_time_s = parse_double(f[4]);
    r.stats.n_steps = parse_count(f[5]);
    r.stats.n_rejected = parse_count(f[6]);
    r.stats.n_f_evals = parse_count(f[7]);
    r.stats.n_jac_evals = parse_count(f[8]);
    r.stats.n_lu_factorizations = parse_count(f[9]);
    r.orders.min = static_cast<int>(parse_count(f[10]));
    r.orders.max = static_cast<int>(parse_count(f[11]));
    r.orders.mode = static_cast<int>(parse_count(f[12]));
    r.status = f[13];
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<WpRecord> read_csv(const fs::path& path) { return parse_csv(read_file(path)); }

std::string plot_svg(const std::vector<PlotSeries>& series) {
  if (series.empty()) throw TooFewPoints("no series to plot");
  struct Point {
    double x, y;
  };
  std::vector<std::vector<Point>> curves;
  for (const auto& s : series) {
    std::vector<Point> pts;
    for (const auto& r : s.records)
      if (r.ok() && r.error && r.wall_time_s && *r.error > 0.0 && *r.wall_time_s > 0.0)
        pts.push_back({std::log10(*r.error), std::log10(*r.wall_time_s)});
    if (pts.size() < 2)
      throw TooFewPoints("series '" + s.label + "' has " + std::to_string(pts.size()) +
                         " plottable points; at least 2 are needed");
    std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) { return a.x < b.x; });
    curves.push_back(std::move(pts));
  }
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& c : curves)
    for (const auto& p : c) {
      x0 = std::min(x0, p.x);
      x1 = std::max(x1, p.x);
      y0 = std::min(y0, p.y);
      y1 = std::max(y1, p.y);
    }
  x0 = std::floor(x0);
  x1 = std::max(std::ceil(x1), x0 + 1);
  y0 = std::floor(y0);
  y1 = std::max(std::ceil(y1), y0 + 1);

  const double W = 640, H = 440, left = 70, right = 170, top = 20, bottom = 50;
  const double pw = W - left - right, ph = H - top - bottom;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return top + (y1 - y) / (y1 - y0) * ph; };
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(2);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double d = x0; d <= x1 + 1e-9; d += 1) {
    out << "<line x1=\"" << px(d) << "\" y1=\"" << top << "\" x2=\"" << px(d) << "\" y2=\"" << top + ph
        << "\" stroke=\"#ddd\"/>\n";
    out << "<text x=\"" << px(d) << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\">1e"
        << static_cast<int>(d) << "</text>\n";
  }
  for (double d = y0; d <= y1 + 1e-9; d += 1) {
    out << "<line x1=\"" << left << "\" y1=\"" << py(d) << "\" x2=\"" << left + pw << "\" y2=\"" << py(d)
        << "\" stroke=\"#ddd\"/>\n";
    out << "<text x=\"" << left - 6 << "\" y=\"" << py(d) + 4 << "\" text-anchor=\"end\">1e"
        << static_cast<int>(d) << "</text>\n";
  }
  out << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">error</text>\n";
  out << "<text x=\"16\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << top + ph / 2 << ")\">wall time (s)</text>\n";
  for (std::size_t k = 0; k < curves.size(); ++k) {
    const char* color = palette[k % std::size(palette)];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& p : curves[k]) out << px(p.x) << ',' << py(p.y) << ' ';
    out << "\"/>\n";
    for (const auto& p : curves[k])
      out << "<circle cx=\"" << px(p.x) << "\" cy=\"" << py(p.y) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    const double ly = top + 14 + 18.0 * static_cast<double>(k);
    out << "<line x1=\"" << left + pw + 10 << "\" y1=\"" << ly - 4 << "\" x2=\"" << left + pw + 30 << "\" y2=\""
        << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"1.5\"/>\n";
    std::string label = series[k].label;
    for (const auto& [from, to] : {std::pair{'&', "&amp;"}, std::pair{'<', "&lt;"}, std::pair{'>', "&gt;"}}) {
      std::string escaped;
      for (char ch : label) escaped += ch == from ? std::string(to) : std::string(1, ch);
      label = escaped;
    }
    out << "<text x=\"" << left + pw + 36 << "\" y=\"" << ly << "\">" << label << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

void emit_plot(const std::vector<PlotSeries>& series, const fs::path& path) {
  write_file(path, plot_svg(series));
}

void emit_plot(const std::vector<WpRecord>& records, const fs::path& path) {
  emit_plot({PlotSeries{records.empty() ? std::string() : records.front().problem, records}}, path);
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DimensionMismatch("spearman: length mismatch");
  if (x.size() < 2) throw TooFewPoints("spearman needs at least 2 points");
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    mx += rx[i] / n;
    my += ry[i] / n;
  }
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

double tolerance_error_correlation(const std::vector<WpRecord>& records) {
  std::vector<double> tol, err;
  for (const auto& r : records)
    if (r.ok() && r.error) {
      tol.push_back(r.rtol);
      err.push_back(*r.error);
    }
  return spearman(tol, err);
}

std::string export_tableau(int s, long bits) {
  if (bits < 53) throw ConfigError("precision must be at least 53 bits");
  return bits == 53 ? export_with<double>(s, bits) : export_with<mp::Real>(s, bits);
}

}  // namespace radau
