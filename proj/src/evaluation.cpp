#include "hashlab/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>

#include "hashlab/errors.hpp"
#include "hashlab/scan.hpp"
#include "hashlab/trainers.hpp"

namespace hashlab {

namespace {

void check_eval_inputs(const LabeledDataset& codes, std::span<const std::size_t> queries) {
  codes.validate();
  if (queries.empty()) throw InvalidArgument("precision@1: empty query list");
  if (codes.size() < 2) throw InvalidArgument("precision@1: needs at least two records");
}

double score(const LabeledDataset& codes, std::span<const std::size_t> queries, const std::vector<NeighbourHit>& hits,
             TieRule tie) {
  std::size_t hits_same = 0;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const bool ok = tie == TieRule::AnyTie ? hits[i].any_tie_same_label
                                           : codes.labels[hits[i].index] == codes.labels[queries[i]];
    hits_same += ok ? 1 : 0;
  }
  return static_cast<double>(hits_same) / static_cast<double>(queries.size());
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  if (quoted) throw FormatError(FormatError::Kind::Malformed, "unterminated quote in CSV line");
  return fields;
}

template <class T>
T parse_number(const std::string& s, std::size_t line, const char* column) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
    throw FormatError(FormatError::Kind::Malformed,
                      "report line " + std::to_string(line) + ": bad " + column + " '" + s + "'");
  }
  return v;
}

std::string format_double(double v, const char* fmt) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

constexpr const char* kReportHeader = "method,code_length,precision_at_1,queries,seed,wall_ms,note";

}  // namespace

double precision_at_1(const LabeledDataset& codes, std::span<const std::size_t> queries, TieRule tie) {
  check_eval_inputs(codes, queries);
  const PackedCodes packed(codes.descriptors);
  return score(codes, queries, parallel::nearest(packed, codes.labels, queries), tie);
}

double precision_at_1_serial(const LabeledDataset& codes, std::span<const std::size_t> queries, TieRule tie) {
  check_eval_inputs(codes, queries);
  const PackedCodes packed(codes.descriptors);
  return score(codes, queries, serial::nearest(packed, codes.labels, queries), tie);
}

std::vector<ReportRow> truncation_baseline(const LabeledDataset& test, std::vector<int> lengths,
                                           std::span<const std::size_t> queries, std::uint64_t seed, TieRule tie) {
  test.validate();
  std::sort(lengths.begin(), lengths.end());
  const auto fp = fingerprint(test);
  std::vector<ReportRow> rows;
  for (int k : lengths) {
    if (k < 1 || k > test.code_length()) {
      throw InvalidArgument("truncation baseline: length " + std::to_string(k) + " outside [1, " +
                            std::to_string(test.code_length()) + "]");
    }
    const auto codes = encode_all(make_truncation_model(test.code_length(), k), test);
    ReportRow row;
    row.method = std::string(method_name(Method::Truncation));
    row.code_length = k;
    row.precision = precision_at_1(codes, queries, tie);
    row.queries = queries.size();
    row.fingerprint = fp;
    row.seed = seed;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string MethodSpec::display_name() const { return label.empty() ? std::string(method_name(method)) : label; }

EvalReport run_sweep(const LabeledDataset& train, const LabeledDataset& test, const std::vector<MethodSpec>& methods,
                     const SweepOptions& options) {
  train.validate();
  test.validate();
  if (methods.empty()) throw InvalidArgument("sweep: no methods");
  if (options.lengths.empty()) throw InvalidArgument("sweep: no code lengths");
  if (options.query_count < 1) throw InvalidArgument("sweep: query count must be >= 1");

  EvalReport report;
  if (labels_overlap(train, test)) {
    report.warnings.push_back("train and test sets share landmark labels; precision will be optimistic");
  }
  const auto queries = sample_queries(test, options.query_count, options.require_mate, options.seed);
  const auto fp = fingerprint(test);

  // Similarity pairs are shared by every cell that asks for the same scheme.
  std::map<std::string, SimilarityPairs> pair_cache;
  std::map<std::string, std::string> pair_errors;
  for (const auto& m : methods) {
    if (!uses_pairs(m.method) || m.scheme.kind == EncodingScheme::Kind::None) continue;
    const auto key = m.scheme.name();
    if (pair_cache.count(key) != 0 || pair_errors.count(key) != 0) continue;
    try {
      pair_cache.emplace(key, encode_similarity(train, m.scheme, options.seed));
    } catch (const std::exception& e) {
      pair_errors.emplace(key, e.what());
    }
  }
  static const SimilarityPairs no_pairs;

  struct Cell {
    std::size_t method;
    int length;
  };
  std::vector<Cell> cells;
  for (std::size_t m = 0; m < methods.size(); ++m) {
    for (int k : options.lengths) cells.push_back({m, k});
  }
  report.rows.resize(cells.size());

  const auto n_cells = static_cast<std::ptrdiff_t>(cells.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(std::max(1, options.jobs))
  for (std::ptrdiff_t c = 0; c < n_cells; ++c) {
    const auto& cell = cells[static_cast<std::size_t>(c)];
    const auto& spec = methods[cell.method];
    ReportRow row;
    row.method = spec.display_name();
    row.code_length = cell.length;
    row.queries = queries.size();
    row.fingerprint = fp;
    row.seed = spec.config.seed;
    const auto start = std::chrono::steady_clock::now();
    try {
      TrainConfig config = spec.config;
      config.code_length = cell.length;
      const SimilarityPairs* pairs = &no_pairs;
      if (uses_pairs(spec.method) && spec.scheme.kind != EncodingScheme::Kind::None) {
        const auto key = spec.scheme.name();
        if (const auto err = pair_errors.find(key); err != pair_errors.end()) throw InvalidArgument(err->second);
        pairs = &pair_cache.at(key);
      }
      const HashModel model = train_method(spec.method, train, config, pairs);
      row.precision = precision_at_1(encode_all(model, test), queries, options.tie);
      for (const auto& w : model.diagnostics.warnings) row.note += (row.note.empty() ? "" : "; ") + w;
    } catch (const std::exception& e) {
      row.precision.reset();
      row.note = std::string("error: ") + e.what();
    }
    if (options.timing) {
      row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    }
    report.rows[static_cast<std::size_t>(c)] = std::move(row);
  }
  return report;
}

void write_report_csv(const EvalReport& report, std::ostream& out) {
  out << kReportHeader << '\n';
  for (const auto& r : report.rows) {
    out << csv_field(r.method) << ',' << r.code_length << ','
        << (r.precision ? format_double(*r.precision, "%.6f") : std::string()) << ',' << r.queries << ',' << r.seed
        << ',' << format_double(r.wall_ms, "%.1f") << ','
        << csv_field(r.note.empty() ? "test=" + hex64(r.fingerprint) : r.note) << '\n';
  }
}

EvalReport read_report_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError(FormatError::Kind::Malformed, "empty report");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kReportHeader) throw FormatError(FormatError::Kind::Malformed, "unexpected report header: " + line);
  EvalReport report;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 7) {
      throw FormatError(FormatError::Kind::Malformed,
                        "report line " + std::to_string(lineno) + ": expected 7 fields, got " + std::to_string(f.size()));
    }
    ReportRow r;
    r.method = f[0];
    if (r.method.empty()) throw FormatError(FormatError::Kind::Malformed, "report line " + std::to_string(lineno) + ": empty method");
    r.code_length = parse_number<int>(f[1], lineno, "code_length");
    if (!f[2].empty()) {
      const double p = parse_number<double>(f[2], lineno, "precision_at_1");
      if (!(p >= 0.0 && p <= 1.0)) {
        throw FormatError(FormatError::Kind::Malformed, "report line " + std::to_string(lineno) + ": precision outside [0, 1]");
      }
      r.precision = p;
    }
    r.queries = parse_number<std::size_t>(f[3], lineno, "queries");
    r.seed = parse_number<std::uint64_t>(f[4], lineno, "seed");
    r.wall_ms = parse_number<double>(f[5], lineno, "wall_ms");
    r.note = f[6];
    report.rows.push_back(std::move(r));
  }
  return report;
}

SeriesTable pivot_report(const EvalReport& report, const std::vector<std::string>& methods) {
  SeriesTable t;
  if (methods.empty()) {
    for (const auto& r : report.rows) {
      if (std::find(t.methods.begin(), t.methods.end(), r.method) == t.methods.end()) t.methods.push_back(r.method);
    }
  } else {
    t.methods = methods;
  }
  for (const auto& r : report.rows) {
    if (std::find(t.methods.begin(), t.methods.end(), r.method) == t.methods.end()) continue;
    if (std::find(t.lengths.begin(), t.lengths.end(), r.code_length) == t.lengths.end()) {
      t.lengths.push_back(r.code_length);
    }
  }
  std::sort(t.lengths.begin(), t.lengths.end());
  t.values.assign(t.lengths.size(), std::vector<std::optional<double>>(t.methods.size()));
  for (const auto& r : report.rows) {
    const auto m = std::find(t.methods.begin(), t.methods.end(), r.method);
    if (m == t.methods.end()) continue;
    const auto l = std::lower_bound(t.lengths.begin(), t.lengths.end(), r.code_length);
    t.values[static_cast<std::size_t>(l - t.lengths.begin())][static_cast<std::size_t>(m - t.methods.begin())] =
        r.precision;
  }
  return t;
}

void write_series_csv(const SeriesTable& table, std::ostream& out) {
  out << "code_length";
  for (const auto& m : table.methods) out << ',' << csv_field(m);
  out << '\n';
  for (std::size_t l = 0; l < table.lengths.size(); ++l) {
    out << table.lengths[l];
    for (const auto& v : table.values[l]) out << ',' << (v ? format_double(*v, "%.6f") : std::string());
    out << '\n';
  }
}

}  // namespace hashlab
