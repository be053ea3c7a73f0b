#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hashlab/dataset.hpp"
#include "hashlab/hash_model.hpp"
#include "hashlab/supervised.hpp"
#include "hashlab/train_config.hpp"

namespace hashlab {

/// How a query with several records at its minimum distance is scored.
enum class TieRule {
  LowestIndex,  // the lowest-index record at the minimum distance decides
  AnyTie,       // success if any record at the minimum distance shares the label
};

/**
 * Mean over `queries` of [nearest other record has the query's label], Hamming
 * linear scan with the query itself excluded. Throws InvalidArgument on an empty
 * query list, fewer than two records or an out-of-range query.
 */
double precision_at_1(const LabeledDataset& codes, std::span<const std::size_t> queries,
                      TieRule tie = TieRule::LowestIndex);
double precision_at_1_serial(const LabeledDataset& codes, std::span<const std::size_t> queries,
                             TieRule tie = TieRule::LowestIndex);

struct ReportRow {
  std::string method;
  int code_length = 0;
  std::optional<double> precision;  // empty when the cell failed
  std::size_t queries = 0;
  std::uint64_t fingerprint = 0;  // of the evaluated (test) dataset
  std::uint64_t seed = 0;
  double wall_ms = 0.0;
  std::string note;  // error message of a failed cell
};

struct EvalReport {
  std::vector<ReportRow> rows;
  std::vector<std::string> warnings;
};

/// Truncation rows for each length, ascending. Lengths must not exceed the descriptor length.
std::vector<ReportRow> truncation_baseline(const LabeledDataset& test, std::vector<int> lengths,
                                           std::span<const std::size_t> queries, std::uint64_t seed = 0,
                                           TieRule tie = TieRule::LowestIndex);

/// One sweep entry. `label` names the rows (defaults to the method name).
struct MethodSpec {
  Method method = Method::Truncation;
  TrainConfig config;  // code_length is overridden per sweep length
  EncodingScheme scheme;
  std::string label;

  std::string display_name() const;
};

struct SweepOptions {
  std::vector<int> lengths{32, 64, 128, 256};
  std::size_t query_count = 20'000;
  std::uint64_t seed = 0;  // query sample and similarity encoding
  bool require_mate = true;
  TieRule tie = TieRule::LowestIndex;
  int jobs = 1;         // cells evaluated concurrently
  bool timing = false;  // record wall time; off keeps reports byte-reproducible
};

/**
 * Trains every (method, length) cell on `train`, encodes `test` and scores it on one
 * query sample shared by all cells. Rows follow method order then length order. A
 * failing cell yields a row with no precision and the error in `note`. Warns when the
 * two sides share labels. Throws InvalidArgument only on empty inputs.
 */
EvalReport run_sweep(const LabeledDataset& train, const LabeledDataset& test, const std::vector<MethodSpec>& methods,
                     const SweepOptions& options);

/// Header `method,code_length,precision_at_1,queries,seed,wall_ms,note`.
void write_report_csv(const EvalReport& report, std::ostream& out);
/// Throws FormatError(Malformed) on a bad header or row.
EvalReport read_report_csv(std::istream& in);

/// Pivot for plotting: one row per code length (ascending), one column per method in
/// first-appearance order, empty cells where a value is missing.
struct SeriesTable {
  std::vector<std::string> methods;
  std::vector<int> lengths;
  std::vector<std::vector<std::optional<double>>> values;  // [length][method]
};

SeriesTable pivot_report(const EvalReport& report, const std::vector<std::string>& methods = {});
void write_series_csv(const SeriesTable& table, std::ostream& out);

}  // namespace hashlab
