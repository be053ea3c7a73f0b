#include <catch_amalgamated.hpp>

#include <sstream>

#include "hashlab/errors.hpp"
#include "hashlab/evaluation.hpp"
#include "hashlab/scan.hpp"
#include "hashlab/trainers.hpp"
#include "support.hpp"

using namespace hashlab;
using testing::naive_hamming;

namespace {

// Quadratic double loop, lowest index wins ties unless any_tie is set.
double oracle_precision(const LabeledDataset& d, const std::vector<std::size_t>& queries, bool any_tie) {
  std::size_t ok = 0;
  for (auto q : queries) {
    int best = 1 << 30;
    std::size_t arg = 0;
    for (std::size_t j = 0; j < d.size(); ++j) {
      if (j == q) continue;
      const int h = naive_hamming(d.descriptors[q], d.descriptors[j]);
      if (h < best) best = h, arg = j;
    }
    bool hit = d.labels[arg] == d.labels[q];
    if (any_tie) {
      for (std::size_t j = 0; j < d.size(); ++j) {
        if (j != q && naive_hamming(d.descriptors[q], d.descriptors[j]) == best && d.labels[j] == d.labels[q]) hit = true;
      }
    }
    ok += hit ? 1 : 0;
  }
  return static_cast<double>(ok) / static_cast<double>(queries.size());
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

LabeledDataset synthetic(int landmarks, int per, double flip, std::uint64_t seed) {
  SyntheticConfig c;
  c.n_landmarks = landmarks;
  c.min_per_landmark = c.max_per_landmark = per;
  c.base_flip_prob = flip;
  c.seed = seed;
  return generate_synthetic(c);
}

std::string csv(const EvalReport& r) {
  std::ostringstream out;
  write_report_csv(r, out);
  return out.str();
}

}  // namespace

TEST_CASE("precision@1 equals the double-loop oracle", "[evaluation][property]") {
  std::mt19937_64 gen(1);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 2 + gen() % 400;
    const int len = t % 2 == 0 ? 8 : 64;  // short codes force ties
    const auto d = testing::random_dataset(gen, n, 1 + n / 3, len);
    std::vector<std::size_t> q;
    for (std::size_t i = 0; i < n; ++i) {
      if (gen() % 2 == 0) q.push_back(i);
    }
    if (q.empty()) q.push_back(0);
    REQUIRE(precision_at_1(d, q) == oracle_precision(d, q, false));
    REQUIRE(precision_at_1_serial(d, q) == oracle_precision(d, q, false));
    REQUIRE(precision_at_1(d, q, TieRule::AnyTie) == oracle_precision(d, q, true));
  }
}

TEST_CASE("precision@1 hand example", "[evaluation]") {
  LabeledDataset d;
  d.descriptors = {pack(std::vector<std::uint8_t>{0, 0, 0, 0}), pack(std::vector<std::uint8_t>{0, 0, 0, 1}),
                   pack(std::vector<std::uint8_t>{0, 0, 1, 0}), pack(std::vector<std::uint8_t>{1, 1, 1, 1})};
  d.labels = {1, 2, 1, 2};
  // Query 0: records 1 and 2 tie at distance 1; lowest index (1) has another label.
  const std::vector<std::size_t> q{0};
  CHECK(precision_at_1(d, q) == 0.0);
  CHECK(precision_at_1(d, q, TieRule::AnyTie) == 1.0);
  // Query 3: records 1 and 2 at distance 3, the closer 1 shares label 2.
  const std::vector<std::size_t> q3{3};
  CHECK(precision_at_1(d, q3) == 1.0);
}

TEST_CASE("precision@1 argument errors", "[evaluation]") {
  std::mt19937_64 gen(2);
  const auto d = testing::random_dataset(gen, 10, 3, 16);
  CHECK_THROWS_AS(precision_at_1(d, std::vector<std::size_t>{}), InvalidArgument);
  CHECK_THROWS_AS(precision_at_1(d, std::vector<std::size_t>{10}), InvalidArgument);
  LabeledDataset one;
  one.descriptors = {BinaryCode(8)};
  one.labels = {0};
  CHECK_THROWS_AS(precision_at_1(one, std::vector<std::size_t>{0}), InvalidArgument);
}

TEST_CASE("precision@1 is the same for every thread count", "[evaluation][parallel]") {
  const auto d = synthetic(300, 4, 0.2, 3);
  const auto q = all_indices(d.size());
  const double ref = precision_at_1_serial(d, q);
  const int saved = max_threads();
  for (int t : {1, 2, 3}) {
    set_threads(t);
    CHECK(precision_at_1(d, q) == ref);
  }
  set_threads(saved);
}

TEST_CASE("truncation baseline", "[evaluation]") {
  const auto d = synthetic(200, 4, 0.1, 4);
  const auto q = sample_queries(d, 300, true, 1);
  const auto rows = truncation_baseline(d, {128, 32, 512}, q, 9);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].code_length == 32);
  CHECK(rows[2].code_length == 512);
  for (const auto& r : rows) {
    CHECK(r.method == "truncation");
    CHECK(r.queries == q.size());
    CHECK(r.seed == 9);
    CHECK(r.fingerprint == fingerprint(d));
    LabeledDataset t = d;
    for (auto& c : t.descriptors) c = truncate(c, r.code_length);
    CHECK(*r.precision == oracle_precision(t, q, false));
  }
  CHECK(*rows[2].precision >= *rows[0].precision);
  CHECK_THROWS_AS(truncation_baseline(d, {600}, q), InvalidArgument);
}

TEST_CASE("noiseless data gives precision 1 at the full length", "[evaluation]") {
  const auto d = synthetic(100, 3, 0.0, 5);
  CHECK(precision_at_1(d, all_indices(d.size())) == 1.0);
}

TEST_CASE("sweep rows equal independently trained cells", "[evaluation][sweep]") {
  const auto all = synthetic(200, 4, 0.1, 6);
  const auto [train, test] = split_by_landmark(all, 0.5, 2);
  std::vector<MethodSpec> methods(3);
  methods[0].method = Method::Truncation;
  methods[1].method = Method::Itq;
  methods[1].config.seed = 4;
  methods[2].method = Method::Splh;
  methods[2].scheme = EncodingScheme::nearest(5);
  methods[2].label = "splh-knn";
  SweepOptions opt;
  opt.lengths = {16, 32};
  opt.query_count = 200;
  opt.seed = 3;
  const auto report = run_sweep(train, test, methods, opt);
  REQUIRE(report.rows.size() == 6);
  CHECK(report.warnings.empty());

  const auto q = sample_queries(test, opt.query_count, true, opt.seed);
  const auto pairs = encode_similarity(train, methods[2].scheme, opt.seed);
  std::size_t r = 0;
  for (const auto& m : methods) {
    for (int k : opt.lengths) {
      const auto& row = report.rows[r++];
      CHECK(row.method == m.display_name());
      CHECK(row.code_length == k);
      CHECK(row.queries == q.size());
      TrainConfig cfg = m.config;
      cfg.code_length = k;
      const auto model = train_method(m.method, train, cfg, &pairs);
      REQUIRE(row.precision.has_value());
      CHECK(*row.precision == precision_at_1(encode_all(model, test), q));
    }
  }
}

TEST_CASE("sweep output is byte-identical across reruns and job counts", "[evaluation][sweep]") {
  const auto all = synthetic(150, 4, 0.1, 7);
  const auto [train, test] = split_by_landmark(all, 0.5, 3);
  std::vector<MethodSpec> methods(4);
  methods[0].method = Method::Truncation;
  methods[1].method = Method::Lsh;
  methods[2].method = Method::IsoH;
  methods[3].method = Method::Sph;
  for (auto& m : methods) m.config.seed = 11;
  SweepOptions opt;
  opt.lengths = {8, 16};
  opt.query_count = 100;
  const auto a = csv(run_sweep(train, test, methods, opt));
  CHECK(a == csv(run_sweep(train, test, methods, opt)));
  opt.jobs = 3;
  CHECK(a == csv(run_sweep(train, test, methods, opt)));
}

TEST_CASE("a failing cell becomes an error row", "[evaluation][sweep]") {
  const auto all = synthetic(60, 4, 0.1, 8);
  const auto [train, test] = split_by_landmark(all, 0.5, 1);
  std::vector<MethodSpec> methods(2);
  methods[0].method = Method::Truncation;
  methods[1].method = Method::FastHash;  // no pairs: training fails
  SweepOptions opt;
  opt.lengths = {8};
  opt.query_count = 50;
  const auto report = run_sweep(train, test, methods, opt);
  REQUIRE(report.rows.size() == 2);
  CHECK(report.rows[0].precision.has_value());
  CHECK_FALSE(report.rows[1].precision.has_value());
  CHECK_THAT(report.rows[1].note, Catch::Matchers::StartsWith("error: "));
}

TEST_CASE("sweep warns when train and test share labels", "[evaluation][sweep]") {
  const auto d = synthetic(60, 4, 0.1, 9);
  std::vector<MethodSpec> methods(1);
  SweepOptions opt;
  opt.lengths = {8};
  opt.query_count = 20;
  CHECK(run_sweep(d, d, methods, opt).warnings.size() == 1);
  CHECK_THROWS_AS(run_sweep(d, d, {}, opt), InvalidArgument);
}

TEST_CASE("report CSV round trip", "[evaluation][csv]") {
  EvalReport r;
  ReportRow a;
  a.method = "itq";
  a.code_length = 64;
  a.precision = 0.8125;
  a.queries = 2000;
  a.seed = 3;
  a.fingerprint = 0xabcdef;
  ReportRow b = a;
  b.method = "splh, eta=\"100\"";
  b.precision.reset();
  b.note = "error: boom";
  r.rows = {a, b};
  const auto text = csv(r);
  CHECK(text ==
        "method,code_length,precision_at_1,queries,seed,wall_ms,note\n"
        "itq,64,0.812500,2000,3,0.0,test=0000000000abcdef\n"
        "\"splh, eta=\"\"100\"\"\",64,,2000,3,0.0,error: boom\n");
  std::istringstream in(text);
  const auto back = read_report_csv(in);
  REQUIRE(back.rows.size() == 2);
  CHECK(back.rows[0].method == "itq");
  CHECK(*back.rows[0].precision == 0.8125);
  CHECK(back.rows[1].method == b.method);
  CHECK_FALSE(back.rows[1].precision.has_value());
  CHECK(back.rows[1].note == "error: boom");
  CHECK(csv(back).substr(0, 60) == text.substr(0, 60));
}

TEST_CASE("malformed reports are rejected", "[evaluation][csv]") {
  auto parse = [](const std::string& s) {
    std::istringstream in(s);
    return read_report_csv(in);
  };
  const std::string header = "method,code_length,precision_at_1,queries,seed,wall_ms,note\n";
  CHECK_THROWS_AS(parse(""), FormatError);
  CHECK_THROWS_AS(parse("a,b\n"), FormatError);
  CHECK_THROWS_AS(parse(header + "itq,64,0.5,10,1,0.0\n"), FormatError);
  CHECK_THROWS_AS(parse(header + "itq,x,0.5,10,1,0.0,\n"), FormatError);
  CHECK_THROWS_AS(parse(header + "itq,64,1.5,10,1,0.0,\n"), FormatError);
  CHECK_THROWS_AS(parse(header + "\"itq,64,0.5,10,1,0.0,\n"), FormatError);
  CHECK(parse(header + "itq,64,0.5,10,1,0.0,\r\n").rows.size() == 1);
}

TEST_CASE("pivot into a series table", "[evaluation][csv]") {
  EvalReport r;
  auto row = [](std::string m, int k, std::optional<double> p) {
    ReportRow x;
    x.method = std::move(m);
    x.code_length = k;
    x.precision = p;
    x.queries = 1;
    return x;
  };
  r.rows = {row("isoh", 64, 0.5), row("truncation", 32, 0.25), row("isoh", 32, 0.75), row("truncation", 64, std::nullopt)};
  const auto t = pivot_report(r);
  CHECK(t.methods == std::vector<std::string>{"isoh", "truncation"});
  CHECK(t.lengths == std::vector<int>{32, 64});
  std::ostringstream out;
  write_series_csv(t, out);
  CHECK(out.str() == "code_length,isoh,truncation\n32,0.750000,0.250000\n64,0.500000,\n");

  const auto only = pivot_report(r, {"truncation"});
  CHECK(only.methods == std::vector<std::string>{"truncation"});
  CHECK(only.values[0][0] == 0.25);
}
