#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "hashlab/dataset.hpp"
#include "hashlab/errors.hpp"
#include "hashlab/io.hpp"
#include "hashlab/scan.hpp"
#include "hashlab/trainers.hpp"

namespace hashlab::cli {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto at = s.find(sep, start);
    out.push_back(trim(s.substr(start, at == std::string_view::npos ? std::string_view::npos : at - start)));
    if (at == std::string_view::npos) break;
    start = at + 1;
  }
  return out;
}

template <class T>
T parse_value(std::string_view key, std::string_view text) {
  T v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw InvalidArgument("bad value '" + std::string(text) + "' for " + std::string(key));
  }
  return v;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "yes" || text == "1" || text == "on") return true;
  if (text == "false" || text == "no" || text == "0" || text == "off") return false;
  throw InvalidArgument("bad boolean '" + std::string(text) + "' for " + std::string(key));
}

std::vector<int> parse_lengths(std::string_view text) {
  std::vector<int> out;
  for (const auto& part : split(text, ',')) out.push_back(parse_value<int>("code length", part));
  return out;
}

Method require_method(std::string_view name) {
  const auto m = parse_method(name);
  if (!m) throw InvalidArgument("unknown method '" + std::string(name) + "'");
  return *m;
}

EncodingScheme require_scheme(std::string_view text) {
  const auto s = parse_scheme(text);
  if (!s) throw InvalidArgument("unknown pair encoding '" + std::string(text) + "' (none, hard, knn[:k], fasthash[:k[:b]])");
  return *s;
}

// FastHash cannot train without pairs; every other method defaults to none.
EncodingScheme default_scheme(Method m) {
  return m == Method::FastHash ? EncodingScheme::fasthash() : EncodingScheme::none();
}

void write_text(const std::filesystem::path& path, std::ostream& stdout_stream,
                const std::function<void(std::ostream&)>& writer) {
  if (path.empty() || path == "-") {
    writer(stdout_stream);
  } else {
    write_file_atomically(path, writer);
  }
}

int resolve_jobs(int flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("HASHLAB_THREADS")) {
    int v = 0;
    const std::string_view s(env);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc{} && ptr == s.data() + s.size() && v > 0) return v;
  }
  return 0;
}

void print_diagnostics(const HashModel& m, std::ostream& out) {
  const auto& d = m.diagnostics;
  out << "method " << method_name(m.method) << ", " << m.code_length << " bits from " << m.input_dim << "\n";
  out << "iterations " << d.iterations << (d.converged ? " (converged)" : " (not converged)") << "\n";
  if (!d.bit_balance.empty()) {
    const auto [lo, hi] = std::minmax_element(d.bit_balance.begin(), d.bit_balance.end());
    double mean = 0.0;
    for (double b : d.bit_balance) mean += b;
    mean /= static_cast<double>(d.bit_balance.size());
    out << "bit balance min " << *lo << " mean " << mean << " max " << *hi << "\n";
  }
  if (!d.bit_accuracy.empty()) {
    double mean = 0.0;
    for (double a : d.bit_accuracy) mean += a;
    out << "mean training bit accuracy " << mean / static_cast<double>(d.bit_accuracy.size()) << "\n";
  }
  for (const auto& w : d.warnings) out << "warning: " << w << "\n";
}

struct MethodFlags {
  std::string pairs;
  std::vector<std::string> sets;
  std::optional<double> eta;
  std::optional<double> lambda;
  std::optional<int> iterations;
  std::string mapping;
  bool no_center = false;
};

void add_method_flags(CLI::App* cmd, MethodFlags& f) {
  cmd->add_option("--pairs", f.pairs, "Pair encoding: none, hard, knn[:k], fasthash[:k[:budget]]");
  cmd->add_option("--eta", f.eta, "SPLH weight of the unsupervised term");
  cmd->add_option("--lambda", f.lambda, "BTSPLH weight of the unsupervised term");
  cmd->add_option("--iterations", f.iterations, "Iteration count (ITQ, IsoH, SpH)");
  cmd->add_option("--mapping", f.mapping, "Bit mapping: pm1 (default) or 01");
  cmd->add_flag("--no-center", f.no_center, "Skip mean centring");
  cmd->add_option("--set", f.sets, "Any method parameter as key=value (repeatable)");
}

void apply_method_flags(const MethodFlags& f, TrainConfig& config, EncodingScheme& scheme) {
  if (!f.pairs.empty()) scheme = require_scheme(f.pairs);
  if (f.eta) config.eta = *f.eta;
  if (f.lambda) config.lambda = *f.lambda;
  if (f.iterations) config.iterations = *f.iterations;
  if (!f.mapping.empty()) apply_parameter(config, scheme, "mapping", f.mapping);
  if (f.no_center) config.center = false;
  for (const auto& kv : f.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw InvalidArgument("--set expects key=value, got '" + kv + "'");
    apply_parameter(config, scheme, trim(std::string_view(kv).substr(0, eq)), trim(std::string_view(kv).substr(eq + 1)));
  }
}

int cmd_gen(const SyntheticConfig& cfg, const std::filesystem::path& output, std::ostream& out) {
  const auto data = generate_synthetic(cfg);
  save_dataset(data, output);
  const auto s = summarize(data, cfg.seed);
  out << "records " << s.records << "\n";
  out << "labels " << s.distinct_labels << "\n";
  out << "mean intra-label distance " << s.mean_intra_distance << "\n";
  out << "mean inter-label distance " << s.mean_inter_distance << "\n";
  return kOk;
}

}  // namespace

void apply_parameter(TrainConfig& c, EncodingScheme& scheme, std::string_view key, std::string_view value) {
  const std::string k(key);
  if (k == "seed") {
    c.seed = parse_value<std::uint64_t>(key, value);
  } else if (k == "iterations") {
    c.iterations = parse_value<int>(key, value);
  } else if (k == "mapping") {
    if (value == "pm1" || value == "plus-minus-one") {
      c.mapping = BitMapping::PlusMinusOne;
    } else if (value == "01" || value == "zero-one") {
      c.mapping = BitMapping::ZeroOne;
    } else {
      throw InvalidArgument("bad mapping '" + std::string(value) + "' (pm1 or 01)");
    }
  } else if (k == "center") {
    c.center = parse_bool(key, value);
  } else if (k == "isotropy_tolerance") {
    c.isotropy_tolerance = parse_value<double>(key, value);
  } else if (k == "groups") {
    c.dsh_groups = parse_value<int>(key, value);
  } else if (k == "neighbours") {
    c.dsh_neighbours = parse_value<int>(key, value);
  } else if (k == "min_balance") {
    c.dsh_min_balance = parse_value<double>(key, value);
  } else if (k == "kmeans_iterations") {
    c.kmeans_iterations = parse_value<int>(key, value);
  } else if (k == "balance_tolerance") {
    c.sph_balance_tolerance = parse_value<double>(key, value);
  } else if (k == "overlap_tolerance") {
    c.sph_overlap_tolerance = parse_value<double>(key, value);
  } else if (k == "anchors") {
    c.klsh_anchors = parse_value<int>(key, value);
  } else if (k == "subsample") {
    c.klsh_subsample = parse_value<int>(key, value);
  } else if (k == "bandwidth") {
    c.klsh_bandwidth = parse_value<double>(key, value);
  } else if (k == "eta") {
    c.eta = parse_value<double>(key, value);
  } else if (k == "lambda") {
    c.lambda = parse_value<double>(key, value);
  } else if (k == "correction_step") {
    c.correction_step = parse_value<double>(key, value);
  } else if (k == "depth") {
    c.tree_depth = parse_value<int>(key, value);
  } else if (k == "trees") {
    c.trees_per_bit = parse_value<int>(key, value);
  } else if (k == "sweeps") {
    c.inference_sweeps = parse_value<int>(key, value);
  } else if (k == "pairs") {
    scheme = require_scheme(value);
  } else if (k == "max_pairs") {
    scheme.max_pairs = parse_value<std::size_t>(key, value);
  } else {
    throw InvalidArgument("unknown method parameter '" + k + "'");
  }
}

RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir) {
  RunConfig rc;
  enum class Section { None, Run, Method } section = Section::None;
  std::vector<bool> explicit_seed;
  std::vector<bool> named_method;
  std::vector<bool> explicit_scheme;
  std::set<std::string> labels;
  bool have_lengths = false;
  auto resolve = [&](const std::string& v) {
    const std::filesystem::path p(v);
    return p.is_absolute() ? p : base_dir / p;
  };

  std::size_t lineno = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto where = [&] { return "config line " + std::to_string(lineno) + ": "; };
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw InvalidArgument(where() + "unterminated section header");
      const auto parts = split(std::string_view(line).substr(1, line.size() - 2), ' ');
      std::vector<std::string> words;
      for (const auto& p : parts) {
        if (!p.empty()) words.push_back(p);
      }
      if (words.size() == 1 && words[0] == "run") {
        section = Section::Run;
      } else if (words.size() == 2 && words[0] == "method") {
        if (!labels.insert(words[1]).second) throw InvalidArgument(where() + "duplicate method section '" + words[1] + "'");
        MethodSpec spec;
        spec.label = words[1];
        if (const auto m = parse_method(words[1])) spec.method = *m;
        spec.scheme = default_scheme(spec.method);
        rc.methods.push_back(spec);
        explicit_seed.push_back(false);
        explicit_scheme.push_back(false);
        named_method.push_back(parse_method(words[1]).has_value());
        section = Section::Method;
      } else {
        throw InvalidArgument(where() + "unknown section '" + line + "'");
      }
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InvalidArgument(where() + "expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    try {
      if (section == Section::Run) {
        if (key == "train") {
          rc.train = resolve(value);
        } else if (key == "test") {
          rc.test = resolve(value);
        } else if (key == "output") {
          rc.output = resolve(value);
        } else if (key == "lengths") {
          rc.options.lengths = parse_lengths(value);
          have_lengths = true;
        } else if (key == "queries") {
          rc.options.query_count = parse_value<std::size_t>(key, value);
        } else if (key == "seed") {
          rc.seed = parse_value<std::uint64_t>(key, value);
        } else if (key == "jobs") {
          rc.options.jobs = parse_value<int>(key, value);
        } else if (key == "require_mate") {
          rc.options.require_mate = parse_bool(key, value);
        } else if (key == "tie") {
          if (value == "lowest-index") {
            rc.options.tie = TieRule::LowestIndex;
          } else if (value == "any") {
            rc.options.tie = TieRule::AnyTie;
          } else {
            throw InvalidArgument("bad tie rule '" + value + "' (lowest-index or any)");
          }
        } else if (key == "timing") {
          rc.options.timing = parse_bool(key, value);
        } else {
          throw InvalidArgument("unknown run key '" + key + "'");
        }
      } else if (section == Section::Method) {
        auto& spec = rc.methods.back();
        if (key == "method") {
          spec.method = require_method(value);
          if (!explicit_scheme.back()) spec.scheme = default_scheme(spec.method);
          named_method.back() = true;
        } else {
          apply_parameter(spec.config, spec.scheme, key, value);
          if (key == "seed") explicit_seed.back() = true;
          if (key == "pairs") explicit_scheme.back() = true;
        }
      } else {
        throw InvalidArgument("key outside any section");
      }
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(where() + e.what());
    }
  }

  for (std::size_t i = 0; i < rc.methods.size(); ++i) {
    auto& spec = rc.methods[i];
    if (!named_method[i]) throw InvalidArgument("method section '" + spec.label + "' needs a 'method = ' line");
    if (!explicit_seed[i]) spec.config.seed = rc.seed;
  }
  rc.options.seed = rc.seed;
  if (rc.methods.empty()) throw InvalidArgument("config has no [method ...] sections");
  if (rc.test.empty()) throw InvalidArgument("config [run] needs 'test ='");
  if (rc.train.empty()) throw InvalidArgument("config [run] needs 'train ='");
  if (!have_lengths) rc.options.lengths = {32, 64, 128, 256};
  return rc;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Learning-to-hash toolkit for binary descriptors", args.empty() ? "hashlab" : args[0]};
  app.require_subcommand(1);
  app.set_version_flag("--version", "hashlab 0.1.0");

  // gen
  SyntheticConfig gen_cfg;
  int gen_per_max = 0;
  std::filesystem::path gen_out;
  auto* gen = app.add_subcommand("gen", "Generate a synthetic labelled dataset (BHDS)");
  gen->add_option("--landmarks", gen_cfg.n_landmarks, "Number of landmarks")->capture_default_str();
  gen->add_option("--per", gen_cfg.min_per_landmark, "Descriptors per landmark (minimum with --per-max)")
      ->capture_default_str();
  gen->add_option("--per-max", gen_per_max, "Maximum descriptors per landmark (default: --per)");
  gen->add_option("--flip", gen_cfg.base_flip_prob, "Flip probability of bit 0")->capture_default_str();
  gen->add_option("--slope", gen_cfg.flip_prob_slope, "Flip probability increase per bit")->capture_default_str();
  gen->add_option("--length", gen_cfg.descriptor_length, "Descriptor bits")->capture_default_str();
  gen->add_option("--seed", gen_cfg.seed, "Random seed")->capture_default_str();
  gen->add_option("-o,--output", gen_out, "Output BHDS file")->required();

  // split
  std::filesystem::path split_in, split_train, split_test;
  double split_fraction = 0.5;
  std::uint64_t split_seed = 0;
  auto* split_cmd = app.add_subcommand("split", "Split a dataset by landmark into train and test files");
  split_cmd->add_option("-i,--input", split_in, "Input BHDS file")->required();
  split_cmd->add_option("--train-fraction", split_fraction, "Fraction of descriptors on the train side")
      ->capture_default_str();
  split_cmd->add_option("--seed", split_seed, "Random seed")->capture_default_str();
  split_cmd->add_option("--train", split_train, "Train output BHDS file")->required();
  split_cmd->add_option("--test", split_test, "Test output BHDS file")->required();

  // export
  std::filesystem::path export_in, export_out;
  auto* exp = app.add_subcommand("export", "Write a dataset as label,hex_descriptor CSV");
  exp->add_option("-i,--input", export_in, "Input BHDS file")->required();
  exp->add_option("-o,--output", export_out, "Output CSV (default stdout)");

  // pairs
  std::filesystem::path pairs_in, pairs_out;
  std::string pairs_scheme = "knn:20";
  std::uint64_t pairs_seed = 0;
  auto* pairs_cmd = app.add_subcommand("pairs", "Encode similarity pairs and write them as i,j,relation CSV");
  pairs_cmd->add_option("-i,--input", pairs_in, "Input BHDS file")->required();
  pairs_cmd->add_option("--scheme", pairs_scheme, "none, hard, knn[:k], fasthash[:k[:budget]]")->capture_default_str();
  pairs_cmd->add_option("--seed", pairs_seed, "Random seed")->capture_default_str();
  pairs_cmd->add_option("-o,--output", pairs_out, "Output CSV (default: statistics only)");

  // train
  std::string train_method_name;
  TrainConfig train_cfg;
  MethodFlags train_flags;
  std::filesystem::path train_in, train_out;
  auto* train = app.add_subcommand("train", "Train a hash model (BHMO)");
  train->add_option("method", train_method_name, "Method name")->required();
  train->add_option("-k,--bits", train_cfg.code_length, "Code length")->capture_default_str();
  train->add_option("--seed", train_cfg.seed, "Random seed")->capture_default_str();
  train->add_option("-i,--input", train_in, "Training BHDS file")->required();
  train->add_option("-o,--output", train_out, "Output BHMO file")->required();
  add_method_flags(train, train_flags);

  // encode
  std::filesystem::path enc_model, enc_in, enc_out;
  auto* enc = app.add_subcommand("encode", "Encode a dataset with a model into a BHDS file of codes");
  enc->add_option("-m,--model", enc_model, "BHMO model")->required();
  enc->add_option("-i,--input", enc_in, "Input BHDS file")->required();
  enc->add_option("-o,--output", enc_out, "Output BHDS file")->required();

  // eval
  std::filesystem::path eval_test, eval_train, eval_out, eval_config;
  std::vector<std::filesystem::path> eval_models;
  std::string eval_baseline, eval_sweep, eval_methods;
  std::size_t eval_queries = 20'000;
  std::uint64_t eval_seed = 0;
  bool eval_any_tie = false, eval_all_queries = false, eval_timing = false;
  int eval_jobs = 0;
  MethodFlags eval_flags;
  auto* eval = app.add_subcommand("eval", "Precision@1 of models, the truncation baseline or a full sweep");
  eval->add_option("-i,--test", eval_test, "Test BHDS file");
  eval->add_option("-m,--model", eval_models, "BHMO model to evaluate (repeatable)");
  eval->add_option("--baseline", eval_baseline, "Truncation lengths, e.g. 64,512 (default: model lengths)");
  eval->add_option("--sweep", eval_sweep, "Train and evaluate every method at these lengths, e.g. 32,64,128,256");
  eval->add_option("--train", eval_train, "Training BHDS file (with --sweep)");
  eval->add_option("--methods", eval_methods, "Comma-separated methods for --sweep")->default_str("truncation");
  eval->add_option("--config", eval_config, "Run description file (see README)");
  eval->add_option("--queries", eval_queries, "Query sample size")->capture_default_str();
  eval->add_option("--seed", eval_seed, "Seed for queries, pairs and training")->capture_default_str();
  eval->add_flag("--any-tie", eval_any_tie, "Score a query as correct if any tied nearest record matches");
  eval->add_flag("--all-queries", eval_all_queries, "Also sample queries without a same-label mate");
  eval->add_flag("--timing", eval_timing, "Record wall time per row (reports are then not byte-reproducible)");
  eval->add_option("-j,--jobs", eval_jobs, "Parallel sweep cells (default HASHLAB_THREADS or 1)");
  eval->add_option("-o,--output", eval_out, "Report CSV (default stdout)");
  add_method_flags(eval, eval_flags);

  // report
  std::filesystem::path rep_in, rep_out, rep_dir = ".";
  std::vector<std::string> rep_figures;
  auto* rep = app.add_subcommand("report", "Pivot a report CSV into plot series (code_length, one column per method)");
  rep->add_option("-i,--input", rep_in, "Report CSV")->required();
  rep->add_option("-o,--output", rep_out, "Series CSV of every method (default stdout)");
  rep->add_option("--figure", rep_figures, "name=m1,m2: also write <out-dir>/name.csv with those methods (repeatable)");
  rep->add_option("--out-dir", rep_dir, "Directory for --figure files")->capture_default_str();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  if (argv.empty()) argv.push_back("hashlab");

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (const int jobs = resolve_jobs(eval->parsed() ? eval_jobs : 0); jobs > 0) set_threads(jobs);

    if (gen->parsed()) {
      gen_cfg.max_per_landmark = gen_per_max > 0 ? gen_per_max : gen_cfg.min_per_landmark;
      return cmd_gen(gen_cfg, gen_out, out);
    }

    if (split_cmd->parsed()) {
      const auto data = load_dataset(split_in);
      const auto [tr, te] = split_by_landmark(data, split_fraction, split_seed);
      save_dataset(tr, split_train);
      save_dataset(te, split_test);
      out << "train " << tr.size() << " records, test " << te.size() << " records\n";
      return kOk;
    }

    if (exp->parsed()) {
      const auto data = load_dataset(export_in);
      write_text(export_out, out, [&](std::ostream& o) { export_csv(data, o); });
      return kOk;
    }

    if (pairs_cmd->parsed()) {
      const auto data = load_dataset(pairs_in);
      const auto pairs = encode_similarity(data, require_scheme(pairs_scheme), pairs_seed);
      std::size_t similar = 0;
      for (const auto& p : pairs.pairs) similar += p.relation == Relation::Similar ? 1 : 0;
      if (!pairs_out.empty()) save_pairs_csv(pairs, pairs_out);
      out << "pairs " << pairs.size() << " (similar " << similar << ", dissimilar " << pairs.size() - similar
          << "), duplicates " << pairs.duplicates << ", skipped singletons " << pairs.skipped_singletons << "\n";
      if (pairs.skipped_singletons > 0) {
        err << "warning: " << pairs.skipped_singletons << " records have no same-label mate and were skipped\n";
      }
      return kOk;
    }

    if (train->parsed()) {
      const Method method = require_method(train_method_name);
      EncodingScheme scheme = default_scheme(method);
      apply_method_flags(train_flags, train_cfg, scheme);
      const auto data = load_dataset(train_in);
      SimilarityPairs pairs;
      if (uses_pairs(method)) {
        pairs = encode_similarity(data, scheme, train_cfg.seed);
        out << "pairs " << pairs.size() << " (" << scheme.name() << ")\n";
      }
      const HashModel model = train_method(method, data, train_cfg, &pairs);
      save_model(model, train_out);
      print_diagnostics(model, out);
      return kOk;
    }

    if (enc->parsed()) {
      const auto model = load_model(enc_model);
      const auto data = load_dataset(enc_in);
      save_dataset(encode_all(model, data), enc_out);
      out << "encoded " << data.size() << " records to " << model.code_length << " bits\n";
      return kOk;
    }

    if (eval->parsed()) {
      EvalReport report;
      std::filesystem::path output = eval_out;
      if (!eval_config.empty()) {
        const auto rc = parse_run_config(read_text_file(eval_config), eval_config.parent_path());
        auto options = rc.options;
        if (eval_jobs > 0 || options.jobs < 1) options.jobs = std::max(1, resolve_jobs(eval_jobs));
        if (eval_timing) options.timing = true;
        report = run_sweep(load_dataset(rc.train), load_dataset(rc.test), rc.methods, options);
        if (output.empty()) output = rc.output;
      } else {
        if (eval_test.empty()) throw InvalidArgument("eval needs --test (or --config)");
        const auto test = load_dataset(eval_test);
        SweepOptions options;
        options.query_count = eval_queries;
        options.seed = eval_seed;
        options.require_mate = !eval_all_queries;
        options.tie = eval_any_tie ? TieRule::AnyTie : TieRule::LowestIndex;
        options.timing = eval_timing;
        options.jobs = std::max(1, resolve_jobs(eval_jobs));

        if (!eval_sweep.empty()) {
          if (eval_train.empty()) throw InvalidArgument("--sweep needs --train");
          options.lengths = parse_lengths(eval_sweep);
          std::vector<MethodSpec> methods;
          for (const auto& name : split(eval_methods.empty() ? "truncation" : eval_methods, ',')) {
            MethodSpec spec;
            spec.method = require_method(name);
            spec.config.seed = eval_seed;
            spec.scheme = default_scheme(spec.method);
            apply_method_flags(eval_flags, spec.config, spec.scheme);
            methods.push_back(spec);
          }
          report = run_sweep(load_dataset(eval_train), test, methods, options);
        } else {
          if (!eval_train.empty() && labels_overlap(load_dataset(eval_train), test)) {
            report.warnings.push_back("train and test sets share landmark labels; precision will be optimistic");
          }
          const auto queries = sample_queries(test, options.query_count, options.require_mate, options.seed);
          std::vector<int> lengths;
          for (const auto& path : eval_models) {
            const auto model = load_model(path);
            ReportRow row;
            row.method = std::string(method_name(model.method));
            row.code_length = model.code_length;
            row.queries = queries.size();
            row.fingerprint = fingerprint(test);
            row.seed = eval_seed;
            row.precision = precision_at_1(encode_all(model, test), queries, options.tie);
            report.rows.push_back(row);
            lengths.push_back(model.code_length);
          }
          if (!eval_baseline.empty()) {
            lengths = parse_lengths(eval_baseline);
          } else if (lengths.empty()) {
            lengths.push_back(test.code_length());
          }
          std::sort(lengths.begin(), lengths.end());
          lengths.erase(std::unique(lengths.begin(), lengths.end()), lengths.end());
          for (auto& row : truncation_baseline(test, lengths, queries, eval_seed, options.tie)) {
            report.rows.push_back(std::move(row));
          }
        }
      }
      for (const auto& w : report.warnings) err << "warning: " << w << "\n";
      write_text(output, out, [&](std::ostream& o) { write_report_csv(report, o); });
      for (const auto& r : report.rows) {
        if (!r.precision) err << "warning: " << r.method << " at " << r.code_length << " bits failed: " << r.note << "\n";
      }
      return kOk;
    }

    if (rep->parsed()) {
      EvalReport report;
      {
        std::ifstream in(rep_in);
        if (!in) throw IoError("cannot open report " + rep_in.string());
        report = read_report_csv(in);
      }
      write_text(rep_out, out, [&](std::ostream& o) { write_series_csv(pivot_report(report), o); });
      for (const auto& fig : rep_figures) {
        const auto eq = fig.find('=');
        if (eq == std::string::npos || eq == 0) throw InvalidArgument("--figure expects name=m1,m2, got '" + fig + "'");
        const auto methods = split(std::string_view(fig).substr(eq + 1), ',');
        for (const auto& m : methods) {
          const bool present = std::any_of(report.rows.begin(), report.rows.end(),
                                           [&](const ReportRow& r) { return r.method == m; });
          if (!present) throw InvalidArgument("--figure " + fig.substr(0, eq) + ": method '" + m + "' not in report");
        }
        std::error_code ec;
        std::filesystem::create_directories(rep_dir, ec);
        if (ec) throw IoError("cannot create directory " + rep_dir.string() + ": " + ec.message());
        const auto path = rep_dir / (fig.substr(0, eq) + ".csv");
        write_file_atomically(path, [&](std::ostream& o) { write_series_csv(pivot_report(report, methods), o); });
      }
      return kOk;
    }
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kTraining;
  }
  return kUsage;
}

}  // namespace hashlab::cli
