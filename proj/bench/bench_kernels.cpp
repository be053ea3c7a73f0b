// Serial reference vs OpenMP kernels on a synthetic corpus. Both versions must agree;
// the benchmark aborts if they do not.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <numeric>

#include "hashlab/dataset.hpp"
#include "hashlab/evaluation.hpp"
#include "hashlab/scan.hpp"
#include "hashlab/unsupervised.hpp"

namespace {

double best_ms(int reps, const std::function<void()>& body) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    body();
    best = std::min(best, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void row(const char* name, double serial, double parallel) {
  std::printf("%-22s %10.1f %10.1f %8.2fx\n", name, serial, parallel, serial / parallel);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Serial vs parallel Hamming-scan and encoding kernels"};
  int landmarks = 2500;
  int per = 8;
  std::size_t queries = 2000;
  int reps = 3;
  int threads = 0;
  app.add_option("--landmarks", landmarks, "Synthetic landmarks")->capture_default_str();
  app.add_option("--per", per, "Descriptors per landmark")->capture_default_str();
  app.add_option("--queries", queries, "Queries per scan")->capture_default_str();
  app.add_option("--reps", reps, "Repetitions (best time is reported)")->capture_default_str();
  app.add_option("--threads", threads, "OpenMP threads (default: runtime default)");
  CLI11_PARSE(app, argc, argv);
  if (threads > 0) hashlab::set_threads(threads);

  hashlab::SyntheticConfig cfg;
  cfg.n_landmarks = landmarks;
  cfg.min_per_landmark = cfg.max_per_landmark = per;
  cfg.base_flip_prob = 0.1;
  cfg.flip_prob_slope = 2e-4;
  cfg.seed = 1;
  const auto data = hashlab::generate_synthetic(cfg);
  const auto q = hashlab::sample_queries(data, queries, true, 2);
  const hashlab::PackedCodes packed(data.descriptors);

  std::printf("%zu records, %zu queries, %d threads\n", data.size(), q.size(), hashlab::max_threads());
  std::printf("%-22s %10s %10s %9s\n", "kernel", "serial ms", "omp ms", "speedup");

  std::vector<hashlab::NeighbourHit> a, b;
  row("nearest (512 bits)", best_ms(reps, [&] { a = hashlab::serial::nearest(packed, data.labels, q); }),
      best_ms(reps, [&] { b = hashlab::parallel::nearest(packed, data.labels, q); }));
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].index != b[i].index || a[i].distance != b[i].distance) {
      std::fprintf(stderr, "nearest mismatch at query %zu\n", i);
      return 1;
    }
  }

  std::vector<std::vector<std::size_t>> ka, kb;
  row("knn k=20", best_ms(reps, [&] { ka = hashlab::serial::knn(packed, q, 20); }),
      best_ms(reps, [&] { kb = hashlab::parallel::knn(packed, q, 20); }));
  if (ka != kb) {
    std::fprintf(stderr, "knn mismatch\n");
    return 1;
  }

  hashlab::TrainConfig tc;
  tc.code_length = 64;
  const auto model = hashlab::train_lsh(data, tc);
  hashlab::LabeledDataset ea, eb;
  row("encode_all lsh 64", best_ms(reps, [&] { ea = hashlab::encode_all_serial(model, data); }),
      best_ms(reps, [&] { eb = hashlab::encode_all(model, data); }));
  if (!(ea == eb)) {
    std::fprintf(stderr, "encode_all mismatch\n");
    return 1;
  }

  double pa = 0.0, pb = 0.0;
  row("precision@1 64 bits", best_ms(reps, [&] { pa = hashlab::precision_at_1_serial(ea, q); }),
      best_ms(reps, [&] { pb = hashlab::precision_at_1(ea, q); }));
  if (pa != pb) {
    std::fprintf(stderr, "precision mismatch\n");
    return 1;
  }
  return 0;
}
