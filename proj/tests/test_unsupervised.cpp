#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "hashlab/errors.hpp"
#include "hashlab/trainers.hpp"
#include "hashlab/unsupervised.hpp"
#include "support.hpp"

using namespace hashlab;

namespace {

LabeledDataset synthetic(int landmarks, int per, std::uint64_t seed, int length = 512) {
  SyntheticConfig c;
  c.n_landmarks = landmarks;
  c.min_per_landmark = c.max_per_landmark = per;
  c.base_flip_prob = 0.1;
  c.descriptor_length = length;
  c.seed = seed;
  return generate_synthetic(c);
}

TrainConfig config_for(int k, std::uint64_t seed = 1) {
  TrainConfig c;
  c.code_length = k;
  c.seed = seed;
  return c;
}

// Projections (before thresholding) of every training record, one column per bit.
Matrix projections(const HashModel& m, const LabeledDataset& data) {
  const Matrix x = m.preprocessing.apply_all(data);
  Matrix out(x.rows(), m.code_length);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Vector row = x.row(i).transpose();
    const auto v = hash_values(m, std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
    for (int k = 0; k < m.code_length; ++k) out(i, k) = v[static_cast<std::size_t>(k)];
  }
  return out;
}

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

const std::vector<Method> kUnsupervised{Method::Lsh, Method::Sh, Method::Itq, Method::IsoH,
                                        Method::Dsh, Method::Sph, Method::Klsh};

}  // namespace

TEST_CASE("every unsupervised trainer is seed-deterministic and has K functions", "[unsupervised]") {
  const auto data = synthetic(60, 5, 1, 128);
  auto cfg = config_for(16, 7);
  cfg.klsh_anchors = 100;
  for (auto method : kUnsupervised) {
    DYNAMIC_SECTION(method_name(method)) {
      const auto a = train_method(method, data, cfg);
      const auto b = train_method(method, data, cfg);
      CHECK(a.code_length == 16);
      CHECK(a.input_dim == 128);
      CHECK(a.diagnostics.bit_balance.size() == 16);
      const auto ca = encode_all(a, data);
      CHECK(ca == encode_all(b, data));
      CHECK(ca.code_length() == 16);
      // Encoding is a pure function of the descriptor.
      CHECK(encode(a, data.descriptors[3]) == ca.descriptors[3]);
    }
  }
}

TEST_CASE("every unsupervised trainer rejects degenerate data", "[unsupervised]") {
  LabeledDataset same;
  std::mt19937_64 gen(2);
  const auto c = testing::random_code(gen, 64);
  for (int i = 0; i < 100; ++i) {
    same.descriptors.push_back(c);
    same.labels.push_back(static_cast<Label>(i / 2));
  }
  auto cfg = config_for(8);
  cfg.klsh_anchors = 20;
  cfg.klsh_subsample = 5;
  for (auto method : kUnsupervised) {
    DYNAMIC_SECTION(method_name(method)) {
      try {
        train_method(method, same, cfg);
        FAIL("expected a TrainingError");
      } catch (const TrainingError& e) {
        CHECK_THAT(std::string(e.what()), Catch::Matchers::StartsWith(std::string(method_name(method))));
      }
    }
  }
}

TEST_CASE("PCA-based trainers reject K above the input dimension", "[unsupervised]") {
  const auto data = synthetic(40, 5, 3, 32);
  for (auto method : {Method::Itq, Method::IsoH, Method::Sh}) {
    CHECK_THROWS_AS(train_method(method, data, config_for(33)), InvalidArgument);
  }
}

TEST_CASE("too few training records is an argument error", "[unsupervised]") {
  const auto data = synthetic(4, 2, 4, 64);
  CHECK_THROWS_AS(train_lsh(data, config_for(8)), InvalidArgument);
}

TEST_CASE("LSH: opposite inputs get complementary codes", "[unsupervised][lsh]") {
  const auto data = synthetic(40, 5, 5, 128);
  std::mt19937_64 gen(6);
  std::normal_distribution<double> dist;
  std::vector<double> x(128), neg(128);
  for (std::size_t i = 0; i < 128; ++i) {
    x[i] = dist(gen);
    neg[i] = -x[i];
  }
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto m = train_lsh(data, config_for(64, seed));
    CHECK(hamming(encode_real(m, x), encode_real(m, neg)) == 64);
  }
}

TEST_CASE("LSH: orthogonal inputs disagree on about half the bits", "[unsupervised][lsh][property]") {
  // Random hyperplanes split two vectors at angle theta with probability theta / pi.
  const auto data = synthetic(40, 5, 7, 64);
  std::vector<double> x(64, 0.0), y(64, 0.0);
  for (std::size_t i = 0; i < 32; ++i) x[i] = 1.0;
  for (std::size_t i = 0; i < 64; ++i) y[i] = i < 16 ? 1.0 : (i < 32 ? -1.0 : 0.0);
  y[40] = 0.0;
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto m = train_lsh(data, config_for(64, seed));
    total += hamming(encode_real(m, x), encode_real(m, y));
  }
  const double mean = total / 200.0;
  CHECK(std::abs(mean - 32.0) <= 0.15 * 32.0);
}

TEST_CASE("LSH weights are standard normal with zero bias", "[unsupervised][lsh]") {
  const auto data = synthetic(100, 5, 8, 512);
  const auto m = train_lsh(data, config_for(256, 3));
  const auto& f = std::get<LinearFunctions>(m.functions);
  CHECK(f.bias.cwiseAbs().maxCoeff() == 0.0);
  const double n = static_cast<double>(f.weights.size());
  const double mean = f.weights.sum() / n;
  const double var = f.weights.array().square().sum() / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("SH: one bit on uniform 1-D data splits at the midpoint", "[unsupervised][sh]") {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> along(-3.0, 7.0);
  std::normal_distribution<double> across(0.0, 0.01);
  Matrix raw(2000, 2);
  for (int i = 0; i < 2000; ++i) {
    raw(i, 0) = along(gen);
    raw(i, 1) = across(gen);
  }
  const auto c = mean_center(raw);
  const auto f = fit_spectral(c.data, 1);
  REQUIRE(f.modes.size() == 1);
  CHECK(f.modes[0].frequency == 1);

  HashModel m;
  m.method = Method::Sh;
  m.input_dim = 2;
  m.code_length = 1;
  m.preprocessing.mean = c.mean;
  m.functions = f;

  const double lo = raw.col(0).minCoeff(), hi = raw.col(0).maxCoeff();
  // Brute force along a fine grid: the bit must change exactly once, at the midpoint.
  const int steps = 10000;
  const double h = (hi - lo) / steps;
  int changes = 0;
  double where = 0.0;
  bool prev = false;
  for (int s = 0; s <= steps; ++s) {
    const double t = lo + s * h;
    const std::vector<double> x{t - c.mean(0), -c.mean(1)};
    const bool bit = encode_real(m, x).bit(0);
    if (s > 0 && bit != prev) {
      ++changes;
      where = t - h / 2;
    }
    prev = bit;
  }
  CHECK(changes == 1);
  CHECK(std::abs(where - 0.5 * (lo + hi)) <= 2 * h + 0.01);
}

TEST_CASE("SH: zero-extent directions are skipped and modes follow eigenvalue order", "[unsupervised][sh]") {
  std::mt19937_64 gen(10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix raw(500, 3);
  for (int i = 0; i < 500; ++i) {
    raw(i, 0) = 4.0 * u(gen);
    raw(i, 1) = 0.7 * u(gen);
    raw(i, 2) = 0.0;
  }
  const auto f = fit_spectral(mean_center(raw).data, 6);
  REQUIRE(f.modes.size() == 6);
  double prev = 0.0;
  for (const auto& mode : f.modes) {
    CHECK(mode.range > 0.5);  // never the flat third axis
    const double lambda = std::pow(mode.frequency * std::numbers::pi / mode.range, 2);
    CHECK(lambda >= prev - 1e-12);
    prev = lambda;
  }
  // Range 4 vs 0.7: frequencies 1..5 along the long axis come before the first on the short one.
  for (int i = 0; i < 5; ++i) CHECK(f.modes[static_cast<std::size_t>(i)].frequency == i + 1);
  CHECK(f.modes[5].frequency == 1);
  CHECK(f.modes[5].direction != f.modes[0].direction);

  CHECK_THROWS_AS(fit_spectral(Matrix::Zero(10, 3), 2), TrainingError);
}

TEST_CASE("ITQ: orthogonal rotation and non-increasing loss", "[unsupervised][itq][property]") {
  const auto data = synthetic(200, 5, 11, 512);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto m = train_itq(data, config_for(32, seed));
    const Matrix& r = m.diagnostics.rotation;
    REQUIRE(r.rows() == 32);
    CHECK(max_abs(r.transpose() * r - Matrix::Identity(32, 32)) < 1e-8);
    const auto& loss = m.diagnostics.loss_trace;
    REQUIRE(loss.size() == 50);
    for (std::size_t i = 1; i < loss.size(); ++i) CHECK(loss[i] <= loss[i - 1] * (1 + 1e-12) + 1e-9);
  }
}

TEST_CASE("ITQ: loss trace equals the quantization error of the rotation", "[unsupervised][itq]") {
  std::mt19937_64 gen(12);
  std::normal_distribution<double> dist;
  Matrix v(300, 6);
  for (int i = 0; i < 300; ++i) {
    for (int j = 0; j < 6; ++j) v(i, j) = dist(gen) * (j + 1);
  }
  Rng rng(1);
  const auto r = itq_rotation(v, 10, rng);
  const Matrix vr = v * r.rotation;
  Matrix b = vr.unaryExpr([](double x) { return x > 0 ? 1.0 : -1.0; });
  CHECK(r.loss.back() == Catch::Approx((b - vr).squaredNorm()).epsilon(1e-10));
}

TEST_CASE("ITQ: axis-aligned +-1 data reaches zero quantization loss", "[unsupervised][itq]") {
  // All 16 sign patterns in 4 dimensions: PCA is the identity and a signed
  // permutation rotation quantizes exactly.
  LabeledDataset cube;
  for (int v = 0; v < 16; ++v) {
    BinaryCode c(4);
    for (int i = 0; i < 4; ++i) c.set_bit(i, ((v >> i) & 1) != 0);
    cube.descriptors.push_back(c);
    cube.labels.push_back(static_cast<Label>(v));
  }
  auto cfg = config_for(4, 2);
  const auto m = train_itq(cube, cfg);
  CHECK(m.diagnostics.loss_trace.back() < 1e-9);
  // Codes are then a fixed relabelling of the input bits: all 16 stay distinct.
  const auto codes = encode_all(m, cube);
  std::set<std::string> distinct;
  for (const auto& c : codes.descriptors) distinct.insert(to_hex(c));
  CHECK(distinct.size() == 16);
}

TEST_CASE("IsoH: diag(3,1) equalizes to (2,2), matching a rotation-angle grid", "[unsupervised][isoh]") {
  Vector lambda(2);
  lambda << 3.0, 1.0;

  // Grid oracle: R(theta) = [[c, -s], [s, c]] gives diag(R^T L R) = (3c^2 + s^2, 3s^2 + c^2).
  double best_dev = 1e9, best_theta = 0.0;
  for (int s = 0; s <= 200000; ++s) {
    const double th = std::numbers::pi / 2 * s / 200000.0;
    const double c = std::cos(th), sn = std::sin(th);
    const double d0 = 3 * c * c + sn * sn, d1 = 3 * sn * sn + c * c;
    const double dev = std::max(std::abs(d0 - 2.0), std::abs(d1 - 2.0));
    if (dev < best_dev) best_dev = dev, best_theta = th;
  }
  CHECK(best_dev < 1e-4);
  CHECK(best_theta == Catch::Approx(std::numbers::pi / 4).margin(1e-4));

  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    const auto r = isotropic_rotation(lambda, 100, 1e-6, rng);
    const Matrix z = r.rotation.transpose() * lambda.asDiagonal() * r.rotation;
    CHECK(std::abs(z(0, 0) - 2.0) < 1e-6);
    CHECK(std::abs(z(1, 1) - 2.0) < 1e-6);
    CHECK(max_abs(r.rotation.transpose() * r.rotation - Matrix::Identity(2, 2)) < 1e-10);
    // The rotation angle is the grid's optimum up to the symmetries of the square.
    const double angle = std::atan2(std::abs(r.rotation(1, 0)), std::abs(r.rotation(0, 0)));
    CHECK(angle == Catch::Approx(best_theta).margin(1e-4));
  }
}

TEST_CASE("IsoH: an isotropic spectrum needs no rotation", "[unsupervised][isoh]") {
  Rng rng(1);
  const auto r = isotropic_rotation(Vector::Constant(5, 2.5), 100, 1e-5, rng);
  CHECK(r.converged);
  CHECK(r.max_deviation == 0.0);
  CHECK(max_abs(r.rotation - Matrix::Identity(5, 5)) == 0.0);
}

TEST_CASE("IsoH: projected variances are equal on random data", "[unsupervised][isoh][property]") {
  const auto data = synthetic(200, 5, 13, 512);
  for (int k : {8, 32}) {
    const auto m = train_isoh(data, config_for(k, 4));
    const Matrix p = projections(m, data);
    const Matrix centred = p.rowwise() - p.colwise().mean();
    const Vector var = centred.colwise().squaredNorm() / static_cast<double>(p.rows());
    const double mean = var.mean();
    CHECK((var.array() - mean).abs().maxCoeff() / mean < 1e-5);
    const Matrix& r = m.diagnostics.rotation;
    CHECK(max_abs(r.transpose() * r - Matrix::Identity(k, k)) < 1e-8);
  }
}

TEST_CASE("DSH: one bit separates two blobs", "[unsupervised][dsh]") {
  std::mt19937_64 gen(14);
  const auto a = testing::random_code(gen, 128), b = testing::random_code(gen, 128);
  LabeledDataset d;
  std::vector<int> blob;
  for (int i = 0; i < 300; ++i) {
    BinaryCode c = i % 2 == 0 ? a : b;
    for (int j = 0; j < 128; ++j) {
      if (gen() % 20 == 0) c.set_bit(j, !c.bit(j));
    }
    d.descriptors.push_back(c);
    d.labels.push_back(static_cast<Label>(i));
    blob.push_back(i % 2);
  }
  const auto m = train_dsh(d, config_for(1, 5));
  const auto codes = encode_all(m, d);
  int agree = 0;
  for (std::size_t i = 0; i < d.size(); ++i) agree += codes.descriptors[i].bit(0) == (blob[i] == 1);
  CHECK((agree == 300 || agree == 0));
}

TEST_CASE("DSH: every hyperplane keeps the minimum balance", "[unsupervised][dsh][property]") {
  const auto data = synthetic(100, 5, 15, 256);
  auto cfg = config_for(32, 6);
  const auto m = train_dsh(data, cfg);
  for (double b : bit_balance(encode_all(m, data))) {
    CHECK(b >= cfg.dsh_min_balance);
    CHECK(b <= 1.0 - cfg.dsh_min_balance);
  }
}

TEST_CASE("DSH: too few candidate hyperplanes is a training error", "[unsupervised][dsh]") {
  const auto data = synthetic(50, 4, 16, 64);
  auto cfg = config_for(8);
  cfg.dsh_groups = 2;
  CHECK_THROWS_AS(train_dsh(data, cfg), TrainingError);
}

TEST_CASE("SpH: a single sphere holds exactly half the points", "[unsupervised][sph]") {
  const auto data = synthetic(100, 4, 17, 256);  // 400 points
  const auto m = train_sph(data, config_for(1, 2));
  const auto& f = std::get<SphericalFunctions>(m.functions);
  const Matrix x = m.preprocessing.apply_all(data);
  std::vector<double> dist;
  for (Eigen::Index i = 0; i < x.rows(); ++i) dist.push_back((x.row(i) - f.pivots.row(0)).norm());
  std::sort(dist.begin(), dist.end());
  // Median of an even count: midpoint of the two middle distances.
  CHECK(f.radii(0) == Catch::Approx(0.5 * (dist[199] + dist[200])));
  if (dist[199] < dist[200]) CHECK(bit_balance(encode_all(m, data))[0] == 0.5);
}

TEST_CASE("SpH: every sphere is balanced on random data", "[unsupervised][sph][property]") {
  const auto data = synthetic(250, 4, 18, 512);
  auto cfg = config_for(16, 3);
  const auto m = train_sph(data, cfg);
  const auto& f = std::get<SphericalFunctions>(m.functions);
  const Matrix x = m.preprocessing.apply_all(data);
  for (int k = 0; k < 16; ++k) {
    int inside = 0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      inside += (x.row(i) - f.pivots.row(k)).squaredNorm() <= f.radii(k) * f.radii(k) ? 1 : 0;
    }
    CHECK(std::abs(inside / static_cast<double>(x.rows()) - 0.5) <= cfg.sph_balance_tolerance);
  }
  if (!m.diagnostics.converged) CHECK_FALSE(m.diagnostics.warnings.empty());
}

TEST_CASE("KLSH: a single anchor cannot be inverted", "[unsupervised][klsh]") {
  const auto data = synthetic(40, 5, 19, 64);
  auto cfg = config_for(8);
  cfg.klsh_anchors = 1;
  cfg.klsh_subsample = 1;
  CHECK_THROWS_AS(train_klsh(data, cfg), TrainingError);
  cfg.klsh_anchors = 500;
  CHECK_THROWS_AS(train_klsh(data, cfg), InvalidArgument);
}

TEST_CASE("KLSH: the centred kernel matrix is PSD", "[unsupervised][klsh][property]") {
  std::mt19937_64 gen(20);
  std::normal_distribution<double> dist;
  for (int t = 0; t < 10; ++t) {
    Matrix anchors(40, 16);
    for (int i = 0; i < 40; ++i) {
      for (int j = 0; j < 16; ++j) anchors(i, j) = dist(gen);
    }
    const KernelSpec kernel{KernelSpec::Kind::Gaussian, median_pairwise_distance(anchors)};
    const Matrix k = centered_kernel_matrix(anchors, kernel);
    CHECK(max_abs(k - k.transpose()) < 1e-12);
    // Rows of H K H sum to zero.
    CHECK(k.rowwise().sum().cwiseAbs().maxCoeff() < 1e-10);
    Eigen::SelfAdjointEigenSolver<Matrix> es(k);
    CHECK(es.eigenvalues().minCoeff() >= -1e-9);
  }
}

TEST_CASE("KLSH: median heuristic bandwidth", "[unsupervised][klsh]") {
  Matrix pts(3, 1);
  pts << 0.0, 1.0, 3.0;  // distances 1, 2, 3
  CHECK(median_pairwise_distance(pts) == Catch::Approx(2.0));

  const auto data = synthetic(40, 5, 21, 64);
  auto cfg = config_for(8, 1);
  cfg.klsh_anchors = 50;
  cfg.klsh_subsample = 10;
  const auto m = train_klsh(data, cfg);
  const auto& f = std::get<KernelFunctions>(m.functions);
  CHECK(f.anchors.rows() == 50);
  CHECK(f.kernel.bandwidth == Catch::Approx(median_pairwise_distance(f.anchors)));
}
