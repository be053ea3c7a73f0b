#include <algorithm>
#include <cmath>
#include <string>

#include "hashlab/errors.hpp"
#include "hashlab/unsupervised.hpp"

namespace hashlab {

namespace {

Matrix sign_matrix(const Matrix& m) {
  return m.unaryExpr([](double v) { return v > 0.0 ? 1.0 : -1.0; });
}

HashModel projection_model(Method method, PreparedData prep, const Matrix& projection) {
  HashModel m;
  m.method = method;
  m.input_dim = static_cast<int>(prep.x.cols());
  m.code_length = static_cast<int>(projection.cols());
  m.preprocessing = std::move(prep.preprocessing);
  LinearFunctions f;
  f.weights = projection.transpose();
  f.bias = Vector::Zero(projection.cols());
  m.functions = std::move(f);
  return m;
}

double max_relative_deviation(const Matrix& z, double target) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) worst = std::max(worst, std::abs(z(i, i) - target) / target);
  return worst;
}

// Rotates in the (i, j) plane so that z(i, i) becomes exactly `target`; needs
// z(i, i) and z(j, j) on opposite sides of it. Updates z and r in place.
void equalize_pair(Matrix& z, Matrix& r, Eigen::Index i, Eigen::Index j, double target) {
  const double p = z(i, i), q = z(i, j), s = z(j, j);
  const double a = 0.5 * (p - s);
  const double b = -q;
  const double rho = std::hypot(a, b);
  if (rho == 0.0) return;
  const double t = std::clamp((target - 0.5 * (p + s)) / rho, -1.0, 1.0);
  const double theta = 0.5 * (std::atan2(b, a) + std::acos(t));
  const double c = std::cos(theta), sn = std::sin(theta);

  // z <- Gᵀ z G, r <- r G with G = [[c, sn], [-sn, c]] in rows/cols (i, j).
  for (Eigen::Index k = 0; k < z.rows(); ++k) {
    const double zi = z(k, i), zj = z(k, j);
    z(k, i) = c * zi - sn * zj;
    z(k, j) = sn * zi + c * zj;
  }
  for (Eigen::Index k = 0; k < z.cols(); ++k) {
    const double zi = z(i, k), zj = z(j, k);
    z(i, k) = c * zi - sn * zj;
    z(j, k) = sn * zi + c * zj;
  }
  for (Eigen::Index k = 0; k < r.rows(); ++k) {
    const double ri = r(k, i), rj = r(k, j);
    r(k, i) = c * ri - sn * rj;
    r(k, j) = sn * ri + c * rj;
  }
}

}  // namespace

ItqResult itq_rotation(const Matrix& projected, int iterations, Rng& rng) {
  const auto k = static_cast<int>(projected.cols());
  ItqResult out;
  out.rotation = random_orthogonal(k, rng);
  for (int it = 0; it < iterations; ++it) {
    const Matrix b = sign_matrix(projected * out.rotation);
    const Svd s = svd(b.transpose() * projected);
    out.rotation = s.v * s.u.transpose();
    const Matrix vr = projected * out.rotation;
    out.loss.push_back((sign_matrix(vr) - vr).squaredNorm());
  }
  return out;
}

HashModel train_itq(const LabeledDataset& data, const TrainConfig& config) {
  auto prep = prepare(data, config, "itq", config.code_length + 1);
  const Pca p = pca(prep.x, config.code_length, "itq");
  Rng rng(config.seed);
  const int iters = config.iterations > 0 ? config.iterations : kDefaultItqIterations;
  ItqResult r = itq_rotation(prep.x * p.components, iters, rng);

  HashModel m = projection_model(Method::Itq, std::move(prep), p.components * r.rotation);
  m.diagnostics.iterations = iters;
  m.diagnostics.converged = true;
  m.diagnostics.loss_trace = std::move(r.loss);
  m.diagnostics.rotation = std::move(r.rotation);
  m.validate();
  record_bit_balance(m, data);
  return m;
}

IsotropicResult isotropic_rotation(const Vector& variances, int max_iterations, double tolerance, Rng& rng) {
  const auto k = variances.size();
  const double target = variances.mean();
  if (!(target > 0.0)) throw TrainingError("isoh: projected variances are all zero");

  Vector lambda = variances;
  std::sort(lambda.data(), lambda.data() + k, std::greater<>());
  const Matrix big_lambda = lambda.asDiagonal();

  IsotropicResult out;
  out.rotation = Matrix::Identity(k, k);
  Matrix z = variances.asDiagonal();
  if (max_relative_deviation(z, target) <= tolerance) {
    out.converged = true;
    return out;
  }

  // Lift and projection between {diag = target} and {Q Λ Qᵀ}, from a random start.
  Matrix r = random_orthogonal(static_cast<int>(k), rng);
  z = r.transpose() * big_lambda * r;
  for (int it = 0; it < max_iterations; ++it) {
    if (max_relative_deviation(z, target) <= tolerance) {
      out.converged = true;
      break;
    }
    Matrix t = z;
    t.diagonal().setConstant(target);
    const SymEig e = sym_eig(0.5 * (t + t.transpose()));
    r = e.vectors.transpose();
    z = e.vectors * big_lambda * e.vectors.transpose();
    out.iterations = it + 1;
  }
  if (!out.converged && max_relative_deviation(z, target) <= tolerance) out.converged = true;

  // `r` maps the sorted spectrum; reorder its rows so it applies to `variances` as given.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return variances[a] > variances[b]; });
  Matrix rotation(k, k);
  for (Eigen::Index i = 0; i < k; ++i) rotation.row(order[static_cast<std::size_t>(i)]) = r.row(i);

  // Exact finish: each plane rotation pins one more diagonal entry to the target. After
  // a converged run this only polishes away the residual tolerance.
  z = rotation.transpose() * variances.asDiagonal() * rotation;
  {
    for (Eigen::Index step = 0; step < k; ++step) {
      Eigen::Index hi = 0, lo = 0;
      for (Eigen::Index i = 1; i < k; ++i) {
        if (z(i, i) > z(hi, hi)) hi = i;
        if (z(i, i) < z(lo, lo)) lo = i;
      }
      if (z(hi, hi) - target <= 0.0 || target - z(lo, lo) <= 0.0) break;
      if (z(hi, hi) - target >= target - z(lo, lo)) {
        equalize_pair(z, rotation, lo, hi, target);
      } else {
        equalize_pair(z, rotation, hi, lo, target);
      }
    }
    z = rotation.transpose() * variances.asDiagonal() * rotation;
  }
  out.rotation = std::move(rotation);
  out.max_deviation = max_relative_deviation(z, target);
  return out;
}

HashModel train_isoh(const LabeledDataset& data, const TrainConfig& config) {
  auto prep = prepare(data, config, "isoh", config.code_length + 1);
  const Pca p = pca(prep.x, config.code_length, "isoh");
  Rng rng(config.seed);
  const int iters = config.iterations > 0 ? config.iterations : kDefaultIsoHIterations;
  IsotropicResult r = isotropic_rotation(p.variances, iters, config.isotropy_tolerance, rng);

  HashModel m = projection_model(Method::IsoH, std::move(prep), p.components * r.rotation);
  m.diagnostics.iterations = r.iterations;
  m.diagnostics.converged = r.converged;
  if (!r.converged) {
    m.diagnostics.warnings.push_back("isoh: lift-and-projection stopped after " + std::to_string(r.iterations) +
                                     " iterations; finished with plane rotations (max deviation " +
                                     std::to_string(r.max_deviation) + ")");
  }
  if (r.max_deviation > config.isotropy_tolerance) {
    m.diagnostics.warnings.push_back("isoh: projected variances still differ by " + std::to_string(r.max_deviation));
  }
  m.diagnostics.rotation = std::move(r.rotation);
  m.validate();
  record_bit_balance(m, data);
  return m;
}

}  // namespace hashlab
