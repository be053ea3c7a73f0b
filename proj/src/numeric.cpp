#include "hashlab/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hashlab/errors.hpp"

namespace hashlab {

Centered mean_center(const Matrix& data) {
  if (data.rows() < 1) throw InvalidArgument("mean_center: no rows");
  Centered out;
  out.mean = data.colwise().mean().transpose();
  out.data = data.rowwise() - out.mean.transpose();
  return out;
}

Matrix covariance(const Matrix& centered) {
  Matrix c = Matrix::Zero(centered.cols(), centered.cols());
  c.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose());
  c = c.selfadjointView<Eigen::Lower>();
  return c / static_cast<double>(centered.rows());
}

void canonicalize_signs(Matrix& columns) {
  for (Eigen::Index j = 0; j < columns.cols(); ++j) {
    for (Eigen::Index i = 0; i < columns.rows(); ++i) {
      const double x = columns(i, j);
      if (std::abs(x) > 1e-12) {
        if (x < 0) columns.col(j) *= -1.0;
        break;
      }
    }
  }
}

SymEig sym_eig(const Matrix& a) {
  if (a.rows() != a.cols() || a.rows() < 1) throw InvalidArgument("sym_eig: matrix must be square");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
    throw InvalidArgument("sym_eig: matrix is not symmetric");
  }
  SymEig out;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a);
  if (solver.info() == Eigen::Success) {
    out.values = solver.eigenvalues().reverse();
    out.vectors = solver.eigenvectors().rowwise().reverse();
  } else {
    // The tridiagonal QR sweep occasionally stalls on large zero clusters. Shifting
    // by the Frobenius norm makes the matrix PSD, where the one-sided Jacobi SVD
    // gives the eigenpairs directly.
    const double sigma = a.norm();
    Eigen::JacobiSVD<Matrix> svd(a + sigma * Matrix::Identity(a.rows(), a.cols()), Eigen::ComputeFullV);
    if (!svd.singularValues().allFinite()) throw TrainingError("sym_eig: eigensolver did not converge");
    out.values = svd.singularValues().array() - sigma;
    out.vectors = svd.matrixV();
  }
  canonicalize_signs(out.vectors);
  return out;
}

Svd svd(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> solver(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Svd out;
  out.u = solver.matrixU();
  out.singular = solver.singularValues();
  out.v = solver.matrixV();
  // Flip each (u_i, v_i) pair together so the product is unchanged.
  for (Eigen::Index j = 0; j < out.u.cols(); ++j) {
    for (Eigen::Index i = 0; i < out.u.rows(); ++i) {
      const double x = out.u(i, j);
      if (std::abs(x) > 1e-12) {
        if (x < 0) {
          out.u.col(j) *= -1.0;
          out.v.col(j) *= -1.0;
        }
        break;
      }
    }
  }
  return out;
}

Matrix random_orthogonal(int n, Rng& rng) {
  Matrix g(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) g(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  // Make the distribution Haar: scale columns by the sign of R's diagonal.
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j) {
    if (r(j, j) < 0) q.col(j) *= -1.0;
  }
  return q;
}

Matrix squared_distances(const Matrix& a, const Matrix& b) {
  const Vector an = a.rowwise().squaredNorm();
  const Vector bn = b.rowwise().squaredNorm();
  Matrix d = -2.0 * (a * b.transpose());
  d.colwise() += an;
  d.rowwise() += bn.transpose();
  return d.cwiseMax(0.0);
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

KMeansResult kmeans(const Matrix& points, int k, int max_iters, Rng& rng) {
  const Eigen::Index n = points.rows();
  if (k < 1 || k > n) {
    throw InvalidArgument("kmeans: k=" + std::to_string(k) + " must be in [1, " + std::to_string(n) + "]");
  }
  if (max_iters < 1) throw InvalidArgument("kmeans: max_iters must be >= 1");

  KMeansResult res;
  res.centroids.resize(k, points.cols());
  const auto init = rng.sample_without_replacement(static_cast<std::size_t>(n), static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) res.centroids.row(c) = points.row(static_cast<Eigen::Index>(init[static_cast<std::size_t>(c)]));

  res.assignment.assign(static_cast<std::size_t>(n), -1);
  std::vector<double> dist(static_cast<std::size_t>(n));
  for (int it = 0; it < max_iters; ++it) {
    const Matrix d = squared_distances(points, res.centroids);
    bool changed = false;
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best;
      d.row(i).minCoeff(&best);
      const auto ui = static_cast<std::size_t>(i);
      if (res.assignment[ui] != static_cast<int>(best)) changed = true;
      res.assignment[ui] = static_cast<int>(best);
      ++counts[static_cast<std::size_t>(best)];
      dist[ui] = (points.row(i) - res.centroids.row(best)).squaredNorm();
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] != 0) continue;
      // Farthest point whose cluster keeps at least one member; one exists since k <= n.
      std::size_t far = 0;
      double far_dist = -1.0;
      for (std::size_t i = 0; i < dist.size(); ++i) {
        if (counts[static_cast<std::size_t>(res.assignment[i])] > 1 && dist[i] > far_dist) {
          far = i;
          far_dist = dist[i];
        }
      }
      --counts[static_cast<std::size_t>(res.assignment[far])];
      res.assignment[far] = c;
      counts[static_cast<std::size_t>(c)] = 1;
      res.centroids.row(c) = points.row(static_cast<Eigen::Index>(far));
      dist[far] = 0.0;
      changed = true;
    }
    double wcss = 0.0;
    for (double x : dist) wcss += x;
    res.wcss.push_back(wcss);
    res.iterations = it + 1;

    Matrix sums = Matrix::Zero(k, points.cols());
    for (Eigen::Index i = 0; i < n; ++i) sums.row(res.assignment[static_cast<std::size_t>(i)]) += points.row(i);
    for (int c = 0; c < k; ++c) {
      res.centroids.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
    }
    if (!changed) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace hashlab
