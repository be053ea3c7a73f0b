#pragma once

#include <vector>

#include <Eigen/Dense>

#include "hashlab/rng.hpp"

namespace hashlab {

/// Rows are samples, columns are dimensions.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Centered {
  Matrix data;
  Vector mean;
};

Centered mean_center(const Matrix& data);

/// XᵀX / rows for already-centred data.
Matrix covariance(const Matrix& centered);

/// Eigenpairs of a symmetric matrix. Values descending; vectors are the columns.
struct SymEig {
  Vector values;
  Matrix vectors;
};

/// Throws InvalidArgument if `a` is not square or not symmetric within 1e-9.
/// Each eigenvector is sign-canonicalized (first nonzero component positive).
SymEig sym_eig(const Matrix& a);

/// A = U · diag(singular) · Vᵀ, thin factors, singular values descending.
struct Svd {
  Matrix u;
  Vector singular;
  Matrix v;
};

Svd svd(const Matrix& a);

/// Flips each column so its first component with |x| > 1e-12 is positive.
void canonicalize_signs(Matrix& columns);

/// Uniformly random orthogonal n×n matrix (QR of a Gaussian matrix).
Matrix random_orthogonal(int n, Rng& rng);

/// ‖a_i − b_j‖² for every row pair, via the GEMM expansion (clamped at 0).
Matrix squared_distances(const Matrix& a, const Matrix& b);

struct KMeansResult {
  Matrix centroids;             // k × dims
  std::vector<int> assignment;  // per point
  std::vector<double> wcss;     // within-cluster sum of squares after each assignment step
  int iterations = 0;
  bool converged = false;
};

/**
 * Lloyd's algorithm from k distinct randomly chosen points. A cluster that ends
 * up empty is re-seeded with the point farthest from its current centroid.
 * Throws InvalidArgument if k is not in [1, rows] or max_iters < 1.
 */
KMeansResult kmeans(const Matrix& points, int k, int max_iters, Rng& rng);

bool all_finite(const Matrix& m);

}  // namespace hashlab
