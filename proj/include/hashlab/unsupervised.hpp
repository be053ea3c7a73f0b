#pragma once

#include <string_view>
#include <vector>

#include "hashlab/dataset.hpp"
#include "hashlab/hash_model.hpp"
#include "hashlab/numeric.hpp"
#include "hashlab/train_config.hpp"

// Unsupervised trainers. Each one maps descriptors to real vectors with the
// configured bit mapping, centres them, fits its hash functions and returns a
// model of config.code_length bits whose diagnostics carry the training-set bit
// balance. Results depend only on (data, config).

namespace hashlab {

/// Random hyperplanes through the data mean (data-independent reference).
HashModel train_lsh(const LabeledDataset& data, const TrainConfig& config);

/// Spectral hashing: analytic 1-D Laplacian eigenfunctions along principal directions.
HashModel train_sh(const LabeledDataset& data, const TrainConfig& config);

/// Iterative quantization: PCA then a rotation minimising ||B - VR||².
HashModel train_itq(const LabeledDataset& data, const TrainConfig& config);

/// Isotropic hashing: PCA then a rotation giving every projection the same variance.
HashModel train_isoh(const LabeledDataset& data, const TrainConfig& config);

/// Density sensitive hashing: bisectors of adjacent k-means centroids ranked by split entropy.
HashModel train_dsh(const LabeledDataset& data, const TrainConfig& config);

/// Spherical hashing: K balanced hyperspheres with pairwise overlap pushed towards n/4.
HashModel train_sph(const LabeledDataset& data, const TrainConfig& config);

/// Kernelized LSH with a Gaussian kernel over random anchor points.
HashModel train_klsh(const LabeledDataset& data, const TrainConfig& config);

// Building blocks, exposed for tests and reuse.

/// Preprocessed training matrix plus the preprocessing that produced it.
struct PreparedData {
  Preprocessing preprocessing;
  Matrix x;  // one row per record
};

/// Applies mapping + centring; checks there are more than `min_rows` records.
PreparedData prepare(const LabeledDataset& data, const TrainConfig& config, std::string_view method,
                     int min_rows);

struct Pca {
  Matrix components;  // D × k, orthonormal columns
  Vector variances;   // k, descending
};

/// Top-k principal directions of centred data. Throws TrainingError on zero variance.
Pca pca(const Matrix& centered, int k, std::string_view method);

/// Spectral-hashing eigenfunctions fitted on centred real data.
SpectralFunctions fit_spectral(const Matrix& centered, int code_length);

struct ItqResult {
  Matrix rotation;
  std::vector<double> loss;  // ||B - VR||² after each iteration
};

ItqResult itq_rotation(const Matrix& projected, int iterations, Rng& rng);

struct IsotropicResult {
  Matrix rotation;             // R with diag(Rᵀ Λ R) = mean(Λ)
  int iterations = 0;          // lift-and-projection iterations used
  bool converged = false;      // reached the tolerance by lift-and-projection alone
  double max_deviation = 0.0;  // max |diag - target| / target after finishing
};

IsotropicResult isotropic_rotation(const Vector& variances, int max_iterations, double tolerance, Rng& rng);

/// Centred Gram matrix H K H of the anchors.
Matrix centered_kernel_matrix(const Matrix& anchors, const KernelSpec& kernel);

/// Median pairwise Euclidean distance between rows.
double median_pairwise_distance(const Matrix& rows);

/// Encodes `data` with `model` and stores the per-bit fraction of ones.
void record_bit_balance(HashModel& model, const LabeledDataset& data);

}  // namespace hashlab
