#pragma once

// Per-modality dimensionality reduction fit on training samples only.

#include "modbal/modality.hpp"

#include <string>
#include <vector>

namespace modbal {

enum class ReductionMethod { autoencoder, pca };
std::string to_string(ReductionMethod m);
ReductionMethod parse_reduction_method(const std::string& s);

struct AutoencoderConfig {
  int epochs = 500;
  /// Step size relative to the largest eigenvalue of the training covariance.
  double relative_learning_rate = 0.5;
  double momentum = 0.9;
};

struct ReductionConfig {
  ReductionMethod method = ReductionMethod::pca;
  int target_dim = 100;
  AutoencoderConfig autoencoder;
};

struct Reduction {
  ModalityMatrix reduced;
  /// Mean squared reconstruction error per training sample entry.
  double train_reconstruction_error = 0.0;
  std::vector<std::string> warnings;
};

/// Linear reducers share one contract: center on the training mean, learn a
/// d x target_dim encoder on training rows, encode every sample.
Reduction reduce_features(const ModalityMatrix& x, const std::vector<bool>& train_mask, const ReductionConfig& config,
                          Rng& rng);

/// Columns z-scored with training-row statistics; constant columns are only centered.
ModalityMatrix standardize(const ModalityMatrix& x, const std::vector<bool>& train_mask);

}  // namespace modbal
