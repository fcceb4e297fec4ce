#pragma once

#include "modbal/core.hpp"

#include <string>
#include <vector>

namespace modbal {

/// One data source: an N x d feature matrix plus identity metadata.
struct ModalityMatrix {
  std::string name;
  Matrix values;
  std::vector<std::string> feature_names;  // may be empty

  Eigen::Index samples() const { return values.rows(); }
  Eigen::Index features() const { return values.cols(); }
};

/// Disjoint, covering train/validation/test assignment over N samples.
struct SplitMasks {
  std::vector<bool> train;
  std::vector<bool> val;
  std::vector<bool> test;

  Rows train_rows() const { return mask_rows(train); }
  Rows val_rows() const { return mask_rows(val); }
  Rows test_rows() const { return mask_rows(test); }
  std::size_t size() const { return train.size(); }
};

/// Concatenates the features of several modalities column-wise.
ModalityMatrix concat_modalities(const std::vector<const ModalityMatrix*>& parts);

}  // namespace modbal
