#pragma once

#include "modbal/modality.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace modbal {

struct MultiOmicsDataset {
  std::vector<ModalityMatrix> modalities;
  Labels labels;
  std::vector<std::string> sample_ids;
  std::vector<std::string> class_names;
  std::vector<std::string> warnings;

  int num_classes() const { return static_cast<int>(class_names.size()); }
  Eigen::Index samples() const { return static_cast<Eigen::Index>(labels.size()); }
  /// Index of the modality called `name`; throws DataError when absent.
  std::size_t modality_index(const std::string& name) const;
  /// All modalities share N, every class is present.
  void validate() const;
};

struct ModalitySource {
  std::string name;
  std::filesystem::path path;
};

/// Reads per-modality CSVs (header row, first column sample ID) and a labels
/// CSV (sample_id,label) where a label is a class name or a class index.
/// Samples are aligned on the ID intersection in sorted-ID order.
MultiOmicsDataset load_csv_dataset(const std::vector<ModalitySource>& modalities,
                                   const std::filesystem::path& labels_path,
                                   const std::vector<std::string>& class_names);

void write_modality_csv(const std::filesystem::path& path, const ModalityMatrix& m,
                        const std::vector<std::string>& sample_ids);
void write_labels_csv(const std::filesystem::path& path, const MultiOmicsDataset& ds);

struct SyntheticModalitySpec {
  std::string name;
  int dim = 100;
  double snr = 1.0;       // scale of the class signal relative to unit noise
  double margin = 1.0;    // scale of the class centers in latent space
  double sharing = 0.5;   // weight on the cross-modality shared latent, in [0, 1]
};

struct SyntheticSpec {
  std::vector<SyntheticModalitySpec> modalities;
  std::vector<int> class_counts{112, 53, 248, 98};
  std::vector<std::string> class_names{"Basal-like", "Her2-enriched", "Luminal A", "Luminal B"};
  int latent_dim = 16;
  std::uint64_t seed = 0;

  /// Full-size cohort shape: mRNA 19580, CNV 19273 and RPPA 223 features.
  static SyntheticSpec brca_shaped();
  /// Same three modalities with a chosen feature count each.
  static SyntheticSpec strong_weak_low(int dim, std::uint64_t seed);
  void validate() const;
};

/// Class centers are drawn once per latent space; each modality mixes a
/// shared and a private latent, maps it through a random linear map and adds
/// unit Gaussian noise. Deterministic per seed.
MultiOmicsDataset generate_synthetic(const SyntheticSpec& spec);

/// Per-class shuffle; val and test get floor(fraction * n_c) (at least one)
/// samples of each class, train the remainder.
SplitMasks stratified_split(const Labels& labels, const std::array<double, 3>& fractions, Rng& rng);

}  // namespace modbal
