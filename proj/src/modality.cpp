#include "modbal/modality.hpp"

namespace modbal {

ModalityMatrix concat_modalities(const std::vector<const ModalityMatrix*>& parts) {
  if (parts.empty()) throw ContractError("concat_modalities: nothing to concatenate");
  const auto n = parts.front()->samples();
  Eigen::Index width = 0;
  ModalityMatrix out;
  for (const auto* p : parts) {
    if (p->samples() != n)
      throw DimensionError("concat_modalities: " + p->name + " has " + std::to_string(p->samples()) +
                           " samples, expected " + std::to_string(n));
    width += p->features();
    out.name += (out.name.empty() ? "" : "+") + p->name;
    out.feature_names.insert(out.feature_names.end(), p->feature_names.begin(), p->feature_names.end());
  }
  out.values.resize(n, width);
  Eigen::Index offset = 0;
  for (const auto* p : parts) {
    out.values.middleCols(offset, p->features()) = p->values;
    offset += p->features();
  }
  return out;
}

}  // namespace modbal
