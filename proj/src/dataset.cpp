#include "ncrl/dataset.hpp"

#include <stdexcept>

namespace ncrl {

std::size_t Dataset::num_classes() const {
  return instances.empty() ? 0 : instances.front().labels.num_classes();
}

std::size_t Dataset::feature_dim() const {
  return instances.empty() ? 0 : instances.front().features.size();
}

void Dataset::validate() const {
  if (instances.empty()) throw std::invalid_argument("dataset has no instances");
  const std::size_t k = num_classes();
  const std::size_t d = feature_dim();
  if (k == 0) throw std::invalid_argument("dataset needs at least one pre-defined label");
  for (std::size_t n = 0; n < instances.size(); ++n) {
    if (instances[n].features.size() != d) {
      throw std::invalid_argument("instance " + std::to_string(n) + " has " +
                                  std::to_string(instances[n].features.size()) +
                                  " features, expected " + std::to_string(d));
    }
    if (instances[n].labels.num_classes() != k) {
      throw std::invalid_argument("instance " + std::to_string(n) + " has " +
                                  std::to_string(instances[n].labels.num_classes()) +
                                  " labels, expected " + std::to_string(k));
    }
  }
}

Dataset Dataset::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > instances.size()) {
    throw std::out_of_range("dataset slice out of range");
  }
  Dataset out;
  out.instances.assign(instances.begin() + static_cast<std::ptrdiff_t>(begin),
                       instances.begin() + static_cast<std::ptrdiff_t>(end));
  out.provenance = provenance;
  return out;
}

}  // namespace ncrl
