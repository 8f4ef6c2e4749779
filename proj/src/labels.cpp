#include "ncrl/labels.hpp"

#include <string>

namespace ncrl {

LabelVector::LabelVector(std::size_t num_classes) : flags_(num_classes + 1, 0) {
  flags_[0] = 1;
}

LabelVector LabelVector::from_flags(std::span<const int> flags) {
  LabelVector y(flags.size());
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (flags[i] != 0 && flags[i] != 1) {
      throw std::invalid_argument("label flag at index " + std::to_string(i + 1) +
                                  " is not 0 or 1");
    }
    y.flags_[i + 1] = static_cast<std::uint8_t>(flags[i]);
  }
  y.derive_none();
  return y;
}

LabelVector LabelVector::from_full(std::span<const int> flags) {
  if (flags.size() < 2) {
    throw std::invalid_argument("full label vector needs y_0 and at least one class");
  }
  LabelVector y = from_flags(flags.subspan(1));
  if (flags[0] != static_cast<int>(y.flags_[0])) {
    throw std::invalid_argument("none flag y_0=" + std::to_string(flags[0]) +
                                " is inconsistent with the pre-defined labels");
  }
  return y;
}

LabelVector LabelVector::from_positives(std::size_t num_classes,
                                        std::span<const std::size_t> positives) {
  LabelVector y(num_classes);
  for (std::size_t p : positives) {
    if (p < 1 || p > num_classes) {
      throw std::invalid_argument("label index " + std::to_string(p) + " outside 1.." +
                                  std::to_string(num_classes));
    }
    if (y.flags_[p] != 0) {
      throw std::invalid_argument("duplicate label index " + std::to_string(p));
    }
    y.flags_[p] = 1;
  }
  y.derive_none();
  return y;
}

void LabelVector::set(std::size_t i, bool positive) {
  if (i < 1 || i > num_classes()) {
    throw std::out_of_range("label index " + std::to_string(i) + " outside 1.." +
                            std::to_string(num_classes()));
  }
  flags_[i] = positive ? 1 : 0;
  derive_none();
}

std::vector<std::size_t> LabelVector::positives() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 1; i < flags_.size(); ++i) {
    if (flags_[i] != 0) out.push_back(i);
  }
  return out;
}

std::size_t LabelVector::num_positives() const {
  std::size_t n = 0;
  for (std::size_t i = 1; i < flags_.size(); ++i) n += flags_[i];
  return n;
}

void LabelVector::derive_none() {
  flags_[0] = 1;
  for (std::size_t i = 1; i < flags_.size(); ++i) {
    if (flags_[i] != 0) {
      flags_[0] = 0;
      return;
    }
  }
}

}  // namespace ncrl
