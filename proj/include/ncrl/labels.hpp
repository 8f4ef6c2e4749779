#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ncrl {

/// Score vector f_0..f_K. Index 0 is the none class.
using Scores = std::vector<double>;

/// Binary label assignment over the none class (index 0) and K pre-defined
/// classes (indices 1..K). The none flag is always derived: y_0 = 1 exactly
/// when no pre-defined label is positive.
class LabelVector {
 public:
  LabelVector() = default;

  /// All-negative (none-class) assignment over K pre-defined classes.
  explicit LabelVector(std::size_t num_classes);

  /// Flags for labels 1..K, in order.
  static LabelVector from_flags(std::span<const int> flags);
  static LabelVector from_flags(std::initializer_list<int> flags) {
    return from_flags(std::span<const int>(flags.begin(), flags.size()));
  }

  /// Full flags y_0..y_K. Throws if y_0 disagrees with labels 1..K.
  static LabelVector from_full(std::span<const int> flags);

  /// Positive label indices, each in 1..K.
  static LabelVector from_positives(std::size_t num_classes,
                                    std::span<const std::size_t> positives);

  std::size_t num_classes() const { return flags_.empty() ? 0 : flags_.size() - 1; }
  std::size_t size() const { return flags_.size(); }

  /// y_i for i in 0..K.
  bool operator[](std::size_t i) const { return flags_[i] != 0; }
  bool is_none() const { return !flags_.empty() && flags_[0] != 0; }

  /// Sets label i (1..K) and re-derives y_0.
  void set(std::size_t i, bool positive);

  std::vector<std::size_t> positives() const;
  std::size_t num_positives() const;

  friend bool operator==(const LabelVector&, const LabelVector&) = default;

 private:
  void derive_none();

  std::vector<std::uint8_t> flags_;
};

/// Throws std::invalid_argument unless the score vector has K+1 entries.
inline void require_matching(const LabelVector& y, std::span<const double> f) {
  if (y.size() != f.size()) {
    throw std::invalid_argument("label vector has " + std::to_string(y.size()) +
                                " entries but score vector has " +
                                std::to_string(f.size()));
  }
  if (y.num_classes() == 0) {
    throw std::invalid_argument("label vector needs at least one pre-defined class");
  }
}

}  // namespace ncrl
