#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ncrl/labels.hpp"

namespace ncrl {

/// Knobs for the synthetic generator.
///
/// Label i is positive when the projection of x onto a hidden unit direction
/// exceeds a threshold. per_label_bias holds those thresholds in standard
/// deviations of the projection (0 means a 50% positive rate, +inf means the
/// label never fires). When per_label_bias is empty a uniform bias is derived
/// from none_fraction_target assuming independent labels.
struct SyntheticConfig {
  std::size_t num_labels = 10;
  std::size_t feature_dim = 50;
  std::size_t num_instances = 1000;
  std::optional<double> none_fraction_target;
  std::vector<double> per_label_bias;
  /// Instances whose projection lies within this many standard deviations of
  /// any label threshold are redrawn, leaving a gap around every boundary.
  double boundary_margin = 0.0;
  double noise_false_negative_rate = 0.0;
  double noise_symmetric_rate = 0.0;
  std::uint64_t seed = 0;

  friend bool operator==(const SyntheticConfig&, const SyntheticConfig&) = default;
};

struct Instance {
  std::vector<double> features;
  LabelVector labels;

  friend bool operator==(const Instance&, const Instance&) = default;
};

/// Either the generating config or a free-form external source tag.
using Provenance = std::variant<SyntheticConfig, std::string>;

struct Dataset {
  std::vector<Instance> instances;
  Provenance provenance = std::string("unknown");

  std::size_t size() const { return instances.size(); }
  std::size_t num_classes() const;
  std::size_t feature_dim() const;

  /// Throws unless nonempty with uniform feature and label dimensions.
  void validate() const;

  /// Instances [begin, end) sharing this dataset's provenance.
  Dataset slice(std::size_t begin, std::size_t end) const;

  /// Compares instances only; provenance is not part of the wire format.
  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.instances == b.instances;
  }
};

}  // namespace ncrl
