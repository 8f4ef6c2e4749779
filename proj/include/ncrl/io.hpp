#pragma once

#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "ncrl/dataset.hpp"
#include "ncrl/model.hpp"

namespace ncrl {

/// Parses one JSONL dataset line:
///   {"features": [real...], "labels": [int indices 1..K], "k": int}
/// Label index 0 denotes an explicit none-class instance and may not be
/// combined with other labels. An optional boolean "none" key must agree with
/// the labels. `line_no` is 1-based and only used in error messages.
Instance parse_instance(std::string_view line, std::size_t line_no);
std::string format_instance(const Instance& inst);

Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const Dataset& data, const std::filesystem::path& path);

/// Writes `contents` to a sibling temporary file and renames it into place,
/// so a failed run never leaves a partial file behind.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Flat JSON checkpoint: architecture, shape, row-major parameter arrays, an
/// echo of the training config and, when finite, the tuned global threshold.
std::string scorer_to_json(const Scorer& scorer, const TrainConfig& config,
                           double threshold = std::numeric_limits<double>::quiet_NaN());
Scorer scorer_from_json(std::string_view text);
void save_scorer(const Scorer& scorer, const TrainConfig& config,
                 const std::filesystem::path& path,
                 double threshold = std::numeric_limits<double>::quiet_NaN());
Scorer load_scorer(const std::filesystem::path& path);

struct Checkpoint {
  Scorer scorer;
  std::optional<LossKind> loss;  // from the config echo, if present
  double threshold = std::numeric_limits<double>::quiet_NaN();
};
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// `key = value` lines; blank lines and lines starting with '#' are skipped.
std::map<std::string, std::string> read_key_values(const std::filesystem::path& path);

std::string_view to_string(Architecture arch);
Architecture parse_architecture(std::string_view name);

}  // namespace ncrl
