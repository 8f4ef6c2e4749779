#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ncrl/dataset.hpp"
#include "ncrl/metrics.hpp"
#include "ncrl/model.hpp"

namespace ncrl {

/// One compared training setup. `name` fills the loss column of results.
struct LossVariant {
  std::string name;
  TrainConfig train;
};

LossVariant make_variant(LossKind kind, double gamma, const TrainConfig& base);

struct ExperimentConfig {
  std::string id = "compare";
  /// Generator settings. num_instances and seed are overwritten per seed with
  /// train + dev + test and the run seed.
  SyntheticConfig data;
  std::size_t train_size = 5000;
  std::size_t dev_size = 1000;
  std::size_t test_size = 1000;
  /// False-negative rate injected into train and dev; test stays clean.
  double false_negative_rate = 0.0;
  std::vector<LossVariant> variants;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  /// When false every seconds field is 0 so reruns produce identical bytes.
  bool record_timing = true;

  void validate() const;
};

struct ResultRow {
  std::string experiment;
  std::string loss;
  double gamma = 0.0;
  std::optional<std::uint64_t> seed;  // empty for summary rows
  std::string split;
  std::string metric;
  double value = 0.0;
  double seconds = 0.0;

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

inline constexpr const char* kCsvHeader =
    "experiment,loss,gamma,seed,split,metric,value,seconds";

std::string format_csv(const std::vector<ResultRow>& rows);

struct SummaryStat {
  std::string experiment;
  std::string loss;
  double gamma = 0.0;
  std::string split;
  std::string metric;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for a single seed
  std::size_t count = 0;
};

/// Groups per-seed rows by (loss, gamma, split, metric) in first-seen order.
std::vector<SummaryStat> summarize(const std::vector<ResultRow>& rows);
std::string format_summary_json(const std::vector<SummaryStat>& stats);

/// Per-seed train/dev/test splits for one run seed.
struct Splits {
  Dataset train;
  Dataset dev;
  Dataset test;
};
Splits make_splits(const ExperimentConfig& config, std::uint64_t seed);

/// Scores a trained model on `data` under its native prediction rule.
MetricsReport evaluate_native(const TrainResult& result, const TrainConfig& config,
                              const Dataset& data);

/// Every variant on every seed; per-seed test rows for each metric followed
/// by one summary row (mean) per variant and metric. A diverged cell yields a
/// single "diverged_at_step" row instead of metric rows.
std::vector<ResultRow> run_compare(const ExperimentConfig& config);

/// The six component-ablation variants built from `base` and `gamma`.
std::vector<LossVariant> ablation_variants(const TrainConfig& base, double gamma);
/// run_compare over ablation_variants, replacing any configured variants.
std::vector<ResultRow> run_ablation(ExperimentConfig config, const TrainConfig& base,
                                    double gamma);
/// ncrl_final at each gamma; data for a sensitivity plot.
std::vector<ResultRow> run_gamma_sweep(ExperimentConfig config, const TrainConfig& base,
                                       std::span<const double> gammas);

/// Trains the first variant on (a) full and (b) none-stripped splits and
/// reports test micro-F1 under adaptive prediction and under a dev-tuned
/// global threshold on none-relative margins. Four rows per seed.
std::vector<ResultRow> run_no_none_study(const ExperimentConfig& config);

/// Per-seed values of one (loss, split, metric) series.
std::map<std::uint64_t, double> series(const std::vector<ResultRow>& rows,
                                       const std::string& loss, const std::string& split,
                                       const std::string& metric);

/// Number of parallel cells: NCRL_LAB_THREADS if set, else the hardware count.
std::size_t worker_count();

/// Runs fn(0..n-1) on up to worker_count() threads. The first exception
/// thrown by any task is rethrown after all threads finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// Prebuilt configurations.
ExperimentConfig separable_preset();
ExperimentConfig noise_preset();
ExperimentConfig imbalance_preset();
ExperimentConfig no_none_preset();

}  // namespace ncrl
