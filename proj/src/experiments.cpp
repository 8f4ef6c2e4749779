#include "ncrl/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "ncrl/datagen.hpp"
#include "ncrl/prediction.hpp"

namespace ncrl {
namespace {

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::vector<LabelVector> gold_of(const Dataset& data) {
  std::vector<LabelVector> gold;
  gold.reserve(data.size());
  for (const Instance& inst : data.instances) gold.push_back(inst.labels);
  return gold;
}

std::vector<std::pair<std::string, double>> metric_values(const MetricsReport& m) {
  std::vector<std::pair<std::string, double>> out{
      {"micro_f1", m.micro_f1},
      {"macro_f1", m.macro_f1},
      {"micro_precision", m.micro_precision},
      {"micro_recall", m.micro_recall},
  };
  if (std::isfinite(m.map)) out.emplace_back("map", m.map);
  out.emplace_back("mean_ncre", m.mean_ncre);
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double micro_f1_of(const std::vector<PredictionSet>& pred, const std::vector<LabelVector>& gold) {
  return micro_macro_f1(confusion(pred, gold)).micro_f1;
}

}  // namespace

LossVariant make_variant(LossKind kind, double gamma, const TrainConfig& base) {
  LossVariant v;
  v.name = std::string(to_string(kind));
  v.train = base;
  v.train.loss_kind = kind;
  v.train.gamma = ShiftParam(uses_shift(kind) ? gamma : 0.0);
  return v;
}

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw std::invalid_argument("experiment needs at least one seed");
  if (variants.empty()) throw std::invalid_argument("experiment needs at least one loss");
  if (train_size == 0 || dev_size == 0 || test_size == 0) {
    throw std::invalid_argument("train, dev and test sizes must be positive");
  }
  if (!(false_negative_rate >= 0.0 && false_negative_rate <= 1.0)) {
    throw std::invalid_argument("false-negative rate must lie in [0, 1]");
  }
  for (const LossVariant& v : variants) v.train.validate();
}

std::string format_csv(const std::vector<ResultRow>& rows) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const ResultRow& r : rows) {
    out += r.experiment;
    out += ',';
    out += r.loss;
    out += ',';
    out += format_double(r.gamma);
    out += ',';
    out += r.seed ? std::to_string(*r.seed) : std::string("summary");
    out += ',';
    out += r.split;
    out += ',';
    out += r.metric;
    out += ',';
    out += format_double(r.value);
    out += ',';
    out += format_double(r.seconds);
    out += '\n';
  }
  return out;
}

std::vector<SummaryStat> summarize(const std::vector<ResultRow>& rows) {
  std::vector<SummaryStat> stats;
  std::vector<std::vector<double>> values;
  for (const ResultRow& r : rows) {
    if (!r.seed) continue;
    std::size_t i = 0;
    for (; i < stats.size(); ++i) {
      const SummaryStat& s = stats[i];
      if (s.loss == r.loss && s.gamma == r.gamma && s.split == r.split && s.metric == r.metric &&
          s.experiment == r.experiment) {
        break;
      }
    }
    if (i == stats.size()) {
      stats.push_back({r.experiment, r.loss, r.gamma, r.split, r.metric, 0.0, 0.0, 0});
      values.emplace_back();
    }
    values[i].push_back(r.value);
  }
  for (std::size_t i = 0; i < stats.size(); ++i) {
    const auto& v = values[i];
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    stats[i].mean = mean;
    stats[i].stddev = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    stats[i].count = v.size();
  }
  return stats;
}

std::string format_summary_json(const std::vector<SummaryStat>& stats) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const SummaryStat& s : stats) {
    nlohmann::ordered_json j;
    j["experiment"] = s.experiment;
    j["loss"] = s.loss;
    j["gamma"] = s.gamma;
    j["split"] = s.split;
    j["metric"] = s.metric;
    j["mean"] = s.mean;
    j["std"] = s.stddev;
    j["seeds"] = s.count;
    arr.push_back(std::move(j));
  }
  nlohmann::ordered_json root;
  root["summary"] = std::move(arr);
  return root.dump(2) + "\n";
}

Splits make_splits(const ExperimentConfig& config, std::uint64_t seed) {
  SyntheticConfig gen = config.data;
  gen.num_instances = config.train_size + config.dev_size + config.test_size;
  gen.seed = seed;
  const Dataset all = generate(gen);
  const std::size_t a = config.train_size;
  const std::size_t b = a + config.dev_size;
  Splits s{all.slice(0, a), all.slice(a, b), all.slice(b, all.size())};
  if (config.false_negative_rate > 0.0) {
    s.train = inject_false_negatives(s.train, config.false_negative_rate,
                                     derive_seed(seed, 100));
    s.dev = inject_false_negatives(s.dev, config.false_negative_rate, derive_seed(seed, 101));
  }
  return s;
}

MetricsReport evaluate_native(const TrainResult& result, const TrainConfig& config,
                              const Dataset& data) {
  const std::vector<Scores> scores = forward_all(result.scorer, data);
  const std::vector<LabelVector> gold = gold_of(data);
  std::vector<PredictionSet> pred;
  pred.reserve(scores.size());
  const bool global = native_rule(config.loss_kind) == PredictionRule::global_sweep;
  for (const Scores& f : scores) {
    pred.push_back(global ? predict_global(f, result.history.best_threshold)
                          : predict_adaptive(f));
  }
  return evaluate_predictions(scores, pred, gold);
}

std::size_t worker_count() {
  if (const char* env = std::getenv("NCRL_LAB_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<std::size_t>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min(worker_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::vector<ResultRow> run_compare(const ExperimentConfig& config) {
  config.validate();
  const std::size_t nv = config.variants.size();
  const std::size_t ns = config.seeds.size();

  std::vector<Splits> splits(ns);
  parallel_for(ns, [&](std::size_t s) { splits[s] = make_splits(config, config.seeds[s]); });

  // cells[s * nv + v] holds the rows of one (seed, variant) pair
  std::vector<std::vector<ResultRow>> cells(ns * nv);
  parallel_for(ns * nv, [&](std::size_t c) {
    const std::size_t s = c / nv;
    const LossVariant& variant = config.variants[c % nv];
    TrainConfig tc = variant.train;
    tc.seed = config.seeds[s];
    ResultRow base{config.id, variant.name, tc.gamma.value(), config.seeds[s], "test", "", 0.0,
                   0.0};
    const auto start = std::chrono::steady_clock::now();
    try {
      const TrainResult result = train(splits[s].train, splits[s].dev, tc);
      const MetricsReport m = evaluate_native(result, tc, splits[s].test);
      const double secs = config.record_timing ? seconds_since(start) : 0.0;
      for (const auto& [name, value] : metric_values(m)) {
        ResultRow r = base;
        r.metric = name;
        r.value = value;
        r.seconds = secs;
        cells[c].push_back(std::move(r));
      }
    } catch (const DivergenceError& e) {
      ResultRow r = base;
      r.split = "train";
      r.metric = "diverged_at_step";
      r.value = static_cast<double>(e.step());
      r.seconds = config.record_timing ? seconds_since(start) : 0.0;
      cells[c].push_back(std::move(r));
    }
  });

  std::vector<ResultRow> rows;
  for (auto& cell : cells) {
    for (auto& r : cell) rows.push_back(std::move(r));
  }
  // Summary rows exclude diverged cells; their seconds field is the mean.
  std::vector<ResultRow> summary;
  for (const SummaryStat& st : summarize(rows)) {
    if (st.metric == "diverged_at_step") continue;
    double secs = 0.0;
    std::size_t n = 0;
    for (const ResultRow& r : rows) {
      if (r.loss == st.loss && r.gamma == st.gamma && r.metric == st.metric &&
          r.split == st.split) {
        secs += r.seconds;
        ++n;
      }
    }
    summary.push_back({st.experiment, st.loss, st.gamma, std::nullopt, st.split, st.metric,
                       st.mean, n ? secs / static_cast<double>(n) : 0.0});
  }
  rows.insert(rows.end(), summary.begin(), summary.end());
  return rows;
}

std::vector<LossVariant> ablation_variants(const TrainConfig& base, double gamma) {
  auto named = [&](std::string name, LossKind kind, double g) {
    LossVariant v = make_variant(kind, g, base);
    v.name = std::move(name);
    return v;
  };
  return {
      named("ncrl", LossKind::ncrl_final, gamma),
      named("ncrl-m_reg", LossKind::ncrl_shifted, gamma),
      named("ncrl-m_shift", LossKind::ncrl_final, 0.0),
      named("ncrl-both", LossKind::ncrl_plain, 0.0),
      named("bce", LossKind::bce, 0.0),
      named("bce+p_shift", LossKind::bce_shifted, gamma),
  };
}

std::vector<ResultRow> run_ablation(ExperimentConfig config, const TrainConfig& base,
                                    double gamma) {
  config.variants = ablation_variants(base, gamma);
  return run_compare(config);
}

std::vector<ResultRow> run_gamma_sweep(ExperimentConfig config, const TrainConfig& base,
                                       std::span<const double> gammas) {
  if (gammas.empty()) throw std::invalid_argument("gamma sweep needs at least one value");
  config.variants.clear();
  for (double g : gammas) config.variants.push_back(make_variant(LossKind::ncrl_final, g, base));
  return run_compare(config);
}

std::vector<ResultRow> run_no_none_study(const ExperimentConfig& config) {
  config.validate();
  const LossVariant& variant = config.variants.front();
  const std::size_t ns = config.seeds.size();
  const ThresholdGrid grid = ThresholdGrid::fine();

  // cells[2 * s + regime], regime 0 = full, 1 = stripped
  std::vector<std::vector<ResultRow>> cells(2 * ns);
  parallel_for(2 * ns, [&](std::size_t c) {
    const std::size_t s = c / 2;
    const bool stripped = c % 2 == 1;
    Splits sp = make_splits(config, config.seeds[s]);
    if (stripped) {
      sp.train = strip_none_instances(sp.train);
      sp.dev = strip_none_instances(sp.dev);
      sp.test = strip_none_instances(sp.test);
    }
    TrainConfig tc = variant.train;
    tc.seed = config.seeds[s];
    ResultRow base{config.id, variant.name, tc.gamma.value(), config.seeds[s],
                   stripped ? "stripped" : "full", "", 0.0, 0.0};
    const auto start = std::chrono::steady_clock::now();
    try {
      const TrainResult result = train(sp.train, sp.dev, tc);
      auto margins = [&](const Dataset& d) {
        std::vector<Scores> m = forward_all(result.scorer, d);
        for (Scores& f : m) f = margin_scores(f);
        return m;
      };
      const double t = sweep_global_threshold(margins(sp.dev), gold_of(sp.dev), grid).threshold;
      const std::vector<Scores> test_margins = margins(sp.test);
      const std::vector<LabelVector> gold = gold_of(sp.test);
      std::vector<PredictionSet> adaptive, swept;
      for (const Scores& m : test_margins) {
        adaptive.push_back(predict_adaptive(m));
        swept.push_back(predict_global(m, t));
      }
      const double secs = config.record_timing ? seconds_since(start) : 0.0;
      ResultRow a = base;
      a.metric = "micro_f1_adaptive";
      a.value = micro_f1_of(adaptive, gold);
      a.seconds = secs;
      ResultRow w = base;
      w.metric = "micro_f1_swept";
      w.value = micro_f1_of(swept, gold);
      w.seconds = secs;
      cells[c] = {a, w};
    } catch (const DivergenceError& e) {
      ResultRow r = base;
      r.metric = "diverged_at_step";
      r.value = static_cast<double>(e.step());
      r.seconds = config.record_timing ? seconds_since(start) : 0.0;
      cells[c] = {r};
    }
  });

  std::vector<ResultRow> rows;
  for (auto& cell : cells) {
    for (auto& r : cell) rows.push_back(std::move(r));
  }
  return rows;
}

std::map<std::uint64_t, double> series(const std::vector<ResultRow>& rows,
                                       const std::string& loss, const std::string& split,
                                       const std::string& metric) {
  std::map<std::uint64_t, double> out;
  for (const ResultRow& r : rows) {
    if (r.seed && r.loss == loss && r.split == split && r.metric == metric) {
      out[*r.seed] = r.value;
    }
  }
  return out;
}

namespace {

TrainConfig trend_train_config() {
  TrainConfig tc;
  tc.epochs = 50;
  tc.batch_size = 32;
  tc.learning_rate = 1e-2;
  tc.architecture = Architecture::mlp;
  tc.hidden = 64;
  return tc;
}

ExperimentConfig trend_base(std::string id) {
  ExperimentConfig c;
  c.id = std::move(id);
  c.data.num_labels = 10;
  c.data.feature_dim = 50;
  c.train_size = 5000;
  c.dev_size = 1000;
  c.test_size = 5000;
  c.seeds = {1, 2, 3, 4, 5};
  return c;
}

}  // namespace

ExperimentConfig separable_preset() {
  ExperimentConfig c;
  c.id = "separable";
  c.data.num_labels = 10;
  c.data.feature_dim = 50;
  c.data.none_fraction_target = 0.4;
  c.data.boundary_margin = 0.05;
  c.train_size = 5000;
  c.dev_size = 1000;
  c.test_size = 1000;
  TrainConfig tc;
  tc.epochs = 200;
  tc.batch_size = 32;
  tc.learning_rate = 1e-2;
  c.variants = {make_variant(LossKind::ncrl_plain, 0.0, tc)};
  c.seeds = {1};
  return c;
}

ExperimentConfig noise_preset() {
  ExperimentConfig c = trend_base("noise");
  c.data.none_fraction_target = 0.4;
  c.false_negative_rate = 0.2;
  const TrainConfig tc = trend_train_config();
  LossVariant shifted = make_variant(LossKind::ncrl_final, 0.05, tc);
  shifted.name = "ncrl";
  LossVariant unshifted = make_variant(LossKind::ncrl_final, 0.0, tc);
  unshifted.name = "ncrl-m_shift";
  c.variants = {shifted, unshifted};
  return c;
}

ExperimentConfig imbalance_preset() {
  ExperimentConfig c = trend_base("imbalance");
  const std::size_t k = c.data.num_labels;
  const double common = bias_for_positive_rate(0.12);
  const double rare = bias_for_positive_rate(0.01);
  for (std::size_t i = 0; i < k; ++i) c.data.per_label_bias.push_back(i < k / 2 ? common : rare);
  const TrainConfig tc = trend_train_config();
  LossVariant full = make_variant(LossKind::ncrl_final, 0.05, tc);
  full.name = "ncrl";
  LossVariant no_reg = make_variant(LossKind::ncrl_shifted, 0.05, tc);
  no_reg.name = "ncrl-m_reg";
  c.variants = {full, no_reg};
  return c;
}

ExperimentConfig no_none_preset() {
  ExperimentConfig c = trend_base("no_none");
  c.data.none_fraction_target = 0.4;
  LossVariant v = make_variant(LossKind::ncrl_final, 0.05, trend_train_config());
  v.name = "ncrl";
  c.variants = {v};
  return c;
}

}  // namespace ncrl
