#include "cli.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ncrl/consistency.hpp"
#include "ncrl/datagen.hpp"
#include "ncrl/experiments.hpp"
#include "ncrl/featurizer.hpp"
#include "ncrl/io.hpp"
#include "ncrl/metrics.hpp"
#include "ncrl/model.hpp"
#include "ncrl/prediction.hpp"

namespace ncrl::cli {
namespace {

using json = nlohmann::ordered_json;

constexpr double kGradTolerance = 1e-4;

// ---- shared option groups --------------------------------------------------

struct DataOptions {
  std::size_t k = 10;
  std::size_t dim = 50;
  double none_fraction = 0.4;
  CLI::Option* none_fraction_opt = nullptr;
  std::size_t rare_labels = 0;
  double rare_rate = 0.01;
  double common_rate = 0.12;
  CLI::Option* common_rate_opt = nullptr;
  double margin = 0.0;
};

void add_data_options(CLI::App* sub, DataOptions& o) {
  sub->add_option("--k", o.k, "Number of pre-defined labels")->capture_default_str();
  sub->add_option("--dim", o.dim, "Feature dimension")->capture_default_str();
  o.none_fraction_opt =
      sub->add_option("--none-fraction", o.none_fraction,
                      "Target fraction of none-class instances (default 0.4 unless "
                      "--common-rate is given)");
  sub->add_option("--rare-labels", o.rare_labels,
                  "Number of labels (the last ones) drawn at --rare-rate")
      ->capture_default_str();
  sub->add_option("--rare-rate", o.rare_rate, "Positive rate of rare labels")
      ->capture_default_str();
  o.common_rate_opt = sub->add_option(
      "--common-rate", o.common_rate,
      "Positive rate of the remaining labels; derived from --none-fraction when omitted");
  sub->add_option("--margin", o.margin,
                  "Redraw instances within this many standard deviations of a label boundary")
      ->capture_default_str();
}

SyntheticConfig build_synthetic(const DataOptions& o) {
  SyntheticConfig c;
  c.num_labels = o.k;
  c.feature_dim = o.dim;
  c.boundary_margin = o.margin;
  const bool have_common = o.common_rate_opt->count() > 0;
  const bool have_none = o.none_fraction_opt->count() > 0;
  if (o.rare_labels > o.k) throw std::invalid_argument("--rare-labels exceeds --k");
  if (o.rare_labels == 0 && !have_common) {
    c.none_fraction_target = o.none_fraction;
    return c;
  }
  const std::size_t common_count = o.k - o.rare_labels;
  double common = o.common_rate;
  if (!have_common && common_count > 0) {
    // Solve (1 - rare)^r (1 - common)^(K - r) = none_fraction for common.
    const double rest = o.none_fraction / std::pow(1.0 - o.rare_rate, double(o.rare_labels));
    if (!(rest > 0.0 && rest < 1.0)) {
      throw std::invalid_argument("--none-fraction is unreachable with the rare labels alone");
    }
    common = 1.0 - std::pow(rest, 1.0 / double(common_count));
  }
  if (have_none) c.none_fraction_target = o.none_fraction;
  for (std::size_t i = 0; i < o.k; ++i) {
    c.per_label_bias.push_back(
        bias_for_positive_rate(i < common_count ? common : o.rare_rate));
  }
  return c;
}

struct TrainOptions {
  std::string loss = "ncrl_final";
  double gamma = 0.05;
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  double learning_rate = 1e-2;
  double warmup = 0.1;
  std::string arch = "linear";
  std::size_t hidden = 32;
};

void add_train_options(CLI::App* sub, TrainOptions& o, bool with_loss) {
  if (with_loss) {
    sub->add_option("--loss", o.loss,
                    "Loss: ncrl_plain, ncrl_shifted, ncrl_final, bce, bce_shifted, atl, pairwise")
        ->capture_default_str();
  }
  sub->add_option("--gamma", o.gamma, "Shift parameter in [0, 1)")->capture_default_str();
  sub->add_option("--epochs", o.epochs, "Training epochs")->capture_default_str();
  sub->add_option("--batch-size", o.batch_size, "Mini-batch size")->capture_default_str();
  sub->add_option("--lr", o.learning_rate, "Peak learning rate")->capture_default_str();
  sub->add_option("--warmup", o.warmup, "Fraction of steps spent warming up")
      ->capture_default_str();
  sub->add_option("--arch", o.arch, "Scorer: linear or mlp")->capture_default_str();
  sub->add_option("--hidden", o.hidden, "Hidden width of the mlp scorer")
      ->capture_default_str();
}

TrainConfig build_train(const TrainOptions& o) {
  TrainConfig c;
  c.loss_kind = parse_loss_kind(o.loss);
  c.gamma = ShiftParam(o.gamma);
  c.epochs = o.epochs;
  c.batch_size = o.batch_size;
  c.learning_rate = o.learning_rate;
  c.warmup_fraction = o.warmup;
  c.architecture = parse_architecture(o.arch);
  c.hidden = o.hidden;
  c.validate();
  return c;
}

struct RunOptions {
  std::size_t train_size = 5000;
  std::size_t dev_size = 1000;
  std::size_t test_size = 1000;
  double fn_rate = 0.0;
  std::string seeds = "1,2,3,4,5";
  CLI::Option* seeds_opt = nullptr;
  CLI::Option* epochs_opt = nullptr;
  std::string out;
  std::string summary;
  bool no_timing = false;
  std::string preset;
};

void add_run_options(CLI::App* sub, RunOptions& o) {
  sub->add_option("--train-size", o.train_size, "Training instances per seed")
      ->capture_default_str();
  sub->add_option("--dev-size", o.dev_size, "Development instances per seed")
      ->capture_default_str();
  sub->add_option("--test-size", o.test_size, "Test instances per seed")->capture_default_str();
  sub->add_option("--fn-rate", o.fn_rate,
                  "False-negative rate injected into train and dev (test stays clean)")
      ->capture_default_str();
  o.seeds_opt = sub->add_option("--seeds", o.seeds, "Comma-separated run seeds")
                    ->capture_default_str();
  sub->add_option("--out", o.out, "CSV results path (default: standard output)");
  sub->add_option("--summary", o.summary,
                  "JSON summary path (default: the --out path with a .summary.json suffix)");
  sub->add_flag("--no-timing", o.no_timing, "Write 0 in the seconds column");
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* what) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::istringstream is(item);
    T v{};
    if (!(is >> v) || !is.eof()) {
      throw std::invalid_argument(std::string("bad ") + what + " value '" + item + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument(std::string("empty ") + what + " list");
  return out;
}

ExperimentConfig build_experiment(const std::string& id, const DataOptions& d,
                                  const RunOptions& r) {
  ExperimentConfig c;
  c.id = id;
  c.data = build_synthetic(d);
  c.train_size = r.train_size;
  c.dev_size = r.dev_size;
  c.test_size = r.test_size;
  c.false_negative_rate = r.fn_rate;
  c.seeds = parse_list<std::uint64_t>(r.seeds, "seed");
  c.record_timing = !r.no_timing;
  return c;
}

ExperimentConfig preset_by_name(const std::string& name) {
  if (name == "separable") return separable_preset();
  if (name == "noise") return noise_preset();
  if (name == "imbalance") return imbalance_preset();
  if (name == "no-none") return no_none_preset();
  throw std::invalid_argument("unknown preset '" + name + "'");
}

/// Presets fix data and model settings; seeds, epochs and output flags still apply.
void overlay_run_options(ExperimentConfig& c, const RunOptions& r, const TrainOptions& t) {
  if (r.seeds_opt->count() > 0) c.seeds = parse_list<std::uint64_t>(r.seeds, "seed");
  if (r.epochs_opt && r.epochs_opt->count() > 0) {
    for (LossVariant& v : c.variants) v.train.epochs = t.epochs;
  }
  c.record_timing = !r.no_timing;
}

void write_results(const std::vector<ResultRow>& rows, const RunOptions& r, std::ostream& out) {
  const std::string csv = format_csv(rows);
  if (r.out.empty()) {
    out << csv;
    if (!r.summary.empty()) write_file_atomic(r.summary, format_summary_json(summarize(rows)));
    return;
  }
  const std::string summary_path = r.summary.empty() ? r.out + ".summary.json" : r.summary;
  const std::string summary = format_summary_json(summarize(rows));
  write_file_atomic(r.out, csv);
  write_file_atomic(summary_path, summary);
  out << "wrote " << rows.size() << " rows to " << r.out << "\n";
}

std::vector<LabelVector> gold_of(const Dataset& data) {
  std::vector<LabelVector> gold;
  gold.reserve(data.size());
  for (const Instance& inst : data.instances) gold.push_back(inst.labels);
  return gold;
}

json metrics_json(const MetricsReport& m) {
  json j;
  j["micro_f1"] = m.micro_f1;
  j["macro_f1"] = m.macro_f1;
  j["micro_precision"] = m.micro_precision;
  j["micro_recall"] = m.micro_recall;
  if (std::isfinite(m.map)) {
    j["map"] = m.map;
  } else {
    j["map"] = nullptr;
  }
  j["mean_ncre"] = m.mean_ncre;
  return j;
}

void emit_json(const json& j, const std::string& path, std::ostream& out) {
  const std::string text = j.dump(2) + "\n";
  if (path.empty()) {
    out << text;
  } else {
    write_file_atomic(path, text);
  }
}

// ---- text featurization -----------------------------------------------------

/// One instance per line: comma-separated label indices (empty or 0 for
/// none), a tab, then free text.
Dataset featurize_tsv(const std::string& path, std::size_t k, std::size_t dim,
                      std::uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::string> texts;
  std::vector<LabelVector> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": missing tab separator");
    }
    std::vector<std::size_t> pos;
    std::stringstream ss(line.substr(0, tab));
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.empty()) continue;
      std::size_t used = 0;
      unsigned long v = 0;
      try {
        v = std::stoul(item, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != item.size()) {
        throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad label '" + item +
                                 "'");
      }
      if (v != 0) pos.push_back(v);
    }
    try {
      labels.push_back(LabelVector::from_positives(k, pos));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    texts.push_back(line.substr(tab + 1));
  }
  if (texts.empty()) throw std::runtime_error(path + ": no instances");
  const auto rows = hashing_featurizer(texts, dim, seed);
  Dataset data;
  data.provenance = path;
  for (std::size_t i = 0; i < rows.size(); ++i) data.instances.push_back({rows[i], labels[i]});
  return data;
}

// ---- subcommands -------------------------------------------------------------

struct GenDataOptions {
  DataOptions data;
  std::size_t n = 1000;
  double fn_rate = 0.0;
  double sym_rate = 0.0;
  std::uint64_t seed = 1;
  std::string out;
  std::size_t dev_n = 0;
  std::string dev_out;
  std::size_t test_n = 0;
  std::string test_out;
  std::string from_text;
  bool strip_none = false;
};

json prior_json(const Dataset& data) {
  const ClassPriorReport r = class_prior_report(data);
  json j;
  j["instances"] = data.size();
  j["k"] = data.num_classes();
  j["dim"] = data.feature_dim();
  j["none_fraction"] = r.none_fraction;
  j["positive_rates"] = r.positive_rates;
  if (std::isfinite(r.imbalance_ratio)) {
    j["imbalance_ratio"] = r.imbalance_ratio;
  } else {
    j["imbalance_ratio"] = nullptr;
  }
  return j;
}

int cmd_gen_data(const GenDataOptions& o, std::ostream& out) {
  if (o.dev_out.empty() != (o.dev_n == 0) || o.test_out.empty() != (o.test_n == 0)) {
    throw std::invalid_argument("--dev-out/--dev-n and --test-out/--test-n come in pairs");
  }
  if (!o.from_text.empty() && (o.dev_n > 0 || o.test_n > 0)) {
    throw std::invalid_argument("--from-text writes a single file");
  }
  // (path, dataset) pairs; everything is built before anything is written.
  std::vector<std::pair<std::string, Dataset>> files;
  if (!o.from_text.empty()) {
    files.emplace_back(o.out, featurize_tsv(o.from_text, o.data.k, o.data.dim, o.seed));
  } else {
    // One draw sliced into splits, so all splits share the hidden labeling rule.
    SyntheticConfig c = build_synthetic(o.data);
    c.num_instances = o.n + o.dev_n + o.test_n;
    c.noise_false_negative_rate = o.fn_rate;
    c.noise_symmetric_rate = o.sym_rate;
    c.seed = o.seed;
    const Dataset all = generate(c);
    files.emplace_back(o.out, all.slice(0, o.n));
    if (o.dev_n > 0) files.emplace_back(o.dev_out, all.slice(o.n, o.n + o.dev_n));
    if (o.test_n > 0) files.emplace_back(o.test_out, all.slice(o.n + o.dev_n, all.size()));
  }
  if (o.strip_none) {
    for (auto& f : files) f.second = strip_none_instances(f.second);
  }
  for (auto& f : files) f.second.validate();
  for (const auto& [path, data] : files) {
    save_dataset(data, path);
    json j = prior_json(data);
    j["path"] = path;
    out << j.dump() << "\n";
  }
  return kExitOk;
}

struct TrainCmdOptions {
  TrainOptions train;
  std::string train_path;
  std::string dev_path;
  std::string out;
  std::uint64_t seed = 1;
};

int cmd_train(const TrainCmdOptions& o, std::ostream& out) {
  TrainConfig tc = build_train(o.train);
  tc.seed = o.seed;
  const Dataset tr = load_dataset(o.train_path);
  const Dataset dev = load_dataset(o.dev_path);
  const TrainResult result = train(tr, dev, tc);
  save_scorer(result.scorer, tc, o.out, result.history.best_threshold);
  json j;
  j["best_epoch"] = result.history.best_epoch;
  j["best_dev_micro_f1"] = result.history.dev_micro_f1[result.history.best_epoch];
  if (std::isfinite(result.history.best_threshold)) {
    j["threshold"] = result.history.best_threshold;
  }
  j["train_loss"] = result.history.train_loss;
  j["dev_micro_f1"] = result.history.dev_micro_f1;
  out << j.dump() << "\n";
  return kExitOk;
}

struct EvalOptions {
  std::string model;
  std::string data;
  std::string rule = "native";
  double threshold = 0.5;
  CLI::Option* threshold_opt = nullptr;
  std::string out;
};

int cmd_eval(const EvalOptions& o, std::ostream& out) {
  const Checkpoint ck = load_checkpoint(o.model);
  const Dataset data = load_dataset(o.data);
  std::vector<Scores> scores = forward_all(ck.scorer, data);
  std::string rule = o.rule;
  if (rule == "native") {
    const bool global =
        ck.loss && native_rule(*ck.loss) == PredictionRule::global_sweep;
    rule = global ? "global" : "adaptive";
  }
  double t = o.threshold;
  if (o.threshold_opt->count() == 0 && rule == "global" && std::isfinite(ck.threshold)) {
    t = ck.threshold;
  }
  std::vector<PredictionSet> pred;
  pred.reserve(scores.size());
  for (const Scores& f : scores) {
    if (rule == "adaptive") {
      pred.push_back(predict_adaptive(f));
    } else if (rule == "global") {
      pred.push_back(predict_global(f, t));
    } else if (rule == "margin-global") {
      pred.push_back(predict_global(margin_scores(f), t));
    } else {
      throw std::invalid_argument("unknown rule '" + rule + "'");
    }
  }
  json j;
  j["rule"] = rule;
  if (rule != "adaptive") j["threshold"] = t;
  j["instances"] = data.size();
  j["metrics"] = metrics_json(evaluate_predictions(scores, pred, gold_of(data)));
  emit_json(j, o.out, out);
  return kExitOk;
}

struct GradCheckOptions {
  std::string loss = "all";
  double gamma = 0.05;
  std::size_t k = 10;
  std::size_t trials = 100;
  std::uint64_t seed = 1;
};

int cmd_grad_check(const GradCheckOptions& o, std::ostream& out) {
  std::vector<LossKind> kinds;
  if (o.loss == "all") {
    kinds = {LossKind::ncrl_plain, LossKind::ncrl_shifted, LossKind::ncrl_final,
             LossKind::margin_reg, LossKind::bce,          LossKind::bce_shifted,
             LossKind::atl,        LossKind::pairwise};
  } else {
    kinds = {parse_loss_kind(o.loss)};
  }
  const ShiftParam gamma(o.gamma);
  double worst = 0.0;
  for (LossKind kind : kinds) {
    const double err = grad_check(kind, gamma, o.k, o.trials, o.seed);
    worst = std::max(worst, err);
    out << "loss=" << to_string(kind) << " gamma=" << o.gamma << " k=" << o.k
        << " trials=" << o.trials << " max_rel_error=" << err << "\n";
  }
  const bool ok = worst < kGradTolerance;
  out << (ok ? "ok" : "FAILED") << " max_rel_error=" << worst << " tolerance=" << kGradTolerance
      << "\n";
  return ok ? kExitOk : kExitFailure;
}

struct ConsistencyOptions {
  std::size_t trials = 1000;
  std::size_t k = 5;
  std::uint64_t seed = 7;
  std::string out;
};

int cmd_consistency(const ConsistencyOptions& o, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const ConsistencyReport r = run_consistency_experiment(o.trials, o.k, o.seed);
  json j;
  j["trials"] = r.trials;
  j["k"] = o.k;
  j["seed"] = o.seed;
  j["sign_agreement_rate"] = r.sign_agreement_rate;
  j["max_margin_deviation"] = r.max_margin_deviation;
  j["ncre_risk_gap"] = r.ncre_risk_gap;
  j["seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  emit_json(j, o.out, out);
  return kExitOk;
}

struct SweepOptions {
  std::string model;
  std::string data;
  std::string grid = "fine";
  bool margins = false;
  bool per_label = false;
  std::string out;
};

int cmd_sweep(const SweepOptions& o, std::ostream& out) {
  const Scorer scorer = load_scorer(o.model);
  const Dataset data = load_dataset(o.data);
  std::vector<Scores> scores = forward_all(scorer, data);
  if (o.margins) {
    for (Scores& f : scores) f = margin_scores(f);
  }
  const ThresholdGrid grid = o.grid == "coarse" ? ThresholdGrid::coarse()
                             : o.grid == "fine"
                                 ? ThresholdGrid::fine()
                                 : throw std::invalid_argument("--grid must be coarse or fine");
  const std::vector<LabelVector> gold = gold_of(data);
  json j;
  j["scores"] = o.margins ? "margins" : "raw";
  if (o.per_label) {
    j["thresholds"] = sweep_per_label_thresholds(scores, gold, grid);
  } else {
    const SweepResult best = sweep_global_threshold(scores, gold, grid);
    j["threshold"] = best.threshold;
    j["micro_f1"] = best.micro_f1;
    json curve = json::array();
    for (double t : grid.values()) {
      std::vector<PredictionSet> pred;
      pred.reserve(scores.size());
      for (const Scores& f : scores) pred.push_back(predict_global(f, t));
      curve.push_back({{"threshold", t}, {"micro_f1", micro_macro_f1(confusion(pred, gold)).micro_f1}});
    }
    j["curve"] = std::move(curve);
  }
  emit_json(j, o.out, out);
  return kExitOk;
}

struct CompareOptions {
  DataOptions data;
  TrainOptions train;
  RunOptions run;
  std::string losses = "ncrl_final,bce,atl";
};

int cmd_compare(CompareOptions& o, std::ostream& out) {
  ExperimentConfig c;
  if (!o.run.preset.empty()) {
    c = preset_by_name(o.run.preset);
    overlay_run_options(c, o.run, o.train);
  } else {
    c = build_experiment("compare", o.data, o.run);
    TrainOptions t = o.train;
    const TrainConfig base = build_train(t);
    for (const std::string& name : parse_list<std::string>(o.losses, "loss")) {
      c.variants.push_back(make_variant(parse_loss_kind(name), o.train.gamma, base));
    }
  }
  write_results(run_compare(c), o.run, out);
  return kExitOk;
}

struct AblateOptions {
  DataOptions data;
  TrainOptions train;
  RunOptions run;
  std::string study = "components";
  std::string sweep_gamma;
};

int cmd_ablate(AblateOptions& o, std::ostream& out) {
  ExperimentConfig c;
  TrainConfig base;
  double gamma = o.train.gamma;
  if (!o.run.preset.empty()) {
    c = preset_by_name(o.run.preset);
    overlay_run_options(c, o.run, o.train);
    base = c.variants.front().train;
    gamma = base.gamma.value() > 0.0 ? base.gamma.value() : gamma;
  } else {
    c = build_experiment("ablation", o.data, o.run);
    base = build_train(o.train);
  }
  std::vector<ResultRow> rows;
  if (!o.sweep_gamma.empty()) {
    c.id = "gamma_sweep";
    const auto gammas = parse_list<double>(o.sweep_gamma, "gamma");
    rows = run_gamma_sweep(c, base, gammas);
  } else if (o.study == "components") {
    c.id = o.run.preset.empty() ? "ablation" : c.id;
    rows = run_ablation(c, base, gamma);
  } else if (o.study == "no-none") {
    if (o.run.preset.empty()) {
      LossVariant v = make_variant(LossKind::ncrl_final, gamma, base);
      v.name = "ncrl";
      c.variants = {v};
      c.id = "no_none";
    }
    rows = run_no_none_study(c);
  } else {
    throw std::invalid_argument("--study must be components or no-none");
  }
  write_results(rows, o.run, out);
  return kExitOk;
}

// ---- config files -------------------------------------------------------------

/// Expands `--config FILE` into `--key=value` arguments placed right after the
/// subcommand, so later command-line flags take precedence.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::string path;
  std::vector<std::string> rest;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw CLI::ArgumentMismatch("--config", 1, 0);
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (path.empty() || rest.empty()) return rest;
  std::vector<std::string> out{rest.front()};
  for (const auto& [key, value] : read_key_values(path)) {
    out.push_back("--" + key + "=" + value);
  }
  out.insert(out.end(), rest.begin() + 1, rest.end());
  return out;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-label loss laboratory: synthetic data, training, evaluation and "
               "experiment suites.",
               "ncrl-lab"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.fallthrough(false);
  std::string config_doc;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_doc,
                    "Key-value file (key = value per line, # comments); keys are long flag "
                    "names, command-line flags override");
  };

  GenDataOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate or featurize a JSONL dataset");
  add_data_options(gen_cmd, gen.data);
  gen_cmd->add_option("--n", gen.n, "Number of instances")->capture_default_str();
  gen_cmd->add_option("--fn-rate", gen.fn_rate, "False-negative noise rate")
      ->capture_default_str();
  gen_cmd->add_option("--sym-rate", gen.sym_rate, "Symmetric label-flip rate")
      ->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Master seed")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output JSONL path (training split)")->required();
  gen_cmd->add_option("--dev-n", gen.dev_n, "Extra instances written to --dev-out");
  gen_cmd->add_option("--dev-out", gen.dev_out, "Development split path");
  gen_cmd->add_option("--test-n", gen.test_n, "Extra instances written to --test-out");
  gen_cmd->add_option("--test-out", gen.test_out, "Test split path");
  gen_cmd->add_option("--from-text", gen.from_text,
                      "Featurize a TSV file (labels<TAB>text) instead of sampling");
  gen_cmd->add_flag("--strip-none", gen.strip_none, "Drop none-class instances");
  add_config(gen_cmd);

  TrainCmdOptions tr;
  auto* train_cmd = app.add_subcommand("train", "Train a scorer and save a checkpoint");
  add_train_options(train_cmd, tr.train, true);
  train_cmd->add_option("--train", tr.train_path, "Training JSONL")->required();
  train_cmd->add_option("--dev", tr.dev_path, "Development JSONL")->required();
  train_cmd->add_option("--out", tr.out, "Checkpoint path")->required();
  train_cmd->add_option("--seed", tr.seed, "Seed for init and shuffling")->capture_default_str();
  add_config(train_cmd);

  EvalOptions ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  eval_cmd->add_option("--model", ev.model, "Checkpoint path")->required();
  eval_cmd->add_option("--data", ev.data, "JSONL dataset")->required();
  eval_cmd
      ->add_option("--rule", ev.rule,
                   "native, adaptive, global (sigmoid of scores) or margin-global (sigmoid of "
                   "f_i - f_0)")
      ->capture_default_str();
  ev.threshold_opt = eval_cmd->add_option(
      "--threshold", ev.threshold,
      "Global threshold (default: the checkpoint's tuned value, else 0.5)");
  eval_cmd->add_option("--out", ev.out, "JSON report path (default: standard output)");
  add_config(eval_cmd);

  GradCheckOptions gc;
  auto* gc_cmd = app.add_subcommand("grad-check",
                                    "Compare analytic gradients with central differences");
  gc_cmd->add_option("--loss", gc.loss, "Loss name or 'all'")->capture_default_str();
  gc_cmd->add_option("--gamma", gc.gamma, "Shift parameter")->capture_default_str();
  gc_cmd->add_option("--k", gc.k, "Number of pre-defined labels")->capture_default_str();
  gc_cmd->add_option("--trials", gc.trials, "Random points per loss")->capture_default_str();
  gc_cmd->add_option("--seed", gc.seed, "Seed")->capture_default_str();
  add_config(gc_cmd);

  ConsistencyOptions co;
  auto* co_cmd = app.add_subcommand(
      "consistency", "Minimize the conditional surrogate risk and compare with the Bayes rule");
  co_cmd->add_option("--trials", co.trials, "Random marginal vectors")->capture_default_str();
  co_cmd->add_option("--k", co.k, "Number of pre-defined labels")->capture_default_str();
  co_cmd->add_option("--seed", co.seed, "Seed")->capture_default_str();
  co_cmd->add_option("--out", co.out, "JSON report path (default: standard output)");
  add_config(co_cmd);

  SweepOptions sw;
  auto* sweep_cmd = app.add_subcommand("sweep", "Tune decision thresholds on a dataset");
  sweep_cmd->add_option("--model", sw.model, "Checkpoint path")->required();
  sweep_cmd->add_option("--data", sw.data, "JSONL dataset (usually dev)")->required();
  sweep_cmd->add_option("--grid", sw.grid, "coarse (0.1 steps) or fine (0.01 steps)")
      ->capture_default_str();
  sweep_cmd->add_flag("--margins", sw.margins, "Sweep on f_i - f_0 instead of raw scores");
  sweep_cmd->add_flag("--per-label", sw.per_label, "Tune one threshold per label");
  sweep_cmd->add_option("--out", sw.out, "JSON output path (default: standard output)");
  add_config(sweep_cmd);

  CompareOptions cmp;
  auto* cmp_cmd = app.add_subcommand("compare", "Train several losses over several seeds");
  add_data_options(cmp_cmd, cmp.data);
  add_train_options(cmp_cmd, cmp.train, false);
  add_run_options(cmp_cmd, cmp.run);
  cmp.run.epochs_opt = cmp_cmd->get_option("--epochs");
  cmp_cmd->add_option("--losses", cmp.losses, "Comma-separated loss names")
      ->capture_default_str();
  cmp_cmd->add_option("--preset", cmp.run.preset,
                      "separable, noise, imbalance or no-none; fixes data and model settings");
  add_config(cmp_cmd);

  AblateOptions ab;
  auto* ab_cmd = app.add_subcommand("ablate", "Component ablation, no-none study or gamma sweep");
  add_data_options(ab_cmd, ab.data);
  add_train_options(ab_cmd, ab.train, false);
  add_run_options(ab_cmd, ab.run);
  ab.run.epochs_opt = ab_cmd->get_option("--epochs");
  ab_cmd->add_option("--study", ab.study, "components or no-none")->capture_default_str();
  ab_cmd->add_option("--sweep-gamma", ab.sweep_gamma,
                     "Comma-separated gammas; trains ncrl_final at each (plot data)");
  ab_cmd->add_option("--preset", ab.run.preset,
                     "separable, noise, imbalance or no-none; fixes data and model settings");
  add_config(ab_cmd);

  if (!raw_args.empty() && !raw_args.front().empty() && raw_args.front().front() != '-' &&
      app.get_subcommand_no_throw(raw_args.front()) == nullptr) {
    err << "error: unknown subcommand '" << raw_args.front() << "'\n\n" << app.help();
    return kExitUsage;
  }
  std::vector<std::string> args;
  try {
    args = expand_config(raw_args);
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*gen_cmd) return cmd_gen_data(gen, out);
    if (*train_cmd) return cmd_train(tr, out);
    if (*eval_cmd) return cmd_eval(ev, out);
    if (*gc_cmd) return cmd_grad_check(gc, out);
    if (*co_cmd) return cmd_consistency(co, out);
    if (*sweep_cmd) return cmd_sweep(sw, out);
    if (*cmp_cmd) return cmd_compare(cmp, out);
    if (*ab_cmd) return cmd_ablate(ab, out);
  } catch (const DivergenceError& e) {
    err << "error: training diverged at step " << e.step() << ": " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace ncrl::cli
