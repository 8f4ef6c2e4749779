#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ncrl/consistency.hpp"
#include "ncrl/datagen.hpp"
#include "ncrl/experiments.hpp"
#include "ncrl/featurizer.hpp"
#include "ncrl/io.hpp"
#include "ncrl/losses.hpp"
#include "ncrl/metrics.hpp"
#include "ncrl/model.hpp"
#include "ncrl/prediction.hpp"

namespace py = pybind11;
using namespace ncrl;

namespace {

// Python side: a label set is a list of positive indices in 1..K.
std::vector<LabelVector> to_labels(const std::vector<std::vector<std::size_t>>& sets,
                                   std::size_t k) {
  std::vector<LabelVector> out;
  out.reserve(sets.size());
  for (const auto& s : sets) out.push_back(LabelVector::from_positives(k, s));
  return out;
}

std::vector<std::vector<std::size_t>> from_labels(const Dataset& data) {
  std::vector<std::vector<std::size_t>> out;
  for (const Instance& inst : data.instances) out.push_back(inst.labels.positives());
  return out;
}

Dataset make_dataset(const std::vector<std::vector<double>>& features,
                     const std::vector<std::vector<std::size_t>>& labels, std::size_t k) {
  if (features.size() != labels.size()) {
    throw std::invalid_argument("features and labels differ in length");
  }
  Dataset d;
  const auto lv = to_labels(labels, k);
  for (std::size_t i = 0; i < features.size(); ++i) d.instances.push_back({features[i], lv[i]});
  d.provenance = std::string("python");
  d.validate();
  return d;
}

py::tuple as_pair(const LossResult& r) { return py::make_tuple(r.value, r.grad); }

struct Model {
  Scorer scorer;
  TrainConfig config;
  double threshold;

  std::vector<Scores> scores(const std::vector<std::vector<double>>& x) const {
    std::vector<Scores> out;
    out.reserve(x.size());
    for (const auto& row : x) out.push_back(forward(scorer, row));
    return out;
  }

  std::vector<PredictionSet> predict(const std::vector<std::vector<double>>& x) const {
    const bool global = native_rule(config.loss_kind) == PredictionRule::global_sweep;
    std::vector<PredictionSet> out;
    for (const Scores& f : scores(x)) {
      out.push_back(global ? predict_global(f, threshold) : predict_adaptive(f));
    }
    return out;
  }
};

py::dict report_dict(const MetricsReport& m) {
  py::dict d;
  d["micro_f1"] = m.micro_f1;
  d["macro_f1"] = m.macro_f1;
  d["micro_precision"] = m.micro_precision;
  d["micro_recall"] = m.micro_recall;
  d["map"] = m.map;
  d["mean_ncre"] = m.mean_ncre;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Multi-label ranking losses, synthetic data and experiment runners.";

  m.def(
      "loss",
      [](const std::string& kind, const std::vector<int>& y, const std::vector<double>& f,
         double gamma) {
        return as_pair(evaluate_loss(parse_loss_kind(kind), LabelVector::from_flags(y), f,
                                     ShiftParam(gamma)));
      },
      py::arg("kind"), py::arg("y"), py::arg("f"), py::arg("gamma") = 0.0,
      "Loss value and gradient. y holds K 0/1 flags for labels 1..K; f holds K+1 scores "
      "with the none class first.");
  m.def(
      "ncre",
      [](const std::vector<int>& y, const std::vector<double>& f) {
        return ncre_error(LabelVector::from_flags(y), f);
      },
      py::arg("y"), py::arg("f"));
  m.def(
      "ranking_error",
      [](const std::vector<int>& y, const std::vector<double>& f) {
        return ranking_error(LabelVector::from_flags(y), f);
      },
      py::arg("y"), py::arg("f"));
  m.def(
      "margins",
      [](const std::vector<double>& f) {
        const Margins mg = compute_margins(f);
        py::dict d;
        d["pos"] = mg.pos;
        d["neg"] = mg.neg;
        d["avg_pos"] = mg.avg_pos;
        d["avg_neg"] = mg.avg_neg;
        return d;
      },
      py::arg("f"));
  m.def(
      "grad_check",
      [](const std::string& kind, double gamma, std::size_t k, std::size_t trials,
         std::uint64_t seed) {
        return grad_check(parse_loss_kind(kind), ShiftParam(gamma), k, trials, seed);
      },
      py::arg("kind"), py::arg("gamma") = 0.0, py::arg("k") = 10, py::arg("trials") = 100,
      py::arg("seed") = 1);

  m.def(
      "optimal_margins",
      [](const std::vector<double>& delta) {
        return optimal_margin_closed_form(MarginalDistribution(delta));
      },
      py::arg("delta"));
  m.def(
      "consistency",
      [](std::size_t trials, std::size_t k, std::uint64_t seed) {
        const ConsistencyReport r = run_consistency_experiment(trials, k, seed);
        py::dict d;
        d["trials"] = r.trials;
        d["sign_agreement_rate"] = r.sign_agreement_rate;
        d["max_margin_deviation"] = r.max_margin_deviation;
        d["ncre_risk_gap"] = r.ncre_risk_gap;
        return d;
      },
      py::arg("trials") = 1000, py::arg("k") = 5, py::arg("seed") = 7);

  m.def(
      "generate",
      [](std::size_t k, std::size_t dim, std::size_t n, double none_fraction, double margin,
         double fn_rate, std::uint64_t seed) {
        SyntheticConfig c;
        c.num_labels = k;
        c.feature_dim = dim;
        c.num_instances = n;
        c.none_fraction_target = none_fraction;
        c.boundary_margin = margin;
        c.noise_false_negative_rate = fn_rate;
        c.seed = seed;
        const Dataset d = generate(c);
        std::vector<std::vector<double>> x;
        for (const Instance& inst : d.instances) x.push_back(inst.features);
        return py::make_tuple(x, from_labels(d));
      },
      py::arg("k") = 10, py::arg("dim") = 50, py::arg("n") = 1000, py::arg("none_fraction") = 0.4,
      py::arg("margin") = 0.0, py::arg("fn_rate") = 0.0, py::arg("seed") = 1,
      "Returns (features, label_sets) where each label set lists positive indices.");
  m.def(
      "save_dataset",
      [](const std::string& path, const std::vector<std::vector<double>>& x,
         const std::vector<std::vector<std::size_t>>& labels, std::size_t k) {
        save_dataset(make_dataset(x, labels, k), path);
      },
      py::arg("path"), py::arg("features"), py::arg("labels"), py::arg("k"));
  m.def(
      "load_dataset",
      [](const std::string& path) {
        const Dataset d = load_dataset(path);
        std::vector<std::vector<double>> x;
        for (const Instance& inst : d.instances) x.push_back(inst.features);
        return py::make_tuple(x, from_labels(d), d.num_classes());
      },
      py::arg("path"), "Returns (features, label_sets, k).");
  m.def("hashing_featurizer",
        [](const std::vector<std::string>& texts, std::size_t dim, std::uint64_t seed) {
          return hashing_featurizer(texts, dim, seed);
        },
        py::arg("texts"), py::arg("dim"), py::arg("seed") = 0);

  py::class_<Model>(m, "Model")
      .def("scores", &Model::scores, py::arg("features"))
      .def("predict", &Model::predict, py::arg("features"),
           "Label sets under the loss's native prediction rule.")
      .def_property_readonly("threshold", [](const Model& md) { return md.threshold; })
      .def("save", [](const Model& md, const std::string& path) {
        save_scorer(md.scorer, md.config, path, md.threshold);
      });

  m.def(
      "train",
      [](const std::vector<std::vector<double>>& x, const std::vector<std::vector<std::size_t>>& y,
         const std::vector<std::vector<double>>& dev_x,
         const std::vector<std::vector<std::size_t>>& dev_y, std::size_t k,
         const std::string& loss, double gamma, std::size_t epochs, std::size_t batch_size,
         double lr, const std::string& arch, std::size_t hidden, std::uint64_t seed) {
        TrainConfig c;
        c.loss_kind = parse_loss_kind(loss);
        c.gamma = ShiftParam(gamma);
        c.epochs = epochs;
        c.batch_size = batch_size;
        c.learning_rate = lr;
        c.architecture = parse_architecture(arch);
        c.hidden = hidden;
        c.seed = seed;
        const Dataset tr = make_dataset(x, y, k);
        const Dataset dev = make_dataset(dev_x, dev_y, k);
        py::gil_scoped_release release;
        TrainResult r = train(tr, dev, c);
        return Model{std::move(r.scorer), c, r.history.best_threshold};
      },
      py::arg("features"), py::arg("labels"), py::arg("dev_features"), py::arg("dev_labels"),
      py::arg("k"), py::arg("loss") = "ncrl_final", py::arg("gamma") = 0.05,
      py::arg("epochs") = 10, py::arg("batch_size") = 32, py::arg("lr") = 1e-2,
      py::arg("arch") = "linear", py::arg("hidden") = 32, py::arg("seed") = 1);

  m.def("predict_adaptive", [](const std::vector<double>& f) { return predict_adaptive(f); },
        py::arg("f"));
  m.def("predict_global",
        [](const std::vector<double>& f, double t) { return predict_global(f, t); },
        py::arg("f"), py::arg("threshold"));
  m.def(
      "evaluate",
      [](const std::vector<Scores>& scores, const std::vector<PredictionSet>& pred,
         const std::vector<std::vector<std::size_t>>& gold, std::size_t k) {
        return report_dict(evaluate_predictions(scores, pred, to_labels(gold, k)));
      },
      py::arg("scores"), py::arg("predictions"), py::arg("gold"), py::arg("k"));
  m.def(
      "mean_average_precision",
      [](const std::vector<Scores>& scores, const std::vector<std::vector<std::size_t>>& gold,
         std::size_t k) { return mean_average_precision(scores, to_labels(gold, k)); },
      py::arg("scores"), py::arg("gold"), py::arg("k"));

  m.def(
      "run_preset",
      [](const std::string& name, const std::vector<std::uint64_t>& seeds, bool timing) {
        ExperimentConfig c = name == "separable"   ? separable_preset()
                             : name == "noise"     ? noise_preset()
                             : name == "imbalance" ? imbalance_preset()
                             : name == "no-none"
                                 ? no_none_preset()
                                 : throw std::invalid_argument("unknown preset '" + name + "'");
        if (!seeds.empty()) c.seeds = seeds;
        c.record_timing = timing;
        std::vector<ResultRow> rows;
        {
          py::gil_scoped_release release;
          rows = name == "no-none" ? run_no_none_study(c) : run_compare(c);
        }
        return format_csv(rows);
      },
      py::arg("name"), py::arg("seeds") = std::vector<std::uint64_t>{}, py::arg("timing") = false,
      "Runs a prebuilt experiment and returns the results as CSV text.");
}
