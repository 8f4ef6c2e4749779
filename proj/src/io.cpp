#include "ncrl/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

#include <json.hpp>

namespace ncrl {
namespace {

using json = nlohmann::ordered_json;

std::runtime_error line_error(std::size_t line_no, const std::string& msg) {
  return std::runtime_error("line " + std::to_string(line_no) + ": " + msg);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json rows_of(std::span<const double> flat, std::size_t rows, std::size_t cols) {
  json out = json::array();
  for (std::size_t r = 0; r < rows; ++r) {
    out.push_back(std::vector<double>(flat.begin() + static_cast<std::ptrdiff_t>(r * cols),
                                      flat.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols)));
  }
  return out;
}

void read_rows(const json& j, const char* key, std::size_t rows, std::size_t cols,
               std::span<double> out) {
  const json& m = j.at(key);
  if (!m.is_array() || m.size() != rows) {
    throw std::runtime_error(std::string("checkpoint field '") + key + "' must have " +
                             std::to_string(rows) + " rows");
  }
  for (std::size_t r = 0; r < rows; ++r) {
    const auto row = m[r].get<std::vector<double>>();
    if (row.size() != cols) {
      throw std::runtime_error(std::string("checkpoint field '") + key + "' row " +
                               std::to_string(r) + " must have " + std::to_string(cols) +
                               " entries");
    }
    std::copy(row.begin(), row.end(), out.begin() + static_cast<std::ptrdiff_t>(r * cols));
  }
}

}  // namespace

Instance parse_instance(std::string_view line, std::size_t line_no) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw line_error(line_no, std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw line_error(line_no, "expected a JSON object");
  for (const char* key : {"features", "labels", "k"}) {
    if (!j.contains(key)) throw line_error(line_no, std::string("missing key '") + key + "'");
  }
  Instance inst;
  try {
    inst.features = j["features"].get<std::vector<double>>();
  } catch (const json::exception&) {
    throw line_error(line_no, "'features' must be an array of numbers");
  }
  for (double v : inst.features) {
    if (!std::isfinite(v)) throw line_error(line_no, "non-finite feature value");
  }
  if (!j["k"].is_number_integer() || j["k"].get<long long>() < 1) {
    throw line_error(line_no, "'k' must be a positive integer");
  }
  const auto k = static_cast<std::size_t>(j["k"].get<long long>());
  std::vector<long long> raw;
  try {
    raw = j["labels"].get<std::vector<long long>>();
  } catch (const json::exception&) {
    throw line_error(line_no, "'labels' must be an array of integers");
  }
  bool explicit_none = false;
  std::vector<std::size_t> positives;
  for (long long idx : raw) {
    if (idx == 0) {
      explicit_none = true;
    } else if (idx < 0 || static_cast<std::size_t>(idx) > k) {
      throw line_error(line_no, "label index " + std::to_string(idx) + " outside 0.." +
                                    std::to_string(k));
    } else {
      positives.push_back(static_cast<std::size_t>(idx));
    }
  }
  if (explicit_none && !positives.empty()) {
    throw line_error(line_no, "y0 inconsistency: label 0 (none) listed with positive labels");
  }
  try {
    inst.labels = LabelVector::from_positives(k, positives);
  } catch (const std::exception& e) {
    throw line_error(line_no, e.what());
  }
  if (j.contains("none")) {
    if (!j["none"].is_boolean()) throw line_error(line_no, "'none' must be a boolean");
    if (j["none"].get<bool>() != inst.labels.is_none()) {
      throw line_error(line_no, std::string("y0 inconsistency: \"none\": ") +
                                    (j["none"].get<bool>() ? "true" : "false") +
                                    " disagrees with the labels");
    }
  }
  return inst;
}

std::string format_instance(const Instance& inst) {
  json j;
  j["features"] = inst.features;
  j["labels"] = inst.labels.positives();
  j["k"] = inst.labels.num_classes();
  return j.dump();
}

Dataset load_dataset(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw std::runtime_error("dataset file not found: " + path.string());
  }
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  Dataset data;
  data.provenance = path.string();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    Instance inst = parse_instance(line, line_no);
    if (!data.instances.empty()) {
      const Instance& first = data.instances.front();
      if (inst.features.size() != first.features.size()) {
        throw line_error(line_no, "inconsistent dims: " + std::to_string(inst.features.size()) +
                                      " features, expected " +
                                      std::to_string(first.features.size()));
      }
      if (inst.labels.num_classes() != first.labels.num_classes()) {
        throw line_error(line_no, "inconsistent dims: k=" +
                                      std::to_string(inst.labels.num_classes()) +
                                      ", expected " +
                                      std::to_string(first.labels.num_classes()));
      }
    }
    data.instances.push_back(std::move(inst));
  }
  if (data.instances.empty()) throw std::runtime_error(path.string() + ": no instances");
  return data;
}

void save_dataset(const Dataset& data, const std::filesystem::path& path) {
  data.validate();
  std::string out;
  for (const Instance& inst : data.instances) {
    out += format_instance(inst);
    out += '\n';
  }
  write_file_atomic(path, out);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw std::runtime_error("write failed for " + path.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw std::runtime_error("cannot move output into place at " + path.string());
  }
}

std::string_view to_string(Architecture arch) {
  return arch == Architecture::linear ? "linear" : "mlp";
}

Architecture parse_architecture(std::string_view name) {
  if (name == "linear") return Architecture::linear;
  if (name == "mlp") return Architecture::mlp;
  throw std::invalid_argument("unknown architecture '" + std::string(name) +
                              "' (expected linear or mlp)");
}

std::string scorer_to_json(const Scorer& scorer, const TrainConfig& config, double threshold) {
  json j;
  j["format"] = "ncrl-scorer";
  j["version"] = 1;
  const std::size_t k = num_classes(scorer);
  const std::size_t d = input_dim(scorer);
  if (const auto* lin = std::get_if<LinearScorer>(&scorer)) {
    const auto p = lin->parameters();
    j["architecture"] = "linear";
    j["num_classes"] = k;
    j["input_dim"] = d;
    j["weights"] = rows_of(p, k + 1, d);
    j["biases"] = std::vector<double>(p.begin() + static_cast<std::ptrdiff_t>((k + 1) * d),
                                      p.end());
  } else {
    const auto& mlp = std::get<MlpScorer>(scorer);
    const auto p = mlp.parameters();
    const std::size_t h = mlp.hidden();
    j["architecture"] = "mlp";
    j["num_classes"] = k;
    j["input_dim"] = d;
    j["hidden"] = h;
    j["hidden_weights"] = rows_of(p, h, d);
    j["hidden_biases"] = std::vector<double>(
        p.begin() + static_cast<std::ptrdiff_t>(mlp.hidden_bias_offset()),
        p.begin() + static_cast<std::ptrdiff_t>(mlp.output_weight_offset()));
    j["output_weights"] = rows_of(p.subspan(mlp.output_weight_offset()), k + 1, h);
    j["output_biases"] = std::vector<double>(
        p.begin() + static_cast<std::ptrdiff_t>(mlp.output_bias_offset()), p.end());
  }
  json c;
  c["loss"] = std::string(to_string(config.loss_kind));
  c["gamma"] = config.gamma.value();
  c["epochs"] = config.epochs;
  c["batch_size"] = config.batch_size;
  c["learning_rate"] = config.learning_rate;
  c["warmup_fraction"] = config.warmup_fraction;
  c["seed"] = config.seed;
  c["architecture"] = std::string(to_string(config.architecture));
  c["hidden"] = config.hidden;
  j["config"] = c;
  if (std::isfinite(threshold)) j["threshold"] = threshold;
  return j.dump(1);
}

Scorer scorer_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("malformed checkpoint JSON: ") + e.what());
  }
  try {
    if (j.value("format", "") != "ncrl-scorer") {
      throw std::runtime_error("not a scorer checkpoint");
    }
    const auto k = j.at("num_classes").get<std::size_t>();
    const auto d = j.at("input_dim").get<std::size_t>();
    const Architecture arch = parse_architecture(j.at("architecture").get<std::string>());
    auto read_vec = [&](const char* key, std::size_t n, std::span<double> out) {
      const auto v = j.at(key).get<std::vector<double>>();
      if (v.size() != n) {
        throw std::runtime_error(std::string("checkpoint field '") + key + "' must have " +
                                 std::to_string(n) + " entries");
      }
      std::copy(v.begin(), v.end(), out.begin());
    };
    if (arch == Architecture::linear) {
      LinearScorer s(k, d);
      auto p = s.parameters();
      read_rows(j, "weights", k + 1, d, p);
      read_vec("biases", k + 1, p.subspan((k + 1) * d));
      return s;
    }
    const auto h = j.at("hidden").get<std::size_t>();
    MlpScorer s(k, d, h);
    auto p = s.parameters();
    read_rows(j, "hidden_weights", h, d, p);
    read_vec("hidden_biases", h, p.subspan(s.hidden_bias_offset()));
    read_rows(j, "output_weights", k + 1, h, p.subspan(s.output_weight_offset()));
    read_vec("output_biases", k + 1, p.subspan(s.output_bias_offset()));
    return s;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("invalid checkpoint: ") + e.what());
  }
}

void save_scorer(const Scorer& scorer, const TrainConfig& config,
                 const std::filesystem::path& path, double threshold) {
  write_file_atomic(path, scorer_to_json(scorer, config, threshold) + "\n");
}

Scorer load_scorer(const std::filesystem::path& path) {
  return scorer_from_json(read_file(path));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  Checkpoint ck{scorer_from_json(text), std::nullopt,
                std::numeric_limits<double>::quiet_NaN()};
  const json j = json::parse(text);
  try {
    if (j.contains("config") && j["config"].contains("loss")) {
      ck.loss = parse_loss_kind(j["config"]["loss"].get<std::string>());
    }
    if (j.contains("threshold")) ck.threshold = j["threshold"].get<double>();
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("invalid checkpoint: ") + e.what());
  }
  return ck;
}

std::map<std::string, std::string> read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": expected 'key = value'");
    }
    std::string key = trim(std::string_view(t).substr(0, eq));
    if (key.empty()) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": empty key");
    }
    out[std::move(key)] = trim(std::string_view(t).substr(eq + 1));
  }
  return out;
}

}  // namespace ncrl
