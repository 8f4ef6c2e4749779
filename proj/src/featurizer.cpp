#include "ncrl/featurizer.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>

#include "ncrl/rng.hpp"

namespace ncrl {
namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

std::vector<std::vector<double>> hashing_featurizer(std::span<const std::string> texts,
                                                    std::size_t dim, std::uint64_t seed) {
  if (dim == 0) throw std::invalid_argument("featurizer dim must be >= 1");
  std::vector<std::vector<double>> rows;
  rows.reserve(texts.size());
  for (const std::string& text : texts) {
    std::vector<double> row(dim, 0.0);
    for (const std::string& tok : tokenize(text)) {
      const std::uint64_t h = derive_seed(seed, fnv1a(tok));
      const double sign = (h >> 63) ? -1.0 : 1.0;
      row[static_cast<std::size_t>(h % dim)] += sign;
    }
    double norm = 0.0;
    for (double v : row) norm += v * v;
    if (norm > 0.0) {
      norm = std::sqrt(norm);
      for (double& v : row) v /= norm;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace ncrl
