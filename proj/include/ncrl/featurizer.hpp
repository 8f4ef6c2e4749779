#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ncrl {

/// Lowercased maximal runs of ASCII letters and digits.
std::vector<std::string> tokenize(std::string_view text);

/// Signed feature hashing of a bag of tokens into `dim` buckets, one
/// L2-normalized row per text. Empty text maps to the zero vector.
std::vector<std::vector<double>> hashing_featurizer(std::span<const std::string> texts,
                                                    std::size_t dim, std::uint64_t seed);

}  // namespace ncrl
