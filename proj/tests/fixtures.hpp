#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

#include "mbfa/data.hpp"

namespace mbfa::testing {

// 12 classes (8 seen / 4 unseen), 30 instances each, 8 latent dimensions,
// visual features plus two side-information types.
inline SyntheticSpec zsl_spec(std::uint64_t seed, double sigma) {
  SyntheticSpec s;
  s.latent_dim = 8;
  s.class_count = 12;
  s.unseen_count = 4;
  s.instances_per_class = 30;
  s.latent_sigma = sigma;
  s.visual = {"visual", 32, sigma, {}, false};
  s.side_info = {{"attributes", 16, 0.0, {}, false}, {"word_vectors", 20, 0.0, {}, false}};
  s.seed = seed;
  return s;
}

// Each side-information type sees half of the latent coordinates.
inline SyntheticSpec complementary_spec(std::uint64_t seed, double sigma) {
  SyntheticSpec s = zsl_spec(seed, sigma);
  s.side_info[0].latent_support = {0, 1, 2, 3};
  s.side_info[1].latent_support = {4, 5, 6, 7};
  return s;
}

}  // namespace mbfa::testing
