#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "linshap/conditional.hpp"
#include "linshap/gaussian.hpp"

namespace linshap {

enum class TransformMode { kExact, kSampled };

// Per-feature transform pairs: the observational Shapley value of feature i
// for any linear model beta is
//
//   phi_i = beta * mean_transform[i] * mu + beta * x_transform[i] * x.
//
// Both families telescope: sum_i x_transform[i] = I and
// sum_i mean_transform[i] = -I.
struct TransformTensor {
  std::vector<Eigen::MatrixXd> mean_transform;
  std::vector<Eigen::MatrixXd> x_transform;
  TransformMode mode = TransformMode::kExact;
  std::uint64_t permutation_count = 0;   // 0 for exact
  std::optional<std::uint64_t> seed;     // absent for exact
  bool antithetic = false;
  std::string distribution_fingerprint;
  std::uint64_t ridge_count = 0;         // subsets that needed the ridge fallback

  std::size_t dim() const noexcept { return x_transform.size(); }
};

struct ExactOptions {
  std::size_t cap = 20;
  bool allow_above_cap = false;
  SolvePolicy solve;
  unsigned workers = 1;
};

// Enumerates all 2^N subsets in plain bitmask order. Each subset's
// conditional operator is computed once and credited to every feature:
// + W(|S|-1) for features in S and - W(|S|) for features outside S.
// With workers > 1 the mask range is split into contiguous slices whose
// partial sums are reduced in slice order.
TransformTensor exact_transforms(const GaussianSpec& spec, const ExactOptions& options = {});

struct SampledOptions {
  std::uint64_t permutations = 1000;
  std::uint64_t seed = 0;
  bool antithetic = false;
  SolvePolicy solve;
  unsigned workers = 1;
};

// Monte Carlo estimate over uniformly random feature orderings. Each ordering
// walks its prefix chain once, adding E-operator(prefix + i) - E-operator(prefix)
// to feature i. All orderings are drawn up front from one mt19937_64 stream;
// the result depends only on (seed, permutations, antithetic, workers).
// Antithetic mode also walks every ordering reversed, doubling the count.
TransformTensor sampled_transforms(const GaussianSpec& spec, const SampledOptions& options);

}  // namespace linshap
