#include "linshap/transforms.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>
#include <thread>

#include "linshap/error.hpp"
#include "regression_block.hpp"

namespace linshap {

namespace {

struct Accumulator {
  std::vector<Eigen::MatrixXd> on_mean;
  std::vector<Eigen::MatrixXd> on_x;
  std::uint64_t ridge_count = 0;

  explicit Accumulator(std::size_t n)
      : on_mean(n, Eigen::MatrixXd::Zero(n, n)), on_x(n, Eigen::MatrixXd::Zero(n, n)) {}

  void merge(const Accumulator& other) {
    for (std::size_t i = 0; i < on_x.size(); ++i) {
      on_mean[i] += other.on_mean[i];
      on_x[i] += other.on_x[i];
    }
    ridge_count += other.ridge_count;
  }
};

// Runs `work(slice_index, begin, end)` over `workers` contiguous slices of
// [0, total) and returns the per-slice results in slice order.
template <typename Work>
std::vector<Accumulator> run_sliced(std::uint64_t total, unsigned workers, std::size_t n,
                                    Work work) {
  workers = std::max(1U, workers);
  if (total < workers) workers = static_cast<unsigned>(std::max<std::uint64_t>(total, 1));
  std::vector<Accumulator> parts(workers, Accumulator(n));
  auto bounds = [&](unsigned w) { return total * w / workers; };
  if (workers == 1) {
    work(parts[0], 0, total);
    return parts;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> threads;
    threads.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      threads.emplace_back([&, w] {
        try {
          work(parts[w], bounds(w), bounds(w + 1));
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return parts;
}

Accumulator reduce(std::vector<Accumulator> parts) {
  Accumulator total = std::move(parts.front());
  for (std::size_t w = 1; w < parts.size(); ++w) total.merge(parts[w]);
  return total;
}

TransformTensor finish(Accumulator acc, TransformMode mode, const GaussianSpec& spec) {
  TransformTensor t;
  t.mean_transform = std::move(acc.on_mean);
  t.x_transform = std::move(acc.on_x);
  t.mode = mode;
  t.ridge_count = acc.ridge_count;
  t.distribution_fingerprint = spec.fingerprint();
  return t;
}

}  // namespace

TransformTensor exact_transforms(const GaussianSpec& spec, const ExactOptions& options) {
  const std::size_t n = spec.dim();
  if (n == 0) throw InvalidArgument("cannot build transforms for an empty distribution");
  if (n > options.cap && !options.allow_above_cap) {
    throw CapExceeded("exact enumeration over " + std::to_string(n) +
                      " features exceeds the cap of " + std::to_string(options.cap));
  }
  if (n > 62) throw CapExceeded("exact enumeration supports at most 62 features");

  std::vector<double> weight(n);
  for (std::size_t s = 0; s < n; ++s) weight[s] = shapley_weight(s, n);

  const std::uint64_t subsets = std::uint64_t{1} << n;
  const Eigen::MatrixXd& cov = spec.covariance();

  auto work = [&](Accumulator& acc, std::uint64_t begin, std::uint64_t end) {
    std::vector<std::size_t> known;
    std::vector<std::size_t> rest;
    known.reserve(n);
    rest.reserve(n);
    Eigen::MatrixXd on_x(n, n);
    Eigen::MatrixXd on_mean(n, n);
    for (std::uint64_t mask = begin; mask < end; ++mask) {
      known.clear();
      rest.clear();
      for (std::size_t j = 0; j < n; ++j) ((mask >> j) & 1U ? known : rest).push_back(j);
      bool ridged = false;
      const Eigen::MatrixXd block = detail::regression_block(cov, known, rest, options.solve, ridged);
      acc.ridge_count += ridged ? 1 : 0;
      detail::fill_on_x(on_x, known, rest, block);
      detail::fill_on_mean(on_mean, known, rest, block);

      const std::size_t s = known.size();
      for (std::size_t i = 0; i < n; ++i) {
        if ((mask >> i) & 1U) {
          // S plays the role of (prefix + i) for prefix = S \ {i}.
          const double w = weight[s - 1];
          acc.on_x[i] += w * on_x;
          acc.on_mean[i] += w * on_mean;
        } else {
          const double w = weight[s];
          acc.on_x[i] -= w * on_x;
          acc.on_mean[i] -= w * on_mean;
        }
      }
    }
  };

  TransformTensor t =
      finish(reduce(run_sliced(subsets, options.workers, n, work)), TransformMode::kExact, spec);
  return t;
}

TransformTensor sampled_transforms(const GaussianSpec& spec, const SampledOptions& options) {
  const std::size_t n = spec.dim();
  if (n == 0) throw InvalidArgument("cannot build transforms for an empty distribution");
  if (options.permutations < 1) throw InvalidArgument("permutations must be >= 1");

  const std::uint64_t draws = options.permutations;
  std::vector<std::uint32_t> orders(draws * n);
  {
    std::mt19937_64 rng(options.seed);
    for (std::uint64_t p = 0; p < draws; ++p) {
      auto first = orders.begin() + static_cast<std::ptrdiff_t>(p * n);
      std::iota(first, first + static_cast<std::ptrdiff_t>(n), 0U);
      std::shuffle(first, first + static_cast<std::ptrdiff_t>(n), rng);
    }
  }
  const std::uint64_t walks = options.antithetic ? 2 * draws : draws;
  const Eigen::MatrixXd& cov = spec.covariance();

  auto work = [&](Accumulator& acc, std::uint64_t begin, std::uint64_t end) {
    detail::CholeskyChain chain(cov, options.solve);
    std::vector<char> in_known(n);
    std::vector<std::size_t> order(n);
    std::vector<std::size_t> sorted_known;
    std::vector<std::size_t> rest;
    rest.reserve(n);
    Eigen::MatrixXd prev_x(n, n);
    Eigen::MatrixXd prev_mean(n, n);
    Eigen::MatrixXd cur_x(n, n);
    Eigen::MatrixXd cur_mean(n, n);

    for (std::uint64_t w = begin; w < end; ++w) {
      const std::uint64_t p = options.antithetic ? w / 2 : w;
      const bool reversed = options.antithetic && (w % 2 == 1);
      for (std::size_t k = 0; k < n; ++k) {
        order[k] = orders[p * n + (reversed ? n - 1 - k : k)];
      }

      chain.reset();
      bool chain_ok = true;
      std::fill(in_known.begin(), in_known.end(), 0);
      prev_x.setZero();
      prev_mean.setIdentity();

      for (std::size_t k = 0; k < n; ++k) {
        const std::size_t feature = order[k];
        in_known[feature] = 1;
        rest.clear();
        for (std::size_t j = 0; j < n; ++j) {
          if (!in_known[j]) rest.push_back(j);
        }
        chain_ok = chain_ok && chain.push(feature);
        if (chain_ok) {
          const Eigen::MatrixXd block = chain.regression(rest);
          detail::fill_on_x(cur_x, chain.known(), rest, block);
          detail::fill_on_mean(cur_mean, chain.known(), rest, block);
        } else {
          sorted_known.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k + 1));
          std::sort(sorted_known.begin(), sorted_known.end());
          bool ridged = false;
          const Eigen::MatrixXd block =
              detail::regression_block(cov, sorted_known, rest, options.solve, ridged);
          acc.ridge_count += ridged ? 1 : 0;
          detail::fill_on_x(cur_x, sorted_known, rest, block);
          detail::fill_on_mean(cur_mean, sorted_known, rest, block);
        }
        acc.on_x[feature] += cur_x - prev_x;
        acc.on_mean[feature] += cur_mean - prev_mean;
        std::swap(prev_x, cur_x);
        std::swap(prev_mean, cur_mean);
      }
    }
  };

  Accumulator acc = reduce(run_sliced(walks, options.workers, n, work));
  const double scale = static_cast<double>(walks);
  for (std::size_t i = 0; i < n; ++i) {
    acc.on_x[i] /= scale;
    acc.on_mean[i] /= scale;
  }
  TransformTensor t = finish(std::move(acc), TransformMode::kSampled, spec);
  t.permutation_count = walks;
  t.seed = options.seed;
  t.antithetic = options.antithetic;
  return t;
}

}  // namespace linshap
