#include "linshap/subset.hpp"

#include <algorithm>
#include <string>

#include "linshap/error.hpp"

namespace linshap {

FeatureSubset::FeatureSubset(std::size_t universe_size, std::vector<std::size_t> members)
    : universe_size_(universe_size), members_(std::move(members)) {
  std::sort(members_.begin(), members_.end());
  members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
  if (!members_.empty() && members_.back() >= universe_size_) {
    throw InvalidArgument("feature index " + std::to_string(members_.back()) +
                          " outside universe of size " + std::to_string(universe_size_));
  }
}

FeatureSubset FeatureSubset::empty(std::size_t universe_size) {
  return FeatureSubset(universe_size, std::vector<std::size_t>{});
}

FeatureSubset FeatureSubset::full(std::size_t universe_size) {
  std::vector<std::size_t> all(universe_size);
  for (std::size_t j = 0; j < universe_size; ++j) all[j] = j;
  return FeatureSubset(universe_size, std::move(all));
}

FeatureSubset FeatureSubset::from_mask(std::size_t universe_size, std::uint64_t mask) {
  if (universe_size > 64) throw InvalidArgument("bitmask subsets support at most 64 features");
  if (universe_size < 64 && (mask >> universe_size) != 0) {
    throw InvalidArgument("mask has bits outside the universe");
  }
  std::vector<std::size_t> members;
  for (std::size_t j = 0; j < universe_size; ++j) {
    if ((mask >> j) & 1U) members.push_back(j);
  }
  return FeatureSubset(universe_size, std::move(members));
}

bool FeatureSubset::contains(std::size_t feature) const {
  return std::binary_search(members_.begin(), members_.end(), feature);
}

FeatureSubset FeatureSubset::complement() const {
  std::vector<std::size_t> rest;
  rest.reserve(universe_size_ - members_.size());
  auto it = members_.begin();
  for (std::size_t j = 0; j < universe_size_; ++j) {
    if (it != members_.end() && *it == j) {
      ++it;
    } else {
      rest.push_back(j);
    }
  }
  return FeatureSubset(universe_size_, std::move(rest));
}

FeatureSubset FeatureSubset::with(std::size_t feature) const {
  auto members = members_;
  members.push_back(feature);
  return FeatureSubset(universe_size_, std::move(members));
}

}  // namespace linshap
