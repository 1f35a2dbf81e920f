#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <vector>

namespace linshap {

// A coalition of features drawn from {0, ..., universe_size - 1}.
// Members are kept sorted and unique.
class FeatureSubset {
 public:
  FeatureSubset() = default;
  FeatureSubset(std::size_t universe_size, std::vector<std::size_t> members);
  FeatureSubset(std::size_t universe_size, std::initializer_list<std::size_t> members)
      : FeatureSubset(universe_size, std::vector<std::size_t>(members)) {}

  static FeatureSubset empty(std::size_t universe_size);
  static FeatureSubset full(std::size_t universe_size);
  // Bit j of `mask` selects feature j. Requires universe_size <= 64.
  static FeatureSubset from_mask(std::size_t universe_size, std::uint64_t mask);

  std::size_t universe_size() const noexcept { return universe_size_; }
  std::size_t size() const noexcept { return members_.size(); }
  bool empty() const noexcept { return members_.empty(); }
  const std::vector<std::size_t>& members() const noexcept { return members_; }

  bool contains(std::size_t feature) const;
  FeatureSubset complement() const;
  FeatureSubset with(std::size_t feature) const;

  friend bool operator==(const FeatureSubset&, const FeatureSubset&) = default;

 private:
  std::size_t universe_size_ = 0;
  std::vector<std::size_t> members_;
};

}  // namespace linshap
