#pragma once

#include <cstddef>
#include <vector>

namespace csmusic {

// An ordered set of column indices, the object every recovery and tracking
// algorithm produces. Indices are strictly increasing and nonnegative; the
// upper bound (the ambient dimension n) is checked by the callers that know it.
class SupportSet {
 public:
  SupportSet() = default;
  // Sorts the input; throws std::invalid_argument on duplicates or negatives.
  explicit SupportSet(std::vector<int> indices);

  const std::vector<int>& indices() const { return indices_; }
  int size() const { return static_cast<int>(indices_.size()); }
  bool empty() const { return indices_.empty(); }
  int operator[](int i) const { return indices_[static_cast<std::size_t>(i)]; }
  bool contains(int j) const;
  int max_index() const;  // -1 when empty

  bool operator==(const SupportSet&) const = default;

  SupportSet set_union(const SupportSet& other) const;
  SupportSet set_difference(const SupportSet& other) const;
  // |this \ other|, the one-sided change count.
  int difference_size(const SupportSet& other) const;
  // [0, n) \ this, ascending.
  std::vector<int> complement(int n) const;

  auto begin() const { return indices_.begin(); }
  auto end() const { return indices_.end(); }

 private:
  std::vector<int> indices_;
};

}  // namespace csmusic
