#include "csmusic/support.hpp"

#include <algorithm>
#include <stdexcept>

namespace csmusic {

SupportSet::SupportSet(std::vector<int> indices) : indices_(std::move(indices)) {
  std::sort(indices_.begin(), indices_.end());
  if (!indices_.empty() && indices_.front() < 0) {
    throw std::invalid_argument("SupportSet: negative index");
  }
  if (std::adjacent_find(indices_.begin(), indices_.end()) != indices_.end()) {
    throw std::invalid_argument("SupportSet: duplicate index");
  }
}

bool SupportSet::contains(int j) const {
  return std::binary_search(indices_.begin(), indices_.end(), j);
}

int SupportSet::max_index() const {
  return indices_.empty() ? -1 : indices_.back();
}

SupportSet SupportSet::set_union(const SupportSet& other) const {
  std::vector<int> out;
  out.reserve(indices_.size() + other.indices_.size());
  std::set_union(indices_.begin(), indices_.end(), other.indices_.begin(),
                 other.indices_.end(), std::back_inserter(out));
  SupportSet s;
  s.indices_ = std::move(out);
  return s;
}

SupportSet SupportSet::set_difference(const SupportSet& other) const {
  std::vector<int> out;
  std::set_difference(indices_.begin(), indices_.end(), other.indices_.begin(),
                      other.indices_.end(), std::back_inserter(out));
  SupportSet s;
  s.indices_ = std::move(out);
  return s;
}

int SupportSet::difference_size(const SupportSet& other) const {
  int count = 0;
  for (int j : indices_) {
    if (!other.contains(j)) ++count;
  }
  return count;
}

std::vector<int> SupportSet::complement(int n) const {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(n) - indices_.size());
  auto it = indices_.begin();
  for (int j = 0; j < n; ++j) {
    if (it != indices_.end() && *it == j) {
      ++it;
    } else {
      out.push_back(j);
    }
  }
  return out;
}

}  // namespace csmusic
