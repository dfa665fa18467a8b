// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CROWDSENSE_SITE_SUBSET_HPP_
#define CROWDSENSE_SITE_SUBSET_HPP_

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace crowdsense {

// A sorted, duplicate-free set of site indices. Indices refer to the fixed
// site ordering of a SiteField (users first, then grid sites), or to local
// ground-set positions when used with a SetFunctionOracle.
class SiteSubset {
 public:
  using value_type = std::size_t;
  using const_iterator = std::vector<std::size_t>::const_iterator;

  SiteSubset() = default;
  SiteSubset(std::initializer_list<std::size_t> members)
      : SiteSubset(std::vector<std::size_t>(members)) {}
  explicit SiteSubset(std::vector<std::size_t> members)
      : members_(std::move(members)) {
    std::sort(members_.begin(), members_.end());
    if (std::adjacent_find(members_.begin(), members_.end()) !=
        members_.end()) {
      throw std::invalid_argument("SiteSubset: duplicate index");
    }
  }

  static SiteSubset from_mask(std::uint64_t mask) {
    SiteSubset s;
    for (std::size_t i = 0; mask != 0; ++i, mask >>= 1) {
      if (mask & 1u) s.members_.push_back(i);
    }
    return s;
  }

  // Elements 0..n-1.
  static SiteSubset range(std::size_t n) {
    SiteSubset s;
    s.members_.resize(n);
    for (std::size_t i = 0; i < n; ++i) s.members_[i] = i;
    return s;
  }

  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  const_iterator begin() const { return members_.begin(); }
  const_iterator end() const { return members_.end(); }
  std::size_t operator[](std::size_t k) const { return members_[k]; }
  const std::vector<std::size_t>& members() const { return members_; }

  bool contains(std::size_t i) const {
    return std::binary_search(members_.begin(), members_.end(), i);
  }

  bool is_subset_of(const SiteSubset& other) const {
    return std::includes(other.members_.begin(), other.members_.end(),
                         members_.begin(), members_.end());
  }

  bool disjoint_from(const SiteSubset& other) const {
    auto a = members_.begin();
    auto b = other.members_.begin();
    while (a != members_.end() && b != other.members_.end()) {
      if (*a == *b) return false;
      if (*a < *b) ++a; else ++b;
    }
    return true;
  }

  SiteSubset with(std::size_t i) const {
    SiteSubset s = *this;
    auto it = std::lower_bound(s.members_.begin(), s.members_.end(), i);
    if (it == s.members_.end() || *it != i) s.members_.insert(it, i);
    return s;
  }

  SiteSubset without(std::size_t i) const {
    SiteSubset s = *this;
    auto it = std::lower_bound(s.members_.begin(), s.members_.end(), i);
    if (it != s.members_.end() && *it == i) s.members_.erase(it);
    return s;
  }

  friend SiteSubset set_union(const SiteSubset& a, const SiteSubset& b) {
    SiteSubset s;
    s.members_.reserve(a.size() + b.size());
    std::set_union(a.begin(), a.end(), b.begin(), b.end(),
                   std::back_inserter(s.members_));
    return s;
  }

  friend SiteSubset set_difference(const SiteSubset& a, const SiteSubset& b) {
    SiteSubset s;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(s.members_));
    return s;
  }

  friend bool operator==(const SiteSubset&, const SiteSubset&) = default;
  friend auto operator<=>(const SiteSubset& a, const SiteSubset& b) {
    return a.members_ <=> b.members_;
  }

  friend std::ostream& operator<<(std::ostream& os, const SiteSubset& s) {
    os << '{';
    for (std::size_t k = 0; k < s.size(); ++k) {
      if (k) os << ',';
      os << s.members_[k];
    }
    return os << '}';
  }

 private:
  std::vector<std::size_t> members_;
};

struct SiteSubsetHash {
  std::size_t operator()(const SiteSubset& s) const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i : s) {
      h ^= static_cast<std::uint64_t>(i) + 0x9e3779b97f4a7c15ull + (h << 6) +
           (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

}  // namespace crowdsense

#endif  // CROWDSENSE_SITE_SUBSET_HPP_
