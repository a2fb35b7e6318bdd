#pragma once

#include <stdexcept>
#include <vector>

namespace bc {

// A permutation on {1..n}, stored as the 1-based image <pi(1),...,pi(n)>.
// By convention pi(i) = i outside {1..n}.
class Permutation {
public:
  Permutation() = default;
  explicit Permutation(std::vector<int> image);
  static Permutation identity(int n);

  int size() const { return static_cast<int>(image_.size()); }
  int operator()(int i) const;          // pi(i), identity outside range
  Permutation inverse() const;
  const std::vector<int>& image() const { return image_; }

  bool operator==(const Permutation& o) const { return image_ == o.image_; }

  // Reorders 0-based items so that result[pi(i)-1] = items[i-1].
  template <typename T>
  std::vector<T> apply(const std::vector<T>& items) const {
    std::vector<T> out(items.size());
    for (size_t i = 0; i < items.size(); ++i)
      out[(*this)(static_cast<int>(i) + 1) - 1] = items[i];
    return out;
  }

  std::string to_string() const;

private:
  std::vector<int> image_;
};

// The derived permutation of a resolvent: pi orders the n-atom query, rho the
// m-atom clause body, k is the (1-based) selected position. Result acts on
// the n+m-1 atoms of the resolvent. Throws std::invalid_argument when k is
// out of range.
Permutation derived_permutation(const Permutation& pi, const Permutation& rho,
                                int k);

// True iff for all j, pi(j) < pi(i) implies j < i ("sufficiently late").
bool is_safe_position(const Permutation& pi, int i);

// Enumerate all permutations on {1..n} in lexicographic image order.
std::vector<Permutation> all_permutations(int n);

}  // namespace bc
