#include "blockcheck/perm.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <string>

namespace bc {

Permutation::Permutation(std::vector<int> image) : image_(std::move(image)) {
  std::set<int> seen(image_.begin(), image_.end());
  if (seen.size() != image_.size() ||
      (!image_.empty() &&
       (*seen.begin() != 1 || *seen.rbegin() != static_cast<int>(image_.size()))))
    throw std::invalid_argument("not a permutation of {1..n}");
}

Permutation Permutation::identity(int n) {
  std::vector<int> img(n);
  std::iota(img.begin(), img.end(), 1);
  return Permutation(std::move(img));
}

int Permutation::operator()(int i) const {
  if (i < 1 || i > size()) return i;
  return image_[i - 1];
}

Permutation Permutation::inverse() const {
  std::vector<int> inv(image_.size());
  for (size_t i = 0; i < image_.size(); ++i) inv[image_[i] - 1] = static_cast<int>(i) + 1;
  return Permutation(std::move(inv));
}

std::string Permutation::to_string() const {
  std::string s = "<";
  for (size_t i = 0; i < image_.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(image_[i]);
  }
  return s + ">";
}

Permutation derived_permutation(const Permutation& pi, const Permutation& rho,
                                int k) {
  const int n = pi.size();
  const int m = rho.size();
  if (k < 1 || k > n) throw std::invalid_argument("selected index out of range");
  std::vector<int> img(n + m - 1);
  for (int i = 1; i <= n + m - 1; ++i) {
    int v;
    if (i < k) {
      v = pi(i) < pi(k) ? pi(i) : pi(i) + m - 1;
    } else if (i < k + m) {
      v = pi(k) + rho(i - k + 1) - 1;
    } else {
      v = pi(i - m + 1) < pi(k) ? pi(i - m + 1) : pi(i - m + 1) + m - 1;
    }
    img[i - 1] = v;
  }
  return Permutation(std::move(img));
}

bool is_safe_position(const Permutation& pi, int i) {
  for (int j = 1; j <= pi.size(); ++j)
    if (pi(j) < pi(i) && j >= i) return false;
  return true;
}

std::vector<Permutation> all_permutations(int n) {
  std::vector<int> img(n);
  std::iota(img.begin(), img.end(), 1);
  std::vector<Permutation> out;
  do {
    out.push_back(Permutation(img));
  } while (std::next_permutation(img.begin(), img.end()));
  return out;
}

}  // namespace bc
