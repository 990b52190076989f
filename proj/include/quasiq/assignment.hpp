#pragma once
//
// Assignments: one POVM outcome per site, stored as a string over '0'..'3'.
// The string form keeps file formats, map keys and debug output identical.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace quasiq {

using Assignment = std::string;

inline bool assignment_ok(const Assignment& a) {
  for (char c : a)
    if (c < '0' || c > '3') return false;
  return true;
}

inline void require_assignment(const Assignment& a, std::size_t n) {
  if (a.size() != n || !assignment_ok(a))
    throw std::invalid_argument("bad assignment '" + a + "' for " +
                                std::to_string(n) + " sites");
}

inline int symbol_at(const Assignment& a, std::size_t i) { return a[i] - '0'; }

/// Restriction of an assignment to a strictly increasing site subset.
inline Assignment restrict_to(const Assignment& a,
                              const std::vector<std::size_t>& sites) {
  Assignment r;
  r.reserve(sites.size());
  for (std::size_t s : sites) {
    if (s >= a.size()) throw std::out_of_range("restrict_to: site out of range");
    r.push_back(a[s]);
  }
  return r;
}

/// Base-4 index of a pattern; the leftmost site is the most significant digit,
/// matching the tensor-product convention of kron().
inline std::size_t pattern_index(const Assignment& a) {
  std::size_t x = 0;
  for (char c : a) x = 4 * x + std::size_t(c - '0');
  return x;
}

inline Assignment pattern_of_index(std::size_t idx, std::size_t len) {
  Assignment a(len, '0');
  for (std::size_t i = len; i-- > 0;) {
    a[i] = char('0' + (idx & 3));
    idx >>= 2;
  }
  return a;
}

inline std::size_t pow4(std::size_t k) { return std::size_t(1) << (2 * k); }

/// All k-subsets of {0..n-1} in lexicographic order.
inline std::vector<std::vector<std::size_t>> k_subsets(std::size_t n, std::size_t k) {
  std::vector<std::vector<std::size_t>> out;
  if (k > n) return out;
  std::vector<std::size_t> cur(k);
  for (std::size_t i = 0; i < k; ++i) cur[i] = i;
  for (;;) {
    out.push_back(cur);
    // advance
    std::size_t i = k;
    while (i-- > 0) {
      if (cur[i] != i + n - k) {
        ++cur[i];
        for (std::size_t j = i + 1; j < k; ++j) cur[j] = cur[j - 1] + 1;
        break;
      }
      if (i == 0) return out;
    }
    if (k == 0) return out;
  }
}

inline std::size_t binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::size_t r = 1;
  for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace quasiq
