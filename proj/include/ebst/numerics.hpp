#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace ebst {

// log(sum_k exp(z_k)) with max-shift, so nothing overflows for |z_k| <= 700.
inline double log_sum_exp(std::span<const double> z) {
  if (z.empty()) throw std::domain_error("log_sum_exp: empty input");
  double zmax = *std::max_element(z.begin(), z.end());
  double acc = 0.0;
  for (double v : z) acc += std::exp(v - zmax);
  return zmax + std::log(acc);
}

inline double log_sum_exp(const std::vector<double>& z) {
  return log_sum_exp(std::span<const double>(z));
}

// p_k = exp(z_k - log_sum_exp(z)); sums to 1 and every entry is in (0, 1].
inline std::vector<double> softmax(std::span<const double> z) {
  double lse = log_sum_exp(z);
  std::vector<double> p(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) p[k] = std::exp(z[k] - lse);
  return p;
}

inline std::vector<double> softmax(const std::vector<double>& z) {
  return softmax(std::span<const double>(z));
}

// Index of the largest entry; ties go to the lowest index.
inline std::size_t argmax(std::span<const double> v) {
  if (v.empty()) throw std::domain_error("argmax: empty input");
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

}  // namespace ebst
