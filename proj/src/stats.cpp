#include "coadapt/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace coadapt {

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::vector<double> moving_average(const std::vector<double>& v, int window) {
  if (window < 1) throw std::invalid_argument("moving average window must be >= 1");
  std::vector<double> out(v.size());
  double running = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    running += v[i];
    if (i >= static_cast<std::size_t>(window)) running -= v[i - window];
    const std::size_t count = std::min<std::size_t>(i + 1, window);
    out[i] = running / static_cast<double>(count);
  }
  return out;
}

namespace {

// Number of arrangements of m + n items giving each value of U, where U
// counts (a, b) pairs with a > b.
std::vector<double> u_distribution(int m, int n) {
  // counts[i][j] is a vector over u for i a-items and j b-items.
  std::vector<std::vector<std::vector<double>>> counts(
      m + 1, std::vector<std::vector<double>>(n + 1));
  for (int i = 0; i <= m; ++i) {
    for (int j = 0; j <= n; ++j) {
      std::vector<double>& c = counts[i][j];
      c.assign(i * j + 1, 0.0);
      if (i == 0 || j == 0) {
        c[0] = 1.0;
        continue;
      }
      // Largest item is an a (beats all j b-items) or a b.
      const auto& with_a = counts[i - 1][j];
      for (std::size_t u = 0; u < with_a.size(); ++u) c[u + j] += with_a[u];
      const auto& with_b = counts[i][j - 1];
      for (std::size_t u = 0; u < with_b.size(); ++u) c[u] += with_b[u];
    }
  }
  return counts[m][n];
}

}  // namespace

double mann_whitney_less(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("empty sample");
  const int m = static_cast<int>(a.size());
  const int n = static_cast<int>(b.size());
  double u = 0.0;
  for (double x : a) {
    for (double y : b) {
      if (x > y) u += 1.0;
      else if (x == y) u += 0.5;
    }
  }

  std::vector<double> pooled(a);
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::sort(pooled.begin(), pooled.end());
  const bool ties = std::adjacent_find(pooled.begin(), pooled.end()) != pooled.end();

  if (!ties && m <= 50 && n <= 50) {
    const std::vector<double> dist = u_distribution(m, n);
    const double total = std::accumulate(dist.begin(), dist.end(), 0.0);
    double tail = 0.0;
    for (int k = 0; k <= static_cast<int>(u); ++k) tail += dist[k];
    return std::clamp(tail / total, std::numeric_limits<double>::min(), 1.0);
  }

  // Normal approximation with tie correction.
  const double nn = static_cast<double>(m + n);
  double tie_term = 0.0;
  for (std::size_t i = 0; i < pooled.size();) {
    std::size_t j = i;
    while (j < pooled.size() && pooled[j] == pooled[i]) ++j;
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  const double mu = 0.5 * m * n;
  const double var = m * n / 12.0 * ((nn + 1.0) - tie_term / (nn * (nn - 1.0)));
  if (var <= 0.0) return 0.5;
  const double z = (u - mu) / std::sqrt(var);
  const double p = 0.5 * std::erfc(-z / std::sqrt(2.0));
  return std::clamp(p, std::numeric_limits<double>::min(), 1.0);
}

}  // namespace coadapt
