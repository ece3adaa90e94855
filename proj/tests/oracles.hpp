// Independent reference computations used by the tests. Nothing here calls
// the library's own arithmetic for the quantity being checked.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <vector>

namespace oracle {

// C(d+t, t) by Pascal's rule, additions only. Saturates at `cap`.
inline int64_t pascal(int64_t d, int64_t t, int64_t cap = int64_t{1} << 62) {
  std::vector<int64_t> row(static_cast<size_t>(t) + 1, 1);  // row[j] = C(i+j, j) for i = 0
  for (int64_t i = 1; i <= d; ++i)
    for (int64_t j = 1; j <= t; ++j) row[j] = std::min(cap, row[j] + row[j - 1]);
  return row[static_cast<size_t>(t)];
}

// Smallest v >= 1 with pred(v), by counting up.
inline int64_t first_true(const std::function<bool(int64_t)>& pred) {
  int64_t v = 1;
  while (!pred(v)) ++v;
  return v;
}

// Smallest v >= 1 with C(k+v, k) >= target, growing Pascal's triangle one
// row at a time.
inline int64_t first_reaching(int64_t k, int64_t target) {
  std::vector<int64_t> row(static_cast<size_t>(k) + 1, 1);  // row[j] = C(v+j, j)
  for (int64_t v = 1;; ++v) {
    for (int64_t j = 1; j <= k; ++j) row[j] += row[j - 1];
    if (row[static_cast<size_t>(k)] >= target) return v;
  }
}

// Minimal total advancement, in segments, to reverse m unit segments when
// at most d states are held at once (the input counts as one). A split after
// j segments costs j to reach the split, then the right part is reversed with
// one state fewer and the left with the same number.
class Schedule {
 public:
  int64_t operator()(int64_t m, int64_t d) {
    if (m == 1) return 0;
    if (d == 0) return kInf;
    auto key = std::make_pair(m, d);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    int64_t best = kInf;
    for (int64_t j = 1; j < m; ++j) {
      int64_t r = (*this)(m - j, d - 1), l = (*this)(j, d);
      if (r == kInf || l == kInf) continue;
      best = std::min(best, j + r + l);
    }
    memo_[key] = best;
    return best;
  }
  static constexpr int64_t kInf = std::numeric_limits<int64_t>::max() / 4;

 private:
  std::map<std::pair<int64_t, int64_t>, int64_t> memo_;
};

// Central difference of a scalar function of one coordinate.
inline double central(const std::function<double(double)>& g, double x, double h) {
  return (g(x + h) - g(x - h)) / (2 * h);
}

// Ordinary least squares y = a + b x, with R^2.
struct Fit {
  double intercept, slope, r2;
};
inline Fit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double b = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double a = (sy - b * sx) / n;
  double ss_res = 0, ss_tot = 0, mean = sy / n;
  for (size_t i = 0; i < x.size(); ++i) {
    double e = y[i] - (a + b * x[i]);
    ss_res += e * e;
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  return {a, b, ss_tot == 0 ? 1.0 : 1 - ss_res / ss_tot};
}

}  // namespace oracle
