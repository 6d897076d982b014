#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace mff {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Streaming log-sum-exp.  Keeps a running maximum so that exponents as
// extreme as q = -1e4 times a log-weight never overflow.
class OnlineLogSum {
 public:
  void add(double x) {
    if (x == kNegInf) return;
    if (x <= max_) {
      sum_ += std::exp(x - max_);
    } else {
      sum_ = sum_ * std::exp(max_ - x) + 1.0;
      max_ = x;
    }
  }
  double value() const {
    if (sum_ == 0.0) return kNegInf;
    return max_ + std::log(sum_);
  }

 private:
  double max_ = kNegInf;
  double sum_ = 0.0;
};

inline double log_sum_exp(std::span<const double> xs) {
  double m = kNegInf;
  for (double x : xs) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

// log(e^la - e^lb), requires la >= lb; equal arguments give -inf
inline double log_diff_exp(double la, double lb) {
  if (lb == kNegInf) return la;
  if (lb >= la) return kNegInf;
  return la + std::log1p(-std::exp(lb - la));
}

// normalized e^{t_i} / sum_k e^{t_k}
inline std::vector<double> softmax(std::span<const double> t) {
  double m = kNegInf;
  for (double x : t) m = std::max(m, x);
  std::vector<double> w(t.size());
  double s = 0.0;
  for (size_t i = 0; i < t.size(); ++i) {
    w[i] = std::exp(t[i] - m);
    s += w[i];
  }
  for (double& x : w) x /= s;
  return w;
}

inline std::uint64_t isqrt_u64(std::uint64_t n) {
  if (n == 0) return 0;
  auto r = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(n)));
  while (r > 0 && r > n / r) --r;
  while ((r + 1) <= n / (r + 1)) ++r;
  return r;
}

// shortest decimal form that round-trips to the same double
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, p);
}

}  // namespace mff
