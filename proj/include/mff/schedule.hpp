#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "mff/errors.hpp"
#include "mff/numerics.hpp"

namespace mff {

enum class Alphabet { A1, A2 };

inline constexpr std::uint64_t kDefaultMaxDepth = 1u << 20;

// Epoch schedule T_1 = 1 < T_2 < ... partitioning positions 1, 2, ... into
// alternating runs: positions in [T_{2k-1}, T_{2k}) draw from the first
// alphabet (size c1), positions in [T_{2k}, T_{2k+1}) from the second
// (size c2).  Boundaries above max_depth are not materialized; the last
// stored epoch extends through max_depth.
class EpochSchedule {
 public:
  static EpochSchedule squares(std::uint32_t c1, std::uint32_t c2,
                               std::uint64_t max_depth = kDefaultMaxDepth) {
    std::vector<std::uint64_t> t{1};
    if (max_depth >= 2) t.push_back(2);
    while (true) {
      std::uint64_t last = t.back();
      if (last > max_depth / last) break;  // last*last would exceed max_depth
      std::uint64_t next = last * last;
      if (next <= last) break;
      t.push_back(next);
    }
    return EpochSchedule(c1, c2, max_depth, std::move(t), "");
  }

  static EpochSchedule factorial(std::uint32_t c1, std::uint32_t c2,
                                 std::uint64_t max_depth = kDefaultMaxDepth) {
    std::vector<std::uint64_t> t{1};
    for (std::uint64_t k = 2;; ++k) {
      std::uint64_t last = t.back();
      if (last > max_depth / k) break;
      t.push_back(last * k);
    }
    return EpochSchedule(c1, c2, max_depth, std::move(t), "");
  }

  // T_{k+1} = max(T_k + 1, round(T_k * ratio)); the epoch-length ratio stays
  // bounded, so limit statements that need T_{k+1}/T_k -> inf degrade.
  static EpochSchedule geometric(std::uint32_t c1, std::uint32_t c2, double ratio,
                                 std::uint64_t max_depth = kDefaultMaxDepth) {
    if (!(ratio > 1.0) || !std::isfinite(ratio))
      throw config_error("geometric schedule: ratio must be a finite number > 1");
    std::vector<std::uint64_t> t{1};
    while (true) {
      std::uint64_t last = t.back();
      double nd = std::round(static_cast<double>(last) * ratio);
      std::uint64_t next =
          nd >= static_cast<double>(max_depth) ? max_depth : static_cast<std::uint64_t>(nd);
      if (next <= last) next = last + 1;
      if (next > max_depth) break;
      t.push_back(next);
      if (next == max_depth) break;
    }
    return EpochSchedule(c1, c2, max_depth, std::move(t),
                         "geometric schedule: epoch ratio is bounded, "
                         "alternation does not dominate asymptotically");
  }

  static EpochSchedule from_list(std::uint32_t c1, std::uint32_t c2,
                                 std::vector<std::uint64_t> t,
                                 std::uint64_t max_depth = kDefaultMaxDepth) {
    if (t.empty() || t.front() != 1)
      throw config_error("explicit schedule: first boundary must be 1");
    for (size_t i = 1; i < t.size(); ++i)
      if (t[i] <= t[i - 1])
        throw config_error("explicit schedule: boundaries must be strictly increasing");
    while (!t.empty() && t.back() > max_depth) t.pop_back();
    return EpochSchedule(c1, c2, max_depth, std::move(t),
                         "explicit schedule: divergence of the epoch ratio "
                         "was not verified");
  }

  std::uint32_t c1() const { return c1_; }
  std::uint32_t c2() const { return c2_; }
  std::uint64_t max_depth() const { return max_depth_; }
  const std::vector<std::uint64_t>& boundaries() const { return t_; }
  const std::string& warning() const { return warning_; }

  // alphabet of position j (1-based)
  Alphabet alphabet_at(std::uint64_t j) const {
    return epoch_of(j) % 2 == 0 ? Alphabet::A1 : Alphabet::A2;
  }

  std::uint32_t radix_at(std::uint64_t j) const {
    return alphabet_at(j) == Alphabet::A1 ? c1_ : c2_;
  }

  // N_n = #{ j <= n : position j uses the first alphabet }
  std::uint64_t count_a(std::uint64_t n) const {
    if (n == 0) return 0;
    check_depth(n);
    std::uint64_t total = 0;
    for (size_t k = 0; k < t_.size(); k += 2) {
      if (t_[k] > n) break;
      std::uint64_t hi = k + 1 < t_.size() ? t_[k + 1] - 1 : n;
      total += std::min(n, hi) - t_[k] + 1;
    }
    return total;
  }

  // log of the diameter of a depth-n cylinder: -(N_n ln c1 + (n-N_n) ln c2)
  double log_diameter(std::uint64_t n) const {
    if (n == 0) return 0.0;
    std::uint64_t na = count_a(n);
    return -(static_cast<double>(na) * std::log(static_cast<double>(c1_)) +
             static_cast<double>(n - na) * std::log(static_cast<double>(c2_)));
  }

 private:
  EpochSchedule(std::uint32_t c1, std::uint32_t c2, std::uint64_t max_depth,
                std::vector<std::uint64_t> t, std::string warning)
      : c1_(c1), c2_(c2), max_depth_(max_depth), t_(std::move(t)), warning_(std::move(warning)) {
    if (c1_ < 2 || c2_ < 2) throw config_error("alphabet sizes must be at least 2");
    if (max_depth_ < 1) throw config_error("max_depth must be at least 1");
    if (t_.empty() || t_.front() != 1)
      throw std::logic_error("schedule construction lost the leading boundary");
  }

  // 0-based index of the epoch containing position j
  size_t epoch_of(std::uint64_t j) const {
    if (j < 1) throw std::out_of_range("position must be >= 1");
    check_depth(j);
    size_t lo = 0, hi = t_.size();
    while (hi - lo > 1) {
      size_t mid = (lo + hi) / 2;
      if (t_[mid] <= j)
        lo = mid;
      else
        hi = mid;
    }
    return lo;
  }

  void check_depth(std::uint64_t n) const {
    if (n > max_depth_)
      throw std::out_of_range("position " + std::to_string(n) + " exceeds max_depth " +
                              std::to_string(max_depth_));
  }

  std::uint32_t c1_, c2_;
  std::uint64_t max_depth_;
  std::vector<std::uint64_t> t_;
  std::string warning_;
};

// Finite word over the mixed alphabets; digit j (0-based storage) belongs to
// position j+1 of the schedule.
struct Word {
  std::vector<std::uint32_t> digits;

  Word() = default;
  explicit Word(std::vector<std::uint32_t> d) : digits(std::move(d)) {}

  std::uint64_t depth() const { return digits.size(); }
  bool operator==(const Word&) const = default;

  Word prefix(std::uint64_t n) const {
    if (n > digits.size()) throw std::out_of_range("prefix longer than word");
    return Word(std::vector<std::uint32_t>(digits.begin(), digits.begin() + n));
  }
};

inline void validate_word(const EpochSchedule& s, const Word& w) {
  if (w.depth() > s.max_depth()) throw std::out_of_range("word deeper than max_depth");
  for (std::uint64_t j = 0; j < w.depth(); ++j)
    if (w.digits[j] >= s.radix_at(j + 1))
      throw config_error("digit " + std::to_string(w.digits[j]) + " at position " +
                         std::to_string(j + 1) + " is outside its alphabet");
}

inline Word make_word(const EpochSchedule& s, std::vector<std::uint32_t> digits) {
  Word w(std::move(digits));
  validate_word(s, w);
  return w;
}

// "0110" -> word; only alphabets up to size 10 have a string form
inline Word word_from_string(const EpochSchedule& s, const std::string& text) {
  std::vector<std::uint32_t> d;
  d.reserve(text.size());
  for (char ch : text) {
    if (ch < '0' || ch > '9') throw config_error("word strings use digits 0-9 only");
    d.push_back(static_cast<std::uint32_t>(ch - '0'));
  }
  return make_word(s, std::move(d));
}

inline std::uint64_t common_prefix_len(const Word& w, const Word& v) {
  std::uint64_t n = std::min(w.depth(), v.depth());
  std::uint64_t k = 0;
  while (k < n && w.digits[k] == v.digits[k]) ++k;
  return k;
}

// log of the ultrametric distance: diameter of the cylinder at the split.
// Words that agree on their common length compare as equal: -inf.
inline double log_distance(const EpochSchedule& s, const Word& w, const Word& v) {
  std::uint64_t k = common_prefix_len(w, v);
  if (k == std::min(w.depth(), v.depth())) return kNegInf;
  return s.log_diameter(k);
}

}  // namespace mff
