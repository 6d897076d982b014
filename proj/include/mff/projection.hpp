#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mff/errors.hpp"
#include "mff/measure.hpp"
#include "mff/numerics.hpp"
#include "mff/schedule.hpp"

namespace mff {

// Depth limit for queries that enter through a 64-bit float coordinate;
// beyond this the basic intervals are thinner than one ulp and the digit
// stream must be supplied directly.
inline constexpr std::uint64_t kFloatDepthLimit = 52;

// Natural projection to [0,1]: digit j contributes eps_j * |cylinder_j|.
// Diameters are kept as a running product of 1/radix so dyadic values stay
// exact in binary arithmetic.
inline double gamma_point(const EpochSchedule& s, const Word& w) {
  validate_word(s, w);
  double x = 0.0, len = 1.0;
  for (std::uint64_t j = 0; j < w.depth(); ++j) {
    len /= static_cast<double>(s.radix_at(j + 1));
    x += static_cast<double>(w.digits[j]) * len;
  }
  return x;
}

struct BasicInterval {
  Word word;
  double left = 0.0, right = 1.0;
  double log_length = 0.0;
};

inline BasicInterval interval_of_word(const EpochSchedule& s, const Word& w) {
  validate_word(s, w);
  double x = 0.0, len = 1.0;
  for (std::uint64_t j = 0; j < w.depth(); ++j) {
    len /= static_cast<double>(s.radix_at(j + 1));
    x += static_cast<double>(w.digits[j]) * len;
  }
  return BasicInterval{w, x, x + len, s.log_diameter(w.depth())};
}

// Depth-n basic interval containing x, with the left convention: when x is
// an endpoint shared by two intervals the left one is returned, matching
// the digit expansion that ends in maximal digits.
inline Word interval_containing(const EpochSchedule& s, double x, std::uint64_t n) {
  if (!(x >= 0.0) || !(x <= 1.0)) throw std::domain_error("x must lie in [0,1]");
  if (n > kFloatDepthLimit)
    throw config_error("float queries are limited to depth " +
                       std::to_string(kFloatDepthLimit) + "; supply a digit stream instead");
  Word w;
  w.digits.reserve(n);
  double left = 0.0, len = 1.0;
  for (std::uint64_t j = 0; j < n; ++j) {
    std::uint32_t r = s.radix_at(j + 1);
    double cl = len / static_cast<double>(r);
    std::uint32_t d = 0;
    if (x > left) {
      double t = (x - left) / cl;
      double fl = std::floor(t);
      d = static_cast<std::uint32_t>(fl);
      if (fl == t && d > 0) --d;  // x on a child boundary: take the left child
      if (d > r - 1) d = r - 1;
    }
    w.digits.push_back(d);
    left += static_cast<double>(d) * cl;
    len = cl;
  }
  return w;
}

enum class NeighborSide { Minus, Plus };

// Adjacent word at the same depth (mixed-radix increment/decrement);
// nullopt at the ends of the line.
inline std::optional<Word> neighbor_word(const EpochSchedule& s, const Word& w,
                                         NeighborSide side) {
  validate_word(s, w);
  Word v = w;
  std::uint64_t n = v.depth();
  if (side == NeighborSide::Plus) {
    std::uint64_t j = n;
    while (j > 0 && v.digits[j - 1] == s.radix_at(j) - 1) {
      v.digits[j - 1] = 0;
      --j;
    }
    if (j == 0) return std::nullopt;
    ++v.digits[j - 1];
  } else {
    std::uint64_t j = n;
    while (j > 0 && v.digits[j - 1] == 0) {
      v.digits[j - 1] = s.radix_at(j) - 1;
      --j;
    }
    if (j == 0) return std::nullopt;
    --v.digits[j - 1];
  }
  return v;
}

inline std::pair<std::optional<BasicInterval>, std::optional<BasicInterval>> neighbors(
    const EpochSchedule& s, const Word& w) {
  auto mk = [&](std::optional<Word> v) -> std::optional<BasicInterval> {
    if (!v) return std::nullopt;
    return interval_of_word(s, *v);
  };
  return {mk(neighbor_word(s, w, NeighborSide::Minus)),
          mk(neighbor_word(s, w, NeighborSide::Plus))};
}

// Length of the common prefix shared with the requested neighbor: the word
// minus its trailing run of extremal digits, minus the changed digit.
inline std::uint64_t neighbor_split_depth(const EpochSchedule& s, const Word& w,
                                          NeighborSide side) {
  validate_word(s, w);
  std::uint64_t n = w.depth();
  std::uint64_t run = 0;
  if (side == NeighborSide::Plus) {
    while (run < n && w.digits[n - 1 - run] == s.radix_at(n - run) - 1) ++run;
  } else {
    while (run < n && w.digits[n - 1 - run] == 0) ++run;
  }
  if (run == n) throw std::out_of_range("word has no neighbor on the requested side");
  return n - run - 1;
}

// Binary reflected code, digit-wise:  encode y_j = x_j xor x_{j-1} (x_0 = 0),
// decode y_j = x_1 xor ... xor x_j.  Mutually inverse; both preserve common
// prefix lengths.  Defined only where every position is binary.
inline void require_binary(const EpochSchedule& s, std::uint64_t depth) {
  for (std::uint64_t j = 1; j <= depth; ++j)
    if (s.radix_at(j) != 2)
      throw config_error("gray code requires a binary alphabet at every position");
}

inline Word gray_encode(const EpochSchedule& s, const Word& w) {
  validate_word(s, w);
  require_binary(s, w.depth());
  Word y;
  y.digits.resize(w.depth());
  std::uint32_t prev = 0;
  for (std::uint64_t j = 0; j < w.depth(); ++j) {
    y.digits[j] = w.digits[j] ^ prev;
    prev = w.digits[j];
  }
  return y;
}

inline Word gray_decode(const EpochSchedule& s, const Word& w) {
  validate_word(s, w);
  require_binary(s, w.depth());
  Word y;
  y.digits.resize(w.depth());
  std::uint32_t acc = 0;
  for (std::uint64_t j = 0; j < w.depth(); ++j) {
    acc ^= w.digits[j];
    y.digits[j] = acc;
  }
  return y;
}

// Symbolic isometry g used to transport the measure: the projected measure
// assigns interval I_v the mass of the cylinder g^{-1}(v).  For the Gray
// transport (g = prefix-xor decode) the preimage of an interval word is its
// gray encoding, which is what makes adjacent intervals' preimages differ
// in exactly one digit.
class IsometryCode {
 public:
  enum class Kind { Identity, GrayBinary, DigitPermutation };

  static IsometryCode identity() { return IsometryCode(Kind::Identity); }
  static IsometryCode gray_binary() { return IsometryCode(Kind::GrayBinary); }

  // perms map a symbolic digit to the interval digit it lands on
  static IsometryCode digit_permutation(std::vector<std::uint32_t> perm_a,
                                        std::vector<std::uint32_t> perm_b) {
    IsometryCode c(Kind::DigitPermutation);
    c.perm_a_ = std::move(perm_a);
    c.perm_b_ = std::move(perm_b);
    c.inv_a_ = invert(c.perm_a_, "a");
    c.inv_b_ = invert(c.perm_b_, "b");
    return c;
  }

  Kind kind() const { return kind_; }

  // symbolic digit whose image is `digit` at 1-based position pos;
  // prev is the previous interval digit (needed by the Gray transport)
  std::uint32_t preimage_digit(const EpochSchedule& s, std::uint64_t pos, std::uint32_t digit,
                               std::uint32_t prev) const {
    switch (kind_) {
      case Kind::Identity:
        return digit;
      case Kind::GrayBinary:
        if (s.radix_at(pos) != 2)
          throw config_error("gray code requires a binary alphabet at every position");
        return digit ^ prev;
      case Kind::DigitPermutation: {
        const auto& inv = s.alphabet_at(pos) == Alphabet::A1 ? inv_a_ : inv_b_;
        if (digit >= inv.size())
          throw config_error("digit permutation does not cover the alphabet");
        return inv[digit];
      }
    }
    throw std::logic_error("unreachable code kind");
  }

  Word preimage(const EpochSchedule& s, const Word& interval_word) const {
    validate_word(s, interval_word);
    Word y;
    y.digits.resize(interval_word.depth());
    std::uint32_t prev = 0;
    for (std::uint64_t j = 0; j < interval_word.depth(); ++j) {
      y.digits[j] = preimage_digit(s, j + 1, interval_word.digits[j], prev);
      prev = interval_word.digits[j];
    }
    return y;
  }

 private:
  explicit IsometryCode(Kind k) : kind_(k) {}

  static std::vector<std::uint32_t> invert(const std::vector<std::uint32_t>& p,
                                           const char* name) {
    std::vector<std::uint32_t> inv(p.size(), static_cast<std::uint32_t>(p.size()));
    for (std::uint32_t i = 0; i < p.size(); ++i) {
      if (p[i] >= p.size() || inv[p[i]] != p.size())
        throw config_error(std::string("digit permutation for alphabet ") + name +
                           " is not a bijection");
      inv[p[i]] = i;
    }
    return inv;
  }

  Kind kind_;
  std::vector<std::uint32_t> perm_a_, perm_b_, inv_a_, inv_b_;
};

// log mass the transported measure gives to the basic interval of a word
inline double nu_log_mass_interval(const DigitMeasure& m, const IsometryCode& code,
                                   const Word& interval_word) {
  return m.log_mass(code.preimage(m.schedule(), interval_word));
}

// Mass of a closed subinterval of [0,1], reported as a bracket: the exact
// part covered by maximal basic intervals above depth_cap, plus the
// boundary cells at the cap that are only partially covered.
struct LogMassBracket {
  double lower = kNegInf, upper = kNegInf;
  bool exact = true;
};

namespace detail {

struct BallCover {
  const DigitMeasure* m;
  const IsometryCode* code;
  double lo, hi;
  std::uint64_t cap;
  OnlineLogSum exact_sum;
  OnlineLogSum all_sum;
  bool has_partial = false;

  void walk(std::uint64_t level, double left, double len, double lm, std::uint32_t prev) {
    double right = left + len;
    if (right <= lo || left >= hi) return;  // zero-length overlap carries no mass
    if (left >= lo && right <= hi) {
      exact_sum.add(lm);
      all_sum.add(lm);
      return;
    }
    if (level == cap) {
      has_partial = true;
      all_sum.add(lm);
      return;
    }
    const EpochSchedule& s = m->schedule();
    std::uint32_t r = s.radix_at(level + 1);
    double cl = len / static_cast<double>(r);
    for (std::uint32_t d = 0; d < r; ++d) {
      std::uint32_t pd = code->preimage_digit(s, level + 1, d, prev);
      walk(level + 1, left + static_cast<double>(d) * cl, cl, lm + m->log_weight(level + 1, pd),
           d);
    }
  }
};

}  // namespace detail

inline LogMassBracket nu_log_mass_ball(const DigitMeasure& m, const IsometryCode& code, double x,
                                       double r, std::uint64_t depth_cap) {
  if (!(r > 0.0) || !std::isfinite(r)) throw std::domain_error("ball radius must be positive");
  if (depth_cap > kFloatDepthLimit)
    throw config_error("float queries are limited to depth " + std::to_string(kFloatDepthLimit));
  double lo = std::max(0.0, x - r), hi = std::min(1.0, x + r);
  LogMassBracket out;
  if (!(lo < hi)) return out;  // ball misses [0,1]
  detail::BallCover cover{&m, &code, lo, hi, depth_cap, {}, {}, false};
  cover.walk(0, 0.0, 1.0, 0.0, 0);
  out.lower = cover.exact_sum.value();
  out.upper = cover.all_sum.value();
  out.exact = !cover.has_partial;
  return out;
}

}  // namespace mff
