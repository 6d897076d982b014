#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mff/errors.hpp"
#include "mff/numerics.hpp"
#include "mff/rng.hpp"
#include "mff/schedule.hpp"

namespace mff {

inline constexpr double kTiltQCap = 1e4;

// Digit weight vectors (a_1..a_{c1}) and (b_1..b_{c2}); every position of an
// A1 epoch spends the a-vector, every A2 position the b-vector.
struct ModelParams {
  std::uint32_t c1 = 2, c2 = 2;
  std::vector<double> a, b;
};

inline void validate_weights(const std::vector<double>& w, std::uint32_t c, const char* name) {
  if (w.size() != c)
    throw config_error(std::string(name) + ": expected " + std::to_string(c) + " weights, got " +
                       std::to_string(w.size()));
  double sum = 0.0;
  for (double x : w) {
    if (!(x > 0.0) || !(x < 1.0) || !std::isfinite(x))
      throw config_error(std::string(name) + ": weights must lie strictly in (0,1)");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw config_error(std::string(name) + ": weights sum to " + format_double(sum) +
                       ", expected 1 within 1e-12");
}

inline ModelParams make_params(std::uint32_t c1, std::uint32_t c2, std::vector<double> a,
                               std::vector<double> b) {
  if (c1 < 2 || c2 < 2) throw config_error("alphabet sizes must be at least 2");
  validate_weights(a, c1, "a");
  validate_weights(b, c2, "b");
  return ModelParams{c1, c2, std::move(a), std::move(b)};
}

namespace detail {

inline std::vector<double> log_vec(std::span<const double> w) {
  std::vector<double> lw(w.size());
  for (size_t i = 0; i < w.size(); ++i) lw[i] = std::log(w[i]);
  return lw;
}

// ln sum_i w_i^q
inline double log_moment(std::span<const double> w, double q) {
  std::vector<double> t(w.size());
  for (size_t i = 0; i < w.size(); ++i) t[i] = q * std::log(w[i]);
  return log_sum_exp(t);
}

// theta(q) = log_c sum_i w_i^q
inline double theta_w(std::span<const double> w, double c, double q) {
  return log_moment(w, q) / std::log(c);
}

// theta'(q) = (sum w^q ln w) / ((sum w^q) ln c), evaluated through the
// normalized tilt so large |q| cannot overflow
inline double theta_prime_w(std::span<const double> w, double c, double q) {
  std::vector<double> t(w.size());
  for (size_t i = 0; i < w.size(); ++i) t[i] = q * std::log(w[i]);
  std::vector<double> tw = softmax(t);
  double num = 0.0;
  for (size_t i = 0; i < w.size(); ++i) num += tw[i] * std::log(w[i]);
  return num / std::log(c);
}

// range of -theta' as q sweeps (+inf, -inf): (-ln max w / ln c, -ln min w / ln c)
inline std::pair<double, double> slope_range(std::span<const double> w, double c) {
  double wmin = w[0], wmax = w[0];
  for (double x : w) {
    wmin = std::min(wmin, x);
    wmax = std::max(wmax, x);
  }
  return {-std::log(wmax) / std::log(c), -std::log(wmin) / std::log(c)};
}

// Solve -theta'(q) = alpha by bisection.  -theta' is nonincreasing in q
// (theta is convex), so the root bracket is unambiguous.
inline double solve_tilt_q(std::span<const double> w, double c, double alpha) {
  auto [lo, hi] = slope_range(w, c);
  if (hi - lo < 1e-13) {
    // flat branch: every q gives the same exponent
    if (std::abs(alpha - lo) <= 1e-9) return 1.0;
    throw degeneracy_error("tilt: weights are uniform, exponent is pinned at " +
                           format_double(lo));
  }
  if (!(alpha > lo) || !(alpha < hi))
    throw std::domain_error("tilt: alpha " + format_double(alpha) +
                            " outside the attainable range (" + format_double(lo) + ", " +
                            format_double(hi) + ")");
  auto g = [&](double q) { return -theta_prime_w(w, c, q) - alpha; };  // decreasing in q
  double qlo = -2.0, qhi = 2.0;
  while (g(qlo) < 0.0) {
    qlo *= 2.0;
    if (qlo < -kTiltQCap)
      throw degeneracy_error("tilt: required q below -1e4; alpha too close to the range edge");
  }
  while (g(qhi) > 0.0) {
    qhi *= 2.0;
    if (qhi > kTiltQCap)
      throw degeneracy_error("tilt: required q above 1e4; alpha too close to the range edge");
  }
  for (int it = 0; it < 200 && qhi - qlo > 1e-15 * std::max(1.0, std::abs(qlo)); ++it) {
    double mid = 0.5 * (qlo + qhi);
    if (g(mid) >= 0.0)
      qlo = mid;
    else
      qhi = mid;
  }
  return 0.5 * (qlo + qhi);
}

inline std::vector<double> tilt_weights(std::span<const double> w, double q) {
  std::vector<double> t(w.size());
  for (size_t i = 0; i < w.size(); ++i) t[i] = q * std::log(w[i]);
  return softmax(t);
}

}  // namespace detail

// Weights of both alphabets after tilting, with the tilt parameters used.
struct TiltedWeights {
  std::vector<double> a, b;
  double q_a = 1.0, q_b = 1.0;
};

// same q on both alphabets: a_i^q / sum_k a_k^q and likewise for b
inline TiltedWeights tilt_q(const ModelParams& p, double q) {
  if (!std::isfinite(q) || std::abs(q) > kTiltQCap)
    throw config_error("tilt exponent must be finite with |q| <= 1e4");
  return TiltedWeights{detail::tilt_weights(p.a, q), detail::tilt_weights(p.b, q), q, q};
}

// separate exponents q_a, q_b chosen so both branches yield the same local
// exponent alpha: -theta_a'(q_a) = -theta_b'(q_b) = alpha
inline TiltedWeights tilt_alpha(const ModelParams& p, double alpha) {
  double qa = detail::solve_tilt_q(p.a, static_cast<double>(p.c1), alpha);
  double qb = detail::solve_tilt_q(p.b, static_cast<double>(p.c2), alpha);
  return TiltedWeights{detail::tilt_weights(p.a, qa), detail::tilt_weights(p.b, qb), qa, qb};
}

// A fully inhomogeneous product measure on the symbolic space: one digit
// distribution per position, chosen by the position's alphabet.
class DigitMeasure {
 public:
  DigitMeasure(EpochSchedule schedule, std::vector<double> wa, std::vector<double> wb,
               std::string tag)
      : sched_(std::move(schedule)), wa_(std::move(wa)), wb_(std::move(wb)), tag_(std::move(tag)) {
    if (wa_.size() != sched_.c1() || wb_.size() != sched_.c2())
      throw config_error("digit measure: weight vector sizes must match the alphabets");
    log_wa_ = detail::log_vec(wa_);
    log_wb_ = detail::log_vec(wb_);
    cum_a_ = cumulative(wa_);
    cum_b_ = cumulative(wb_);
  }

  const EpochSchedule& schedule() const { return sched_; }
  const std::vector<double>& a_weights() const { return wa_; }
  const std::vector<double>& b_weights() const { return wb_; }
  const std::vector<double>& log_a_weights() const { return log_wa_; }
  const std::vector<double>& log_b_weights() const { return log_wb_; }
  const std::string& tag() const { return tag_; }

  // log weight of a digit at 1-based position j
  double log_weight(std::uint64_t j, std::uint32_t digit) const {
    const auto& lw = sched_.alphabet_at(j) == Alphabet::A1 ? log_wa_ : log_wb_;
    return lw[digit];
  }

  double log_mass(const Word& w) const { return log_mass_prefix(w, w.depth()); }

  double log_mass_prefix(const Word& w, std::uint64_t n) const {
    if (n > w.depth()) throw std::out_of_range("prefix longer than word");
    double s = 0.0;
    for (std::uint64_t j = 0; j < n; ++j) s += log_weight(j + 1, w.digits[j]);
    return s;
  }

  std::uint32_t sample_digit(std::uint64_t j, double u) const {
    const auto& cum = sched_.alphabet_at(j) == Alphabet::A1 ? cum_a_ : cum_b_;
    std::uint32_t d = 0;
    while (d + 1 < cum.size() && u >= cum[d]) ++d;
    return d;
  }

 private:
  static std::vector<double> cumulative(const std::vector<double>& w) {
    // cum[d] = w_0 + ... + w_d; last entry forced to an unreachable bound
    std::vector<double> c(w.size());
    double s = 0.0;
    for (size_t i = 0; i < w.size(); ++i) {
      s += w[i];
      c[i] = s;
    }
    c.back() = 2.0;
    return c;
  }

  EpochSchedule sched_;
  std::vector<double> wa_, wb_;
  std::vector<double> log_wa_, log_wb_;
  std::vector<double> cum_a_, cum_b_;
  std::string tag_;
};

inline DigitMeasure base_measure(const EpochSchedule& s, const ModelParams& p) {
  if (p.c1 != s.c1() || p.c2 != s.c2())
    throw config_error("schedule and parameters disagree on alphabet sizes");
  return DigitMeasure(s, p.a, p.b, "base");
}

inline DigitMeasure tilted_measure_q(const EpochSchedule& s, const ModelParams& p, double q) {
  TiltedWeights t = tilt_q(p, q);
  return DigitMeasure(s, std::move(t.a), std::move(t.b), "tilted_q=" + format_double(q));
}

inline DigitMeasure tilted_measure_alpha(const EpochSchedule& s, const ModelParams& p,
                                         double alpha) {
  TiltedWeights t = tilt_alpha(p, alpha);
  return DigitMeasure(s, std::move(t.a), std::move(t.b),
                      "tilted_alpha=" + format_double(alpha));
}

// Draw of sample `index` in a batch; every digit is a pure function of
// (seed, index, position), independent of any other draw.
inline Word sample_word(const DigitMeasure& m, std::uint64_t depth, std::uint64_t seed,
                        std::uint64_t index = 0) {
  if (depth > m.schedule().max_depth())
    throw std::out_of_range("sample depth exceeds max_depth");
  Word w;
  w.digits.resize(depth);
  for (std::uint64_t j = 0; j < depth; ++j)
    w.digits[j] = m.sample_digit(j + 1, counter_u01(seed, index, j + 1));
  return w;
}

}  // namespace mff
