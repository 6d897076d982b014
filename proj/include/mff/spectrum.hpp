#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "mff/errors.hpp"
#include "mff/measure.hpp"
#include "mff/numerics.hpp"
#include "mff/schedule.hpp"

namespace mff {

enum class Side { A, B };

inline std::span<const double> side_weights(const ModelParams& p, Side s) {
  return s == Side::A ? std::span<const double>(p.a) : std::span<const double>(p.b);
}

inline double side_base(const ModelParams& p, Side s) {
  return static_cast<double>(s == Side::A ? p.c1 : p.c2);
}

// theta(q) = log_c sum_i w_i^q for the chosen weight vector
inline double theta(const ModelParams& p, Side s, double q) {
  return detail::theta_w(side_weights(p, s), side_base(p, s), q);
}

inline double theta_prime(const ModelParams& p, Side s, double q) {
  return detail::theta_prime_w(side_weights(p, s), side_base(p, s), q);
}

// Finite-depth scaling exponent: the depth-n partition sum equals
// |cylinder|^{-tau_n(q)}, which in closed form is the weighted mediant
//   [N_n ln(sum a^q) + (n-N_n) ln(sum b^q)] / [N_n ln c1 + (n-N_n) ln c2].
// It always lies between theta_a(q) and theta_b(q).
inline double tau_n(const ModelParams& p, const EpochSchedule& s, std::uint64_t n, double q) {
  if (n < 1) throw std::out_of_range("tau_n needs depth >= 1");
  double na = static_cast<double>(s.count_a(n));
  double nb = static_cast<double>(n - s.count_a(n));
  double num = na * detail::log_moment(p.a, q) + nb * detail::log_moment(p.b, q);
  double den =
      na * std::log(static_cast<double>(p.c1)) + nb * std::log(static_cast<double>(p.c2));
  return num / den;
}

// (limsup, liminf) of tau_n along the alternating epochs: the two branch
// exponents ordered as (max, min)
inline std::pair<double, double> tau_limits(const ModelParams& p, double q) {
  double ta = theta(p, Side::A, q);
  double tb = theta(p, Side::B, q);
  return {std::max(ta, tb), std::min(ta, tb)};
}

inline constexpr double kEnumBudgetLog = 24.0 * 0.6931471805599453;  // 2^24 cylinders

inline void check_enum_budget(const EpochSchedule& s, std::uint64_t n, const char* what) {
  if (-s.log_diameter(n) > kEnumBudgetLog + 1e-9)
    throw resource_error(std::string(what) + " at depth " + std::to_string(n) +
                         " exceeds the 2^24 cylinder budget");
}

namespace detail {

// depth-first walk over all words of depth n; fn(log_mass) per leaf
template <class F>
void for_each_leaf_mass(const DigitMeasure& m, std::uint64_t n, F&& fn) {
  const EpochSchedule& s = m.schedule();
  std::vector<const std::vector<double>*> lw(n);
  for (std::uint64_t j = 0; j < n; ++j)
    lw[j] = s.alphabet_at(j + 1) == Alphabet::A1 ? &m.log_a_weights() : &m.log_b_weights();
  std::vector<std::uint32_t> digit(n, 0);
  std::vector<double> part(n + 1, 0.0);
  std::uint64_t level = 0;
  while (true) {
    while (level < n) {
      part[level + 1] = part[level] + (*lw[level])[digit[level]];
      ++level;
    }
    fn(part[n]);
    // odometer step: bump the deepest position that still has digits left
    for (;;) {
      if (level == 0) return;
      --level;
      if (digit[level] + 1 < lw[level]->size()) {
        ++digit[level];
        break;
      }
      digit[level] = 0;
    }
  }
}

// same walk, also reporting the digits of each word
template <class F>
void for_each_word_mass(const DigitMeasure& m, std::uint64_t n, F&& fn) {
  const EpochSchedule& s = m.schedule();
  std::vector<const std::vector<double>*> lw(n);
  for (std::uint64_t j = 0; j < n; ++j)
    lw[j] = s.alphabet_at(j + 1) == Alphabet::A1 ? &m.log_a_weights() : &m.log_b_weights();
  std::vector<std::uint32_t> digit(n, 0);
  std::vector<double> part(n + 1, 0.0);
  std::uint64_t level = 0;
  while (true) {
    while (level < n) {
      part[level + 1] = part[level] + (*lw[level])[digit[level]];
      ++level;
    }
    fn(std::span<const std::uint32_t>(digit), part[n]);
    for (;;) {
      if (level == 0) return;
      --level;
      if (digit[level] + 1 < lw[level]->size()) {
        ++digit[level];
        break;
      }
      digit[level] = 0;
    }
  }
}

}  // namespace detail

// ln sum over all depth-n words of mass^q, by direct enumeration.  The slow
// route, kept deliberately separate from the closed form in tau_n.
inline double partition_sum_bruteforce(const DigitMeasure& m, std::uint64_t n, double q) {
  if (n < 1) throw std::out_of_range("partition sum needs depth >= 1");
  check_enum_budget(m.schedule(), n, "partition enumeration");
  OnlineLogSum acc;
  detail::for_each_leaf_mass(m, n, [&](double lm) { acc.add(q * lm); });
  return acc.value();
}

enum class SpectrumFn { ThetaA, ThetaB, TauUpper, TauLower };

namespace detail {

inline double legendre_branch(std::span<const double> w, double c, double alpha, double q_cap) {
  auto [lo, hi] = slope_range(w, c);
  if (alpha < lo - 1e-12 || alpha > hi + 1e-12) return kNegInf;  // infimum diverges
  if (hi - lo < 1e-13) return theta_w(w, c, 0.0);  // affine branch, value is flat
  // g(q) = alpha*q + theta(q) is convex with increasing g'(q) = alpha + theta'(q)
  auto gp = [&](double q) { return alpha + theta_prime_w(w, c, q); };
  double qlo = -q_cap, qhi = q_cap;
  if (gp(qlo) >= 0.0)
    qhi = qlo;
  else if (gp(qhi) <= 0.0)
    qlo = qhi;
  else
    for (int it = 0; it < 200 && qhi - qlo > 1e-13 * std::max(1.0, std::abs(qlo)); ++it) {
      double mid = 0.5 * (qlo + qhi);
      if (gp(mid) <= 0.0)
        qlo = mid;
      else
        qhi = mid;
    }
  double q = 0.5 * (qlo + qhi);
  return alpha * q + theta_w(w, c, q);
}

}  // namespace detail

// Legendre transform f*(alpha) = inf_q (alpha*q + f(q)) of a branch exponent
// or of the upper/lower tau envelope.  Returns -inf when the infimum
// diverges (alpha outside the subdifferential range).
inline double legendre(const ModelParams& p, SpectrumFn fn, double alpha, double q_cap = 64.0) {
  double c1 = static_cast<double>(p.c1), c2 = static_cast<double>(p.c2);
  switch (fn) {
    case SpectrumFn::ThetaA:
      return detail::legendre_branch(p.a, c1, alpha, q_cap);
    case SpectrumFn::ThetaB:
      return detail::legendre_branch(p.b, c2, alpha, q_cap);
    case SpectrumFn::TauLower: {
      // inf of a pointwise min is the min of the infima, exactly
      return std::min(detail::legendre_branch(p.a, c1, alpha, q_cap),
                      detail::legendre_branch(p.b, c2, alpha, q_cap));
    }
    case SpectrumFn::TauUpper: {
      auto [lo_a, hi_a] = detail::slope_range(p.a, c1);
      auto [lo_b, hi_b] = detail::slope_range(p.b, c2);
      if (alpha < std::min(lo_a, lo_b) - 1e-12 || alpha > std::max(hi_a, hi_b) + 1e-12)
        return kNegInf;
      // golden-section on the convex envelope alpha*q + max(theta_a, theta_b)
      auto g = [&](double q) {
        return alpha * q +
               std::max(detail::theta_w(p.a, c1, q), detail::theta_w(p.b, c2, q));
      };
      const double inv_phi = 0.6180339887498949;
      double a = -q_cap, b = q_cap;
      double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
      double f1 = g(x1), f2 = g(x2);
      for (int it = 0; it < 160; ++it) {
        if (f1 <= f2) {
          b = x2;
          x2 = x1;
          f2 = f1;
          x1 = b - inv_phi * (b - a);
          f1 = g(x1);
        } else {
          a = x1;
          x1 = x2;
          f1 = f2;
          x2 = a + inv_phi * (b - a);
          f2 = g(x2);
        }
      }
      return g(0.5 * (a + b));
    }
  }
  throw std::logic_error("unreachable spectrum function");
}

// Shannon entropy of a digit distribution in base c: -sum w ln w / ln c
inline double entropy_tilted(std::span<const double> w, double c) {
  double s = 0.0;
  for (double x : w) s -= x * std::log(x);
  return s / std::log(c);
}

// Open interval of exponents alpha attainable on both branches at once.
struct SpectrumDomain {
  double alpha_min = 0.0, alpha_max = 0.0;
  bool empty = false;
};

inline SpectrumDomain spectrum_domain(const ModelParams& p) {
  auto [lo_a, hi_a] = detail::slope_range(p.a, static_cast<double>(p.c1));
  auto [lo_b, hi_b] = detail::slope_range(p.b, static_cast<double>(p.c2));
  SpectrumDomain d;
  d.alpha_min = std::max(lo_a, lo_b);
  d.alpha_max = std::min(hi_a, hi_b);
  d.empty = !(d.alpha_min < d.alpha_max);
  return d;
}

// One point of the multifractal spectrum: tilts matched to alpha, branch
// entropies, and the dimension candidates they bound.
struct SpectrumPoint {
  double alpha = 0.0;
  double q_a = 0.0, q_b = 0.0;
  std::vector<double> a_tilde, b_tilde;
  double h_a = 0.0, h_b = 0.0;
  double f_dim = 0.0;   // min(h_a, h_b): the Hausdorff-side value
  double f_Dim = 0.0;   // max(h_a, h_b): the packing-side candidate
  double b_star = 0.0;  // Legendre value of the lower envelope
  double B_star = 0.0;  // Legendre value of the upper envelope
  bool Dim_valid = false;  // whether f_Dim agrees with B_star
};

inline SpectrumPoint spectrum_point(const ModelParams& p, double alpha) {
  SpectrumDomain d = spectrum_domain(p);
  if (d.empty || !(alpha > d.alpha_min) || !(alpha < d.alpha_max))
    throw std::domain_error("alpha " + format_double(alpha) +
                            " is not strictly inside the spectrum domain (" +
                            format_double(d.alpha_min) + ", " + format_double(d.alpha_max) + ")");
  TiltedWeights t = tilt_alpha(p, alpha);
  SpectrumPoint pt;
  pt.alpha = alpha;
  pt.q_a = t.q_a;
  pt.q_b = t.q_b;
  pt.h_a = entropy_tilted(t.a, static_cast<double>(p.c1));
  pt.h_b = entropy_tilted(t.b, static_cast<double>(p.c2));
  pt.a_tilde = std::move(t.a);
  pt.b_tilde = std::move(t.b);
  pt.f_dim = std::min(pt.h_a, pt.h_b);
  pt.f_Dim = std::max(pt.h_a, pt.h_b);
  pt.b_star = legendre(p, SpectrumFn::TauLower, alpha);
  pt.B_star = legendre(p, SpectrumFn::TauUpper, alpha);
  pt.Dim_valid = std::abs(pt.f_Dim - pt.B_star) <= 1e-8;
  return pt;
}

// Envelope of the two tilted moment generating functions, each logged in its
// own base so that both branch derivatives at t = 0 equal -alpha:
//   phi(t) = max( log_c1 sum a_i^t ta_i , log_c2 sum b_j^t tb_j ).
inline double phi(const ModelParams& p, double t, double alpha) {
  TiltedWeights tw = tilt_alpha(p, alpha);
  auto branch = [&](std::span<const double> w, std::span<const double> tilted, double c) {
    std::vector<double> terms(w.size());
    for (size_t i = 0; i < w.size(); ++i)
      terms[i] = t * std::log(w[i]) + std::log(tilted[i]);
    return log_sum_exp(terms) / std::log(c);
  };
  return std::max(branch(p.a, tw.a, static_cast<double>(p.c1)),
                  branch(p.b, tw.b, static_cast<double>(p.c2)));
}

}  // namespace mff
