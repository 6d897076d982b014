#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mff/diagnostics.hpp"
#include "mff/measure.hpp"
#include "mff/numerics.hpp"
#include "mff/parallel.hpp"
#include "mff/projection.hpp"
#include "mff/schedule.hpp"
#include "mff/spectrum.hpp"

namespace mff {

// Depths just before each epoch switch, plus n itself: where the alternation
// is most visible.
inline std::vector<std::uint64_t> default_probe_depths(const EpochSchedule& s, std::uint64_t n) {
  std::vector<std::uint64_t> probes;
  for (std::uint64_t t : s.boundaries())
    if (t >= 2 && t - 1 <= n) probes.push_back(t - 1);
  if (probes.empty() || probes.back() != n) probes.push_back(n);
  return probes;
}

// Local scaling exponents log nu(I_n(x)) / log |I_n(x)| along the prefixes
// of one word.
struct ExponentTrace {
  std::vector<std::uint64_t> depths;
  std::vector<double> values;
  std::string measure_tag;
};

inline ExponentTrace exponent_trace(const DigitMeasure& m, const IsometryCode& code,
                                    const Word& w, const std::vector<std::uint64_t>& depths) {
  validate_word(m.schedule(), w);
  ExponentTrace tr;
  tr.measure_tag = m.tag();
  tr.depths = depths;
  tr.values.reserve(depths.size());
  for (std::uint64_t n : depths) {
    if (n < 1 || n > w.depth()) throw std::out_of_range("trace depth outside the word");
    double lm = nu_log_mass_interval(m, code, w.prefix(n));
    tr.values.push_back(lm / m.schedule().log_diameter(n));
  }
  return tr;
}

// Ball counterpart at radius r_n = |cylinder at depth n+1|, reported as an
// exponent bracket from the mass bracket.
inline std::pair<double, double> ball_exponent_bracket(const DigitMeasure& m,
                                                       const IsometryCode& code, double x,
                                                       std::uint64_t n) {
  double r = std::exp(m.schedule().log_diameter(n + 1));
  LogMassBracket b = nu_log_mass_ball(m, code, x, r, n + 2);
  double lr = std::log(r);
  // mass bracket [lower, upper] maps to exponent bracket [upper/lr, lower/lr]
  return {b.upper / lr, b.lower / lr};
}

// How tau_n drifts between the two branch exponents as epochs alternate.
struct TauOscillationRow {
  double q = 0.0;
  std::uint64_t n = 0;
  double tau = 0.0, theta_a = 0.0, theta_b = 0.0;
  double dist_a = 0.0, dist_b = 0.0;
  Side nearer = Side::A;
};

inline std::vector<TauOscillationRow> tau_oscillation_study(
    const ModelParams& p, const EpochSchedule& s, const std::vector<double>& q_grid,
    const std::vector<std::uint64_t>& depths) {
  std::vector<TauOscillationRow> rows;
  rows.reserve(q_grid.size() * depths.size());
  for (double q : q_grid) {
    double ta = theta(p, Side::A, q);
    double tb = theta(p, Side::B, q);
    for (std::uint64_t n : depths) {
      TauOscillationRow r;
      r.q = q;
      r.n = n;
      r.tau = tau_n(p, s, n, q);
      r.theta_a = ta;
      r.theta_b = tb;
      r.dist_a = std::abs(r.tau - ta);
      r.dist_b = std::abs(r.tau - tb);
      r.nearer = r.dist_a <= r.dist_b ? Side::A : Side::B;
      rows.push_back(r);
    }
  }
  return rows;
}

// Histogram of coarse exponents over every depth-n interval.
struct CoarseSpectrumRow {
  double alpha = 0.0;  // bin center
  std::uint64_t count = 0;
  double log_count_norm = 0.0;  // ln(count) / -log diameter
};

inline std::vector<CoarseSpectrumRow> coarse_spectrum(const DigitMeasure& m,
                                                      const IsometryCode& code, std::uint64_t n,
                                                      std::uint32_t bins) {
  if (n < 1) throw std::out_of_range("coarse spectrum needs depth >= 1");
  if (bins < 1) throw config_error("coarse spectrum needs at least one bin");
  check_enum_budget(m.schedule(), n, "coarse spectrum enumeration");
  const EpochSchedule& s = m.schedule();
  double neg_log_diam = -s.log_diameter(n);

  // exponent range straight from the per-position extremes
  double lm_min = 0.0, lm_max = 0.0;
  for (std::uint64_t j = 1; j <= n; ++j) {
    const auto& lw = s.alphabet_at(j) == Alphabet::A1 ? m.log_a_weights() : m.log_b_weights();
    auto mm = std::minmax_element(lw.begin(), lw.end());
    lm_min += *mm.first;
    lm_max += *mm.second;
  }
  double alpha_lo = -lm_max / neg_log_diam;  // heaviest word: smallest exponent
  double alpha_hi = -lm_min / neg_log_diam;
  bool flat = !(alpha_hi > alpha_lo);
  std::uint32_t nbins = flat ? 1 : bins;
  std::vector<std::uint64_t> counts(nbins, 0);
  double width = flat ? 1.0 : (alpha_hi - alpha_lo) / static_cast<double>(nbins);

  // the enumeration walks interval words; mass goes through the preimage
  std::uint64_t total = 0;
  std::vector<std::uint32_t> digit(n, 0);
  std::vector<double> part(n + 1, 0.0);
  std::vector<std::uint32_t> pre_digit(n + 1, 0);  // pre_digit[j]: interval digit j (1-based-1)
  std::uint64_t level = 0;
  while (true) {
    while (level < n) {
      std::uint32_t prev = level == 0 ? 0 : digit[level - 1];
      std::uint32_t pd = code.preimage_digit(s, level + 1, digit[level], prev);
      part[level + 1] = part[level] + m.log_weight(level + 1, pd);
      ++level;
    }
    double alpha = part[n] / s.log_diameter(n);
    std::uint64_t b;
    if (flat)
      b = 0;
    else {
      double t = (alpha - alpha_lo) / width;
      b = t <= 0.0 ? 0 : std::min<std::uint64_t>(static_cast<std::uint64_t>(t), nbins - 1);
    }
    ++counts[b];
    ++total;
    for (;;) {
      if (level == 0) goto done;
      --level;
      if (digit[level] + 1 < s.radix_at(level + 1)) {
        ++digit[level];
        break;
      }
      digit[level] = 0;
    }
  }
done:
  (void)total;
  std::vector<CoarseSpectrumRow> rows;
  for (std::uint32_t b = 0; b < nbins; ++b) {
    if (counts[b] == 0) continue;
    CoarseSpectrumRow r;
    r.alpha = flat ? alpha_lo : alpha_lo + (static_cast<double>(b) + 0.5) * width;
    r.count = counts[b];
    r.log_count_norm = std::log(static_cast<double>(counts[b])) / neg_log_diam;
    rows.push_back(r);
  }
  return rows;
}

// Monte-Carlo check of the formalism at one spectrum point: samples from the
// alpha-matched tilt, measures nu-exponents at depth n and the tilt's own
// exponents at the epoch-boundary depths.
struct FormalismDepthRow {
  std::uint64_t depth = 0;
  double mean_own_exponent = 0.0;
  double target = 0.0;  // analytic mixture of the two branch entropies
  double stderr_own = 0.0;
  bool pass = false;
};

struct FormalismReport {
  double alpha = 0.0;
  std::uint64_t samples = 0, depth = 0;
  double q_a = 0.0, q_b = 0.0;
  double h_a = 0.0, h_b = 0.0;
  double f_dim = 0.0, f_Dim = 0.0;
  double nu_mean = 0.0, nu_sd = 0.0;
  double nu_threshold = 0.0;  // 3*SE + per-digit range / n
  bool nu_pass = false;
  std::vector<FormalismDepthRow> depth_rows;
  bool pass = false;
};

inline FormalismReport mc_formalism_check(const ModelParams& p, const EpochSchedule& s,
                                          double alpha, std::uint64_t M, std::uint64_t n,
                                          std::uint64_t seed, unsigned workers = 1) {
  if (n < 1) throw std::out_of_range("formalism check needs depth >= 1");
  FormalismReport rep;
  rep.alpha = alpha;
  rep.samples = M;
  rep.depth = n;
  TiltedWeights tw = tilt_alpha(p, alpha);
  rep.q_a = tw.q_a;
  rep.q_b = tw.q_b;
  rep.h_a = entropy_tilted(tw.a, static_cast<double>(p.c1));
  rep.h_b = entropy_tilted(tw.b, static_cast<double>(p.c2));
  rep.f_dim = std::min(rep.h_a, rep.h_b);
  rep.f_Dim = std::max(rep.h_a, rep.h_b);

  DigitMeasure tilted(s, tw.a, tw.b, "tilted_alpha");
  DigitMeasure base = base_measure(s, p);

  // probe the tilt's own exponents where the alternation peaks
  std::vector<std::uint64_t> probes = default_probe_depths(s, n);

  std::vector<double> nu_exp(M);
  std::vector<std::vector<double>> own_exp(probes.size(), std::vector<double>(M));
  parallel_for(M, workers, [&](std::uint64_t i) {
    double lm_base = 0.0, lm_tilt = 0.0;
    size_t next_probe = 0;
    for (std::uint64_t j = 1; j <= n; ++j) {
      std::uint32_t d = tilted.sample_digit(j, counter_u01(seed, i, j));
      lm_base += base.log_weight(j, d);
      lm_tilt += tilted.log_weight(j, d);
      while (next_probe < probes.size() && probes[next_probe] == j) {
        own_exp[next_probe][i] = lm_tilt / s.log_diameter(j);
        ++next_probe;
      }
    }
    nu_exp[i] = lm_base / s.log_diameter(n);
  });

  auto mean_sd = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - m) * (x - m);
    var = v.size() > 1 ? var / static_cast<double>(v.size() - 1) : 0.0;
    return std::pair<double, double>(m, std::sqrt(var));
  };

  double per_digit_range = 0.0;
  {
    auto mma = std::minmax_element(p.a.begin(), p.a.end());
    auto mmb = std::minmax_element(p.b.begin(), p.b.end());
    per_digit_range = std::max(
        std::log(*mma.second / *mma.first) / std::log(static_cast<double>(p.c1)),
        std::log(*mmb.second / *mmb.first) / std::log(static_cast<double>(p.c2)));
  }

  if (M > 0) {
    auto [m0, sd0] = mean_sd(nu_exp);
    rep.nu_mean = m0;
    rep.nu_sd = sd0;
    double se = sd0 / std::sqrt(static_cast<double>(M));
    rep.nu_threshold = 3.0 * se + per_digit_range / static_cast<double>(n);
    rep.nu_pass = std::abs(m0 - alpha) <= rep.nu_threshold;

    for (size_t k = 0; k < probes.size(); ++k) {
      std::uint64_t d = probes[k];
      auto [mk, sdk] = mean_sd(own_exp[k]);
      double na = static_cast<double>(s.count_a(d));
      double nb = static_cast<double>(d - s.count_a(d));
      double lc1 = std::log(static_cast<double>(p.c1));
      double lc2 = std::log(static_cast<double>(p.c2));
      // expected own exponent: entropy mixture over the two alphabets
      double target = (na * rep.h_a * lc1 + nb * rep.h_b * lc2) / (na * lc1 + nb * lc2);
      FormalismDepthRow row;
      row.depth = d;
      row.mean_own_exponent = mk;
      row.target = target;
      row.stderr_own = sdk / std::sqrt(static_cast<double>(M));
      row.pass = std::abs(mk - target) <=
                 3.0 * row.stderr_own + per_digit_range / static_cast<double>(d);
      rep.depth_rows.push_back(row);
    }
    rep.pass = rep.nu_pass;
    for (const auto& r : rep.depth_rows) rep.pass = rep.pass && r.pass;
  }
  return rep;
}

}  // namespace mff
