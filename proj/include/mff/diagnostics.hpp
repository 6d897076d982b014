#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mff/measure.hpp"
#include "mff/numerics.hpp"
#include "mff/parallel.hpp"
#include "mff/projection.hpp"
#include "mff/schedule.hpp"
#include "mff/spectrum.hpp"

namespace mff {

// <n> = floor(n - sqrt(n)), exact in integers
inline std::uint64_t doubling_threshold(std::uint64_t n) {
  std::uint64_t s = isqrt_u64(n);
  return s * s == n ? n - s : n - s - 1;
}

// Ratio and floor constants controlling how interval masses respond to a
// bounded number of digit changes.
struct DoublingConstants {
  double C0 = 1.0;        // largest same-alphabet weight ratio
  double C1 = 0.0;        // largest weight
  double C2 = 1.0;        // smallest weight
  double C0_prime = 1.0;  // smallest product of two weights
  bool degenerate = false;  // C0 == 1: mass ratios carry no information
};

inline DoublingConstants doubling_constants(const ModelParams& p) {
  auto minmax_a = std::minmax_element(p.a.begin(), p.a.end());
  auto minmax_b = std::minmax_element(p.b.begin(), p.b.end());
  DoublingConstants c;
  c.C0 = std::max(*minmax_a.second / *minmax_a.first, *minmax_b.second / *minmax_b.first);
  c.C1 = std::max(*minmax_a.second, *minmax_b.second);
  c.C2 = std::min(*minmax_a.first, *minmax_b.first);
  c.C0_prime = std::min({(*minmax_a.first) * (*minmax_a.first),
                         (*minmax_a.first) * (*minmax_b.first),
                         (*minmax_b.first) * (*minmax_b.first)});
  c.degenerate = c.C0 <= 1.0 + 1e-15;
  return c;
}

// C1(q): the largest tilted weight
inline double tilted_max_weight(const ModelParams& p, double q) {
  TiltedWeights t = tilt_q(p, q);
  double m = 0.0;
  for (double x : t.a) m = std::max(m, x);
  for (double x : t.b) m = std::max(m, x);
  return m;
}

// A depth-n word sits in the bad set E_n when one of its neighbors splits
// off above <n>, i.e. its trailing run of extremal digits reaches from
// depth n back past <n>.  Sides without a neighbor do not count.
inline bool en_membership(const EpochSchedule& s, const Word& w, std::uint64_t n) {
  if (n > w.depth()) throw std::out_of_range("word shorter than requested depth");
  std::uint64_t thr = doubling_threshold(n);
  std::uint64_t run_max = 0, run_min = 0;
  while (run_max < n && w.digits[n - 1 - run_max] == s.radix_at(n - run_max) - 1) ++run_max;
  while (run_min < n && w.digits[n - 1 - run_min] == 0) ++run_min;
  bool plus_bad = run_max < n && n - run_max - 1 < thr;
  bool minus_bad = run_min < n && n - run_min - 1 < thr;
  return plus_bad || minus_bad;
}

// Exact mass of E_n under a product measure, in closed form: E_n is the set
// of generation-n words whose digits after <n> are all minimal or all
// maximal, except the two global boundary words.  Summing over generation-
// <n> prefixes telescopes to the two tail products.
inline double en_exact_log_mass(const DigitMeasure& m, std::uint64_t n) {
  std::uint64_t thr = doubling_threshold(n);
  const EpochSchedule& s = m.schedule();
  double tail_min = 0.0, tail_max = 0.0;
  for (std::uint64_t j = thr + 1; j <= n; ++j) {
    std::uint32_t r = s.radix_at(j);
    tail_min += m.log_weight(j, 0);
    tail_max += m.log_weight(j, r - 1);
  }
  double word_min = 0.0, word_max = 0.0;
  for (std::uint64_t j = 1; j <= n; ++j) {
    std::uint32_t r = s.radix_at(j);
    word_min += m.log_weight(j, 0);
    word_max += m.log_weight(j, r - 1);
  }
  double tails = log_sum_exp(std::vector<double>{tail_min, tail_max});
  double words = log_sum_exp(std::vector<double>{word_min, word_max});
  return log_diff_exp(tails, words);
}

// Same mass by direct enumeration; the oracle route, budget-guarded.
inline double en_enumerated_log_mass(const DigitMeasure& m, std::uint64_t n) {
  check_enum_budget(m.schedule(), n, "bad-set enumeration");
  OnlineLogSum acc;
  detail::for_each_word_mass(m, n, [&](std::span<const std::uint32_t> digits, double lm) {
    Word w(std::vector<std::uint32_t>(digits.begin(), digits.end()));
    if (en_membership(m.schedule(), w, n)) acc.add(lm);
  });
  return acc.value();
}

struct DoublingReport {
  std::uint64_t n = 0;
  std::uint64_t samples = 0;
  std::uint64_t threshold = 0;
  double frac_in_en = 0.0;      // sampled fraction landing in E_n
  double en_mass_bound = 0.0;   // 2 * C1_eff^sqrt(n), C1(q) when sampling tilted
  double ratio_bound = 0.0;     // (sqrt(n)+1) * ln C0
  std::uint64_t ratio_checks = 0;
  std::uint64_t ratio_violations = 0;  // among words outside E_n only
  double max_abs_log_ratio = 0.0;
  DoublingConstants constants;
  std::string sampling_tag;
  bool pass = true;
};

// Samples M depth-n words from `sampling`, flags E_n membership, and checks
// the neighbor mass ratios of nu (the base projected measure) for every
// sampled word outside E_n.  When the sampling measure is a q-tilt, pass
// its q so the E_n mass bound uses the tilted maximal weight.
inline DoublingReport doubling_report(const DigitMeasure& sampling, const DigitMeasure& nu,
                                      const ModelParams& params,
                                      std::optional<double> sampling_q, std::uint64_t n,
                                      std::uint64_t M, std::uint64_t seed,
                                      unsigned workers = 1) {
  DoublingReport rep;
  rep.n = n;
  rep.samples = M;
  rep.threshold = doubling_threshold(n);
  rep.constants = doubling_constants(params);
  rep.sampling_tag = sampling.tag();
  double c1_eff =
      sampling_q ? tilted_max_weight(params, *sampling_q) : rep.constants.C1;
  double root = std::sqrt(static_cast<double>(n));
  rep.en_mass_bound = 2.0 * std::exp(root * std::log(c1_eff));
  rep.ratio_bound = (root + 1.0) * std::log(rep.constants.C0);

  struct PerSample {
    bool in_en = false;
    bool violated = false;
    double max_ratio = 0.0;
    bool checked = false;
  };
  std::vector<PerSample> out(M);
  const EpochSchedule& sched = sampling.schedule();
  parallel_for(M, workers, [&](std::uint64_t i) {
    Word w = sample_word(sampling, n, seed, i);
    PerSample r;
    r.in_en = en_membership(sched, w, n);
    if (!r.in_en) {
      double base = nu.log_mass(w);
      for (NeighborSide side : {NeighborSide::Minus, NeighborSide::Plus}) {
        auto v = neighbor_word(sched, w, side);
        if (!v) continue;
        double d = std::abs(base - nu.log_mass(*v));
        r.max_ratio = std::max(r.max_ratio, d);
        r.checked = true;
        if (d > rep.ratio_bound + 1e-9) r.violated = true;
      }
    }
    out[i] = r;
  });
  std::uint64_t in_en = 0;
  for (const PerSample& r : out) {
    if (r.in_en) ++in_en;
    if (r.checked) ++rep.ratio_checks;
    if (r.violated) ++rep.ratio_violations;
    rep.max_abs_log_ratio = std::max(rep.max_abs_log_ratio, r.max_ratio);
  }
  rep.frac_in_en = M == 0 ? 0.0 : static_cast<double>(in_en) / static_cast<double>(M);
  double se = M == 0 ? 0.0
                     : std::sqrt(std::max(rep.en_mass_bound * (1.0 - rep.en_mass_bound), 0.0) /
                                 static_cast<double>(M));
  rep.pass = rep.ratio_violations == 0 && rep.frac_in_en <= rep.en_mass_bound + 3.0 * se + 1e-12;
  return rep;
}

}  // namespace mff
