#include <cmath>
#include <cstdint>
#include <vector>

#include "catch_amalgamated.hpp"

#include "mff/measure.hpp"
#include "mff/numerics.hpp"
#include "mff/rng.hpp"

using namespace mff;
using Catch::Matchers::WithinAbs;

namespace {

ModelParams standard_params() {
  return make_params(2, 2, {0.25, 0.75}, {1.0 / 3.0, 2.0 / 3.0});
}

}  // namespace

TEST_CASE("weight vectors are validated") {
  REQUIRE_THROWS_AS(make_params(2, 2, {0.25, 0.75, 0.0}, {0.5, 0.5}), config_error);
  REQUIRE_THROWS_AS(make_params(2, 2, {0.0, 1.0}, {0.5, 0.5}), config_error);
  REQUIRE_THROWS_AS(make_params(2, 2, {-0.1, 1.1}, {0.5, 0.5}), config_error);
  REQUIRE_THROWS_AS(make_params(2, 2, {0.3, 0.6}, {0.5, 0.5}), config_error);
  REQUIRE_NOTHROW(make_params(2, 3, {0.25, 0.75}, {0.2, 0.3, 0.5}));
}

TEST_CASE("cylinder masses multiply per-position weights") {
  EpochSchedule s = EpochSchedule::squares(2, 2);
  DigitMeasure m = base_measure(s, standard_params());
  REQUIRE_THAT(m.log_mass(word_from_string(s, "011")), WithinAbs(std::log(1.0 / 9.0), 1e-14));
  REQUIRE_THAT(m.log_mass(word_from_string(s, "0")), WithinAbs(std::log(0.25), 1e-15));
  REQUIRE(m.log_mass(Word{}) == 0.0);

  EpochSchedule s23 = EpochSchedule::squares(2, 3);
  DigitMeasure m23 = base_measure(s23, make_params(2, 3, {0.25, 0.75}, {0.2, 0.3, 0.5}));
  REQUIRE_THAT(m23.log_mass(word_from_string(s23, "012")),
               WithinAbs(std::log(0.25 * 0.3 * 0.5), 1e-14));
}

TEST_CASE("parent mass is the log-sum of its children") {
  EpochSchedule s = EpochSchedule::squares(2, 3, 64);
  DigitMeasure m = base_measure(s, make_params(2, 3, {0.25, 0.75}, {0.2, 0.3, 0.5}));
  std::uint64_t seed = 5;
  for (std::uint64_t t = 0; t < 1000; ++t) {
    std::uint64_t depth = counter_draw(seed, t, 0) % 30;
    Word w;
    for (std::uint64_t j = 1; j <= depth; ++j)
      w.digits.push_back(static_cast<std::uint32_t>(counter_draw(seed, t, j) % s.radix_at(j)));
    OnlineLogSum children;
    Word child = w;
    child.digits.push_back(0);
    for (std::uint32_t d = 0; d < s.radix_at(depth + 1); ++d) {
      child.digits.back() = d;
      children.add(m.log_mass(child));
    }
    REQUIRE_THAT(children.value(), WithinAbs(m.log_mass(w), 1e-10));
  }
}

TEST_CASE("tilts reweight by the q-th power") {
  ModelParams p = standard_params();
  TiltedWeights t2 = tilt_q(p, 2.0);
  REQUIRE_THAT(t2.a[0], WithinAbs(0.1, 1e-15));
  REQUIRE_THAT(t2.a[1], WithinAbs(0.9, 1e-15));
  REQUIRE_THAT(t2.b[0], WithinAbs(0.2, 1e-15));
  REQUIRE_THAT(t2.b[1], WithinAbs(0.8, 1e-15));
  REQUIRE(t2.q_a == 2.0);
  REQUIRE(t2.q_b == 2.0);

  TiltedWeights t1 = tilt_q(p, 1.0);
  REQUIRE_THAT(t1.a[0], WithinAbs(0.25, 1e-15));
  REQUIRE_THAT(t1.b[1], WithinAbs(2.0 / 3.0, 1e-15));

  TiltedWeights t0 = tilt_q(p, 0.0);
  REQUIRE_THAT(t0.a[0], WithinAbs(0.5, 1e-15));
  REQUIRE_THAT(t0.b[0], WithinAbs(0.5, 1e-15));

  // extreme q stays normalized
  for (double q : {-100.0, 100.0}) {
    TiltedWeights tq = tilt_q(p, q);
    double sa = 0.0, sb = 0.0;
    for (double x : tq.a) sa += x;
    for (double x : tq.b) sb += x;
    REQUIRE_THAT(sa, WithinAbs(1.0, 1e-12));
    REQUIRE_THAT(sb, WithinAbs(1.0, 1e-12));
  }
  REQUIRE_THROWS_AS(tilt_q(p, 2e4), config_error);
}

TEST_CASE("alpha-matched tilts solve the slope equation") {
  ModelParams p = standard_params();
  // -theta_b'(2) evaluated from the tilted weights directly
  double alpha = -(0.2 * std::log(1.0 / 3.0) + 0.8 * std::log(2.0 / 3.0)) / std::log(2.0);
  REQUIRE_THAT(alpha, WithinAbs(0.7849625007211561, 1e-14));
  TiltedWeights t = tilt_alpha(p, alpha);
  REQUIRE_THAT(t.q_b, WithinAbs(2.0, 1e-8));
  REQUIRE_THAT(t.b[0], WithinAbs(0.2, 1e-9));
  REQUIRE_THAT(t.b[1], WithinAbs(0.8, 1e-9));
  // entropy fixed point: the base weights tilt to themselves at q = 1
  double h = -(0.25 * std::log(0.25) + 0.75 * std::log(0.75)) / std::log(2.0);
  REQUIRE_THAT(h, WithinAbs(0.8112781244591328, 1e-14));
  TiltedWeights te = tilt_alpha(p, h);
  REQUIRE_THAT(te.q_a, WithinAbs(1.0, 1e-9));
  REQUIRE_THAT(te.a[0], WithinAbs(0.25, 1e-9));
}

TEST_CASE("degenerate tilts") {
  // uniform weights carry a single exponent
  ModelParams u = make_params(2, 2, {0.5, 0.5}, {0.5, 0.5});
  TiltedWeights t = tilt_alpha(u, 1.0);
  REQUIRE(t.q_a == 1.0);
  REQUIRE(t.q_b == 1.0);
  REQUIRE_THROWS_AS(tilt_alpha(u, 0.9), degeneracy_error);

  // nearly uniform weights push the matched q beyond the cap
  ModelParams nu = make_params(2, 2, {0.49999, 0.50001}, {0.49999, 0.50001});
  double lo = -std::log(0.50001) / std::log(2.0);
  double hi = -std::log(0.49999) / std::log(2.0);
  REQUIRE_THROWS_AS(tilt_alpha(nu, lo + 0.25 * (hi - lo)), degeneracy_error);

  // outside the attainable slopes entirely
  ModelParams p = standard_params();
  REQUIRE_THROWS_AS(tilt_alpha(p, 0.5), std::domain_error);
  REQUIRE_THROWS_AS(tilt_alpha(p, 2.1), std::domain_error);
}

TEST_CASE("digit sampling matches the weights") {
  EpochSchedule s = EpochSchedule::squares(2, 2);
  DigitMeasure m = base_measure(s, standard_params());
  std::uint64_t hits = 0;
  const std::uint64_t trials = 20000;
  for (std::uint64_t i = 0; i < trials; ++i)
    if (m.sample_digit(1, counter_u01(42, i, 1)) == 1) ++hits;
  double freq = static_cast<double>(hits) / static_cast<double>(trials);
  double sigma = std::sqrt(0.75 * 0.25 / static_cast<double>(trials));
  REQUIRE(std::abs(freq - 0.75) <= 4.0 * sigma);

  // u landing on the exact boundary picks the next digit
  REQUIRE(m.sample_digit(1, 0.0) == 0);
  REQUIRE(m.sample_digit(1, 0.2499999) == 0);
  REQUIRE(m.sample_digit(1, 0.25) == 1);
  REQUIRE(m.sample_digit(1, 0.9999999) == 1);
}

TEST_CASE("word sampling is a pure function of seed and index") {
  EpochSchedule s = EpochSchedule::squares(2, 2);
  DigitMeasure m = base_measure(s, standard_params());
  Word w1 = sample_word(m, 200, 7, 3);
  Word w2 = sample_word(m, 200, 7, 3);
  REQUIRE(w1 == w2);
  REQUIRE_FALSE(sample_word(m, 200, 7, 4) == w1);
  REQUIRE_FALSE(sample_word(m, 200, 8, 3) == w1);
  // a longer draw of the same stream extends the shorter one
  Word w3 = sample_word(m, 300, 7, 3);
  REQUIRE(w3.prefix(200) == w1);
}

TEST_CASE("mixture tags name the construction") {
  EpochSchedule s = EpochSchedule::squares(2, 2);
  ModelParams p = standard_params();
  REQUIRE(base_measure(s, p).tag() == "base");
  REQUIRE(tilted_measure_q(s, p, 2.0).tag() == "tilted_q=2");
  REQUIRE(tilted_measure_q(s, p, 2.0).a_weights()[0] == Catch::Approx(0.1));
  REQUIRE_THROWS_AS(base_measure(s, make_params(2, 3, {0.25, 0.75}, {0.2, 0.3, 0.5})),
                    config_error);
}
