#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "catch_amalgamated.hpp"

#include "mff/rng.hpp"
#include "mff/spectrum.hpp"

using namespace mff;
using Catch::Matchers::WithinAbs;

namespace {

ModelParams standard_params() {
  return make_params(2, 2, {0.25, 0.75}, {1.0 / 3.0, 2.0 / 3.0});
}

// Independent minimizer: coarse scan, then ternary search in the best cell.
// Only used on convex objectives (single branch, or the upper envelope).
double grid_ternary_min(const std::function<double(double)>& g, double qlo, double qhi) {
  const int grid = 1024;
  int best = 0;
  double best_val = g(qlo);
  for (int k = 1; k <= grid; ++k) {
    double v = g(qlo + (qhi - qlo) * k / grid);
    if (v < best_val) {
      best_val = v;
      best = k;
    }
  }
  double lo = qlo + (qhi - qlo) * std::max(0, best - 1) / grid;
  double hi = qlo + (qhi - qlo) * std::min(grid, best + 1) / grid;
  for (int it = 0; it < 300; ++it) {
    double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
    if (g(m1) < g(m2))
      hi = m2;
    else
      lo = m1;
  }
  return g(0.5 * (lo + hi));
}

}  // namespace

TEST_CASE("branch exponents at q = 2") {
  ModelParams p = standard_params();
  REQUIRE_THAT(theta(p, Side::A, 2.0), WithinAbs(-0.6780719051126376, 1e-14));
  REQUIRE_THAT(theta(p, Side::B, 2.0), WithinAbs(-0.8479969065549501, 1e-14));
  REQUIRE_THAT(theta(p, Side::A, 0.0), WithinAbs(1.0, 1e-14));
  REQUIRE_THAT(theta(p, Side::A, 1.0), WithinAbs(0.0, 1e-14));
  REQUIRE_THAT(theta(p, Side::B, 1.0), WithinAbs(0.0, 1e-14));
  REQUIRE_THAT(theta_prime(p, Side::A, 0.0), WithinAbs(-1.2075187496394219, 1e-14));
  REQUIRE_THAT(-theta_prime(p, Side::B, 2.0), WithinAbs(0.7849625007211561, 1e-14));
  auto [hi, lo] = tau_limits(p, 2.0);
  REQUIRE(hi == theta(p, Side::A, 2.0));
  REQUIRE(lo == theta(p, Side::B, 2.0));
  REQUIRE(hi >= lo);
}

TEST_CASE("slope saturates at the extreme weights") {
  ModelParams p = standard_params();
  double l2 = std::log(2.0);
  REQUIRE_THAT(theta_prime(p, Side::A, 1000.0), WithinAbs(std::log(0.75) / l2, 1e-9));
  REQUIRE_THAT(theta_prime(p, Side::A, -1000.0), WithinAbs(std::log(0.25) / l2, 1e-9));
  REQUIRE_THAT(theta_prime(p, Side::B, 1000.0), WithinAbs(std::log(2.0 / 3.0) / l2, 1e-9));
  REQUIRE_THAT(theta_prime(p, Side::B, -1000.0), WithinAbs(std::log(1.0 / 3.0) / l2, 1e-9));
}

TEST_CASE("finite-depth exponent interpolates the branches") {
  ModelParams p = standard_params();
  EpochSchedule s = EpochSchedule::squares(2, 2);
  // depth 3 holds one a-position and two b-positions
  REQUIRE_THAT(tau_n(p, s, 3, 2.0), WithinAbs(-0.7913552394075126, 1e-14));
  for (double q : {-2.0, -0.5, 0.5, 2.0, 3.0}) {
    auto [hi, lo] = tau_limits(p, q);
    for (std::uint64_t n : {1, 2, 3, 15, 255, 65535}) {
      double t = tau_n(p, s, n, q);
      REQUIRE(t >= lo - 1e-12);
      REQUIRE(t <= hi + 1e-12);
    }
  }
  for (std::uint64_t n : {1, 2, 7, 100, 4096})
    REQUIRE_THAT(tau_n(p, s, n, 1.0), WithinAbs(0.0, 1e-12));
  REQUIRE_THROWS_AS(tau_n(p, s, 0, 2.0), std::out_of_range);
}

TEST_CASE("enumerated partition sums match the closed form") {
  EpochSchedule s = EpochSchedule::squares(2, 2);
  DigitMeasure m = base_measure(s, standard_params());
  REQUIRE_THAT(partition_sum_bruteforce(m, 3, 2.0),
               WithinAbs(std::log(0.625) + 2.0 * std::log(5.0 / 9.0), 1e-12));

  const std::pair<std::uint32_t, std::uint32_t> combos[] = {{2, 3}, {3, 2}};
  for (auto [c1, c2] : combos) {
    EpochSchedule sch = EpochSchedule::squares(c1, c2, 64);
    for (std::uint64_t t = 0; t < 20; ++t) {
      auto draw = [&](std::uint64_t j) { return 0.05 + 0.9 * counter_u01(11, t, j); };
      auto rand_weights = [&](std::uint32_t c, std::uint64_t off) {
        std::vector<double> w(c);
        double sum = 0.0;
        for (std::uint32_t i = 0; i < c; ++i) sum += w[i] = draw(off + i);
        for (double& x : w) x /= sum;
        return w;
      };
      ModelParams p = make_params(c1, c2, rand_weights(c1, 0), rand_weights(c2, 8));
      DigitMeasure mm = base_measure(sch, p);
      std::uint64_t n = 1 + t % 12;
      for (double q : {-2.0, -1.0, 0.0, 0.5, 1.0, 2.0, 3.0}) {
        double brute = partition_sum_bruteforce(mm, n, q);
        double closed = tau_n(p, sch, n, q) * (-sch.log_diameter(n));
        REQUIRE_THAT(brute, WithinAbs(closed, 1e-9));
      }
    }
  }
}

TEST_CASE("enumeration budget") {
  EpochSchedule s = EpochSchedule::squares(2, 2);
  REQUIRE_NOTHROW(check_enum_budget(s, 24, "test"));
  REQUIRE_THROWS_AS(check_enum_budget(s, 25, "test"), resource_error);
  REQUIRE_THROWS_AS(partition_sum_bruteforce(base_measure(s, standard_params()), 0, 2.0),
                    std::out_of_range);
}

TEST_CASE("legendre transform at known slope points") {
  ModelParams p = standard_params();
  // -theta_a'(0): the transform bottoms out at q = 0 with value theta_a(0) = 1
  REQUIRE_THAT(legendre(p, SpectrumFn::ThetaA, 1.2075187496394219), WithinAbs(1.0, 1e-9));
  // -theta_b'(2): value 2*alpha + theta_b(2), the entropy of the q=2 tilt
  REQUIRE_THAT(legendre(p, SpectrumFn::ThetaB, 0.7849625007211561),
               WithinAbs(0.7219280948873623, 1e-9));
  // outside the attainable slopes the infimum runs away
  REQUIRE(legendre(p, SpectrumFn::ThetaA, 0.4) == kNegInf);
  REQUIRE(legendre(p, SpectrumFn::ThetaA, 2.1) == kNegInf);
  REQUIRE(legendre(p, SpectrumFn::TauUpper, 0.4) == kNegInf);
  REQUIRE(legendre(p, SpectrumFn::TauUpper, 2.1) == kNegInf);

  ModelParams u = make_params(2, 2, {0.5, 0.5}, {0.5, 0.5});
  REQUIRE_THAT(legendre(u, SpectrumFn::ThetaA, 1.0), WithinAbs(1.0, 1e-12));
  REQUIRE(legendre(u, SpectrumFn::ThetaA, 0.9) == kNegInf);
}

TEST_CASE("legendre transforms agree with a direct search") {
  ModelParams p = standard_params();
  SpectrumDomain d = spectrum_domain(p);
  auto ta = [&](double q) { return theta(p, Side::A, q); };
  auto tb = [&](double q) { return theta(p, Side::B, q); };
  for (int i = 0; i < 50; ++i) {
    double alpha = d.alpha_min + (i + 0.5) / 50.0 * (d.alpha_max - d.alpha_min);
    double inf_a = grid_ternary_min([&](double q) { return alpha * q + ta(q); }, -64.0, 64.0);
    double inf_b = grid_ternary_min([&](double q) { return alpha * q + tb(q); }, -64.0, 64.0);
    double inf_up = grid_ternary_min(
        [&](double q) { return alpha * q + std::max(ta(q), tb(q)); }, -64.0, 64.0);
    REQUIRE_THAT(legendre(p, SpectrumFn::ThetaA, alpha), WithinAbs(inf_a, 1e-8));
    REQUIRE_THAT(legendre(p, SpectrumFn::ThetaB, alpha), WithinAbs(inf_b, 1e-8));
    REQUIRE_THAT(legendre(p, SpectrumFn::TauLower, alpha),
                 WithinAbs(std::min(inf_a, inf_b), 1e-8));
    REQUIRE_THAT(legendre(p, SpectrumFn::TauUpper, alpha), WithinAbs(inf_up, 1e-8));
    REQUIRE(legendre(p, SpectrumFn::TauUpper, alpha) >=
            legendre(p, SpectrumFn::TauLower, alpha) - 1e-12);
  }
}

TEST_CASE("transform value at the matched slope is the tilted entropy") {
  ModelParams p = standard_params();
  for (int i = 0; i < 50; ++i) {
    double q = -5.0 + 10.0 * i / 49.0;
    for (Side s : {Side::A, Side::B}) {
      double alpha = -theta_prime(p, s, q);
      double val = alpha * q + theta(p, s, q);
      double c = side_base(p, s);
      std::vector<double> tw = detail::tilt_weights(side_weights(p, s), q);
      REQUIRE_THAT(entropy_tilted(tw, c), WithinAbs(val, 1e-10));
      SpectrumFn fn = s == Side::A ? SpectrumFn::ThetaA : SpectrumFn::ThetaB;
      REQUIRE_THAT(legendre(p, fn, alpha), WithinAbs(val, 1e-10));
    }
  }
}

TEST_CASE("common exponent domain") {
  ModelParams p = standard_params();
  SpectrumDomain d = spectrum_domain(p);
  REQUIRE_FALSE(d.empty);
  REQUIRE_THAT(d.alpha_min, WithinAbs(0.5849625007211563, 1e-12));
  REQUIRE_THAT(d.alpha_max, WithinAbs(1.5849625007211563, 1e-12));
  // a uniform branch pins its slope range to the single point 1, leaving
  // no open interval in common
  ModelParams flat = make_params(2, 2, {0.5, 0.5}, {0.25, 0.75});
  SpectrumDomain pinched = spectrum_domain(flat);
  REQUIRE(pinched.empty);
  REQUIRE(pinched.alpha_min == pinched.alpha_max);
}

TEST_CASE("spectrum point at the entropy fixed point") {
  ModelParams p = standard_params();
  double alpha = 0.8112781244591328;
  SpectrumPoint pt = spectrum_point(p, alpha);
  REQUIRE_THAT(pt.q_a, WithinAbs(1.0, 1e-10));
  REQUIRE_THAT(pt.h_a, WithinAbs(alpha, 1e-12));
  REQUIRE(pt.h_b <= pt.h_a);
  REQUIRE(pt.f_dim == std::min(pt.h_a, pt.h_b));
  REQUIRE(pt.f_Dim == std::max(pt.h_a, pt.h_b));
  REQUIRE_THAT(pt.B_star, WithinAbs(alpha, 1e-9));
  REQUIRE(pt.Dim_valid);
  REQUIRE(pt.b_star <= pt.B_star + 1e-12);

  SpectrumPoint ps = spectrum_point(p, 0.7849625007211561);
  REQUIRE_THAT(ps.q_b, WithinAbs(2.0, 1e-8));
  REQUIRE_THAT(ps.h_b, WithinAbs(0.7219280948873623, 1e-9));

  REQUIRE_THROWS_AS(spectrum_point(p, 0.5), std::domain_error);
  REQUIRE_THROWS_AS(spectrum_point(p, 1.6), std::domain_error);
}

TEST_CASE("tilted envelope is centered with slope -alpha") {
  ModelParams p = standard_params();
  for (double alpha : {0.7, 0.8112781244591328, 1.0, 1.3}) {
    REQUIRE(std::abs(phi(p, 0.0, alpha)) <= 1e-15);
    double h = 1e-6;
    double fd = (phi(p, h, alpha) - phi(p, -h, alpha)) / (2.0 * h);
    REQUIRE_THAT(fd, WithinAbs(-alpha, 1e-6));
  }
}
