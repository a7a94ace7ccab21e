#include <cmath>

#include "doctest.h"
#include "dynsync/errors.hpp"
#include "dynsync/reference.hpp"
#include "dynsync/signal.hpp"
#include "dynsync/synthgen.hpp"

using namespace dynsync;

TEST_CASE("ground truth is deterministic in (spec, seed)") {
  GroundTruthSpec spec{6, 11, 1.0};
  StackedSignal a = generate_smooth_truth(spec, 42);
  StackedSignal b = generate_smooth_truth(spec, 42);
  StackedSignal c = generate_smooth_truth(spec, 43);
  CHECK((a.flatten() - b.flatten()).norm() == 0.0);
  CHECK((a.flatten() - c.flatten()).norm() > 0.0);
}

TEST_CASE("ground truth blocks are anchored and unit modulus") {
  StackedSignal g = generate_smooth_truth({8, 7, 2.0}, 3);
  for (int k = 0; k < g.T(); ++k) {
    CHECK(g.block(k)[0] == cplx(1.0, 0.0));
    for (int i = 0; i < g.n(); ++i)
      CHECK(std::abs(std::abs(g.block(k)[i]) - 1.0) < 1e-14);
  }
}

TEST_CASE("ground truth respects the smoothness budget") {
  struct Case {
    int n, T;
    double s_t;
  };
  for (auto [n, T, s_t] : {Case{5, 10, 0.1}, Case{10, 20, 1.0}, Case{30, 40, 2.5},
                           Case{4, 100, 0.01}}) {
    for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
      StackedSignal g = generate_smooth_truth({n, T, s_t}, seed);
      CHECK(smoothness_of(g) <= 25.0 * s_t);
    }
  }
}

TEST_CASE("zero budget gives a time-constant signal") {
  StackedSignal g = generate_smooth_truth({5, 12, 0.0}, 17);
  for (int k = 1; k < g.T(); ++k)
    CHECK((g.block(k).values() - g.block(0).values()).norm() == 0.0);
  CHECK(smoothness_of(g) == 0.0);
}

TEST_CASE("ground truth input validation") {
  CHECK_THROWS_AS(generate_smooth_truth({1, 5, 1.0}, 0), ValidationError);
  CHECK_THROWS_AS(generate_smooth_truth({4, 0, 1.0}, 0), ValidationError);
  CHECK_THROWS_AS(generate_smooth_truth({4, 5, -0.5}, 0), ValidationError);
}

TEST_CASE("noiseless additive model reproduces the offsets exactly") {
  StackedSignal g = generate_smooth_truth({6, 4, 1.0}, 9);
  MeasurementStack A = generate_agn(g, {0.0}, 9);
  for (int k = 0; k < 4; ++k) {
    const auto& gk = g.block(k).values();
    const auto& B = A.block(k);
    for (int i = 0; i < 6; ++i) {
      CHECK(B(i, i) == cplx(0.0, 0.0));
      for (int j = i + 1; j < 6; ++j) {
        CHECK(B(i, j) == gk[i] * std::conj(gk[j]));
        CHECK(B(j, i) == std::conj(B(i, j)));
      }
    }
  }
}

TEST_CASE("additive noise is deterministic and depends on the seed") {
  StackedSignal g = generate_smooth_truth({5, 6, 1.0}, 2);
  MeasurementStack a = generate_agn(g, {1.5}, 7);
  MeasurementStack b = generate_agn(g, {1.5}, 7);
  MeasurementStack c = generate_agn(g, {1.5}, 8);
  CHECK((a.stacked() - b.stacked()).norm() == 0.0);
  CHECK((a.stacked() - c.stacked()).norm() > 0.0);
}

TEST_CASE("reverse-order generation matches the forward kernel bit for bit") {
  StackedSignal g = generate_smooth_truth({7, 9, 1.0}, 5);
  AgnParams params{2.0};
  MeasurementStack fwd = generate_agn(g, params, 11);
  MeasurementStack rev = reference::generate_agn_reversed(g, params, 11);
  CHECK((fwd.stacked() - rev.stacked()).norm() == 0.0);
}

TEST_CASE("additive noise entries have unit variance at sigma 1") {
  StackedSignal g = generate_smooth_truth({20, 30, 1.0}, 13);
  MeasurementStack A = generate_agn(g, {1.0}, 13);
  double acc = 0;
  long count = 0;
  for (int k = 0; k < A.T(); ++k) {
    const auto& gk = g.block(k).values();
    for (int i = 0; i < A.n(); ++i)
      for (int j = i + 1; j < A.n(); ++j) {
        acc += std::norm(A.block(k)(i, j) - gk[i] * std::conj(gk[j]));
        ++count;
      }
  }
  const double mean = acc / static_cast<double>(count);
  CHECK(mean > 0.9);
  CHECK(mean < 1.1);
}

TEST_CASE("additive noise validation") {
  StackedSignal g = generate_smooth_truth({4, 3, 1.0}, 1);
  CHECK_THROWS_AS(generate_agn(g, {-1.0}, 1), ValidationError);
}

TEST_CASE("full sampling without corruption is the clean model") {
  StackedSignal g = generate_smooth_truth({6, 5, 1.0}, 21);
  MeasurementStack A = generate_outliers(g, {0.0, {1.0}}, 21);
  for (int k = 0; k < 5; ++k) {
    const auto& gk = g.block(k).values();
    for (int i = 0; i < 6; ++i)
      for (int j = i + 1; j < 6; ++j)
        CHECK(A.block(k)(i, j) == gk[i] * std::conj(gk[j]));
  }
}

TEST_CASE("zero sampling probability gives all-zero blocks") {
  StackedSignal g = generate_smooth_truth({6, 5, 1.0}, 21);
  MeasurementStack A = generate_outliers(g, {0.3, {0.0}}, 21);
  CHECK(A.stacked().norm() == 0.0);
}

TEST_CASE("corrupted measurements are deterministic in the seed") {
  StackedSignal g = generate_smooth_truth({8, 6, 1.0}, 4);
  OutliersParams params{0.25, {0.8}};
  MeasurementStack a = generate_outliers(g, params, 30);
  MeasurementStack b = generate_outliers(g, params, 30);
  MeasurementStack c = generate_outliers(g, params, 31);
  CHECK((a.stacked() - b.stacked()).norm() == 0.0);
  CHECK((a.stacked() - c.stacked()).norm() > 0.0);
}

TEST_CASE("corruption fraction tracks eta under full sampling") {
  StackedSignal g = generate_smooth_truth({25, 20, 1.0}, 6);
  MeasurementStack A = generate_outliers(g, {0.5, {1.0}}, 6);
  long corrupted = 0, total = 0;
  for (int k = 0; k < A.T(); ++k) {
    const auto& gk = g.block(k).values();
    for (int i = 0; i < A.n(); ++i)
      for (int j = i + 1; j < A.n(); ++j) {
        if (A.block(k)(i, j) != gk[i] * std::conj(gk[j])) ++corrupted;
        ++total;
      }
  }
  const double frac = static_cast<double>(corrupted) / static_cast<double>(total);
  CHECK(frac > 0.4);
  CHECK(frac < 0.6);
}

TEST_CASE("per-block sampling probabilities act blockwise") {
  StackedSignal g = generate_smooth_truth({5, 2, 1.0}, 8);
  MeasurementStack A = generate_outliers(g, {0.0, {1.0, 0.0}}, 8);
  const auto& g0 = g.block(0).values();
  for (int i = 0; i < 5; ++i)
    for (int j = i + 1; j < 5; ++j)
      CHECK(A.block(0)(i, j) == g0[i] * std::conj(g0[j]));
  CHECK(A.block(1).norm() == 0.0);
}

TEST_CASE("corrupted-model validation") {
  StackedSignal g = generate_smooth_truth({4, 3, 1.0}, 1);
  CHECK_THROWS_AS(generate_outliers(g, {0.2, {}}, 1), ValidationError);
  CHECK_THROWS_AS(generate_outliers(g, {0.2, {0.5, 0.5}}, 1), ValidationError);
  CHECK_THROWS_AS(generate_outliers(g, {0.2, {1.5}}, 1), ValidationError);
  CHECK_THROWS_AS(generate_outliers(g, {-0.1, {0.5}}, 1), ValidationError);
  CHECK_THROWS_AS(generate_outliers(g, {1.5, {0.5}}, 1), ValidationError);
}

TEST_CASE("sub-gaussian width of a centered Bernoulli") {
  CHECK(bernoulli_subg_width(0.0) == 0.0);
  CHECK(bernoulli_subg_width(1.0) == 0.0);
  CHECK(bernoulli_subg_width(0.5) == doctest::Approx(std::sqrt(0.125)).epsilon(1e-14));
  const double w02 = std::sqrt(0.6 / (4.0 * std::log(4.0)));
  CHECK(bernoulli_subg_width(0.2) == doctest::Approx(w02).epsilon(1e-14));
  CHECK(bernoulli_subg_width(0.3) ==
        doctest::Approx(bernoulli_subg_width(0.7)).epsilon(1e-12));
  CHECK_THROWS_AS(bernoulli_subg_width(-0.1), ValidationError);
  CHECK_THROWS_AS(bernoulli_subg_width(1.1), ValidationError);
}

TEST_CASE("noise statistics at eta = p = 0.2") {
  OutlierNoiseStats s = outlier_noise_stats({0.2, {0.2}});
  CHECK(s.p_min == 0.2);
  CHECK(s.p_max == 0.2);
  CHECK(s.p_mean == 0.2);
  CHECK(s.d_bar == doctest::Approx(0.16).epsilon(1e-14));
  CHECK(s.V == doctest::Approx(0.16).epsilon(1e-14));
  const double w = bernoulli_subg_width(0.2);
  CHECK(s.Q == doctest::Approx(0.2 + 2.0 * w).epsilon(1e-14));
  // p_max eta + (1-eta)^2 V + p_max V (1-eta)
  CHECK(s.f == doctest::Approx(0.04 + 0.64 * 0.16 + 0.2 * 0.16 * 0.8).epsilon(1e-14));
  CHECK(s.f == doctest::Approx(0.168).epsilon(1e-14));
}

TEST_CASE("noise statistics with a per-block probability vector") {
  OutlierNoiseStats s = outlier_noise_stats({0.0, {0.1, 0.5, 0.9}});
  CHECK(s.p_min == 0.1);
  CHECK(s.p_max == 0.9);
  CHECK(s.p_mean == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(s.d_bar == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(s.V == 0.25);  // attained at p = 0.5
  CHECK(s.Q == doctest::Approx(std::sqrt(0.125)).epsilon(1e-14));
  CHECK(s.f == doctest::Approx(0.25 + 0.9 * 0.25).epsilon(1e-14));
}

TEST_CASE("clean limits of the noise statistics") {
  OutlierNoiseStats s = outlier_noise_stats({0.0, {1.0}});
  CHECK(s.d_bar == 1.0);
  CHECK(s.V == 0.0);
  CHECK(s.Q == 0.0);
  CHECK(s.f == 0.0);
}
