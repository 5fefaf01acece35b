#include <cmath>
#include <random>

#include "doctest.h"
#include "mars/eval.hpp"
#include "test_util.hpp"

using namespace mars;
using test::rel_diff;

TEST_CASE("rmse examples") {
  const std::vector<double> a = {1.0, 2.0, 3.0};
  CHECK(rmse(a, a) == 0.0);

  const std::vector<double> zeros = {0.0, 0.0};
  const std::vector<double> target = {3.0, 4.0};
  CHECK(rmse(zeros, target) == doctest::Approx(std::sqrt(12.5)).epsilon(1e-12));
  CHECK(rmse(zeros, target) == doctest::Approx(3.5355).epsilon(1e-4));

  const std::vector<double> p = {5.0};
  const std::vector<double> q = {3.0};
  CHECK(rmse(p, q) == 2.0);

  CHECK_THROWS_AS(rmse(a, zeros), std::invalid_argument);
  CHECK_THROWS_AS(rmse(std::vector<double>{}, std::vector<double>{}),
                  std::invalid_argument);
}

TEST_CASE("hit ratio examples") {
  const RankingCase first_hit{{7, 3, 5}, {7}};
  const RankingCase third_place{{3, 5, 7}, {7}};
  const std::vector<RankingCase> single_hit = {first_hit};
  CHECK(hit_ratio_at_k(single_hit, 1) == 1.0);

  const std::vector<RankingCase> miss = {third_place};
  CHECK(hit_ratio_at_k(miss, 2) == 0.0);

  const std::vector<RankingCase> both = {first_hit, third_place};
  CHECK(hit_ratio_at_k(both, 2) == 0.5);

  CHECK_THROWS_AS(hit_ratio_at_k(both, 0), std::invalid_argument);
}

TEST_CASE("map examples") {
  const std::vector<RankingCase> top = {{{4, 1, 2}, {4}}};
  CHECK(map_at_k(top, 3) == 1.0);

  const std::vector<RankingCase> second = {{{1, 4, 2}, {4}}};
  CHECK(map_at_k(second, 2) == 0.5);

  const std::vector<RankingCase> absent = {{{1, 2, 3}, {9}}};
  CHECK(map_at_k(absent, 2) == 0.0);

  CHECK_THROWS_AS(map_at_k(top, 0), std::invalid_argument);
}

TEST_CASE("map never exceeds the hit ratio for single-relevant cases") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> pos(0, 9);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<RankingCase> cases;
    for (int i = 0; i < 8; ++i) {
      RankingCase c;
      for (int j = 0; j < 10; ++j) c.ranked.push_back(j);
      c.relevant = {pos(rng)};
      cases.push_back(std::move(c));
    }
    for (int k = 1; k <= 10; ++k) {
      CHECK(map_at_k(cases, k) <= hit_ratio_at_k(cases, k) + 1e-12);
    }
  }
}

TEST_CASE("metrics ignore relabeling of non-relevant ids") {
  const std::vector<RankingCase> a = {{{1, 2, 3, 4}, {3}}};
  const std::vector<RankingCase> b = {{{9, 8, 3, 7}, {3}}};
  for (int k = 1; k <= 4; ++k) {
    CHECK(hit_ratio_at_k(a, k) == hit_ratio_at_k(b, k));
    CHECK(map_at_k(a, k) == map_at_k(b, k));
  }
}

TEST_CASE("reconstruction report") {
  SensorModel zero;
  zero.factors.alpha = 2;
  zero.factors.viewer_factors = Matrix(3, 2);
  zero.factors.channel_factors = Matrix(3, 2);
  zero.factors.time_factors = Matrix(3, 2);
  zero.factors.donation_core = Tensor3(2, 2, 2);
  zero.factors.response_core = Tensor3(2, 2, 2);
  zero.social_influence = Matrix(3, 3);
  zero.theta.assign(FeatureVector::width(16, 2), 0.0);

  SUBCASE("zero model on a single-entry tensor") {
    EventTensor td(3, 3, 3), tr(3, 3, 3);
    td.set(1, 1, 1, 9.0);
    const auto report = reconstruction_report(zero, td, tr);
    CHECK(report.donation_loss == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(report.response_loss == 0.0);
  }
  SUBCASE("matches the per-cell oracle on random instances") {
    std::mt19937_64 rng(7);
    const SensorModel m = test::random_model(3, 3, 3, 2, rng);
    const EventTensor td = test::random_event_tensor(3, 3, 3, rng, 0.4);
    const EventTensor tr = test::random_event_tensor(3, 3, 3, rng, 0.4);
    const Tensor3 td_hat = m.reconstruct_donations();
    const Tensor3 tr_hat = m.reconstruct_responses();
    double wd = 0.0, wr = 0.0;
    for (int v = 0; v < 3; ++v) {
      for (int c = 0; c < 3; ++c) {
        for (int t = 0; t < 3; ++t) {
          wd += std::pow(td.at(v, c, t) - td_hat(v, c, t), 2);
          wr += std::pow(tr.at(v, c, t) - tr_hat(v, c, t), 2);
        }
      }
    }
    const auto report = reconstruction_report(m, td, tr);
    CHECK(rel_diff(report.donation_loss, wd / 27.0) <= 1e-10);
    CHECK(rel_diff(report.response_loss, wr / 27.0) <= 1e-10);
  }
  SUBCASE("perfect model reports zero") {
    EventTensor td(3, 3, 3), tr(3, 3, 3);
    const auto report = reconstruction_report(zero, td, tr);
    CHECK(report.donation_loss == 0.0);
    CHECK(report.response_loss == 0.0);
  }
}
