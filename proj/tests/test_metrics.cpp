#include <doctest.h>

#include <algorithm>
#include <vector>

#include "prmcal/error.hpp"
#include "prmcal/metrics.hpp"
#include "prmcal/rng.hpp"

using namespace prmcal;

namespace {

std::pair<std::vector<double>, std::vector<double>> random_pairs(Rng& rng, std::size_t n) {
  std::vector<double> preds(n), targets(n);
  for (std::size_t i = 0; i < n; ++i) {
    preds[i] = rng.uniform01();
    targets[i] = rng.uniform01();
  }
  return {preds, targets};
}

}  // namespace

TEST_CASE("brier fixtures") {
  CHECK(brier({1, 1}, {1, 0}) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(brier({0.3, 0.7, 0.9}, {0.3, 0.7, 0.9}) == doctest::Approx(0.0));
  CHECK(brier({0.9, 0.6, 0.3}, {0.5, 0.5, 0.5}) == doctest::Approx(0.07).epsilon(1e-12));
}

TEST_CASE("pos_brier fixtures") {
  CHECK(pos_brier({0.9}, {0.5}) == doctest::Approx(0.16).epsilon(1e-12));
  CHECK(pos_brier({0.2}, {0.5}) == doctest::Approx(0.0));
  CHECK(pos_brier({1, 0}, {0, 1}) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("ece fixtures") {
  CHECK(ece({0.8, 0.8, 0.2, 0.2}, {1, 1, 0, 0}, 2) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(ece({0.1, 0.5, 0.9}, {0.1, 0.5, 0.9}, 7) == doctest::Approx(0.0));
  CHECK(ece({0.75, 0.75, 0.75, 0.75}, {0.75, 0.75, 0.25, 0.25}, 10) ==
        doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("adaptive_ce fixtures") {
  CHECK(adaptive_ce({0.2, 0.4, 0.8}, {0.2, 0.4, 0.8}, 3) == doctest::Approx(0.0));
  CHECK(adaptive_ce({0.1, 0.2, 0.8, 0.9}, {0, 0, 1, 1}, 2) ==
        doctest::Approx(0.15).epsilon(1e-12));
  // One point per bin degenerates to the mean absolute error.
  const std::vector<double> preds = {0.9, 0.1, 0.5, 0.3};
  const std::vector<double> targets = {0.7, 0.2, 0.5, 0.6};
  double mae = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) mae += std::abs(preds[i] - targets[i]);
  mae /= static_cast<double>(preds.size());
  CHECK(adaptive_ce(preds, targets, 4) == doctest::Approx(mae).epsilon(1e-12));
}

TEST_CASE("average_ce fixtures") {
  // Single occupied bin: its gap is the whole metric.
  CHECK(average_ce({0.52, 0.58}, {0.2, 0.3}, 10) ==
        doctest::Approx(std::abs(0.55 - 0.25)).epsilon(1e-12));
  CHECK(average_ce({0.05, 0.95}, {0.05, 0.55}, 10) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(average_ce({0.1, 0.9}, {0.1, 0.9}, 10) == doctest::Approx(0.0));
}

TEST_CASE("prediction of exactly 1.0 lands in the last bin") {
  CHECK(ece({1.0}, {1.0}, 10) == doctest::Approx(0.0));
  CHECK(average_ce({1.0}, {0.5}, 10) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("metric errors") {
  CHECK_THROWS_AS(brier({0.5}, {0.5, 0.5}), Error);
  CHECK_THROWS_AS(brier({}, {}), Error);
  CHECK_THROWS_AS(brier({1.5}, {0.5}), Error);
  CHECK_THROWS_AS(ece({0.5}, {0.5}, 0), Error);
}

TEST_CASE("all metrics are permutation invariant") {
  Rng rng(21);
  auto [preds, targets] = random_pairs(rng, 64);
  const MetricReport before = compute_metrics(preds, targets, 10);
  // Apply the same random permutation to both vectors.
  std::vector<std::size_t> order(preds.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[rng.bounded(i)]);
  std::vector<double> p2(preds.size()), t2(preds.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    p2[i] = preds[order[i]];
    t2[i] = targets[order[i]];
  }
  const MetricReport after = compute_metrics(p2, t2, 10);
  CHECK(after.brier == doctest::Approx(before.brier).epsilon(1e-12));
  CHECK(after.pos_brier == doctest::Approx(before.pos_brier).epsilon(1e-12));
  CHECK(after.ece == doctest::Approx(before.ece).epsilon(1e-12));
  CHECK(after.adaptive_ce == doctest::Approx(before.adaptive_ce).epsilon(1e-12));
  CHECK(after.average_ce == doctest::Approx(before.average_ce).epsilon(1e-12));
}

TEST_CASE("brier decomposes into over- and under-estimation parts") {
  Rng rng(22);
  for (int round = 0; round < 10; ++round) {
    auto [preds, targets] = random_pairs(rng, 33);
    CHECK(brier(preds, targets) ==
          doctest::Approx(pos_brier(preds, targets) + pos_brier(targets, preds))
              .epsilon(1e-12));
  }
}

TEST_CASE("ece equals average_ce when bins are equally populated") {
  std::vector<double> preds, targets;
  Rng rng(23);
  for (int b = 0; b < 5; ++b)
    for (int i = 0; i < 4; ++i) {
      preds.push_back(b / 5.0 + 0.1);
      targets.push_back(rng.uniform01());
    }
  CHECK(ece(preds, targets, 5) == doctest::Approx(average_ce(preds, targets, 5)).epsilon(1e-12));
}

TEST_CASE("uniform overestimation bias never lowers pos_brier") {
  Rng rng(24);
  std::vector<double> base(100);
  for (auto& x : base) x = rng.uniform01();
  double prev = pos_brier(base, base);
  for (double delta : {0.05, 0.1, 0.2, 0.4}) {
    std::vector<double> shifted(base.size());
    for (std::size_t i = 0; i < base.size(); ++i)
      shifted[i] = std::min(1.0, base[i] + delta);
    const double val = pos_brier(shifted, base);
    CHECK(val >= prev - 1e-12);
    prev = val;
  }
}

TEST_CASE("pos_brier never exceeds brier") {
  Rng rng(25);
  for (int round = 0; round < 10; ++round) {
    auto [preds, targets] = random_pairs(rng, 17);
    CHECK(pos_brier(preds, targets) <= brier(preds, targets) + 1e-15);
  }
}

TEST_CASE("deviation histogram centers and counts") {
  const auto hist = deviation_histogram({0.5, 0.9}, {0.5, 0.5}, 4);
  REQUIRE(hist.counts.size() == 4);
  CHECK(hist.counts[2] == 2);  // deviations 0 and 0.4 both land in [0, 0.5)
  CHECK(hist.counts[0] + hist.counts[1] + hist.counts[3] == 0);
  CHECK(hist.mean_deviation == doctest::Approx(0.2).epsilon(1e-12));

  const auto wide = deviation_histogram({0.9, 0.1}, {0.1, 0.9}, 4);
  CHECK(wide.counts[3] == 1);  // +0.8
  CHECK(wide.counts[0] == 1);  // -0.8
}
