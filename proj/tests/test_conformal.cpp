#include <doctest.h>

#include <cmath>
#include <vector>

#include "prmcal/conformal.hpp"
#include "prmcal/error.hpp"
#include "prmcal/mathutil.hpp"
#include "prmcal/quantile_model.hpp"
#include "prmcal/rng.hpp"

using namespace prmcal;

namespace {

CalibrationRecord rec_with(double z, int success, int n_mc) {
  CalibrationRecord rec;
  rec.question_id = "q";
  rec.trajectory_index = 1;
  rec.step_index = 0;
  rec.total_steps = 1;
  rec.raw_logit = z;
  rec.raw_score = sigmoid(z);
  rec.success_count = success;
  rec.mc_samples = n_mc;
  return rec;
}

std::vector<CalibrationRecord> binomial_world(Rng& rng, std::size_t n, int n_mc = 8) {
  std::vector<CalibrationRecord> records;
  records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = 5.0 * (rng.uniform01() - 0.5);
    const double p = sigmoid(z);
    int success = 0;
    for (int j = 0; j < n_mc; ++j) success += rng.bernoulli(p) ? 1 : 0;
    records.push_back(rec_with(z, success, n_mc));
  }
  return records;
}

}  // namespace

TEST_CASE("offset is the rank-ceil((1-alpha)(n+1)) order statistic") {
  const std::vector<double> residuals = {-0.2, -0.1, 0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.7};
  const auto adj = conformal_from_residuals(residuals, 0.1, 0.1);
  // n = 9: rank = ceil(0.9 * 10) = 9 -> 9th smallest.
  CHECK(adj.offset == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(adj.residual_count == 9);
  CHECK_FALSE(adj.rank_overflow);
}

TEST_CASE("all-zero residuals give a zero offset") {
  const auto adj = conformal_from_residuals(std::vector<double>(12, 0.0), 0.1, 0.1);
  CHECK(adj.offset == doctest::Approx(0.0));
}

TEST_CASE("alpha extremes walk to the boundary order statistics") {
  const std::vector<double> residuals = {-0.2, -0.1, 0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.7};
  const auto near_one = conformal_from_residuals(residuals, 0.1, 0.95);
  CHECK(near_one.offset == doctest::Approx(-0.2));  // rank 1: the minimum
  const auto near_zero = conformal_from_residuals(residuals, 0.1, 0.01);
  CHECK(near_zero.offset == doctest::Approx(0.7));  // rank overflow: the maximum
  CHECK(near_zero.rank_overflow);
}

TEST_CASE("empty conformal sets and bad alpha are rejected") {
  CHECK_THROWS_AS(conformal_from_residuals({}, 0.1, 0.1), Error);
  CHECK_THROWS_AS(conformal_from_residuals({0.1}, 0.1, 0.0), Error);
  QuantileModel model({0.1}, {});
  CHECK_THROWS_AS(conformal_calibrate(model, 0.1, {}, 0.1), Error);
}

TEST_CASE("lower bound clips at zero and reduces to the prediction at offset 0") {
  QuantileModel model({0.1}, {});  // identity: prediction = sigmoid(z)
  ConformalAdjustment adj;
  adj.quantile_level = 0.1;
  adj.offset = 0.1;
  const auto rec = rec_with(logit(0.05), 0, 1);
  CHECK(conformal_lower_bound(adj, model, rec) == doctest::Approx(0.0));
  adj.offset = 0.0;
  CHECK(conformal_lower_bound(adj, model, rec) ==
        doctest::Approx(model.predict_at(rec, 0.1)).epsilon(1e-12));
}

TEST_CASE("level must be one of the model's levels") {
  QuantileModel model({0.1, 0.5}, {});
  CHECK_THROWS_AS(conformal_calibrate(model, 0.25, {rec_with(0, 4, 8)}, 0.1), Error);
}

TEST_CASE("lower bound covers the target rate at the promised frequency") {
  // 80 replications of fit/conformal/test on exchangeable synthetic data.
  Rng rng(61);
  const double alpha = 0.1;
  QuantileTrainConfig config;
  config.max_iters = 250;
  double coverage_sum = 0.0;
  const int reps = 80;
  for (int rep = 0; rep < reps; ++rep) {
    auto fit_recs = binomial_world(rng, 120);
    auto conf_recs = binomial_world(rng, 120);
    auto test_recs = binomial_world(rng, 200);
    const auto fit = fit_quantile_model(fit_recs, {0.1}, config);
    const auto adj = conformal_calibrate(fit.model, 0.1, conf_recs, alpha);
    int covered = 0;
    for (const auto& rec : test_recs)
      if (rec.success_rate() >= conformal_lower_bound(adj, fit.model, rec) - 1e-12) ++covered;
    coverage_sum += static_cast<double>(covered) / static_cast<double>(test_recs.size());
  }
  const double mean_coverage = coverage_sum / reps;
  const double se = std::sqrt(0.9 * 0.1 / (reps * 200.0)) + 0.02 / std::sqrt(reps);
  CHECK(mean_coverage >= 1.0 - alpha - 3.0 * se);
}
