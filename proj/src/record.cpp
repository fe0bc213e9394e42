#include "prmcal/record.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "prmcal/error.hpp"
#include "prmcal/mathutil.hpp"
#include "prmcal/rng.hpp"

namespace prmcal {

namespace {

std::string row_prefix(long row) {
  return row >= 0 ? "row " + std::to_string(row) + ": " : std::string();
}

// Allocates n units across the three fractions, floor + largest remainder,
// so exact proportions (e.g. 100 * 0.25) come out exact.
std::array<std::size_t, 3> allocate_counts(std::size_t n, const SplitFractions& f) {
  const double fr[3] = {f.fit, f.conformal, f.test};
  std::array<std::size_t, 3> counts{};
  double rem[3];
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    const double exact = fr[i] * static_cast<double>(n);
    counts[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    rem[i] = exact - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  std::array<int, 3> order = {0, 1, 2};
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (rem[a] != rem[b]) return rem[a] > rem[b];
    return a < b;
  });
  for (int i = 0; assigned < n; ++i) {
    ++counts[order[static_cast<std::size_t>(i % 3)]];
    ++assigned;
  }
  return counts;
}

}  // namespace

void validate_record(const CalibrationRecord& rec, long row) {
  const std::string at = row_prefix(row);
  if (rec.question_id.empty())
    fail(Errc::missing_field, at + "question_id is empty");
  if (rec.trajectory_index < 1)
    fail(Errc::invariant_violation,
         at + "trajectory_index must be >= 1, got " + std::to_string(rec.trajectory_index));
  if (rec.step_index < 0)
    fail(Errc::invariant_violation,
         at + "step_index must be >= 0, got " + std::to_string(rec.step_index));
  if (rec.total_steps < rec.step_index)
    fail(Errc::invariant_violation,
         at + "total_steps (" + std::to_string(rec.total_steps) + ") < step_index (" +
             std::to_string(rec.step_index) + ")");
  if (rec.mc_samples < 1)
    fail(Errc::invariant_violation,
         at + "mc_samples must be >= 1, got " + std::to_string(rec.mc_samples));
  if (rec.success_count < 0 || rec.success_count > rec.mc_samples)
    fail(Errc::invariant_violation,
         at + "success_count (" + std::to_string(rec.success_count) +
             ") outside [0, mc_samples=" + std::to_string(rec.mc_samples) + "]");
  if (rec.raw_score) {
    if (!std::isfinite(*rec.raw_score) || *rec.raw_score < 0.0 || *rec.raw_score > 1.0)
      fail(Errc::invariant_violation, at + "raw_score outside [0,1]");
  }
  if (rec.raw_logit && !std::isfinite(*rec.raw_logit))
    fail(Errc::invariant_violation, at + "raw_logit is not finite");
  if (rec.raw_score && rec.raw_logit) {
    const double implied = sigmoid(*rec.raw_logit);
    if (std::abs(implied - *rec.raw_score) > 1e-9)
      fail(Errc::invariant_violation,
           at + "raw_score does not equal sigmoid(raw_logit) within 1e-9");
  }
  if (rec.difficulty_level && (*rec.difficulty_level < 1 || *rec.difficulty_level > 5))
    fail(Errc::invariant_violation,
         at + "difficulty_level outside 1..5: " + std::to_string(*rec.difficulty_level));
  for (const auto& [name, value] : rec.features) {
    if (name.empty()) fail(Errc::invariant_violation, at + "empty feature name");
    if (!std::isfinite(value))
      fail(Errc::invariant_violation, at + "feature '" + name + "' is not finite");
  }
}

DatasetSplit split_dataset(const std::vector<CalibrationRecord>& records,
                           const SplitFractions& fractions, std::uint64_t seed,
                           Grouping grouping) {
  const double sum = fractions.fit + fractions.conformal + fractions.test;
  if (std::abs(sum - 1.0) > 1e-9)
    fail(Errc::invalid_config, "split fractions must sum to 1, got " + std::to_string(sum));
  if (fractions.fit < 0.0 || fractions.conformal < 0.0 || fractions.test < 0.0)
    fail(Errc::invalid_config, "split fractions must be >= 0");
  if (records.empty()) fail(Errc::empty_input, "no records to split");

  // Units are either record indices or question groups, shuffled with a
  // seeded Fisher-Yates so partitions replay exactly.
  std::vector<std::vector<std::size_t>> units;
  if (grouping == Grouping::by_record) {
    units.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) units.push_back({i});
  } else {
    std::map<std::string, std::size_t> group_of;
    for (std::size_t i = 0; i < records.size(); ++i) {
      auto [it, inserted] = group_of.try_emplace(records[i].question_id, units.size());
      if (inserted) units.emplace_back();
      units[it->second].push_back(i);
    }
  }

  Rng rng(seed);
  for (std::size_t i = units.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.bounded(i));
    std::swap(units[i - 1], units[j]);
  }

  const auto counts = allocate_counts(units.size(), fractions);
  const double fr[3] = {fractions.fit, fractions.conformal, fractions.test};
  const char* names[3] = {"fit", "conformal", "test"};
  for (int i = 0; i < 3; ++i) {
    if (fr[i] > 1e-9 && counts[static_cast<std::size_t>(i)] == 0)
      fail(Errc::empty_split,
           std::string(names[i]) + " fraction is nonzero but received zero items");
  }

  DatasetSplit split;
  split.split_seed = seed;
  split.grouping = grouping;
  std::vector<CalibrationRecord>* sets[3] = {&split.fit_set, &split.conformal_set,
                                             &split.test_set};
  std::size_t unit = 0;
  for (int s = 0; s < 3; ++s) {
    std::vector<std::size_t> member_rows;
    for (std::size_t c = 0; c < counts[static_cast<std::size_t>(s)]; ++c, ++unit) {
      for (std::size_t row : units[unit]) member_rows.push_back(row);
    }
    // Keep input order inside each set.
    std::sort(member_rows.begin(), member_rows.end());
    sets[s]->reserve(member_rows.size());
    for (std::size_t row : member_rows) sets[s]->push_back(records[row]);
  }
  return split;
}

}  // namespace prmcal
