#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fairtab/error.hpp"
#include "fairtab/format.hpp"
#include "fairtab/random.hpp"

namespace fairtab {

enum class Subset { kTrain = 0, kValidation = 1, kTest = 2 };

inline const char* to_string(Subset s) {
  switch (s) {
    case Subset::kTrain: return "train";
    case Subset::kValidation: return "val";
    case Subset::kTest: return "test";
  }
  return "?";
}

struct SplitPlan {
  std::uint64_t seed = 0;
  std::array<double, 3> targets{0.70, 0.15, 0.15};
  std::vector<std::string> days;        // distinct days, sorted
  std::vector<std::size_t> day_counts;  // rows per day
  std::vector<Subset> assignment;       // per day
  std::vector<Subset> row_subset;       // per row
  std::array<std::size_t, 3> counts{};  // rows per subset

  std::array<double, 3> realized() const {
    const double n = static_cast<double>(row_subset.size());
    return {counts[0] / n, counts[1] / n, counts[2] / n};
  }

  std::vector<std::size_t> rows(Subset s) const {
    std::vector<std::size_t> out;
    for (std::size_t r = 0; r < row_subset.size(); ++r)
      if (row_subset[r] == s) out.push_back(r);
    return out;
  }

  std::size_t largest_day() const {
    std::size_t m = 0;
    for (auto c : day_counts) m = std::max(m, c);
    return m;
  }

  /// One line per row: row_id,day,subset, after a commented header.
  std::string manifest(const std::vector<std::string>& row_days) const {
    std::ostringstream out;
    out << "# seed=" << seed << '\n';
    out << "# targets=" << format_double(targets[0]) << ',' << format_double(targets[1]) << ','
        << format_double(targets[2]) << '\n';
    out << "# counts=" << counts[0] << ',' << counts[1] << ',' << counts[2] << '\n';
    out << "row_id,day,subset\n";
    for (std::size_t r = 0; r < row_subset.size(); ++r)
      out << r << ',' << row_days[r] << ',' << to_string(row_subset[r]) << '\n';
    return out.str();
  }
};

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Day-atomic split. Days are shuffled by the seed and taken one at a time;
/// each goes to the subset furthest below its target row count. Once the
/// remaining days are only enough to cover the still-empty subsets, they are
/// forced into those.
inline SplitPlan split_by_day(const std::vector<std::string>& row_days, std::array<double, 3> targets,
                              std::uint64_t seed) {
  double total = 0.0;
  for (double t : targets) {
    if (!(t > 0.0)) fail(ErrorKind::kConfig, "split fractions must be positive");
    total += t;
  }
  if (std::abs(total - 1.0) > 1e-9) fail(ErrorKind::kConfig, "split fractions must sum to 1");

  std::map<std::string, std::size_t> per_day;
  for (const auto& d : row_days) ++per_day[d];
  if (per_day.size() < 3) {
    fail(ErrorKind::kSplit, "need at least 3 distinct days to split, found " + std::to_string(per_day.size()));
  }

  SplitPlan plan;
  plan.seed = seed;
  plan.targets = targets;
  for (const auto& [day, count] : per_day) {
    plan.days.push_back(day);
    plan.day_counts.push_back(count);
  }
  const std::size_t n_days = plan.days.size();
  std::vector<std::size_t> order(n_days);
  for (std::size_t i = 0; i < n_days; ++i) order[i] = i;
  Rng rng(seed);
  for (std::size_t i = n_days - 1; i > 0; --i) std::swap(order[i], order[rng() % (i + 1)]);

  const double n = static_cast<double>(row_days.size());
  std::array<double, 3> deficit{targets[0] * n, targets[1] * n, targets[2] * n};
  std::array<bool, 3> used{};
  plan.assignment.assign(n_days, Subset::kTrain);
  for (std::size_t step = 0; step < n_days; ++step) {
    const std::size_t day = order[step];
    const std::size_t remaining = n_days - step;
    const std::size_t empty = !used[0] + !used[1] + !used[2];
    int pick = -1;
    for (int k = 0; k < 3; ++k) {
      if (remaining <= empty && used[k]) continue;
      if (pick < 0 || deficit[k] > deficit[pick]) pick = k;
    }
    plan.assignment[day] = static_cast<Subset>(pick);
    deficit[pick] -= static_cast<double>(plan.day_counts[day]);
    used[pick] = true;
  }

  std::map<std::string, Subset> by_day;
  for (std::size_t i = 0; i < n_days; ++i) by_day[plan.days[i]] = plan.assignment[i];
  plan.row_subset.reserve(row_days.size());
  for (const auto& d : row_days) {
    const Subset s = by_day[d];
    plan.row_subset.push_back(s);
    ++plan.counts[static_cast<int>(s)];
  }
  return plan;
}

}  // namespace fairtab
