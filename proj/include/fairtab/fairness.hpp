#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>

#include "fairtab/error.hpp"

namespace fairtab {

/// Confusion counts of one sensitive group, plus the score mass on its true
/// negatives (the generalized FPR numerator).
struct GroupCounts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double negative_score_sum = 0.0;

  std::size_t positives() const { return tp + fn; }
  std::size_t negatives() const { return fp + tn; }
  std::size_t total() const { return tp + fp + tn + fn; }
};

/// groups[1] is the deprived group (S=1), groups[0] the privileged one (S=0).
struct GroupConfusion {
  std::array<GroupCounts, 2> groups;

  GroupConfusion swapped() const { return {{groups[1], groups[0]}}; }
};

enum class DgFprMode { kSoft, kHard };

namespace detail {

inline void require_groups(const GroupConfusion& gc) {
  for (int g = 0; g < 2; ++g) {
    if (gc.groups[g].total() == 0) {
      fail(ErrorKind::kGroupMissing, "group S=" + std::to_string(g) + " has no samples");
    }
  }
}

inline double tpr(const GroupCounts& c, int group) {
  if (c.positives() == 0) {
    fail(ErrorKind::kGroupMissing, "TPR undefined: group S=" + std::to_string(group) +
                                       " has no positives");
  }
  return static_cast<double>(c.tp) / static_cast<double>(c.positives());
}

inline double fpr(const GroupCounts& c, int group) {
  if (c.negatives() == 0) {
    fail(ErrorKind::kGroupMissing, "FPR undefined: group S=" + std::to_string(group) +
                                       " has no negatives");
  }
  return static_cast<double>(c.fp) / static_cast<double>(c.negatives());
}

}  // namespace detail

/// Tallies hard decisions (score >= threshold) per group.
inline GroupConfusion confusion_by_group(std::span<const int> y_true, std::span<const double> y_score,
                                         std::span<const int> s, double threshold = 0.5) {
  if (y_true.size() != y_score.size() || y_true.size() != s.size()) {
    fail(ErrorKind::kShape, "labels, scores and sensitive values differ in length");
  }
  if (!(threshold > 0.0 && threshold < 1.0)) {
    fail(ErrorKind::kValidation, "threshold must lie in (0, 1)");
  }
  GroupConfusion gc;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (s[i] != 0 && s[i] != 1) fail(ErrorKind::kLabel, "sensitive value must be 0 or 1");
    if (y_true[i] != 0 && y_true[i] != 1) fail(ErrorKind::kLabel, "label must be 0 or 1");
    GroupCounts& c = gc.groups[s[i]];
    const bool predicted = y_score[i] >= threshold;
    if (y_true[i] == 1) {
      (predicted ? c.tp : c.fn) += 1;
    } else {
      (predicted ? c.fp : c.tn) += 1;
      c.negative_score_sum += y_score[i];
    }
  }
  detail::require_groups(gc);
  return gc;
}

/// Average odds error: (|FPR1 - FPR0| + |TPR1 - TPR0|) / 2.
inline double aoe(const GroupConfusion& gc) {
  detail::require_groups(gc);
  const double dfpr = detail::fpr(gc.groups[1], 1) - detail::fpr(gc.groups[0], 0);
  const double dtpr = detail::tpr(gc.groups[1], 1) - detail::tpr(gc.groups[0], 0);
  return 0.5 * (std::abs(dfpr) + std::abs(dtpr));
}

/// Difference in generalized FPR: mean score over true negatives, S=1 minus
/// S=0. kHard uses the hard decisions, which reduces to FPR1 - FPR0.
inline double dg_fpr(const GroupConfusion& gc, DgFprMode mode = DgFprMode::kSoft) {
  detail::require_groups(gc);
  if (mode == DgFprMode::kHard) return detail::fpr(gc.groups[1], 1) - detail::fpr(gc.groups[0], 0);
  auto generalized = [](const GroupCounts& c, int group) {
    if (c.negatives() == 0) {
      fail(ErrorKind::kGroupMissing, "group S=" + std::to_string(group) + " has no negatives");
    }
    return c.negative_score_sum / static_cast<double>(c.negatives());
  };
  return generalized(gc.groups[1], 1) - generalized(gc.groups[0], 0);
}

/// Disparate impact ratio TPR1 / TPR0 (a ratio; 1 is parity).
inline double dir(const GroupConfusion& gc) {
  detail::require_groups(gc);
  const double privileged = detail::tpr(gc.groups[0], 0);
  const double deprived = detail::tpr(gc.groups[1], 1);
  if (privileged == 0.0) fail(ErrorKind::kUndefinedRatio, "TPR of group S=0 is zero");
  return deprived / privileged;
}

/// Equal opportunity difference TPR1 - TPR0.
inline double eod(const GroupConfusion& gc) {
  detail::require_groups(gc);
  return detail::tpr(gc.groups[1], 1) - detail::tpr(gc.groups[0], 0);
}

/// Statistical parity difference of the decisions, Pr(Yhat=1|S=1) - Pr(Yhat=1|S=0).
inline double spd(const GroupConfusion& gc) {
  detail::require_groups(gc);
  auto rate = [](const GroupCounts& c) {
    return static_cast<double>(c.tp + c.fp) / static_cast<double>(c.total());
  };
  return rate(gc.groups[1]) - rate(gc.groups[0]);
}

inline double spd(std::span<const double> y_score, std::span<const int> s, double threshold = 0.5) {
  if (y_score.size() != s.size()) fail(ErrorKind::kShape, "scores and sensitive values differ in length");
  if (!(threshold > 0.0 && threshold < 1.0)) {
    fail(ErrorKind::kValidation, "threshold must lie in (0, 1)");
  }
  double predicted[2] = {0, 0}, count[2] = {0, 0};
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != 0 && s[i] != 1) fail(ErrorKind::kLabel, "sensitive value must be 0 or 1");
    count[s[i]] += 1;
    if (y_score[i] >= threshold) predicted[s[i]] += 1;
  }
  for (int g = 0; g < 2; ++g) {
    if (count[g] == 0) fail(ErrorKind::kGroupMissing, "group S=" + std::to_string(g) + " has no samples");
  }
  return predicted[1] / count[1] - predicted[0] / count[0];
}

/// The five metrics as fractions (dir as a ratio).
struct FairnessReport {
  double aoe = 0, dg_fpr = 0, dir = 0, eod = 0, spd = 0;

  /// Percent view used by the reporting layer (DIR x100 as well).
  FairnessReport percent() const {
    return {aoe * 100.0, dg_fpr * 100.0, dir * 100.0, eod * 100.0, spd * 100.0};
  }
};

inline FairnessReport fairness_report(const GroupConfusion& gc, DgFprMode mode = DgFprMode::kSoft) {
  return {aoe(gc), dg_fpr(gc, mode), dir(gc), eod(gc), spd(gc)};
}

}  // namespace fairtab
