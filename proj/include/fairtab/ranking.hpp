#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "fairtab/error.hpp"
#include "fairtab/format.hpp"

namespace fairtab {

namespace detail {

inline void count_classes(std::span<const int> y, std::span<const double> s, double& pos,
                          double& neg) {
  if (y.size() != s.size()) fail(ErrorKind::kShape, "labels and scores differ in length");
  pos = neg = 0.0;
  for (int v : y) {
    if (v == 1) pos += 1;
    else if (v == 0) neg += 1;
    else fail(ErrorKind::kLabel, "label must be 0 or 1");
  }
}

}  // namespace detail

/// Area under the ROC curve from mid-ranks (Mann-Whitney U); ties count 1/2.
inline double auroc(std::span<const int> y_true, std::span<const double> y_score) {
  double pos = 0, neg = 0;
  detail::count_classes(y_true, y_score, pos, neg);
  if (pos == 0 || neg == 0) fail(ErrorKind::kDegenerateLabels, "AU-ROC needs both classes");
  std::vector<std::size_t> order(y_score.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return y_score[a] < y_score[b]; });
  double positive_rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && y_score[order[j]] == y_score[order[i]]) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k)
      if (y_true[order[k]] == 1) positive_rank_sum += mid_rank;
    i = j;
  }
  return (positive_rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

/// Average precision: sum over distinct thresholds (descending) of
/// (recall step) x precision. Tied scores form one threshold.
inline double auprc(std::span<const int> y_true, std::span<const double> y_score) {
  double pos = 0, neg = 0;
  detail::count_classes(y_true, y_score, pos, neg);
  if (pos == 0) fail(ErrorKind::kDegenerateLabels, "AU-PRC needs at least one positive");
  std::vector<std::size_t> order(y_score.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return y_score[a] > y_score[b]; });
  double tp = 0, seen = 0, ap = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    double new_tp = 0;
    while (j < order.size() && y_score[order[j]] == y_score[order[i]]) {
      new_tp += y_true[order[j]];
      ++j;
    }
    tp += new_tp;
    seen += static_cast<double>(j - i);
    if (new_tp > 0) ap += (new_tp / pos) * (tp / seen);
    i = j;
  }
  return ap;
}

// ---------------------------------------------------------------------------
// Welch t-test
// ---------------------------------------------------------------------------

/// Regularized incomplete beta I_x(a, b) by Lentz's continued fraction.
inline double incomplete_beta(double x, double a, double b) {
  if (!(x >= 0.0 && x <= 1.0) || !(a > 0.0) || !(b > 0.0)) {
    fail(ErrorKind::kDomain, "incomplete_beta arguments out of range");
  }
  if (x == 0.0 || x == 1.0) return x;
  if (x > (a + 1.0) / (a + b + 2.0)) return 1.0 - incomplete_beta(1.0 - x, b, a);

  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  constexpr double kTiny = 1e-300;
  constexpr double kEps = 1e-16;
  double c = 1.0;
  double d = 1.0 - (a + b) * x / (a + 1.0);
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double f = d;
  for (int m = 1; m <= 10000; ++m) {
    const double m2 = 2.0 * m;
    double numerator = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
    d = 1.0 + numerator * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + numerator / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    f *= d * c;
    numerator = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
    d = 1.0 + numerator * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + numerator / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    f *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return std::exp(log_front) * f / a;
}

/// Two-sided p-value of Student's t with df degrees of freedom.
inline double student_t_two_sided_p(double t, double df) {
  if (std::isinf(t)) return 0.0;
  return incomplete_beta(df / (df + t * t), 0.5 * df, 0.5);
}

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
  double mean_diff = 0.0;  // mean(a) - mean(b)
};

/// Welch's unequal-variance t-test. If both samples have zero variance the
/// result is t = 0, p = 1 for equal means and t = +-inf, p = 0 otherwise.
inline TTestResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) fail(ErrorKind::kValidation, "t-test needs >= 2 values per sample");
  auto moments = [](std::span<const double> v, double& m, double& var) {
    m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    var = 0.0;
    for (double x : v) var += (x - m) * (x - m);
    var /= static_cast<double>(v.size() - 1);
  };
  double ma, va, mb, vb;
  moments(a, ma, va);
  moments(b, mb, vb);
  TTestResult r;
  r.mean_diff = ma - mb;
  const double sa = va / static_cast<double>(a.size());
  const double sb = vb / static_cast<double>(b.size());
  const double se2 = sa + sb;
  if (se2 == 0.0) {
    r.df = static_cast<double>(a.size() + b.size() - 2);
    if (r.mean_diff == 0.0) return r;
    r.t = r.mean_diff > 0 ? INFINITY : -INFINITY;
    r.p = 0.0;
    return r;
  }
  r.t = r.mean_diff / std::sqrt(se2);
  r.df = se2 * se2 / (sa * sa / static_cast<double>(a.size() - 1) +
                      sb * sb / static_cast<double>(b.size() - 1));
  r.p = std::clamp(student_t_two_sided_p(r.t, r.df), 0.0, 1.0);
  return r;
}

struct MetricSample {
  std::string model;
  std::string metric;
  std::vector<double> values;  // one per replicate
};

struct PairwiseEntry {
  double mean_diff = 0.0;  // row minus column
  double p = 1.0;
  double neg_log10_p = 0.0;
};

struct PairwiseMatrix {
  std::string metric;
  std::vector<std::string> models;
  std::vector<std::vector<PairwiseEntry>> entries;  // [row][column]
};

inline PairwiseMatrix pairwise_matrix(const std::vector<MetricSample>& samples) {
  if (samples.size() < 2) fail(ErrorKind::kValidation, "pairwise comparison needs >= 2 models");
  const std::size_t n = samples.size();
  for (const auto& s : samples) {
    if (s.values.size() != samples.front().values.size()) {
      fail(ErrorKind::kAlignment, "model '" + s.model + "' has " + std::to_string(s.values.size()) +
                                      " replicates, '" + samples.front().model + "' has " +
                                      std::to_string(samples.front().values.size()));
    }
  }
  PairwiseMatrix m;
  m.metric = samples.front().metric;
  m.entries.assign(n, std::vector<PairwiseEntry>(n));
  for (const auto& s : samples) m.models.push_back(s.model);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const TTestResult r = welch_t_test(samples[i].values, samples[j].values);
      m.entries[i][j] = {r.mean_diff, r.p, r.p >= 1.0 ? 0.0 : -std::log10(r.p)};
    }
  }
  return m;
}

inline void write_pairwise_csv(std::ostream& out, const PairwiseMatrix& m) {
  out << "row_model,column_model,metric,mean_diff,p,neg_log10_p\n";
  for (std::size_t i = 0; i < m.models.size(); ++i)
    for (std::size_t j = 0; j < m.models.size(); ++j) {
      const auto& e = m.entries[i][j];
      out << m.models[i] << ',' << m.models[j] << ',' << m.metric << ',' << format_double(e.mean_diff)
          << ',' << format_double(e.p) << ',' << format_double(e.neg_log10_p) << '\n';
    }
}

}  // namespace fairtab
