#pragma once

// Synthetic appointment no-show data with an injected sensitive-group bias.
//
// Covariates (independent of the sensitive attributes):
//   age            round(N(45, 18)) clipped to [0, 95]
//   gender         F with p 0.55, else M
//   nationality    N00 (local) with p 0.6, else uniform over N01..N07
//   clinic         uniform over C00..C11
//   specialty      uniform over S00..S07
//   lead_time_days floor(Exp(mean 15)) capped at 120
//   weekday        from the appointment date
//   hour           uniform integer 7..17
//   visit_type     new with p 0.35, else follow_up
//   x01..          standard normal fillers up to the feature count
//
// Label: no_show ~ Bernoulli(sigmoid(z)) with
//   z = b0 + 0.035 lead + -0.012 (age - 45) + 0.6 [new] + 0.08 (hour - 12)
//       + weekday effect + 0.1 ((clinic mod 5) - 2) + 0.8 x01 - 0.6 x02 + 0.5 x03 + 0.4 x04
//       + beta_s [foreigner] + 0.5 beta_s [female]
// b0 is solved by bisection so the mean probability over the drawn rows is
// the configured base rate.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "fairtab/csv.hpp"
#include "fairtab/random.hpp"
#include "fairtab/schema.hpp"

namespace fairtab {

struct GeneratorConfig {
  std::size_t n = 50000;
  std::uint64_t seed = 1;
  double beta_s = 1.0;
  std::size_t days = 365;
  std::size_t features = 42;
  double base_rate = 0.188;
  std::string start_date = "2019-01-01";

  static constexpr std::size_t kNamedFeatures = 9;

  void validate() const {
    if (n < 1) fail(ErrorKind::kConfig, "generator needs n >= 1");
    if (days < 1) fail(ErrorKind::kConfig, "generator needs days >= 1");
    if (features < kNamedFeatures) {
      fail(ErrorKind::kConfig, "generator needs features >= " + std::to_string(kNamedFeatures));
    }
    if (!std::isfinite(beta_s)) fail(ErrorKind::kConfig, "beta_s must be finite");
    if (!(base_rate > 0.0 && base_rate < 1.0)) fail(ErrorKind::kConfig, "base_rate must lie in (0, 1)");
  }
};

struct GeneratedData {
  std::string csv;
  Schema schema;
  std::vector<double> probability;  // true no-show probability per row
  double intercept = 0.0;
};

namespace detail {

inline std::chrono::sys_days parse_iso_day(const std::string& text) {
  int y = 0;
  unsigned m = 0, d = 0;
  if (std::sscanf(text.c_str(), "%d-%u-%u", &y, &m, &d) != 3) {
    fail(ErrorKind::kConfig, "start date '" + text + "' is not YYYY-MM-DD");
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) fail(ErrorKind::kConfig, "start date '" + text + "' is not a valid date");
  return std::chrono::sys_days{ymd};
}

inline std::string iso_day(std::chrono::sys_days day) {
  const std::chrono::year_month_day ymd{day};
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

inline std::string code(const char* prefix, std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%s%02zu", prefix, i);
  return buf;
}

}  // namespace detail

inline Schema synthetic_schema(std::size_t features) {
  using detail::code;
  Schema s;
  auto add = [&](std::string name, ColumnKind kind, ColumnRole role, std::vector<std::string> vocab = {},
                 std::vector<std::string> privileged = {}) {
    s.columns.push_back({std::move(name), kind, role, std::move(vocab), std::move(privileged)});
  };
  std::vector<std::string> nationalities, clinics, specialties;
  for (std::size_t i = 0; i < 8; ++i) nationalities.push_back(code("N", i));
  for (std::size_t i = 0; i < 12; ++i) clinics.push_back(code("C", i));
  for (std::size_t i = 0; i < 8; ++i) specialties.push_back(code("S", i));
  add("date", ColumnKind::kCategorical, ColumnRole::kDayKey);
  add("age", ColumnKind::kNumeric, ColumnRole::kFeature);
  add("gender", ColumnKind::kCategorical, ColumnRole::kSensitive, {"F", "M"}, {"M"});
  add("nationality", ColumnKind::kCategorical, ColumnRole::kSensitive, nationalities, {"N00"});
  add("clinic", ColumnKind::kCategorical, ColumnRole::kFeature, clinics);
  add("specialty", ColumnKind::kCategorical, ColumnRole::kFeature, specialties);
  add("lead_time_days", ColumnKind::kNumeric, ColumnRole::kFeature);
  add("weekday", ColumnKind::kCategorical, ColumnRole::kFeature, {"Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"});
  add("hour", ColumnKind::kNumeric, ColumnRole::kFeature);
  add("visit_type", ColumnKind::kCategorical, ColumnRole::kFeature, {"new", "follow_up"});
  for (std::size_t i = 1; i + GeneratorConfig::kNamedFeatures <= features; ++i)
    add(code("x", i), ColumnKind::kNumeric, ColumnRole::kFeature);
  add("no_show", ColumnKind::kNumeric, ColumnRole::kLabel);
  return s;
}

inline GeneratedData generate_synthetic(const GeneratorConfig& config) {
  config.validate();
  using detail::code;
  const auto start = detail::parse_iso_day(config.start_date);
  const std::size_t n = config.n;
  const std::size_t fillers = config.features - GeneratorConfig::kNamedFeatures;
  Rng rng(config.seed);

  struct Row {
    std::size_t day;
    unsigned weekday;  // 0 = Mon
    int age;
    bool female, foreign;
    std::size_t nationality, clinic, specialty;
    int lead, hour;
    bool is_new;
    std::vector<double> x;
    double z;  // logit without the intercept
  };
  static const std::array<double, 7> kWeekdayEffect{0.3, 0.0, 0.0, 0.0, 0.2, 0.4, 0.4};

  std::vector<Row> rows(n);
  for (auto& r : rows) {
    r.day = uniform_index(rng, config.days);
    r.weekday = std::chrono::weekday{start + std::chrono::days{r.day}}.iso_encoding() - 1;
    r.age = static_cast<int>(std::clamp(std::round(45.0 + 18.0 * standard_normal(rng)), 0.0, 95.0));
    r.female = uniform01(rng) < 0.55;
    r.foreign = uniform01(rng) >= 0.6;
    r.nationality = r.foreign ? 1 + uniform_index(rng, 7) : 0;
    r.clinic = uniform_index(rng, 12);
    r.specialty = uniform_index(rng, 8);
    r.lead = static_cast<int>(std::min(120.0, std::floor(-15.0 * std::log(1.0 - uniform01(rng)))));
    r.hour = 7 + static_cast<int>(uniform_index(rng, 11));
    r.is_new = uniform01(rng) < 0.35;
    r.x.resize(fillers);
    for (double& v : r.x) v = standard_normal(rng);
    static const std::array<double, 4> kFillerEffect{0.8, -0.6, 0.5, 0.4};
    double z = 0.035 * r.lead - 0.012 * (r.age - 45) + (r.is_new ? 0.6 : 0.0) + 0.08 * (r.hour - 12) +
               kWeekdayEffect[r.weekday] + 0.1 * (static_cast<double>(r.clinic % 5) - 2.0);
    for (std::size_t k = 0; k < std::min<std::size_t>(fillers, 4); ++k) z += kFillerEffect[k] * r.x[k];
    z += config.beta_s * (r.foreign ? 1.0 : 0.0) + 0.5 * config.beta_s * (r.female ? 1.0 : 0.0);
    r.z = z;
  }

  auto mean_rate = [&](double b0) {
    double total = 0.0;
    for (const auto& r : rows) total += 1.0 / (1.0 + std::exp(-(b0 + r.z)));
    return total / static_cast<double>(n);
  };
  double lo = -30.0, hi = 30.0;
  for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mean_rate(mid) < config.base_rate ? lo : hi) = mid;
  }
  GeneratedData out;
  out.intercept = 0.5 * (lo + hi);
  out.schema = synthetic_schema(config.features);

  static const char* kWeekdays[] = {"Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"};
  std::ostringstream csv;
  std::vector<std::string> fields;
  for (const auto& c : out.schema.columns) fields.push_back(c.name);
  write_csv_row(csv, fields);
  out.probability.reserve(n);
  char buf[32];
  for (const auto& r : rows) {
    const double p = 1.0 / (1.0 + std::exp(-(out.intercept + r.z)));
    out.probability.push_back(p);
    const int label = uniform01(rng) < p ? 1 : 0;
    fields.clear();
    fields.push_back(detail::iso_day(start + std::chrono::days{r.day}));
    fields.push_back(std::to_string(r.age));
    fields.push_back(r.female ? "F" : "M");
    fields.push_back(code("N", r.nationality));
    fields.push_back(code("C", r.clinic));
    fields.push_back(code("S", r.specialty));
    fields.push_back(std::to_string(r.lead));
    fields.push_back(kWeekdays[r.weekday]);
    fields.push_back(std::to_string(r.hour));
    fields.push_back(r.is_new ? "new" : "follow_up");
    for (double v : r.x) {
      std::snprintf(buf, sizeof(buf), "%.6f", v);
      fields.push_back(buf);
    }
    fields.push_back(label ? "1" : "0");
    write_csv_row(csv, fields);
  }
  out.csv = csv.str();
  return out;
}

/// Writes data.csv and schema.txt into `dir`.
inline void write_generated(const GeneratedData& data, const std::filesystem::path& dir) {
  write_text_file(dir / "data.csv", data.csv);
  write_text_file(dir / "schema.txt", data.schema.to_text());
}

}  // namespace fairtab
