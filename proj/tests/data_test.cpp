#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "fairtab/dataset.hpp"
#include "fairtab/fairness.hpp"
#include "fairtab/split.hpp"
#include "fairtab/synthetic.hpp"
#include "test_util.hpp"

namespace fairtab {
namespace {

using testing::expect_error;

// --- structured text -------------------------------------------------------

TEST(KvConfig, ParsesEntriesListsAndNestedBlocks) {
  const char* text = R"(# top comment
version = 1
name = hello world   # trailing comment
quoted = "a # b, c"
items = [x, "y z", w]
empty = []
outer first {
  depth = 1
  inner {
    depth = 2
  }
}
)";
  KvBlock root = parse_kv(text, "t.cfg");
  require_version(root, 1);
  EXPECT_EQ(root.get_string("name", ""), "hello world");
  EXPECT_EQ(root.get_string("quoted", ""), "a # b, c");
  EXPECT_EQ(root.get_list("items"), (std::vector<std::string>{"x", "y z", "w"}));
  EXPECT_TRUE(root.get_list("empty").empty());
  ASSERT_EQ(root.blocks.size(), 1u);
  EXPECT_EQ(root.blocks[0].type, "outer");
  EXPECT_EQ(root.blocks[0].name, "first");
  EXPECT_EQ(root.blocks[0].get_int("depth", 0), 1);
  EXPECT_EQ(root.blocks[0].blocks[0].get_int("depth", 0), 2);
  EXPECT_EQ(root.get_double("missing", 2.5), 2.5);
}

TEST(KvConfig, Errors) {
  expect_error(ErrorKind::kConfig, [] { parse_kv("a = 1\na = 2\n", "t"); });
  expect_error(ErrorKind::kConfig, [] { parse_kv("block {\n a = 1\n", "t"); });
  expect_error(ErrorKind::kConfig, [] { parse_kv("}\n", "t"); });
  expect_error(ErrorKind::kConfig, [] { parse_kv("a = \"open\n", "t"); });
  expect_error(ErrorKind::kConfig, [] { parse_kv("a =\n", "t"); });
  expect_error(ErrorKind::kConfig, [] { require_version(parse_kv("version = 2\n", "t"), 1); });
  expect_error(ErrorKind::kConfig, [] { require_version(parse_kv("a = 1\n", "t"), 1); });
  expect_error(ErrorKind::kConfig, [] { parse_kv("a = x\n", "t").check_keys({"b"}); });
  expect_error(ErrorKind::kConfig, [] { parse_kv("n = abc\n", "t").get_int("n", 0); });
  try {
    parse_kv("ok = 1\n\nbad line here\n", "where.cfg");
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("where.cfg:3"), std::string::npos) << e.what();
  }
}

TEST(KvConfig, QuoteRoundTrip) {
  for (std::string v : {"plain", "with space", "a#b", "q\"uote", " lead", "x,y"}) {
    KvBlock b = parse_kv("k = " + kv_quote(v) + "\n", "t");
    EXPECT_EQ(b.get_string("k", ""), v);
  }
}

// --- CSV -------------------------------------------------------------------

TEST(Csv, QuotingAndLineEndings) {
  CsvTable t = parse_csv("a,b,c\r\n1,\"x, y\",\"say \"\"hi\"\"\"\r\n2,\"multi\nline\",\n", "t.csv");
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0][1], "x, y");
  EXPECT_EQ(t.rows[0][2], "say \"hi\"");
  EXPECT_EQ(t.rows[1][1], "multi\nline");
  EXPECT_EQ(t.rows[1][2], "");
  EXPECT_EQ(csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv_escape("plain"), "plain");
}

TEST(Csv, Errors) {
  expect_error(ErrorKind::kIngestion, [] { parse_csv("", "t.csv"); });
  expect_error(ErrorKind::kIngestion, [] { parse_csv("a,b\n1\n", "t.csv"); });
  expect_error(ErrorKind::kIngestion, [] { parse_csv("a\n\"open\n", "t.csv"); });
  expect_error(ErrorKind::kIngestion, [] { parse_csv("a\nx\"y\n", "t.csv"); });
  expect_error(ErrorKind::kIo, [] { read_csv_file("/nonexistent/file.csv"); });
}

// --- schema and ingestion --------------------------------------------------

const char* kSchema = R"(version = 1
column day {
  kind = categorical
  role = day_key
}
column age {
  kind = numeric
}
column color {
  kind = categorical
  vocabulary = [red, blue]
}
column gender {
  kind = categorical
  role = sensitive
  vocabulary = [F, M]
  privileged = M
}
column y {
  kind = numeric
  role = label
}
)";

const char* kThreeRows =
    "day,age,color,gender,y\n"
    "2019-01-01,20,red,F,1\n"
    "2019-01-02,30,blue,M,0\n"
    "2019-01-02,40,red,M,0\n";

RawDataset load_text(const std::string& csv, const Schema& schema) {
  return load_dataset(parse_csv(csv, "t.csv"), schema, "t.csv");
}

TEST(Schema, ParseAndRoundTrip) {
  Schema s = parse_schema(kSchema, "s.txt");
  ASSERT_EQ(s.columns.size(), 5u);
  EXPECT_EQ(s.day_column(), 0u);
  EXPECT_EQ(s.label_column(), 4u);
  EXPECT_EQ(s.sensitive_columns(), std::vector<std::size_t>{3});
  Schema again = parse_schema(s.to_text(), "again");
  EXPECT_EQ(again.to_text(), s.to_text());
}

TEST(Schema, Validation) {
  expect_error(ErrorKind::kConfig, [] {
    parse_schema("version = 1\ncolumn a {\n kind = numeric\n}\n", "s");
  });
  expect_error(ErrorKind::kConfig, [] {
    parse_schema("version = 1\ncolumn a {\n kind = numeric\n role = sensitive\n privileged = 1\n}\n", "s");
  });
  expect_error(ErrorKind::kConfig, [] {
    parse_schema("version = 1\ncategorical_encoding = embedding\n", "s");
  });
  expect_error(ErrorKind::kConfig, [] {
    parse_schema("version = 1\ncolumn a {\n kind = text\n}\n", "s");
  });
  std::string bad_privileged = kSchema;
  bad_privileged.replace(bad_privileged.find("privileged = M"), 14, "privileged = X");
  expect_error(ErrorKind::kConfig, [&] { parse_schema(bad_privileged, "s"); });
}

TEST(Ingest, ThreeRowsEncodeToKnownMatrix) {
  RawDataset raw = load_text(kThreeRows, parse_schema(kSchema, "s"));
  auto rows = all_rows(raw);
  EncodedDataset enc = encode(raw, FeatureEncoder::fit(raw, rows), rows);
  // age standardized with mean 30 and population sd sqrt(200/3); then color, gender one-hot.
  const double z = 10.0 / std::sqrt(200.0 / 3.0);
  const double expected[3][5] = {{-z, 1, 0, 1, 0}, {0, 0, 1, 0, 1}, {z, 1, 0, 0, 1}};
  ASSERT_EQ(enc.features.cols(), 5u);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(enc.features.at(i, j), expected[i][j], 1e-15);
  EXPECT_EQ(enc.feature_names,
            (std::vector<std::string>{"age", "color=red", "color=blue", "gender=F", "gender=M"}));
  EXPECT_EQ(enc.labels, (std::vector<int>{1, 0, 0}));
  EXPECT_EQ(enc.sensitive[0], (std::vector<int>{1, 0, 0}));
  EXPECT_EQ(enc.days[1], "2019-01-02");
}

TEST(Ingest, DropSensitiveFeatures) {
  Schema s = parse_schema(kSchema, "s");
  s.drop_sensitive_features = true;
  RawDataset raw = load_text(kThreeRows, s);
  auto rows = all_rows(raw);
  EXPECT_EQ(FeatureEncoder::fit(raw, rows).width(), 3u);
}

TEST(Ingest, ErrorsCarryLocation) {
  Schema s = parse_schema(kSchema, "s");
  auto message = [&](const std::string& csv) {
    try {
      load_text(csv, s);
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kIngestion);
      return std::string(e.what());
    }
    ADD_FAILURE() << "no error";
    return std::string();
  };
  EXPECT_NE(message("day,age,color,y\n2019-01-01,1,red,0\n").find("missing column 'gender'"), std::string::npos);
  EXPECT_NE(message("day,age,color,gender,y\n2019-01-01,1,red,F,0\n2019-01-01,1,green,F,0\n")
                .find("row 2 (line 3), column 'color'"),
            std::string::npos);
  EXPECT_NE(message("day,age,color,gender,y\n2019-01-01,abc,red,F,0\n").find("column 'age'"), std::string::npos);
  EXPECT_NE(message("day,age,color,gender,y\n2019-01-01,,red,F,0\n").find("missing value"), std::string::npos);
  EXPECT_NE(message("day,age,color,gender,y\n2019-02-30,1,red,F,0\n").find("ISO date"), std::string::npos);
  EXPECT_NE(message("day,age,color,gender,y\n2019-01-01,1,red,F,2\n").find("label"), std::string::npos);
  EXPECT_NE(message("day,age,color,gender,y\n").find("no data rows"), std::string::npos);
}

TEST(Ingest, ImputeAndMapPolicies) {
  Schema s = parse_schema(kSchema, "s");
  s.missing = MissingPolicy::kImpute;
  s.unknown = UnknownPolicy::kMap;
  RawDataset raw = load_text(
      "day,age,color,gender,y\n2019-01-01,,green,F,1\n2019-01-02,30,,M,0\n2019-01-03,50,red,M,0\n", s);
  const auto& color = raw.schema.columns[2];
  EXPECT_EQ(color.vocabulary, (std::vector<std::string>{"red", "blue", kMissingCategory, kUnknownCategory}));
  auto rows = all_rows(raw);
  FeatureEncoder enc = FeatureEncoder::fit(raw, rows);
  EXPECT_EQ(enc.stats()[1].mean, 40.0);
  Tensor x = enc.transform(raw, rows);
  EXPECT_EQ(x.at(0, 0), 0.0);  // imputed with the training mean
  EXPECT_EQ(x.at(0, 4), 1.0);  // green -> __unknown__
  EXPECT_EQ(x.at(1, 3), 1.0);  // empty -> __missing__
  // Sensitive columns never impute.
  expect_error(ErrorKind::kIngestion, [&] { load_text("day,age,color,gender,y\n2019-01-01,1,red,,1\n", s); });
}

TEST(Ingest, InferredVocabularyIsSorted) {
  std::string text = kSchema;
  text.replace(text.find("  vocabulary = [red, blue]\n"), 27, "");
  RawDataset raw = load_text(kThreeRows, parse_schema(text, "s"));
  EXPECT_EQ(raw.schema.columns[2].vocabulary, (std::vector<std::string>{"blue", "red"}));
}

TEST(Ingest, EmitRoundTrip) {
  Schema s = parse_schema(kSchema, "s");
  s.missing = MissingPolicy::kImpute;
  RawDataset raw = load_text("day,age,color,gender,y\n2019-01-01,,red,F,1\n2019-01-02,0.1,,M,0\n"
                             "2019-01-03,1e-300,blue,M,1\n", s);
  const std::string emitted = to_csv(raw);
  RawDataset again = load_text(emitted, raw.schema);
  EXPECT_EQ(to_csv(again), emitted);
  EXPECT_EQ(again.schema.to_text(), raw.schema.to_text());
  EXPECT_EQ(again.columns[1].numeric[1], 0.1);
  EXPECT_EQ(again.columns[1].numeric[2], 1e-300);
  EXPECT_TRUE(std::isnan(again.columns[1].numeric[0]));
  EXPECT_EQ(again.columns[2].codes, raw.columns[2].codes);
  EXPECT_EQ(again.labels, raw.labels);
  EXPECT_EQ(again.days, raw.days);
}

TEST(Ingest, ProductClassOrdering) {
  std::array<int, 2> female_foreign{1, 1}, female_local{1, 0}, male_foreign{0, 1}, male_local{0, 0};
  EXPECT_EQ(product_class(female_foreign), 0);
  EXPECT_EQ(product_class(female_local), 1);
  EXPECT_EQ(product_class(male_foreign), 2);
  EXPECT_EQ(product_class(male_local), 3);
}

TEST(Ingest, FileLoadAndEncoderState) {
  testing::TempDir dir("ingest");
  write_text_file(dir.path() / "d.csv", kThreeRows);
  EncodedDataset a = ingest_csv(dir.path() / "d.csv", parse_schema(kSchema, "s"));
  EXPECT_EQ(a.rows(), 3u);
  RawDataset raw = load_text(kThreeRows, parse_schema(kSchema, "s"));
  auto rows = all_rows(raw);
  FeatureEncoder fitted = FeatureEncoder::fit(raw, rows);
  FeatureEncoder restored = FeatureEncoder::from_state(fitted.schema(), fitted.stats());
  Tensor x = fitted.transform(raw, rows), y = restored.transform(raw, rows);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(x.data()[i], y.data()[i]);
  expect_error(ErrorKind::kIo, [] { ingest_csv("/nonexistent.csv", parse_schema(kSchema, "s")); });
}

// --- day split -------------------------------------------------------------

std::vector<std::string> days_with_sizes(const std::vector<std::size_t>& sizes) {
  std::vector<std::string> out;
  for (std::size_t d = 0; d < sizes.size(); ++d)
    for (std::size_t k = 0; k < sizes[d]; ++k) out.push_back("day" + std::to_string(1000 + d));
  return out;
}

TEST(SplitByDay, TenEqualDays) {
  auto days = days_with_sizes(std::vector<std::size_t>(10, 10));
  for (std::uint64_t seed : {1, 2, 3}) {
    SplitPlan plan = split_by_day(days, {0.7, 0.15, 0.15}, seed);
    // Greedy on equal days: 7 train, then val, test, then the tie goes to val.
    EXPECT_EQ(plan.counts[0], 70u);
    EXPECT_EQ(plan.counts[1], 20u);
    EXPECT_EQ(plan.counts[2], 10u);
  }
}

TEST(SplitByDay, DayAtomicPartitionNearTargets) {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::size_t> sizes(20 + uniform_index(rng, 400));
    for (auto& s : sizes) s = 1 + uniform_index(rng, 200);
    auto days = days_with_sizes(sizes);
    SplitPlan plan = split_by_day(days, {0.7, 0.15, 0.15}, trial);
    ASSERT_EQ(plan.row_subset.size(), days.size());
    EXPECT_EQ(plan.counts[0] + plan.counts[1] + plan.counts[2], days.size());
    std::map<std::string, Subset> seen;
    for (std::size_t r = 0; r < days.size(); ++r) {
      auto [it, inserted] = seen.emplace(days[r], plan.row_subset[r]);
      if (!inserted) {
        ASSERT_EQ(it->second, plan.row_subset[r]) << "day split across subsets";
      }
    }
    const double weight = static_cast<double>(plan.largest_day()) / static_cast<double>(days.size());
    auto realized = plan.realized();
    for (int k = 0; k < 3; ++k) {
      EXPECT_GT(plan.counts[k], 0u);
      EXPECT_LE(std::abs(realized[k] - plan.targets[k]), weight);
    }
    auto train = plan.rows(Subset::kTrain), val = plan.rows(Subset::kValidation);
    EXPECT_EQ(train.size(), plan.counts[0]);
    EXPECT_EQ(val.size(), plan.counts[1]);
  }
}

TEST(SplitByDay, DeterministicPerSeed) {
  auto days = days_with_sizes({5, 9, 2, 7, 7, 3, 8, 1, 4, 6, 5, 5});
  SplitPlan a = split_by_day(days, {0.7, 0.15, 0.15}, 9);
  SplitPlan b = split_by_day(days, {0.7, 0.15, 0.15}, 9);
  EXPECT_EQ(a.manifest(days), b.manifest(days));
  EXPECT_EQ(fnv1a(a.manifest(days)), fnv1a(b.manifest(days)));
  bool any_different = false;
  for (std::uint64_t seed = 10; seed < 20; ++seed)
    any_different = any_different || split_by_day(days, {0.7, 0.15, 0.15}, seed).assignment != a.assignment;
  EXPECT_TRUE(any_different);
}

TEST(SplitByDay, Errors) {
  expect_error(ErrorKind::kSplit, [] { split_by_day(days_with_sizes({4, 4}), {0.7, 0.15, 0.15}, 1); });
  expect_error(ErrorKind::kConfig, [] { split_by_day(days_with_sizes({4, 4, 4}), {0.7, 0.2, 0.2}, 1); });
  // Three days always cover all three subsets.
  SplitPlan plan = split_by_day(days_with_sizes({100, 1, 1}), {0.7, 0.15, 0.15}, 1);
  for (auto c : plan.counts) EXPECT_GT(c, 0u);
}

TEST(Fnv1a, KnownVectors) {
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(hex64(0xaf63dc4c8601ec8cULL), "af63dc4c8601ec8c");
}

// --- synthetic generator ---------------------------------------------------

struct Generated {
  GeneratedData data;
  RawDataset raw;
};

Generated generate(double beta_s, std::size_t n, std::uint64_t seed) {
  GeneratorConfig cfg;
  cfg.n = n;
  cfg.seed = seed;
  cfg.beta_s = beta_s;
  GeneratedData data = generate_synthetic(cfg);
  RawDataset raw = load_dataset(parse_csv(data.csv, "gen.csv"), data.schema, "gen.csv");
  return {std::move(data), std::move(raw)};
}

double positive_rate_gap(const RawDataset& raw, std::size_t k) {
  double pos[2] = {0, 0}, tot[2] = {0, 0};
  for (std::size_t r = 0; r < raw.rows(); ++r) {
    pos[raw.sensitive[k][r]] += raw.labels[r];
    tot[raw.sensitive[k][r]] += 1;
  }
  return pos[1] / tot[1] - pos[0] / tot[0];
}

TEST(Synthetic, DeterministicAndWellFormed) {
  GeneratorConfig cfg;
  cfg.n = 500;
  cfg.seed = 5;
  GeneratedData a = generate_synthetic(cfg), b = generate_synthetic(cfg);
  EXPECT_EQ(a.csv, b.csv);
  cfg.seed = 6;
  EXPECT_NE(generate_synthetic(cfg).csv, a.csv);

  Schema schema = parse_schema(a.schema.to_text(), "schema.txt");
  RawDataset raw = load_dataset(parse_csv(a.csv, "a.csv"), schema, "a.csv");
  std::size_t features = 0;
  for (const auto& c : schema.columns) features += c.is_feature(false);
  EXPECT_EQ(features, 42u);
  EXPECT_EQ(raw.sensitive_names(), (std::vector<std::string>{"gender", "nationality"}));
  EXPECT_EQ(raw.sensitive_class_count(), 4u);

  testing::TempDir dir("gen");
  write_generated(a, dir.path());
  EXPECT_EQ(testing::read_file(dir.path() / "data.csv"), a.csv);
  EXPECT_NO_THROW(parse_schema(testing::read_file(dir.path() / "schema.txt"), "s"));
}

TEST(Synthetic, WeekdayMatchesDate) {
  GeneratorConfig cfg;
  cfg.n = 200;
  CsvTable t = parse_csv(generate_synthetic(cfg).csv, "g");
  for (const auto& row : t.rows) {
    if (row[0] == "2019-01-07") {
      EXPECT_EQ(row[7], "Mon");
    }
    if (row[0] == "2019-01-05") {
      EXPECT_EQ(row[7], "Sat");
    }
  }
}

TEST(Synthetic, ConfigErrors) {
  GeneratorConfig cfg;
  cfg.n = 0;
  expect_error(ErrorKind::kConfig, [&] { generate_synthetic(cfg); });
  cfg = GeneratorConfig{};
  cfg.features = 8;
  expect_error(ErrorKind::kConfig, [&] { generate_synthetic(cfg); });
  cfg = GeneratorConfig{};
  cfg.start_date = "2019-13-01";
  expect_error(ErrorKind::kConfig, [&] { generate_synthetic(cfg); });
}

TEST(Synthetic, NoBiasMeansNoGroupGap) {
  Generated g = generate(0.0, 50000, 101);
  EXPECT_LT(std::abs(positive_rate_gap(g.raw, 0)), 0.02);
  EXPECT_LT(std::abs(positive_rate_gap(g.raw, 1)), 0.02);
}

TEST(Synthetic, BiasMakesBayesScorerDisparate) {
  Generated g = generate(1.0, 50000, 103);
  double mean_p = 0.0;
  for (double p : g.data.probability) mean_p += p / 50000.0;
  EXPECT_NEAR(mean_p, 0.188, 1e-9);
  double base = 0.0;
  for (int y : g.raw.labels) base += y / 50000.0;
  EXPECT_NEAR(base, 0.188, 4.0 * std::sqrt(0.188 * 0.812 / 50000.0));
  // Nationality carries the full beta_s, gender half of it.
  EXPECT_GT(std::abs(spd(g.data.probability, g.raw.sensitive[1])), 0.05);
  EXPECT_GT(positive_rate_gap(g.raw, 1), positive_rate_gap(g.raw, 0));
  EXPECT_GT(positive_rate_gap(g.raw, 0), 0.0);
}

double chi_square(const std::vector<double>& observed, const std::vector<double>& probs) {
  double total = 0.0, stat = 0.0;
  for (double o : observed) total += o;
  for (std::size_t k = 0; k < observed.size(); ++k) {
    const double e = total * probs[k];
    stat += (observed[k] - e) * (observed[k] - e) / e;
  }
  return stat;
}

TEST(Synthetic, MarginalsPassChiSquare) {
  Generated g = generate(1.0, 50000, 107);
  const RawDataset& raw = g.raw;
  auto counts = [&](std::size_t column, std::size_t k) {
    std::vector<double> c(k, 0.0);
    for (int code : raw.columns[column].codes) c[code] += 1;
    return c;
  };
  // Critical values at p = 0.001.
  EXPECT_LT(chi_square(counts(2, 2), {0.55, 0.45}), 10.83);
  std::vector<double> nat(8, 0.4 / 7.0);
  nat[0] = 0.6;
  EXPECT_LT(chi_square(counts(3, 8), nat), 24.32);
  EXPECT_LT(chi_square(counts(4, 12), std::vector<double>(12, 1.0 / 12)), 31.26);
  EXPECT_LT(chi_square(counts(5, 8), std::vector<double>(8, 1.0 / 8)), 24.32);
  EXPECT_LT(chi_square(counts(9, 2), {0.35, 0.65}), 10.83);
  std::vector<double> hours(11, 0.0);
  for (double h : raw.columns[8].numeric) hours[static_cast<std::size_t>(h) - 7] += 1;
  EXPECT_LT(chi_square(hours, std::vector<double>(11, 1.0 / 11)), 29.59);
  std::set<std::string> distinct(raw.days.begin(), raw.days.end());
  EXPECT_EQ(distinct.size(), 365u);
}

TEST(Standardization, TrainingStatisticsOnly) {
  Generated g = generate(1.0, 3000, 109);
  SplitPlan plan = split_by_day(g.raw.days, {0.7, 0.15, 0.15}, 3);
  auto train = plan.rows(Subset::kTrain), test = plan.rows(Subset::kTest);
  FeatureEncoder enc = FeatureEncoder::fit(g.raw, train);
  Tensor x = enc.transform(g.raw, train);
  for (std::size_t c = 0; c < g.raw.schema.columns.size(); ++c) {
    const auto& col = g.raw.schema.columns[c];
    if (col.kind != ColumnKind::kNumeric || !col.is_feature(false)) continue;
    const std::size_t j = enc.span_of(c).first;
    double m = 0.0, v = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) m += x.at(i, j) / x.rows();
    for (std::size_t i = 0; i < x.rows(); ++i) v += (x.at(i, j) - m) * (x.at(i, j) - m) / x.rows();
    EXPECT_NEAR(m, 0.0, 1e-9) << col.name;
    EXPECT_NEAR(v, 1.0, 1e-9) << col.name;
  }
  // Test rows reuse the training statistics.
  Tensor xt = enc.transform(g.raw, test);
  const std::size_t age = enc.span_of(1).first;
  EXPECT_EQ(xt.at(0, age), (g.raw.columns[1].numeric[test[0]] - enc.stats()[1].mean) / enc.stats()[1].scale);
}

}  // namespace
}  // namespace fairtab
