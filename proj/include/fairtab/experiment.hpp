#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "fairtab/checkpoint.hpp"
#include "fairtab/fairness.hpp"
#include "fairtab/split.hpp"
#include "fairtab/synthetic.hpp"
#include "fairtab/train.hpp"

namespace fairtab {

// ---------------------------------------------------------------------------
// Metrics of one scored test set
// ---------------------------------------------------------------------------

struct MetricValue {
  std::string name;
  double value = 0.0;
  bool ok = true;
  std::string cause;  // why the metric is undefined
};

inline constexpr std::array<const char*, 5> kFairnessMetrics{"aoe", "dg_fpr", "dir", "eod", "spd"};

inline std::string error_text(const Error& e) { return e.what(); }

/// AU-ROC, AU-PRC, and the five fairness metrics per sensitive variable
/// (named "<variable>.<metric>"). Undefined metrics are kept with a cause.
inline std::vector<MetricValue> evaluate_scores(std::span<const int> labels, std::span<const double> scores,
                                                const std::vector<std::vector<int>>& sensitive,
                                                const std::vector<std::string>& sensitive_names, double threshold,
                                                DgFprMode dg_mode = DgFprMode::kSoft) {
  std::vector<MetricValue> out;
  auto record = [&](const std::string& name, auto&& fn) {
    try {
      out.push_back({name, fn(), true, ""});
    } catch (const Error& e) {
      out.push_back({name, std::numeric_limits<double>::quiet_NaN(), false, error_text(e)});
    }
  };
  record("auroc", [&] { return auroc(labels, scores); });
  record("auprc", [&] { return auprc(labels, scores); });
  for (std::size_t k = 0; k < sensitive.size(); ++k) {
    std::optional<GroupConfusion> gc;
    std::string cause;
    try {
      gc = confusion_by_group(labels, scores, sensitive[k], threshold);
    } catch (const Error& e) {
      cause = error_text(e);
    }
    const std::string prefix = sensitive_names[k] + ".";
    auto metric = [&](const char* name, auto&& fn) {
      if (!gc) {
        out.push_back({prefix + name, std::numeric_limits<double>::quiet_NaN(), false, cause});
        return;
      }
      record(prefix + name, [&] { return fn(*gc); });
    };
    metric("aoe", [](const GroupConfusion& g) { return aoe(g); });
    metric("dg_fpr", [&](const GroupConfusion& g) { return dg_fpr(g, dg_mode); });
    metric("dir", [](const GroupConfusion& g) { return dir(g); });
    metric("eod", [](const GroupConfusion& g) { return eod(g); });
    metric("spd", [](const GroupConfusion& g) { return spd(g); });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Imported predictions
// ---------------------------------------------------------------------------

/// Scores of an externally trained model: (replicate, row_id) -> score.
struct ImportedPredictions {
  std::string name;
  std::map<std::size_t, std::map<std::size_t, double>> by_replicate;

  /// Scores for `row_ids` of one replicate, in the given order.
  std::vector<double> aligned(std::size_t replicate, std::span<const std::size_t> row_ids) const {
    auto rep = by_replicate.find(replicate);
    if (rep == by_replicate.end()) {
      fail(ErrorKind::kAlignment,
           "imported model '" + name + "' has no predictions for replicate " + std::to_string(replicate));
    }
    std::vector<double> out;
    out.reserve(row_ids.size());
    std::vector<std::size_t> missing;
    for (std::size_t id : row_ids) {
      auto it = rep->second.find(id);
      if (it == rep->second.end()) missing.push_back(id);
      else out.push_back(it->second);
    }
    if (!missing.empty()) {
      std::string list;
      for (std::size_t i = 0; i < std::min<std::size_t>(missing.size(), 10); ++i)
        list += (i ? ", " : "") + std::to_string(missing[i]);
      if (missing.size() > 10) list += ", ...";
      fail(ErrorKind::kAlignment, "imported model '" + name + "', replicate " + std::to_string(replicate) +
                                      ": " + std::to_string(missing.size()) + " test row ids missing (" + list + ")");
    }
    return out;
  }
};

inline ImportedPredictions parse_predictions(const CsvTable& table, const std::string& name,
                                             const std::string& source) {
  auto column = [&](const char* wanted) {
    auto it = std::find(table.header.begin(), table.header.end(), wanted);
    if (it == table.header.end()) {
      fail(ErrorKind::kValidation, source + ": missing column '" + std::string(wanted) + "'");
    }
    return static_cast<std::size_t>(it - table.header.begin());
  };
  const std::size_t rep_col = column("replicate"), id_col = column("row_id"), score_col = column("score");
  ImportedPredictions out;
  out.name = name;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const std::string where = source + ": line " + std::to_string(r + 2);
    const auto& row = table.rows[r];
    const long long rep = parse_integer(trim(row[rep_col]), where);
    const long long id = parse_integer(trim(row[id_col]), where);
    const double score = parse_double(trim(row[score_col]), where);
    if (rep < 1 || id < 0) fail(ErrorKind::kValidation, where + ": replicate must be >= 1 and row_id >= 0");
    if (!(score >= 0.0 && score <= 1.0)) {
      fail(ErrorKind::kValidation, where + ": score " + row[score_col] + " outside [0, 1]");
    }
    if (!out.by_replicate[rep].emplace(id, score).second) {
      fail(ErrorKind::kValidation, where + ": duplicate row_id " + std::to_string(id));
    }
  }
  return out;
}

inline ImportedPredictions import_predictions(const std::string& name, const std::filesystem::path& path) {
  return parse_predictions(read_csv_file(path), name, path.string());
}

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

struct RosterEntry {
  std::string name;
  bool imported = false;
  ModelKind kind = ModelKind::kTabNet;
  FairConfig fair;
  std::filesystem::path predictions;  // imported only
};

struct RunConfig {
  std::filesystem::path data_path;
  std::filesystem::path schema_path;
  std::optional<GeneratorConfig> generator;
  std::vector<RosterEntry> roster;
  TabNetConfig tabnet;
  TrainConfig train;
  std::size_t replicates = 30;
  std::uint64_t seed = 1;
  double threshold = 0.5;
  DgFprMode dg_fpr = DgFprMode::kSoft;
  std::array<double, 3> fractions{0.70, 0.15, 0.15};
  std::filesystem::path out = "fairtab_out";
  std::size_t jobs = 1;
  bool checkpoints = true;

  void validate() const {
    if (replicates < 1) fail(ErrorKind::kConfig, "replicates must be >= 1");
    if (jobs < 1) fail(ErrorKind::kConfig, "jobs must be >= 1");
    if (!(threshold > 0.0 && threshold < 1.0)) fail(ErrorKind::kConfig, "threshold must lie in (0, 1)");
    if (roster.empty()) fail(ErrorKind::kConfig, "the roster has no models");
    if (generator.has_value() == !data_path.empty()) {
      fail(ErrorKind::kConfig, "give exactly one of a data block or a generator block");
    }
    if (!data_path.empty() && schema_path.empty()) fail(ErrorKind::kConfig, "the data block needs a schema");
    if (generator) generator->validate();
    tabnet.validate();
    train.validate();
    std::set<std::string> names;
    for (const auto& m : roster) {
      if (m.name.empty() || m.name.find_first_not_of("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-") !=
                                std::string::npos) {
        fail(ErrorKind::kConfig, "model name '" + m.name + "' must use only letters, digits, '_' and '-'");
      }
      if (!names.insert(m.name).second) fail(ErrorKind::kConfig, "duplicate model name '" + m.name + "'");
      if (!m.imported) m.fair.validate();
    }
  }
};

inline RunConfig parse_run_config(std::string_view text, const std::string& source,
                                  const std::filesystem::path& base_dir) {
  const KvBlock root = parse_kv(text, source);
  require_version(root, 1);
  root.check_keys({"version", "replicates", "seed", "threshold", "dg_fpr", "split", "out", "jobs", "checkpoints"},
                  {"data", "generator", "tabnet", "train", "model"});
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  auto count = [](const KvBlock& b, const char* key, long long fallback) {
    const long long v = b.get_int(key, fallback);
    if (v < 0) fail(ErrorKind::kConfig, b.where(b.line) + ": '" + key + "' must be >= 0");
    return static_cast<std::size_t>(v);
  };
  RunConfig cfg;
  cfg.replicates = count(root, "replicates", 30);
  cfg.seed = std::stoull(root.get_string("seed", "1"));
  cfg.threshold = root.get_double("threshold", 0.5);
  cfg.jobs = count(root, "jobs", 1);
  cfg.checkpoints = root.get_bool("checkpoints", true);
  if (root.find("out")) cfg.out = resolve(root.get_string("out", ""));
  const std::string dg = root.get_string("dg_fpr", "soft");
  if (dg == "soft") cfg.dg_fpr = DgFprMode::kSoft;
  else if (dg == "hard") cfg.dg_fpr = DgFprMode::kHard;
  else fail(ErrorKind::kConfig, source + ": dg_fpr must be soft or hard");
  if (root.find("split")) {
    const auto parts = root.get_list("split");
    if (parts.size() != 3) fail(ErrorKind::kConfig, source + ": split needs three fractions");
    for (int k = 0; k < 3; ++k) cfg.fractions[k] = parse_double(parts[k], source + ": split");
  }

  for (const auto& b : root.blocks) {
    if (b.type == "data") {
      b.check_keys({"path", "schema"});
      cfg.data_path = resolve(b.require_string("path"));
      cfg.schema_path = resolve(b.require_string("schema"));
    } else if (b.type == "generator") {
      b.check_keys({"n", "seed", "beta_s", "days", "features", "base_rate", "start_date"});
      GeneratorConfig g;
      g.n = count(b, "n", static_cast<long long>(g.n));
      g.seed = std::stoull(b.get_string("seed", std::to_string(g.seed)));
      g.beta_s = b.get_double("beta_s", g.beta_s);
      g.days = count(b, "days", static_cast<long long>(g.days));
      g.features = count(b, "features", static_cast<long long>(g.features));
      g.base_rate = b.get_double("base_rate", g.base_rate);
      g.start_date = b.get_string("start_date", g.start_date);
      cfg.generator = g;
    } else if (b.type == "tabnet") {
      b.check_keys({"n_p", "n_a", "n_steps", "gamma", "n_shared", "n_step_specific", "bn_momentum", "lambda_sparse"});
      TabNetConfig& t = cfg.tabnet;
      t.n_p = count(b, "n_p", static_cast<long long>(t.n_p));
      t.n_a = count(b, "n_a", static_cast<long long>(t.n_a));
      t.n_steps = count(b, "n_steps", static_cast<long long>(t.n_steps));
      t.gamma = b.get_double("gamma", t.gamma);
      t.n_shared = count(b, "n_shared", static_cast<long long>(t.n_shared));
      t.n_step_specific = count(b, "n_step_specific", static_cast<long long>(t.n_step_specific));
      t.bn_momentum = b.get_double("bn_momentum", t.bn_momentum);
      t.lambda_sparse = b.get_double("lambda_sparse", t.lambda_sparse);
    } else if (b.type == "train") {
      b.check_keys({"learning_rate", "lr_decay", "batch_size", "epochs", "patience", "beta1", "beta2", "eps"});
      TrainConfig& t = cfg.train;
      t.adam.learning_rate = b.get_double("learning_rate", t.adam.learning_rate);
      t.adam.beta1 = b.get_double("beta1", t.adam.beta1);
      t.adam.beta2 = b.get_double("beta2", t.adam.beta2);
      t.adam.eps = b.get_double("eps", t.adam.eps);
      t.lr_decay = b.get_double("lr_decay", t.lr_decay);
      t.batch_size = count(b, "batch_size", static_cast<long long>(t.batch_size));
      t.epochs = count(b, "epochs", static_cast<long long>(t.epochs));
      t.patience = count(b, "patience", static_cast<long long>(t.patience));
    } else if (b.type == "model") {
      b.check_keys({"kind", "lambda_d", "lambda_s", "n_s", "predictions"});
      RosterEntry m;
      m.name = b.name;
      const std::string kind = b.require_string("kind");
      if (kind == "imported") {
        m.imported = true;
        m.predictions = resolve(b.require_string("predictions"));
      } else {
        m.kind = parse_model_kind(kind);
        if (m.kind == ModelKind::kFairTabNet) {
          m.fair.lambda_d = b.get_double("lambda_d", m.fair.lambda_d);
          m.fair.lambda_s = b.get_double("lambda_s", m.fair.lambda_s);
          m.fair.n_s = count(b, "n_s", static_cast<long long>(m.fair.n_s));
        } else if (b.find("lambda_d") || b.find("lambda_s") || b.find("n_s")) {
          fail(ErrorKind::kConfig, b.where(b.line) + ": tabnet models take no fair-head settings");
        }
      }
      cfg.roster.push_back(std::move(m));
    }
  }
  cfg.validate();
  return cfg;
}

// ---------------------------------------------------------------------------
// Experiment
// ---------------------------------------------------------------------------

struct CellResult {
  std::string model;
  std::size_t replicate = 0;  // 1-based
  std::string split_hash;
  bool ok = true;
  std::string cause;
  std::vector<MetricValue> metrics;
  std::vector<EpochTrace> trace;
  std::vector<std::size_t> test_rows;
  std::vector<double> test_scores;
};

struct ExperimentReport {
  std::vector<std::string> models;
  std::vector<bool> internal;  // per model: trained here (not imported)
  std::size_t replicates = 0;
  std::vector<std::string> sensitive_names;
  std::vector<CellResult> cells;  // replicate-major, roster order
  std::vector<std::string> roster_errors;

  const CellResult& cell(std::size_t model, std::size_t replicate) const {
    return cells.at((replicate - 1) * models.size() + model);
  }

  std::vector<std::string> metric_names() const {
    std::vector<std::string> names{"auroc", "auprc"};
    for (const auto& s : sensitive_names)
      for (const char* m : kFairnessMetrics) names.push_back(s + "." + m);
    names.push_back("representation_overlap");
    return names;
  }

  /// Replicate -> value for the successful cells of one model and metric.
  std::map<std::size_t, double> values(std::size_t model, const std::string& metric) const {
    std::map<std::size_t, double> out;
    for (std::size_t r = 1; r <= replicates; ++r) {
      const CellResult& c = cell(model, r);
      if (!c.ok) continue;
      for (const auto& m : c.metrics)
        if (m.name == metric && m.ok) out[r] = m.value;
    }
    return out;
  }
};

/// Sample mean and standard deviation (n - 1); std is 0 for a single value.
inline std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  if (v.size() < 2) return {m, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

inline std::vector<double> map_values(const std::map<std::size_t, double>& m) {
  std::vector<double> out;
  for (const auto& [k, v] : m) out.push_back(v);
  return out;
}

struct RunOptions {
  std::function<void(const std::string&)> progress;  // optional status lines
};

namespace detail {

struct ReplicateOutput {
  std::vector<CellResult> cells;
  std::string manifest;
};

inline void verify_day_atomic(const EncodedDataset& train, const EncodedDataset& val, const EncodedDataset& test) {
  std::set<std::string> fit_days(train.days.begin(), train.days.end());
  fit_days.insert(val.days.begin(), val.days.end());
  for (const auto& d : test.days) {
    if (fit_days.count(d)) fail(ErrorKind::kContract, "test day " + d + " also appears in train/validation");
  }
}

}  // namespace detail

inline std::string write_report_files(const ExperimentReport& report, const std::filesystem::path& out);

inline ExperimentReport run_experiment(const RunConfig& config, const RunOptions& options = {}) {
  config.validate();
  auto say = [&](const std::string& line) {
    if (options.progress) options.progress(line);
  };
  std::filesystem::create_directories(config.out);

  RawDataset raw;
  if (config.generator) {
    GeneratedData gen = generate_synthetic(*config.generator);
    write_generated(gen, config.out / "data");
    raw = load_dataset(parse_csv(gen.csv, "generated"), gen.schema, "generated");
  } else {
    raw = load_csv(config.data_path, parse_schema(read_text_file(config.schema_path), config.schema_path.string()));
  }
  const std::size_t classes = raw.sensitive_class_count();

  std::vector<std::optional<ImportedPredictions>> imported(config.roster.size());
  std::vector<std::string> import_errors(config.roster.size());
  for (std::size_t m = 0; m < config.roster.size(); ++m) {
    if (!config.roster[m].imported) continue;
    try {
      imported[m] = import_predictions(config.roster[m].name, config.roster[m].predictions);
    } catch (const Error& e) {
      import_errors[m] = error_text(e);
    }
  }

  ExperimentReport report;
  report.replicates = config.replicates;
  report.sensitive_names = raw.sensitive_names();
  for (const auto& m : config.roster) {
    report.models.push_back(m.name);
    report.internal.push_back(!m.imported);
  }

  auto run_replicate = [&](std::size_t rep) {
    detail::ReplicateOutput out;
    const std::uint64_t rep_seed = derive_seed(config.seed, SeedStream::kReplicate, rep);
    std::string hash, setup_error;
    std::optional<EncodedDataset> train, val, test;
    try {
      SplitPlan plan = split_by_day(raw.days, config.fractions, derive_seed(rep_seed, SeedStream::kSplit));
      out.manifest = plan.manifest(raw.days);
      hash = hex64(fnv1a(out.manifest));
      const auto train_rows = plan.rows(Subset::kTrain);
      FeatureEncoder encoder = FeatureEncoder::fit(raw, train_rows);
      train = encode(raw, encoder, train_rows);
      val = encode(raw, encoder, plan.rows(Subset::kValidation));
      test = encode(raw, encoder, plan.rows(Subset::kTest));
      detail::verify_day_atomic(*train, *val, *test);

      for (std::size_t m = 0; m < config.roster.size(); ++m) {
        const RosterEntry& entry = config.roster[m];
        CellResult cell;
        cell.model = entry.name;
        cell.replicate = rep;
        cell.split_hash = hash;
        cell.test_rows = test->row_ids;
        const auto start = std::chrono::steady_clock::now();
        try {
          if (entry.imported) {
            if (!imported[m]) fail(ErrorKind::kValidation, import_errors[m]);
            cell.test_scores = imported[m]->aligned(rep, test->row_ids);
          } else {
            FairConfig fair = entry.fair;
            fair.n_sensitive_classes = classes;
            TrainResult trained = train_model(entry.kind, *train, *val, config.tabnet, fair, config.train, rep_seed);
            cell.trace = std::move(trained.trace);
            cell.test_scores = trained.model->predict_proba(test->features);
            if (entry.kind == ModelKind::kFairTabNet) {
              cell.metrics.push_back(
                  {"representation_overlap", representation_overlap(*trained.model, test->features), true, ""});
            }
            if (config.checkpoints) {
              save_checkpoint(config.out / "checkpoints" / (entry.name + "_" + std::to_string(rep) + ".ckpt"),
                              *trained.model, encoder, config.threshold);
            }
          }
          auto metrics = evaluate_scores(test->labels, cell.test_scores, test->sensitive, test->sensitive_names,
                                         config.threshold, config.dg_fpr);
          metrics.insert(metrics.end(), cell.metrics.begin(), cell.metrics.end());
          cell.metrics = std::move(metrics);
        } catch (const Error& e) {
          cell.ok = false;
          cell.cause = error_text(e);
          cell.metrics.clear();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::ostringstream line;
        line << "replicate " << rep << "/" << config.replicates << " " << entry.name << ": ";
        if (cell.ok) line << "auroc " << cell.metrics[0].value << " (" << secs << " s)";
        else line << "FAILED " << cell.cause;
        say(line.str());
        out.cells.push_back(std::move(cell));
      }
    } catch (const Error& e) {
      setup_error = error_text(e);
      out.cells.clear();
      for (const auto& entry : config.roster) {
        CellResult cell;
        cell.model = entry.name;
        cell.replicate = rep;
        cell.split_hash = hash;
        cell.ok = false;
        cell.cause = setup_error;
        out.cells.push_back(std::move(cell));
      }
      say("replicate " + std::to_string(rep) + " FAILED " + setup_error);
    }
    return out;
  };

  std::vector<detail::ReplicateOutput> outputs(config.replicates);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t r = next++; r < config.replicates; r = next++) outputs[r] = run_replicate(r + 1);
  };
  const std::size_t n_threads = std::min(config.jobs, config.replicates);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (std::size_t r = 0; r < config.replicates; ++r) {
    if (!outputs[r].manifest.empty()) {
      write_text_file(config.out / "splits" / (std::to_string(r + 1) + ".manifest"), outputs[r].manifest);
    }
    for (auto& c : outputs[r].cells) report.cells.push_back(std::move(c));
  }
  for (std::size_t m = 0; m < report.models.size(); ++m) {
    bool any_ok = false;
    std::string first_cause;
    for (std::size_t r = 1; r <= report.replicates; ++r) {
      const CellResult& c = report.cell(m, r);
      any_ok = any_ok || c.ok;
      if (!c.ok && first_cause.empty()) first_cause = c.cause;
    }
    if (!any_ok) {
      report.roster_errors.push_back("model '" + report.models[m] + "' failed in every replicate: " + first_cause);
    }
  }
  write_report_files(report, config.out);
  return report;
}

// ---------------------------------------------------------------------------
// Output files
// ---------------------------------------------------------------------------

/// "mean±std" in percent; "n/a" when no replicate defined the metric.
inline std::string percent_cell(const std::vector<double>& v) {
  if (v.empty()) return "n/a";
  auto [m, s] = mean_std(v);
  return format_percent(m) + "±" + format_percent(s);
}

/// Writes every report artifact into `out`; returns the markdown tables.
inline std::string write_report_files(const ExperimentReport& report, const std::filesystem::path& out) {
  const auto metrics = report.metric_names();

  std::ostringstream csv;
  csv << "model,replicate,split_hash,status,cause,metric,value\n";
  for (std::size_t r = 1; r <= report.replicates; ++r) {
    for (std::size_t m = 0; m < report.models.size(); ++m) {
      const CellResult& c = report.cell(m, r);
      if (!c.ok) {
        csv << csv_escape(c.model) << ',' << r << ',' << c.split_hash << ",failed," << csv_escape(c.cause) << ",,\n";
        continue;
      }
      for (const auto& v : c.metrics) {
        csv << csv_escape(c.model) << ',' << r << ',' << c.split_hash << ',' << (v.ok ? "ok" : "undefined") << ','
            << csv_escape(v.cause) << ',' << v.name << ',' << (v.ok ? format_double(v.value) : "") << '\n';
      }
    }
  }
  for (const auto& e : report.roster_errors) csv << ",all,,roster_error," << csv_escape(e) << ",,\n";
  write_text_file(out / "report.csv", csv.str());

  std::ostringstream agg;
  agg << "model,metric,mean,std,n\n";
  for (std::size_t m = 0; m < report.models.size(); ++m) {
    for (const auto& metric : metrics) {
      const auto v = map_values(report.values(m, metric));
      if (v.empty()) continue;
      auto [mean, sd] = mean_std(v);
      agg << report.models[m] << ',' << metric << ',' << format_double(mean) << ',' << format_double(sd) << ','
          << v.size() << '\n';
    }
  }
  write_text_file(out / "aggregate.csv", agg.str());

  std::ostringstream perf, md;
  perf << "model,auroc_mean,auroc_std,auprc_mean,auprc_std,n\n";
  md << "## Prediction performance (%)\n\n| Model | AU-ROC | AU-PRC |\n|---|---|---|\n";
  for (std::size_t m = 0; m < report.models.size(); ++m) {
    const auto roc = map_values(report.values(m, "auroc")), prc = map_values(report.values(m, "auprc"));
    auto [rm, rs] = mean_std(roc);
    auto [pm, ps] = mean_std(prc);
    perf << report.models[m] << ',' << format_percent(rm) << ',' << format_percent(rs) << ',' << format_percent(pm)
         << ',' << format_percent(ps) << ',' << roc.size() << '\n';
    md << "| " << report.models[m] << " | " << percent_cell(roc) << " | " << percent_cell(prc) << " |\n";
  }
  write_text_file(out / "performance.csv", perf.str());

  static const std::map<std::string, std::string> kLabels{
      {"aoe", "AOE"}, {"dg_fpr", "DG-FPR"}, {"dir", "DIR"}, {"eod", "EOD"}, {"spd", "SPD"}};
  for (const auto& var : report.sensitive_names) {
    std::ostringstream fair;
    fair << "model,sensitive,metric,mean,std,n\n";
    md << "\n## Fairness, sensitive variable " << var << " (%)\n\n| Metric |";
    for (const auto& name : report.models) md << ' ' << name << " |";
    md << "\n|---|";
    for (std::size_t m = 0; m < report.models.size(); ++m) md << "---|";
    md << '\n';
    for (const char* metric : kFairnessMetrics) {
      md << "| " << kLabels.at(metric) << " |";
      for (std::size_t m = 0; m < report.models.size(); ++m) {
        const auto v = map_values(report.values(m, var + "." + metric));
        auto [mean, sd] = mean_std(v);
        fair << report.models[m] << ',' << var << ',' << metric << ',' << format_percent(mean) << ','
             << format_percent(sd) << ',' << v.size() << '\n';
        md << ' ' << percent_cell(v) << " |";
      }
      md << '\n';
    }
    write_text_file(out / ("fairness_" + var + ".csv"), fair.str());
  }
  write_text_file(out / "tables.md", md.str());

  if (report.replicates >= 2) {
    for (const auto& metric : metrics) {
      std::vector<std::size_t> included;
      std::set<std::size_t> common;
      bool first = true;
      for (std::size_t m = 0; m < report.models.size(); ++m) {
        const auto v = report.values(m, metric);
        if (v.size() < 2) continue;
        std::set<std::size_t> reps;
        for (const auto& [r, x] : v) reps.insert(r);
        if (first) common = reps;
        else std::erase_if(common, [&](std::size_t r) { return !reps.count(r); });
        first = false;
        included.push_back(m);
      }
      if (included.size() < 2 || common.size() < 2) continue;
      std::vector<MetricSample> samples;
      for (std::size_t m : included) {
        const auto v = report.values(m, metric);
        MetricSample s{report.models[m], metric, {}};
        for (std::size_t r : common) s.values.push_back(v.at(r));
        samples.push_back(std::move(s));
      }
      std::ostringstream pw;
      write_pairwise_csv(pw, pairwise_matrix(samples));
      write_text_file(out / ("pairwise_" + metric + ".csv"), pw.str());
    }
  }

  for (std::size_t m = 0; m < report.models.size(); ++m) {
    if (!report.internal[m]) continue;
    std::ostringstream preds;
    preds << "replicate,row_id,score\n";
    for (std::size_t r = 1; r <= report.replicates; ++r) {
      const CellResult& c = report.cell(m, r);
      if (!c.ok) continue;
      for (std::size_t i = 0; i < c.test_rows.size(); ++i)
        preds << r << ',' << c.test_rows[i] << ',' << format_double(c.test_scores[i]) << '\n';
      std::ostringstream trace;
      write_loss_trace(trace, c.trace);
      write_text_file(out / ("loss_trace_" + c.model + "_" + std::to_string(r) + ".csv"), trace.str());
    }
    write_text_file(out / ("predictions_" + report.models[m] + ".csv"), preds.str());
  }
  return md.str();
}

}  // namespace fairtab
