#pragma once

// Command-line front end. run_cli() is the whole program; tools/fairtab.cpp
// only forwards argv so tests can drive every subcommand in-process.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fairtab/checkpoint.hpp"
#include "fairtab/experiment.hpp"

namespace fairtab {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

inline std::filesystem::path default_out_dir() {
  const char* env = std::getenv("FAIRTAB_OUT_DIR");
  return env && *env ? std::filesystem::path(env) : std::filesystem::path("fairtab_out");
}

namespace cli {

struct TrainArgs {
  std::string data, schema, model = "fair_tabnet", out;
  std::uint64_t seed = 1;
  TabNetConfig tabnet;
  FairConfig fair;
  TrainConfig train;
  std::vector<double> split{0.70, 0.15, 0.15};
  double threshold = 0.5;
};

struct ScoreArgs {
  std::string checkpoint, data, manifest, subset = "test", out;
  std::optional<double> threshold;
  std::vector<std::string> sensitive;
};

/// Rows of `data` selected by a split manifest (or all rows without one).
inline std::vector<std::size_t> select_rows(const RawDataset& data, const std::string& manifest,
                                            const std::string& subset) {
  if (manifest.empty()) return all_rows(data);
  std::string body;
  std::istringstream in(read_text_file(manifest));
  for (std::string line; std::getline(in, line);)
    if (line.rfind('#', 0) != 0) body += line + '\n';
  const CsvTable table = parse_csv(body, manifest);
  if (table.header != std::vector<std::string>{"row_id", "day", "subset"}) {
    fail(ErrorKind::kValidation, manifest + ": not a split manifest");
  }
  std::vector<std::size_t> rows;
  for (const auto& row : table.rows) {
    if (row[2] != subset) continue;
    const auto id = static_cast<std::size_t>(parse_integer(row[0], manifest));
    if (id >= data.rows() || data.days[id] != row[1]) {
      fail(ErrorKind::kAlignment, manifest + ": row " + row[0] + " does not match the data file");
    }
    rows.push_back(id);
  }
  if (rows.empty()) fail(ErrorKind::kValidation, manifest + ": no rows in subset '" + subset + "'");
  return rows;
}

struct Scored {
  Checkpoint checkpoint;
  RawDataset raw;
  EncodedDataset data;
};

inline Scored load_scored(const ScoreArgs& args) {
  Scored s{load_checkpoint(args.checkpoint), {}, {}};
  s.raw = load_csv(args.data, s.checkpoint.encoder.schema());
  s.data = encode(s.raw, s.checkpoint.encoder, select_rows(s.raw, args.manifest, args.subset));
  return s;
}

inline void add_score_options(CLI::App& cmd, ScoreArgs& args) {
  cmd.add_option("--checkpoint", args.checkpoint, "Checkpoint written by train or compare")->required();
  cmd.add_option("--data", args.data, "CSV file to score")->required();
  cmd.add_option("--manifest", args.manifest, "Split manifest restricting the rows");
  cmd.add_option("--subset", args.subset, "Manifest subset to use")
      ->check(CLI::IsMember({"train", "val", "test"}));
}

inline int run_generate(const GeneratorConfig& cfg, const std::string& out, std::ostream& os) {
  GeneratedData gen = generate_synthetic(cfg);
  write_generated(gen, out);
  os << "wrote " << cfg.n << " rows to " << (std::filesystem::path(out) / "data.csv").string() << " (intercept "
     << gen.intercept << ")\n";
  return kExitOk;
}

inline int run_train(TrainArgs args, std::ostream& os) {
  if (args.split.size() != 3) fail(ErrorKind::kConfig, "--split needs three fractions");
  const ModelKind kind = parse_model_kind(args.model);
  args.fair.validate();
  args.tabnet.validate();
  args.train.validate();
  const std::filesystem::path out(args.out);
  RawDataset raw = load_csv(args.data, parse_schema(read_text_file(args.schema), args.schema));
  args.fair.n_sensitive_classes = raw.sensitive_class_count();
  SplitPlan plan =
      split_by_day(raw.days, {args.split[0], args.split[1], args.split[2]}, derive_seed(args.seed, SeedStream::kSplit));
  FeatureEncoder encoder = FeatureEncoder::fit(raw, plan.rows(Subset::kTrain));
  EncodedDataset train = encode(raw, encoder, plan.rows(Subset::kTrain));
  EncodedDataset val = encode(raw, encoder, plan.rows(Subset::kValidation));
  EncodedDataset test = encode(raw, encoder, plan.rows(Subset::kTest));

  TrainResult result = train_model(kind, train, val, args.tabnet, args.fair, args.train, args.seed);
  save_checkpoint(out / "model.ckpt", *result.model, encoder, args.threshold);
  write_text_file(out / "split.manifest", plan.manifest(raw.days));
  std::ostringstream trace;
  write_loss_trace(trace, result.trace);
  write_text_file(out / "loss_trace.csv", trace.str());
  const auto scores = result.model->predict_proba(test.features);
  std::ostringstream preds;
  preds << "replicate,row_id,score\n";
  for (std::size_t i = 0; i < scores.size(); ++i)
    preds << 1 << ',' << test.row_ids[i] << ',' << format_double(scores[i]) << '\n';
  write_text_file(out / "predictions_test.csv", preds.str());

  os << "trained " << args.model << " for " << result.trace.size() << " epochs (best epoch " << result.best_epoch
     << (result.early_stopped ? ", early stop" : "") << ")\n";
  if (result.best_epoch > 0) {
    os << "validation auroc " << result.trace[result.best_epoch - 1].val_auroc << '\n';
  }
  os << "wrote " << (out / "model.ckpt").string() << '\n';
  return kExitOk;
}

inline int run_evaluate(const ScoreArgs& args, std::ostream& os) {
  Scored s = load_scored(args);
  const double threshold = args.threshold.value_or(s.checkpoint.threshold);
  std::vector<std::vector<int>> sensitive;
  std::vector<std::string> names;
  for (std::size_t k = 0; k < s.data.sensitive_names.size(); ++k) {
    const auto& name = s.data.sensitive_names[k];
    if (!args.sensitive.empty() && std::find(args.sensitive.begin(), args.sensitive.end(), name) == args.sensitive.end())
      continue;
    sensitive.push_back(s.data.sensitive[k]);
    names.push_back(name);
  }
  for (const auto& wanted : args.sensitive) {
    if (std::find(names.begin(), names.end(), wanted) == names.end()) {
      fail(ErrorKind::kConfig, "--sensitive '" + wanted + "' is not a sensitive column of the schema");
    }
  }
  const auto scores = s.checkpoint.model->predict_proba(s.data.features);
  const auto metrics = evaluate_scores(s.data.labels, scores, sensitive, names, threshold);
  std::ostringstream csv;
  csv << "metric,status,value,cause\n";
  for (const auto& m : metrics) {
    csv << m.name << ',' << (m.ok ? "ok" : "undefined") << ',' << (m.ok ? format_double(m.value) : "") << ','
        << csv_escape(m.cause) << '\n';
    os << std::left << std::setw(20) << m.name << ' ';
    if (m.ok) os << format_percent(m.value) << " %\n";
    else os << "undefined (" << m.cause << ")\n";
  }
  if (!args.out.empty()) write_text_file(args.out, csv.str());
  return kExitOk;
}

inline int run_export_repr(const ScoreArgs& args, std::ostream& os) {
  Scored s = load_scored(args);
  const auto rows =
      export_representations(*s.checkpoint.model, s.data.features, s.data.sensitive_class, s.data.labels);
  std::ostringstream csv;
  write_representations_csv(csv, rows);
  const auto path = std::filesystem::path(args.out) / "representations.csv";
  write_text_file(path, csv.str());
  os << "wrote " << rows.size() << " rows to " << path.string() << '\n';
  return kExitOk;
}

inline int run_export_masks(const ScoreArgs& args, std::ostream& os) {
  Scored s = load_scored(args);
  FairForward fwd = s.checkpoint.model->forward(s.data.features, Mode::kEval);
  const auto& names = s.checkpoint.encoder.feature_names();
  auto write_matrix = [&](const std::filesystem::path& path, const Tensor& m) {
    std::ostringstream csv;
    csv << "row_id";
    for (const auto& n : names) csv << ',' << csv_escape(n);
    csv << '\n';
    for (std::size_t i = 0; i < m.rows(); ++i) {
      csv << s.data.row_ids[i];
      for (std::size_t j = 0; j < m.cols(); ++j) csv << ',' << format_double(m.at(i, j));
      csv << '\n';
    }
    write_text_file(path, csv.str());
  };
  const std::filesystem::path out(args.out);
  MaskImportance agg = aggregate_mask_importance(fwd.steps);
  write_matrix(out / "mask_importance.csv", agg.values);
  for (std::size_t t = 0; t < fwd.steps.masks.size(); ++t)
    write_matrix(out / ("mask_step_" + std::to_string(t + 1) + ".csv"), fwd.steps.masks[t]);
  os << "wrote masks for " << s.data.rows() << " rows and " << fwd.steps.masks.size() << " steps to "
     << out.string() << '\n';
  if (!agg.uniform_rows.empty()) {
    os << agg.uniform_rows.size() << " rows had no decision contribution and were given uniform importance\n";
  }
  return kExitOk;
}

struct CompareArgs {
  std::string config, out;
  std::optional<std::size_t> replicates, jobs;
  std::optional<std::uint64_t> seed;
};

inline int run_compare(const CompareArgs& args, std::ostream& os, std::ostream& es) {
  const std::filesystem::path path(args.config);
  RunConfig cfg = parse_run_config(read_text_file(path), path.string(), path.parent_path());
  if (args.replicates) cfg.replicates = *args.replicates;
  if (args.jobs) cfg.jobs = *args.jobs;
  if (args.seed) cfg.seed = *args.seed;
  if (!args.out.empty()) cfg.out = args.out;
  cfg.validate();
  RunOptions options;
  options.progress = [&es](const std::string& line) { es << line << '\n'; };
  ExperimentReport report = run_experiment(cfg, options);
  os << read_text_file(cfg.out / "tables.md");
  for (const auto& e : report.roster_errors) es << "roster error: " << e << '\n';
  return report.roster_errors.empty() ? kExitOk : kExitRuntime;
}

}  // namespace cli

/// Runs the command line; returns the process exit code.
inline int run_cli(int argc, const char* const* argv, std::ostream& os = std::cout, std::ostream& es = std::cerr) {
  CLI::App app{"Fair-TabNet training and fairness evaluation toolkit", "fairtab"};
  app.require_subcommand(1);

  const std::string default_out = default_out_dir().string();

  GeneratorConfig gen;
  std::string gen_out = default_out;
  auto* generate = app.add_subcommand("generate", "Write a synthetic appointment dataset and its schema");
  generate->add_option("--n", gen.n, "Rows")->capture_default_str();
  generate->add_option("--seed", gen.seed, "Generator seed")->capture_default_str();
  generate->add_option("--beta-s", gen.beta_s, "Strength of the sensitive-attribute effect")->capture_default_str();
  generate->add_option("--days", gen.days, "Distinct calendar days")->capture_default_str();
  generate->add_option("--features", gen.features, "Feature columns")->capture_default_str();
  generate->add_option("--out", gen_out, "Output directory")->capture_default_str();

  cli::TrainArgs tr;
  tr.out = default_out;
  auto* train = app.add_subcommand("train", "Train one model on a day-grouped split");
  train->add_option("--data", tr.data, "CSV data file")->required();
  train->add_option("--schema", tr.schema, "Schema file")->required();
  train->add_option("--model", tr.model, "tabnet or fair_tabnet")->capture_default_str();
  train->add_option("--lambda-d", tr.fair.lambda_d, "Weight of the sensitive classification loss")
      ->capture_default_str();
  train->add_option("--lambda-s", tr.fair.lambda_s, "Weight of the orthogonality penalty")->capture_default_str();
  train->add_option("--n-s", tr.fair.n_s, "Width of the sensitive representation")->capture_default_str();
  train->add_option("--seed", tr.seed, "Seed for split, initialization and batch order")->capture_default_str();
  train->add_option("--out", tr.out, "Output directory")->capture_default_str();
  train->add_option("--n-p", tr.tabnet.n_p, "Decision width")->capture_default_str();
  train->add_option("--n-a", tr.tabnet.n_a, "Attention width")->capture_default_str();
  train->add_option("--n-steps", tr.tabnet.n_steps, "Decision steps")->capture_default_str();
  train->add_option("--gamma", tr.tabnet.gamma, "Prior relaxation")->capture_default_str();
  train->add_option("--lambda-sparse", tr.tabnet.lambda_sparse, "Mask entropy weight")->capture_default_str();
  train->add_option("--learning-rate", tr.train.adam.learning_rate, "Adam learning rate")->capture_default_str();
  train->add_option("--lr-decay", tr.train.lr_decay, "Per-epoch learning-rate factor")->capture_default_str();
  train->add_option("--batch-size", tr.train.batch_size, "Mini-batch rows")->capture_default_str();
  train->add_option("--epochs", tr.train.epochs, "Maximum epochs")->capture_default_str();
  train->add_option("--patience", tr.train.patience, "Early-stopping patience")->capture_default_str();
  train->add_option("--split", tr.split, "Train, validation and test fractions")->expected(3)->delimiter(',');
  train->add_option("--threshold", tr.threshold, "Decision threshold stored in the checkpoint")
      ->capture_default_str();

  cli::ScoreArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Score a data file with a checkpoint and print all metrics");
  cli::add_score_options(*evaluate, ev);
  evaluate->add_option("--threshold", ev.threshold, "Decision threshold (default: the checkpoint's)");
  evaluate->add_option("--sensitive", ev.sensitive, "Sensitive variables to report (default: all)");
  evaluate->add_option("--out", ev.out, "Also write the metrics to this CSV file");

  cli::CompareArgs cmp;
  auto* compare = app.add_subcommand("compare", "Run the replicated model comparison from a config file");
  compare->add_option("--config", cmp.config, "Run configuration file")->required();
  compare->add_option("--replicates", cmp.replicates, "Override the replicate count");
  compare->add_option("--jobs", cmp.jobs, "Override the number of concurrent replicates");
  compare->add_option("--seed", cmp.seed, "Override the master seed");
  compare->add_option("--out", cmp.out, "Override the output directory");

  cli::ScoreArgs repr;
  repr.out = default_out;
  auto* export_repr = app.add_subcommand("export-repr", "Write r_p and r_s for every scored row");
  cli::add_score_options(*export_repr, repr);
  export_repr->add_option("--out", repr.out, "Output directory")->capture_default_str();

  cli::ScoreArgs masks;
  masks.out = default_out;
  auto* export_masks = app.add_subcommand("export-masks", "Write per-step masks and aggregated importance");
  cli::add_score_options(*export_masks, masks);
  export_masks->add_option("--out", masks.out, "Output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    os << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    os << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    es << "fairtab: " << e.what() << "\n\n";
    const CLI::App* failed = &app;
    for (auto* sub : app.get_subcommands()) failed = sub;
    es << failed->help();
    return kExitUsage;
  }

  try {
    if (*generate) return cli::run_generate(gen, gen_out, os);
    if (*train) return cli::run_train(tr, os);
    if (*evaluate) return cli::run_evaluate(ev, os);
    if (*compare) return cli::run_compare(cmp, os, es);
    if (*export_repr) return cli::run_export_repr(repr, os);
    if (*export_masks) return cli::run_export_masks(masks, os);
  } catch (const Error& e) {
    es << "fairtab: " << e.what() << '\n';
    return e.kind() == ErrorKind::kConfig ? kExitUsage : kExitRuntime;
  } catch (const std::exception& e) {
    es << "fairtab: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace fairtab
