#pragma once

// Checkpoint file:
//
//   FAIRTAB-CHECKPOINT
//   header_bytes <n>
//   <n bytes of structured text: model config, schema, encoder statistics,
//    and one `tensor` block per parameter/buffer with its offset>
//   <little-endian IEEE-754 doubles>
//
// Floating-point settings are written as hex floats, so a round trip is exact.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "fairtab/csv.hpp"
#include "fairtab/dataset.hpp"
#include "fairtab/fair_tabnet.hpp"

namespace fairtab {

inline constexpr const char* kCheckpointMagic = "FAIRTAB-CHECKPOINT";

struct Checkpoint {
  std::unique_ptr<Model> model;
  FeatureEncoder encoder;
  double threshold = 0.5;
};

inline std::string checkpoint_header(const Model& model, const FeatureEncoder& encoder, double threshold) {
  const TabNetConfig& t = model.tabnet_config();
  const FairConfig& f = model.fair_config();
  std::ostringstream h;
  h << "version = 1\n";
  h << "kind = " << to_string(model.kind()) << '\n';
  h << "input_dim = " << model.input_dim() << '\n';
  h << "seed = " << model.seed() << '\n';
  h << "threshold = " << format_hex(threshold) << '\n';
  h << "tabnet {\n  n_p = " << t.n_p << "\n  n_a = " << t.n_a << "\n  n_steps = " << t.n_steps
    << "\n  gamma = " << format_hex(t.gamma) << "\n  n_shared = " << t.n_shared
    << "\n  n_step_specific = " << t.n_step_specific << "\n  bn_momentum = " << format_hex(t.bn_momentum)
    << "\n  lambda_sparse = " << format_hex(t.lambda_sparse) << "\n}\n";
  h << "fair {\n  n_s = " << f.n_s << "\n  lambda_d = " << format_hex(f.lambda_d)
    << "\n  lambda_s = " << format_hex(f.lambda_s) << "\n  classes = " << f.n_sensitive_classes << "\n}\n";
  h << "schema {\n" << encoder.schema().to_text() << "}\n";
  h << "encoder {\n  stats = [";
  for (std::size_t c = 0; c < encoder.stats().size(); ++c) {
    h << (c ? ", " : "") << format_hex(encoder.stats()[c].mean) << ", " << format_hex(encoder.stats()[c].scale);
  }
  h << "]\n}\n";
  std::size_t offset = 0;
  for (const auto& entry : model.state()) {
    h << "tensor " << entry.name << " {\n  rows = " << entry.tensor.rows() << "\n  cols = " << entry.tensor.cols()
      << "\n  offset = " << offset << "\n}\n";
    offset += entry.tensor.size();
  }
  return h.str();
}

inline void save_checkpoint(const std::filesystem::path& path, const Model& model, const FeatureEncoder& encoder,
                            double threshold = 0.5) {
  if (model.input_dim() != encoder.width()) {
    fail(ErrorKind::kState, "encoder width " + std::to_string(encoder.width()) + " does not match model input " +
                                std::to_string(model.input_dim()));
  }
  const std::string header = checkpoint_header(model, encoder, threshold);
  std::string blob;
  for (const auto& entry : model.state()) {
    for (double v : entry.tensor.data()) {
      std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
      for (int b = 0; b < 8; ++b) blob += static_cast<char>((bits >> (8 * b)) & 0xff);
    }
  }
  std::ostringstream out;
  out << kCheckpointMagic << "\nheader_bytes " << header.size() << '\n' << header << blob;
  write_text_file(path, out.str());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const std::string bytes = read_text_file(path);
  const std::string where = path.string();
  auto bad = [&](const std::string& what) { fail(ErrorKind::kState, where + ": " + what); };

  const std::string magic = std::string(kCheckpointMagic) + "\nheader_bytes ";
  if (bytes.compare(0, magic.size(), magic) != 0) bad("not a checkpoint file");
  const std::size_t eol = bytes.find('\n', magic.size());
  if (eol == std::string::npos) bad("truncated header");
  std::size_t header_bytes = 0;
  try {
    header_bytes = static_cast<std::size_t>(parse_integer(bytes.substr(magic.size(), eol - magic.size()), where));
  } catch (const Error&) {
    bad("bad header_bytes line");
  }
  const std::size_t header_start = eol + 1;
  if (header_start + header_bytes > bytes.size()) bad("truncated header");
  const KvBlock root = parse_kv(std::string_view(bytes).substr(header_start, header_bytes), where);
  require_version(root, 1);
  const std::string_view blob = std::string_view(bytes).substr(header_start + header_bytes);

  auto block = [&](const std::string& type) -> const KvBlock& {
    for (const auto& b : root.blocks)
      if (b.type == type) return b;
    fail(ErrorKind::kState, where + ": missing '" + type + "' block");
  };
  TabNetConfig t;
  const KvBlock& tb = block("tabnet");
  t.n_p = static_cast<std::size_t>(tb.get_int("n_p", 0));
  t.n_a = static_cast<std::size_t>(tb.get_int("n_a", 0));
  t.n_steps = static_cast<std::size_t>(tb.get_int("n_steps", 0));
  t.gamma = tb.get_double("gamma", 0);
  t.n_shared = static_cast<std::size_t>(tb.get_int("n_shared", 0));
  t.n_step_specific = static_cast<std::size_t>(tb.get_int("n_step_specific", 0));
  t.bn_momentum = tb.get_double("bn_momentum", 0);
  t.lambda_sparse = tb.get_double("lambda_sparse", 0);
  FairConfig f;
  const KvBlock& fb = block("fair");
  f.n_s = static_cast<std::size_t>(fb.get_int("n_s", 0));
  f.lambda_d = fb.get_double("lambda_d", 0);
  f.lambda_s = fb.get_double("lambda_s", 0);
  f.n_sensitive_classes = static_cast<std::size_t>(fb.get_int("classes", 0));

  Schema schema = parse_schema_block(block("schema"));
  const auto stat_text = block("encoder").get_list("stats");
  if (stat_text.size() != 2 * schema.columns.size()) bad("encoder statistics do not match the schema");
  std::vector<FeatureEncoder::NumericStats> stats(schema.columns.size());
  for (std::size_t c = 0; c < stats.size(); ++c) {
    stats[c].mean = parse_double(stat_text[2 * c], where);
    stats[c].scale = parse_double(stat_text[2 * c + 1], where);
  }

  Checkpoint ck;
  ck.encoder = FeatureEncoder::from_state(schema, std::move(stats));
  ck.threshold = root.get_double("threshold", 0.5);
  const auto input_dim = static_cast<std::size_t>(root.get_int("input_dim", 0));
  if (input_dim != ck.encoder.width()) bad("input_dim does not match the encoded schema width");
  ck.model = std::make_unique<Model>(parse_model_kind(root.get_string("kind", "")), input_dim, t, f,
                                     static_cast<std::uint64_t>(std::stoull(root.get_string("seed", "0"))));

  std::vector<const KvBlock*> tensors;
  for (const auto& b : root.blocks)
    if (b.type == "tensor") tensors.push_back(&b);
  auto state = ck.model->state();
  if (tensors.size() != state.size()) bad("tensor count does not match the model");
  std::vector<std::vector<double>> values;
  for (std::size_t i = 0; i < state.size(); ++i) {
    const KvBlock& tb_i = *tensors[i];
    const std::size_t rows = static_cast<std::size_t>(tb_i.get_int("rows", -1));
    const std::size_t cols = static_cast<std::size_t>(tb_i.get_int("cols", -1));
    const std::size_t offset = static_cast<std::size_t>(tb_i.get_int("offset", -1));
    if (tb_i.name != state[i].name || rows != state[i].tensor.rows() || cols != state[i].tensor.cols()) {
      bad("tensor '" + tb_i.name + "' does not match model tensor '" + state[i].name + "'");
    }
    if ((offset + rows * cols) * 8 > blob.size()) bad("tensor '" + tb_i.name + "' runs past the end of the file");
    std::vector<double> v(rows * cols);
    for (std::size_t k = 0; k < v.size(); ++k) {
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b)
        bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(blob[(offset + k) * 8 + b])) << (8 * b);
      v[k] = std::bit_cast<double>(bits);
    }
    values.push_back(std::move(v));
  }
  ck.model->restore(values);
  ck.model->set_trained(true);
  return ck;
}

}  // namespace fairtab
