#pragma once

// Run configuration. Text form is one `key = value` per line; '#' starts a
// comment. Lists are comma separated.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "let/model/let_model.hpp"

namespace let::harness {

struct SegmenterSpec {
  lattice::Strategy strategy = lattice::Strategy::ForwardMaxMatch;
  std::string dictionary;  // path; empty means no dictionary words
};

struct RunConfig {
  // Model.
  std::size_t dim = 128;
  std::size_t layers = 2;
  std::size_t perspectives = 20;
  double dropout = 0.2;
  std::size_t encoder_layers = 2;
  std::size_t encoder_heads = 4;
  std::size_t encoder_ffn_dim = 0;  // 0 -> 4 * dim
  std::size_t max_len = 128;
  std::size_t sememe_dim = 200;
  std::size_t max_senses = 0;

  // Optimization.
  double lr = 5e-4;
  double warmup_ratio = 0.1;
  double encoder_lr_factor = 1.0;
  std::size_t batch_size = 32;
  std::size_t epochs = 10;
  std::size_t patience = 5;  // 0 disables early stopping
  std::uint64_t seed = 1;

  // Data and knowledge.
  std::string train;
  std::string dev;
  std::string kb;
  std::string sememe_embeddings;
  std::vector<SegmenterSpec> segmenters;

  // Ablations.
  bool use_sense = true;
  bool use_gru = true;
  bool train_sememe_embeddings = true;
  int single_segmenter = -1;  // index into segmenters; -1 keeps all

  // Sets one field from its text form. Throws let::Error naming the key for
  // unknown keys and bad values.
  void set(const std::string& key, const std::string& value);
  // Applies "key=value".
  void apply_override(const std::string& assignment);
  // Throws let::Error when a field is out of range.
  void validate() const;

  // Canonical text form: every field, fixed order, shortest round-trip
  // numbers. parse(echo()) reproduces the config.
  std::string echo() const;

  static RunConfig parse(const std::string& text, const std::string& origin = "config");
  // Relative paths in the file are resolved against the file's directory.
  static RunConfig load(const std::string& path);

  model::ModelConfig model_config() const;
  // Segmenters after the single_segmenter restriction.
  std::vector<SegmenterSpec> active_segmenters() const;

  bool operator==(const RunConfig&) const;
};

}  // namespace let::harness
