#pragma once

// Everything needed to go from raw pairs to probabilities: vocabulary,
// segmenters, knowledge base and the model, plus training, checkpoints and
// the gradient check driver.

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "let/autodiff/gradcheck.hpp"
#include "let/harness/config.hpp"
#include "let/harness/data.hpp"
#include "let/harness/metrics.hpp"

namespace let::harness {

// Characters of every text in `sets`.
encoder::CharVocab build_vocab(const std::vector<std::vector<PairExample>>& sets);

class Pipeline {
 public:
  // Loads the knowledge base and dictionaries named by `config`.
  Pipeline(const RunConfig& config, encoder::CharVocab vocab);

  const RunConfig& config() const { return config_; }
  const encoder::CharVocab& vocab() const { return vocab_; }
  model::LetModel& model() { return *model_; }
  const model::LetModel& model() const { return *model_; }
  const knowledge::KnowledgeBase* knowledge() const { return kb_.get(); }
  const std::vector<model::Segmenter>& segmenters() const { return segmenters_; }

  model::SentenceInput prepare(const lattice::CharSeq& text) const;
  model::PairInput prepare(const PairExample& example) const;
  std::vector<model::PairInput> prepare(const std::vector<PairExample>& examples) const;

  // Eval-mode probabilities.
  std::vector<double> predict(const std::vector<model::PairInput>& pairs) const;
  Metrics evaluate(const std::vector<model::PairInput>& pairs,
                   const std::vector<int>& labels) const;

 private:
  RunConfig config_;
  encoder::CharVocab vocab_;
  std::shared_ptr<const knowledge::KnowledgeBase> kb_;
  std::vector<model::Segmenter> segmenters_;
  std::unique_ptr<model::LetModel> model_;
};

std::vector<int> labels_of(const std::vector<PairExample>& examples);

struct TrainResult {
  std::size_t epochs_run = 0;
  std::size_t steps = 0;
  std::size_t best_epoch = 0;  // epoch whose parameters were kept
  Metrics train;               // of the kept parameters
  Metrics dev;                 // of the kept parameters; count 0 without dev data
};

// Mini-batch RMSProp with warmup and linear decay. After every epoch the
// train and dev splits are evaluated and one JSON record per split is written
// to `metrics_log` (when given). With dev data, the parameters of the best
// dev-accuracy epoch are kept and training stops after `patience` epochs
// without improvement. Deterministic for a fixed config. Throws let::Error
// with the step number when the loss becomes non-finite.
TrainResult train(Pipeline& pipeline, const std::vector<PairExample>& train_set,
                  const std::vector<PairExample>& dev_set, std::ostream* metrics_log = nullptr);

// Versioned binary checkpoint: text manifest (magic, config echo, vocabulary,
// parameter paths and shapes) followed by raw little-endian doubles.
void save_checkpoint(const std::string& path, const Pipeline& pipeline);
Pipeline load_checkpoint(const std::string& path);
// Config echo stored in a checkpoint.
RunConfig checkpoint_config(const std::string& path);

struct GradCheckReport {
  ad::GradCheckResult result;
  double seconds = 0.0;
  std::size_t parameters = 0;
};

// Gradient check of the full forward pass + BCE over `pairs` with dropout
// off.
GradCheckReport run_gradcheck(const Pipeline& pipeline, const std::vector<PairExample>& pairs,
                              std::size_t samples, std::uint64_t seed);

}  // namespace let::harness
