#include "let/harness/pipeline.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "let/error.hpp"
#include "let/harness/optim.hpp"

namespace let::harness {

static_assert(std::endian::native == std::endian::little,
              "checkpoints store little-endian doubles");

namespace {

constexpr const char* kMagic = "LETCKPT1";

using Snapshot = std::map<std::string, std::vector<double>>;

Snapshot snapshot(const ad::ParamStore& params) {
  Snapshot s;
  for (const auto& [path, t] : params.all()) {
    s.emplace(path, std::vector<double>(t.data().begin(), t.data().end()));
  }
  return s;
}

void restore(ad::ParamStore& params, const Snapshot& s) {
  for (const auto& [path, values] : s) {
    auto t = params.get(path);
    auto data = t.mutable_data();
    std::copy(values.begin(), values.end(), data.begin());
  }
}

void log_metrics(std::ostream* out, std::size_t epoch, const char* split, const Metrics& m) {
  if (!out) return;
  nlohmann::ordered_json rec;
  rec["epoch"] = epoch;
  rec["split"] = split;
  rec["acc"] = m.accuracy;
  rec["f1"] = m.f1;
  rec["loss"] = m.loss;
  *out << rec.dump() << '\n';
  out->flush();
}

}  // namespace

encoder::CharVocab build_vocab(const std::vector<std::vector<PairExample>>& sets) {
  std::vector<lattice::CharSeq> texts;
  for (const auto& set : sets) {
    for (const auto& ex : set) {
      texts.push_back(ex.text_a);
      texts.push_back(ex.text_b);
    }
  }
  return encoder::CharVocab::build(texts);
}

std::vector<int> labels_of(const std::vector<PairExample>& examples) {
  std::vector<int> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) out.push_back(ex.label);
  return out;
}

Pipeline::Pipeline(const RunConfig& config, encoder::CharVocab vocab)
    : config_(config), vocab_(std::move(vocab)) {
  config_.validate();
  if (!config_.kb.empty()) {
    kb_ = std::make_shared<knowledge::KnowledgeBase>(
        knowledge::KnowledgeBase::load(config_.kb, config_.sememe_embeddings));
  }
  std::map<std::string, std::shared_ptr<const lattice::Dictionary>> dicts;
  for (const auto& spec : config_.active_segmenters()) {
    auto& dict = dicts[spec.dictionary];
    if (!dict) {
      dict = spec.dictionary.empty()
                 ? std::make_shared<lattice::Dictionary>()
                 : std::make_shared<lattice::Dictionary>(
                       lattice::Dictionary::load(spec.dictionary));
    }
    segmenters_.push_back({spec.strategy, dict});
  }
  model_ = std::make_unique<model::LetModel>(config_.model_config(), vocab_.size(), kb_,
                                             config_.seed);
}

model::SentenceInput Pipeline::prepare(const lattice::CharSeq& text) const {
  return model_->prepare(text, segmenters_);
}

model::PairInput Pipeline::prepare(const PairExample& example) const {
  return {prepare(example.text_a), prepare(example.text_b)};
}

std::vector<model::PairInput> Pipeline::prepare(const std::vector<PairExample>& examples) const {
  std::vector<model::PairInput> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) out.push_back(prepare(ex));
  return out;
}

std::vector<double> Pipeline::predict(const std::vector<model::PairInput>& pairs) const {
  ad::NoGradGuard no_grad;
  nn::Context ctx;
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& pair : pairs) out.push_back(model_->forward(pair, vocab_, ctx).item());
  return out;
}

Metrics Pipeline::evaluate(const std::vector<model::PairInput>& pairs,
                           const std::vector<int>& labels) const {
  return compute_metrics(predict(pairs), labels);
}

TrainResult train(Pipeline& pipeline, const std::vector<PairExample>& train_set,
                  const std::vector<PairExample>& dev_set, std::ostream* metrics_log) {
  if (train_set.empty()) throw Error("train: empty training set");
  const auto& cfg = pipeline.config();
  auto& params = pipeline.model().params();
  const auto train_inputs = pipeline.prepare(train_set);
  const auto dev_inputs = pipeline.prepare(dev_set);
  const auto train_labels = labels_of(train_set);
  const auto dev_labels = labels_of(dev_set);

  const std::size_t batches = (train_set.size() + cfg.batch_size - 1) / cfg.batch_size;
  const long total_steps = static_cast<long>(batches * cfg.epochs);
  Rng shuffle_rng(derive_seed(cfg.seed, "shuffle"));
  Rng dropout_rng(derive_seed(cfg.seed, "dropout"));
  nn::Context ctx{true, cfg.dropout, &dropout_rng};
  RmsProp optimizer;
  auto lr_scale = [&](const std::string& path) {
    return path.rfind("encoder/", 0) == 0 ? cfg.encoder_lr_factor : 1.0;
  };

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  TrainResult result;
  Snapshot best = snapshot(params);
  double best_dev = -1.0;
  std::size_t since_best = 0;
  long step = 0;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng() % i]);
    }
    for (std::size_t b = 0; b < batches; ++b) {
      ++step;
      const std::size_t begin = b * cfg.batch_size;
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      std::vector<ad::Tensor> probs;
      std::vector<int> labels;
      for (std::size_t k = begin; k < end; ++k) {
        probs.push_back(pipeline.model().forward(train_inputs[order[k]], pipeline.vocab(), ctx));
        labels.push_back(train_labels[order[k]]);
      }
      auto loss = model::bce_loss(probs.size() == 1 ? probs[0] : ad::concat(probs, 0), labels);
      if (!std::isfinite(loss.item())) {
        throw Error("train: non-finite loss at step " + std::to_string(step));
      }
      params.zero_grad();
      loss.backward();
      optimizer.step(params, lr_schedule(step, total_steps, cfg.lr, cfg.warmup_ratio),
                     lr_scale);
    }
    result.epochs_run = epoch;
    const auto train_metrics = pipeline.evaluate(train_inputs, train_labels);
    log_metrics(metrics_log, epoch, "train", train_metrics);
    if (dev_inputs.empty()) {
      result.best_epoch = epoch;
      result.train = train_metrics;
      continue;
    }
    const auto dev_metrics = pipeline.evaluate(dev_inputs, dev_labels);
    log_metrics(metrics_log, epoch, "dev", dev_metrics);
    if (dev_metrics.accuracy > best_dev) {
      best_dev = dev_metrics.accuracy;
      best = snapshot(params);
      result.best_epoch = epoch;
      result.train = train_metrics;
      result.dev = dev_metrics;
      since_best = 0;
    } else if (cfg.patience && ++since_best >= cfg.patience) {
      break;
    }
  }
  if (!dev_inputs.empty()) restore(params, best);
  result.steps = static_cast<std::size_t>(step);
  return result;
}

void save_checkpoint(const std::string& path, const Pipeline& pipeline) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint: " + path);
  const auto echo = pipeline.config().echo();
  std::ostringstream vocab;
  pipeline.vocab().write(vocab);
  const auto& params = pipeline.model().params().all();

  out << kMagic << '\n';
  out << "config " << echo.size() << '\n' << echo;
  out << "vocab " << vocab.str().size() << '\n' << vocab.str();
  out << "params " << params.size() << '\n';
  for (const auto& [p, t] : params) out << p << ' ' << t.rows() << ' ' << t.cols() << '\n';
  out << "data\n";
  for (const auto& [p, t] : params) {
    const auto& values = t.data();
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(double)));
  }
  if (!out) throw Error("error writing checkpoint: " + path);
}

namespace {

struct Manifest {
  RunConfig config;
  std::string vocab_tsv;
  std::vector<std::pair<std::string, ad::Shape>> params;
};

Manifest read_manifest(std::istream& in, const std::string& path) {
  auto fail = [&](const std::string& what) -> void {
    throw ParseError("checkpoint " + path + ": " + what);
  };
  auto read_block = [&](const std::string& name) {
    std::string word;
    std::size_t size = 0;
    if (!(in >> word >> size) || word != name) fail("expected '" + name + "' section");
    in.get();
    std::string block(size, '\0');
    if (!in.read(block.data(), static_cast<std::streamsize>(size))) fail("truncated " + name);
    return block;
  };
  std::string magic;
  if (!std::getline(in, magic) || magic != kMagic) fail("bad magic (expected LETCKPT1)");
  Manifest m;
  m.config = RunConfig::parse(read_block("config"), path);
  m.vocab_tsv = read_block("vocab");
  std::string word;
  std::size_t count = 0;
  if (!(in >> word >> count) || word != "params") fail("expected 'params' section");
  for (std::size_t i = 0; i < count; ++i) {
    std::string p;
    std::size_t r = 0, c = 0;
    if (!(in >> p >> r >> c)) fail("truncated parameter list");
    m.params.emplace_back(p, ad::Shape{r, c});
  }
  if (!(in >> word) || word != "data") fail("expected 'data' section");
  in.get();
  return m;
}

}  // namespace

RunConfig checkpoint_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint: " + path);
  return read_manifest(in, path).config;
}

Pipeline load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint: " + path);
  auto m = read_manifest(in, path);
  std::istringstream vocab_in(m.vocab_tsv);
  Pipeline pipeline(m.config, encoder::CharVocab::read(vocab_in, path));
  auto& params = pipeline.model().params();
  if (params.size() != m.params.size()) {
    throw Error("checkpoint " + path + ": " + std::to_string(m.params.size()) +
                " parameters stored, model has " + std::to_string(params.size()));
  }
  for (const auto& [p, shape] : m.params) {
    if (!params.contains(p)) throw Error("checkpoint " + path + ": unknown parameter " + p);
    auto t = params.get(p);
    if (t.shape() != shape) {
      throw Error("checkpoint " + path + ": shape mismatch for " + p + ": stored " +
                  ad::shape_str(shape) + ", model " + ad::shape_str(t.shape()));
    }
    auto data = t.mutable_data();
    if (!in.read(reinterpret_cast<char*>(data.data()),
                 static_cast<std::streamsize>(data.size() * sizeof(double)))) {
      throw Error("checkpoint " + path + ": truncated data for " + p);
    }
  }
  return pipeline;
}

GradCheckReport run_gradcheck(const Pipeline& pipeline, const std::vector<PairExample>& pairs,
                              std::size_t samples, std::uint64_t seed) {
  if (pairs.empty()) throw Error("gradcheck: no pairs");
  const auto inputs = pipeline.prepare(pairs);
  const auto labels = labels_of(pairs);
  nn::Context ctx;  // eval mode: no dropout
  auto loss_fn = [&] {
    std::vector<ad::Tensor> probs;
    for (const auto& pair : inputs) {
      probs.push_back(pipeline.model().forward(pair, pipeline.vocab(), ctx));
    }
    return model::bce_loss(probs.size() == 1 ? probs[0] : ad::concat(probs, 0), labels);
  };
  GradCheckReport report;
  report.parameters = pipeline.model().params().total_values();
  const auto start = std::chrono::steady_clock::now();
  report.result = ad::gradient_check(loss_fn, pipeline.model().params(), samples, seed);
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace let::harness
