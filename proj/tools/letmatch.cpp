// letmatch: command line front end for the LET matching model.

#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "let/error.hpp"
#include "let/harness/pipeline.hpp"

using namespace let;
using namespace let::harness;

namespace {

RunConfig make_config(const std::string& path, const std::vector<std::string>& overrides) {
  RunConfig cfg = path.empty() ? RunConfig{} : RunConfig::load(path);
  for (const auto& o : overrides) cfg.apply_override(o);
  cfg.validate();
  return cfg;
}

void print_metrics(const Metrics& m) {
  std::printf("{\"count\": %zu, \"acc\": %.6f, \"f1\": %.6f, \"loss\": %.6f}\n", m.count,
              m.accuracy, m.f1, m.loss);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LET: lattice + sememe graph transformer for sentence-pair matching"};
  app.require_subcommand(1);

  std::string config_path, checkpoint, data, out_path, metrics_path, text;
  std::vector<std::string> overrides;
  std::size_t samples = 500;
  std::uint64_t gc_seed = 0;
  bool dot = false;

  auto* prepare = app.add_subcommand("prepare", "build the character vocabulary from pair files");
  std::vector<std::string> inputs;
  prepare->add_option("inputs", inputs, "pair TSV files")->required()->check(CLI::ExistingFile);
  prepare->add_option("-o,--out", out_path, "vocabulary TSV")->required();

  auto* train_cmd = app.add_subcommand("train", "train a model and write a checkpoint");
  train_cmd->add_option("-c,--config", config_path, "config file (key = value)");
  train_cmd->add_option("--set", overrides, "override, key=value (repeatable)");
  train_cmd->add_option("-o,--out", checkpoint, "checkpoint to write")->required();
  train_cmd->add_option("-m,--metrics", metrics_path, "JSONL metrics log");

  auto* eval_cmd = app.add_subcommand("eval", "accuracy and F1 of a checkpoint on a pair file");
  eval_cmd->add_option("checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("data", data, "labelled pair TSV")->required()->check(CLI::ExistingFile);

  auto* predict_cmd = app.add_subcommand("predict", "write one probability per pair");
  predict_cmd->add_option("checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("data", data, "pair TSV; a label column is optional")
      ->required()
      ->check(CLI::ExistingFile);
  predict_cmd->add_option("-o,--out", out_path, "output file (default stdout)");

  auto* gc_cmd = app.add_subcommand("gradcheck", "compare analytic and numeric gradients");
  gc_cmd->add_option("-c,--config", config_path, "config file; the first two train pairs are used");
  gc_cmd->add_option("--set", overrides, "override, key=value (repeatable)");
  gc_cmd->add_option("-n,--samples", samples, "coordinates to probe")->capture_default_str();
  gc_cmd->add_option("--seed", gc_seed, "coordinate sampling seed")->capture_default_str();

  auto* dump_cmd = app.add_subcommand("lattice-dump", "print the word lattice of a sentence");
  dump_cmd->add_option("text", text, "sentence (UTF-8)")->required();
  dump_cmd->add_option("-c,--config", config_path, "config file naming the segmenters");
  dump_cmd->add_option("--set", overrides, "override, key=value (repeatable)");
  dump_cmd->add_flag("--dot", dot, "Graphviz output");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*prepare) {
      std::vector<std::vector<PairExample>> sets;
      for (const auto& p : inputs) sets.push_back(load_pairs(p));
      auto vocab = build_vocab(sets);
      vocab.save(out_path);
      std::printf("%zu entries -> %s\n", vocab.size(), out_path.c_str());
    } else if (*train_cmd) {
      const auto cfg = make_config(config_path, overrides);
      if (cfg.train.empty()) throw Error("train: config has no 'train' file");
      const auto train_set = load_pairs(cfg.train);
      const auto dev_set = cfg.dev.empty() ? std::vector<PairExample>{} : load_pairs(cfg.dev);
      Pipeline pipeline(cfg, build_vocab({train_set, dev_set}));
      std::ofstream log_file;
      std::ostream* log = &std::cout;
      if (!metrics_path.empty()) {
        log_file.open(metrics_path);
        if (!log_file) throw Error("cannot write metrics log: " + metrics_path);
        log = &log_file;
      }
      const auto result = train(pipeline, train_set, dev_set, log);
      save_checkpoint(checkpoint, pipeline);
      std::fprintf(stderr, "epochs %zu, steps %zu, kept epoch %zu, train acc %.4f\n",
                   result.epochs_run, result.steps, result.best_epoch, result.train.accuracy);
    } else if (*eval_cmd) {
      const auto pipeline = load_checkpoint(checkpoint);
      const auto examples = load_pairs(data);
      print_metrics(pipeline.evaluate(pipeline.prepare(examples), labels_of(examples)));
    } else if (*predict_cmd) {
      const auto pipeline = load_checkpoint(checkpoint);
      std::vector<PairExample> examples;
      try {
        examples = load_unlabeled(data);
      } catch (const ParseError&) {
        examples = load_pairs(data);
      }
      const auto probs = pipeline.predict(pipeline.prepare(examples));
      std::ofstream file;
      if (!out_path.empty()) {
        file.open(out_path);
        if (!file) throw Error("cannot write " + out_path);
      }
      std::ostream& out = out_path.empty() ? std::cout : file;
      out.precision(17);
      for (double p : probs) out << p << '\n';
    } else if (*gc_cmd) {
      const auto cfg = make_config(config_path, overrides);
      if (cfg.train.empty()) throw Error("gradcheck: config has no 'train' file");
      auto pairs = load_pairs(cfg.train);
      pairs.resize(std::min<std::size_t>(2, pairs.size()));
      Pipeline pipeline(cfg, build_vocab({pairs}));
      const auto report = run_gradcheck(pipeline, pairs, samples, gc_seed);
      const auto& r = report.result;
      std::printf("parameters %zu, probed %zu, max relative error %.3e, %.1f s\n",
                  report.parameters, r.coordinates, r.max_rel_error, report.seconds);
      std::printf("worst %s[%zu]: analytic %.6e numeric %.6e\n", r.worst_path.c_str(),
                  r.worst_index, r.worst_analytic, r.worst_numeric);
      return r.max_rel_error < 1e-4 ? 0 : 1;
    } else if (*dump_cmd) {
      const auto cfg = make_config(config_path, overrides);
      Pipeline pipeline(cfg, encoder::CharVocab{});
      const auto sentence = pipeline.prepare(lattice::decode_utf8(text));
      if (dot) {
        lattice::write_dot(std::cout, sentence.lattice);
      } else {
        for (const auto& node : sentence.lattice.nodes()) {
          std::cout << node.id << '\t' << lattice::encode_utf8(node.surface) << "\t[" << node.start
                    << ", " << node.end << "]\tsenses " << sentence.node_senses[node.id].size()
                    << '\n';
        }
        for (const auto& [a, b] : sentence.lattice.edges()) std::cout << a << " -> " << b << '\n';
      }
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
