// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "lattice_oracle.hpp"
#include "let/harness/pipeline.hpp"
#include "let/nn/md_attention.hpp"
#include "let/rng.hpp"

using namespace let;
using namespace let::harness;

namespace {

const std::string kData = LET_DATA_DIR;

// Scratch files live in a per-binary temp directory, not the working directory.
std::string scratch(const std::string& name) {
  static const auto dir = [] {
    auto d = std::filesystem::temp_directory_path() / "let_acceptance";
    std::filesystem::create_directories(d);
    return d;
  }();
  return (dir / name).string();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<PairExample> head(std::vector<PairExample> v, std::size_t n) {
  v.resize(std::min(n, v.size()));
  return v;
}

bool same_row(const ad::Tensor& a, const ad::Tensor& b, std::size_t r) {
  for (std::size_t c = 0; c < a.cols(); ++c) {
    if (a.at(r, c) != b.at(r, c)) return false;
  }
  return true;
}

Outcome gradient_integrity() {
  const auto cfg = RunConfig::load(kData + "/gradcheck.cfg");
  const auto pairs = head(load_pairs(cfg.train), 2);
  Pipeline p(cfg, build_vocab({pairs}));
  const auto report = run_gradcheck(p, pairs, 500, 0);
  const auto& r = report.result;
  return {r.max_rel_error < 1e-4 && report.seconds < 60.0,
          fmt("max rel error %.3e over %.0f coordinates, %.1f s", r.max_rel_error,
              static_cast<double>(r.coordinates), report.seconds)};
}

Outcome md_normalization() {
  Rng rng(1);
  double worst = 0.0;
  bool negative = false;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 1 + rng() % 12, d = 1 + rng() % 16;
    const double spread = std::pow(10.0, uniform(rng, -3.0, 2.5));
    std::vector<double> v(n * d);
    for (auto& x : v) x = uniform(rng, -spread, spread);
    const auto w = nn::md_softmax(ad::Tensor({n, d}, std::move(v)));
    for (std::size_t f = 0; f < d; ++f) {
      double total = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        total += w.at(j, f);
        negative = negative || w.at(j, f) < 0.0;
      }
      worst = std::max(worst, std::fabs(total - 1.0));
    }
  }
  return {worst <= 1e-12 && !negative,
          fmt("worst |column sum - 1| = %.2e", worst) +
              (negative ? ", negative weights found" : ", no negative weights")};
}

Outcome lattice_oracle() {
  Rng rng(500);
  std::size_t mismatches = 0;
  for (int i = 0; i < 500; ++i) {
    const auto c = let::testing::random_lattice_case(rng, 12, 5, 15);
    if (!let::testing::matches_oracle(lattice::build_lattice(c.text, c.paths))) ++mismatches;
  }
  return {mismatches == 0, fmt("%.0f of 500 cases differ from the Floyd-Warshall closure",
                               static_cast<double>(mismatches))};
}

Outcome identical_pairs() {
  auto cfg = RunConfig::load(kData + "/overfit.cfg");
  const auto train_set = load_pairs(cfg.train);
  Pipeline p(cfg, build_vocab({train_set}));
  // Alphabet: every character of the corpus.
  lattice::CharSeq alphabet;
  for (const auto& ex : train_set) alphabet += ex.text_a + ex.text_b;
  Rng rng(4);
  double worst = 0.0;
  nn::Context ctx;
  for (int i = 0; i < 100; ++i) {
    lattice::CharSeq s;
    const std::size_t len = 1 + rng() % 12;
    for (std::size_t k = 0; k < len; ++k) s.push_back(alphabet[rng() % alphabet.size()]);
    model::PairInput pair{p.prepare(s), p.prepare(s)};
    model::ForwardTrace trace;
    p.model().forward(pair, p.vocab(), ctx, &trace);
    const auto out = p.model().match_sentences(trace.fused_a, trace.fused_a, ctx);
    for (double v : out.dist_a.data()) worst = std::max(worst, std::fabs(v - 1.0));
    for (double v : out.dist_b.data()) worst = std::max(worst, std::fabs(v - 1.0));
  }
  return {worst <= 1e-9, fmt("worst |d_k - 1| = %.2e over 100 sentences", worst)};
}

Outcome kb_skip() {
  const auto cfg = RunConfig::load(kData + "/overfit.cfg");
  const auto data = load_pairs(cfg.train);
  Pipeline p(cfg, build_vocab({data}));
  nn::Context ctx;
  std::size_t skipped = 0, with_senses = 0, changed = 0, violations = 0;
  for (const auto& ex : data) {
    const auto pair = p.prepare(ex);
    model::ForwardTrace trace;
    p.model().forward(pair, p.vocab(), ctx, &trace);
    for (const auto* side : {&pair.a, &pair.b}) {
      const auto& states = side == &pair.a ? trace.sagt_a.states : trace.sagt_b.states;
      for (std::size_t i = 0; i < side->lattice.size(); ++i) {
        const bool none = side->node_senses[i].empty();
        (none ? skipped : with_senses) += 1;
        for (std::size_t l = 1; l < states.size(); ++l) {
          const bool same = same_row(states[0].words, states[l].words, i);
          if (none && !same) ++violations;
          if (!none && !same) {
            ++changed;
            break;
          }
        }
      }
    }
  }
  return {violations == 0 && skipped > 0 && changed > 0,
          fmt("%.0f sense-less nodes, %.0f of them changed", static_cast<double>(skipped),
              static_cast<double>(violations)) +
              fmt("; %.0f of %.0f nodes with senses updated", static_cast<double>(changed),
                  static_cast<double>(with_senses))};
}

Outcome ablations() {
  const auto base = RunConfig::load(kData + "/overfit.cfg");
  const auto data = load_pairs(base.train);
  const auto vocab = build_vocab({data});

  auto off = base;
  off.use_sense = false;
  auto empty = base;
  const std::string empty_kb = scratch("acceptance_empty_kb.tsv");
  std::ofstream(empty_kb) << "# no entries\n";
  empty.kb = empty_kb;
  empty.sememe_embeddings.clear();
  Pipeline p_off(off, vocab), p_empty(empty, vocab);
  const bool sense_equiv = p_off.predict(p_off.prepare(data)) ==
                           p_empty.predict(p_empty.prepare(data));

  // L = 0: no SaGT parameters, no layer states, and the prediction equals the
  // pipeline assembled by hand without any SaGT step.
  auto flat = base;
  flat.layers = 0;
  Pipeline p0(flat, vocab);
  bool no_params = true;
  for (const auto& [path, t] : p0.model().params().all()) {
    if (path.rfind("sagt/", 0) == 0) no_params = false;
  }
  const auto& m = p0.model();
  nn::Context ctx;
  bool composed = true, single_state = true;
  for (const auto& ex : head(data, 16)) {
    const auto pair = p0.prepare(ex);
    model::ForwardTrace trace;
    const double full = m.forward(pair, p0.vocab(), ctx, &trace).item();
    single_state = single_state && trace.sagt_a.states.size() == 1 &&
                   trace.sagt_b.states.size() == 1;
    const auto enc = m.char_encoder().encode(pair.a.text, pair.b.text, p0.vocab(), ctx);
    const auto fa = m.fuse_chars(m.init_word_reps(pair.a.lattice, enc.reps_a, ctx),
                                 pair.a.lattice, enc.reps_a, ctx);
    const auto fb = m.fuse_chars(m.init_word_reps(pair.b.lattice, enc.reps_b, ctx),
                                 pair.b.lattice, enc.reps_b, ctx);
    const auto match = m.match_sentences(fa, fb, ctx);
    const auto p = m.classify(enc.cls, match.sentence_a, match.sentence_b, ctx);
    composed = composed && p.item() == full;
  }
  std::string detail = std::string("use_sense=false vs empty KB ") +
                       (sense_equiv ? "bit-identical" : "DIFFER") + "; L=0: sagt params " +
                       (no_params ? "absent" : "PRESENT") + ", layer states " +
                       (single_state ? "none" : "PRESENT") + ", hand-composed forward " +
                       (composed ? "bit-identical" : "DIFFERS");
  return {sense_equiv && no_params && single_state && composed, detail};
}

Outcome overfit() {
  const auto cfg = RunConfig::load(kData + "/overfit.cfg");
  const auto data = load_pairs(cfg.train);
  Pipeline p(cfg, build_vocab({data}));
  const auto t0 = std::chrono::steady_clock::now();
  const auto result = train(p, data, {}, nullptr);
  const double secs = seconds_since(t0);
  const bool ok = cfg.dim == 32 && cfg.layers == 2 && cfg.perspectives == 5 &&
                  data.size() == 64 && cfg.epochs <= 30 && result.train.accuracy >= 0.95 &&
                  secs < 300.0;
  return {ok, fmt("train acc %.4f after %.0f epochs, %.1f s", result.train.accuracy,
                  static_cast<double>(result.epochs_run), secs)};
}

Outcome determinism() {
  auto cfg = RunConfig::load(kData + "/overfit.cfg");
  cfg.dev = kData + "/dev.tsv";
  cfg.dropout = 0.2;
  cfg.epochs = 3;
  const auto data = load_pairs(cfg.train), dev = load_pairs(cfg.dev);
  auto run = [&](const std::string& ckpt) {
    Pipeline p(cfg, build_vocab({data, dev}));
    std::ostringstream log;
    train(p, data, dev, &log);
    save_checkpoint(ckpt, p);
    return log.str();
  };
  const auto log1 = run(scratch("acceptance_run1.ckpt"));
  const auto log2 = run(scratch("acceptance_run2.ckpt"));
  const auto c1 = read_file(scratch("acceptance_run1.ckpt"));
  const auto c2 = read_file(scratch("acceptance_run2.ckpt"));
  const bool ok = !log1.empty() && log1 == log2 && !c1.empty() && c1 == c2;
  return {ok, std::string("metrics logs ") + (log1 == log2 ? "identical" : "DIFFER") +
                  ", checkpoints " + (c1 == c2 ? "identical" : "DIFFER") + " (" +
                  std::to_string(c1.size()) + " bytes)"};
}

Outcome hyperparameters() {
  const RunConfig defaults;
  const bool values = defaults.layers == 2 && defaults.perspectives == 20 &&
                      defaults.dim == 128 && defaults.dropout == 0.2 && defaults.lr == 5e-4 &&
                      defaults.warmup_ratio == 0.1;
  Pipeline p(defaults, build_vocab({load_pairs(kData + "/train.tsv")}));
  save_checkpoint(scratch("acceptance_defaults.ckpt"), p);
  const auto stored = checkpoint_config(scratch("acceptance_defaults.ckpt"));
  const auto echo = stored.echo();
  bool lines = true;
  for (const char* line : {"layers = 2\n", "perspectives = 20\n", "dim = 128\n",
                           "dropout = 0.2\n", "lr = 5e-04\n", "warmup_ratio = 0.1\n"}) {
    lines = lines && echo.find(line) != std::string::npos;
  }
  const bool ok = values && lines && stored == defaults;
  return {ok, std::string("defaults ") + (values ? "match" : "DIFFER") +
                  ", checkpoint echo " + (lines && stored == defaults ? "matches" : "DIFFERS")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1 gradient integrity", gradient_integrity},
      {"2 MD attention normalization", md_normalization},
      {"3 lattice oracle equivalence", lattice_oracle},
      {"4 identical-pair invariant", identical_pairs},
      {"5 KB-skip rule", kb_skip},
      {"6 ablation equivalences", ablations},
      {"7 overfit capability", overfit},
      {"8 determinism", determinism},
      {"9 hyperparameter fidelity", hyperparameters},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s  %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
