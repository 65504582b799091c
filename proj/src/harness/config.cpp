#include "let/harness/config.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "let/error.hpp"

namespace let::harness {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fmt(bool v) { return v ? "true" : "false"; }

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const auto* end = text.data() + text.size();
  auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    throw Error("config: bad value '" + text + "' for " + key);
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw Error("config: bad value '" + text + "' for " + key + " (expected true/false)");
}

// Table of fields: name, printer, parser.
struct Field {
  const char* name;
  std::string (*get)(const RunConfig&);
  void (*set)(RunConfig&, const std::string& key, const std::string& value);
};

#define LET_SIZE_FIELD(f)                                                              \
  Field{#f, [](const RunConfig& c) { return std::to_string(c.f); },                    \
        [](RunConfig& c, const std::string& k, const std::string& v) {                 \
          c.f = parse_number<std::size_t>(k, v);                                       \
        }}
#define LET_DOUBLE_FIELD(f)                                                            \
  Field{#f, [](const RunConfig& c) { return fmt(c.f); },                               \
        [](RunConfig& c, const std::string& k, const std::string& v) {                 \
          c.f = parse_number<double>(k, v);                                            \
        }}
#define LET_BOOL_FIELD(f)                                                              \
  Field{#f, [](const RunConfig& c) { return fmt(c.f); },                              \
        [](RunConfig& c, const std::string& k, const std::string& v) {                 \
          c.f = parse_bool(k, v);                                                      \
        }}
#define LET_STRING_FIELD(f)                                                            \
  Field{#f, [](const RunConfig& c) { return c.f; },                                    \
        [](RunConfig& c, const std::string&, const std::string& v) { c.f = v; }}

const std::vector<Field>& fields() {
  static const std::vector<Field> table{
      LET_SIZE_FIELD(dim),
      LET_SIZE_FIELD(layers),
      LET_SIZE_FIELD(perspectives),
      LET_DOUBLE_FIELD(dropout),
      LET_SIZE_FIELD(encoder_layers),
      LET_SIZE_FIELD(encoder_heads),
      LET_SIZE_FIELD(encoder_ffn_dim),
      LET_SIZE_FIELD(max_len),
      LET_SIZE_FIELD(sememe_dim),
      LET_SIZE_FIELD(max_senses),
      LET_DOUBLE_FIELD(lr),
      LET_DOUBLE_FIELD(warmup_ratio),
      LET_DOUBLE_FIELD(encoder_lr_factor),
      LET_SIZE_FIELD(batch_size),
      LET_SIZE_FIELD(epochs),
      LET_SIZE_FIELD(patience),
      Field{"seed", [](const RunConfig& c) { return std::to_string(c.seed); },
            [](RunConfig& c, const std::string& k, const std::string& v) {
              c.seed = parse_number<std::uint64_t>(k, v);
            }},
      LET_STRING_FIELD(train),
      LET_STRING_FIELD(dev),
      LET_STRING_FIELD(kb),
      LET_STRING_FIELD(sememe_embeddings),
      Field{"segmenters",
            [](const RunConfig& c) {
              std::string out;
              for (const auto& s : c.segmenters) {
                if (!out.empty()) out += ", ";
                out += lattice::strategy_name(s.strategy);
                if (!s.dictionary.empty()) out += ":" + s.dictionary;
              }
              return out;
            },
            [](RunConfig& c, const std::string& k, const std::string& v) {
              c.segmenters.clear();
              for (const auto& item : split_list(v)) {
                const auto colon = item.find(':');
                SegmenterSpec spec;
                try {
                  spec.strategy = lattice::parse_strategy(trim(item.substr(0, colon)));
                } catch (const Error& e) {
                  throw Error("config: " + k + ": " + e.what());
                }
                if (colon != std::string::npos) spec.dictionary = trim(item.substr(colon + 1));
                c.segmenters.push_back(spec);
              }
            }},
      LET_BOOL_FIELD(use_sense),
      LET_BOOL_FIELD(use_gru),
      LET_BOOL_FIELD(train_sememe_embeddings),
      Field{"single_segmenter",
            [](const RunConfig& c) { return std::to_string(c.single_segmenter); },
            [](RunConfig& c, const std::string& k, const std::string& v) {
              c.single_segmenter = parse_number<int>(k, v);
            }},
  };
  return table;
}

#undef LET_SIZE_FIELD
#undef LET_DOUBLE_FIELD
#undef LET_BOOL_FIELD
#undef LET_STRING_FIELD

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  for (const auto& f : fields()) {
    if (key == f.name) {
      f.set(*this, key, value);
      return;
    }
  }
  throw Error("config: unknown key '" + key + "'");
}

void RunConfig::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw Error("config: expected key=value, got '" + assignment + "'");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void RunConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error("config: " + what); };
  if (dim == 0) fail("dim must be positive");
  if (perspectives < 1) fail("perspectives must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must lie in [0, 1)");
  if (encoder_heads == 0 || dim % encoder_heads != 0) {
    fail("dim " + std::to_string(dim) + " is not divisible by encoder_heads " +
         std::to_string(encoder_heads));
  }
  if (max_len < 5) fail("max_len must be at least 5");
  if (!(lr >= 0.0)) fail("lr must be non-negative");
  if (!(warmup_ratio >= 0.0 && warmup_ratio <= 1.0)) fail("warmup_ratio must lie in [0, 1]");
  if (!(encoder_lr_factor >= 0.0)) fail("encoder_lr_factor must be non-negative");
  if (batch_size == 0) fail("batch_size must be positive");
  if (single_segmenter != -1 &&
      (single_segmenter < 0 || single_segmenter >= static_cast<int>(segmenters.size()))) {
    fail("single_segmenter " + std::to_string(single_segmenter) + " is out of range for " +
         std::to_string(segmenters.size()) + " segmenters");
  }
}

std::string RunConfig::echo() const {
  std::string out;
  for (const auto& f : fields()) out += std::string(f.name) + " = " + f.get(*this) + "\n";
  return out;
}

RunConfig RunConfig::parse(const std::string& text, const std::string& origin) {
  RunConfig c;
  std::stringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const auto where = origin + ":" + std::to_string(line_no) + ": ";
    if (eq == std::string::npos) throw ParseError(where + "expected key = value");
    try {
      c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const Error& e) {
      throw ParseError(where + e.what());
    }
  }
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  auto c = parse(buf.str(), path);
  const auto base = std::filesystem::path(path).parent_path();
  auto resolve = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative()) {
      p = (base / p).lexically_normal().string();
    }
  };
  resolve(c.train);
  resolve(c.dev);
  resolve(c.kb);
  resolve(c.sememe_embeddings);
  for (auto& s : c.segmenters) resolve(s.dictionary);
  return c;
}

model::ModelConfig RunConfig::model_config() const {
  model::ModelConfig m;
  m.dim = dim;
  m.sagt_layers = layers;
  m.perspectives = perspectives;
  m.dropout = dropout;
  m.encoder.dim = dim;
  m.encoder.layers = encoder_layers;
  m.encoder.heads = encoder_heads;
  m.encoder.ffn_dim = encoder_ffn_dim;
  m.encoder.max_len = max_len;
  m.use_sense = use_sense;
  m.use_gru = use_gru;
  m.train_sememe_embeddings = train_sememe_embeddings;
  m.sememe_dim = sememe_dim;
  m.max_senses = max_senses;
  return m;
}

std::vector<SegmenterSpec> RunConfig::active_segmenters() const {
  if (single_segmenter < 0) return segmenters;
  return {segmenters.at(static_cast<std::size_t>(single_segmenter))};
}

bool RunConfig::operator==(const RunConfig& other) const { return echo() == other.echo(); }

}  // namespace let::harness
