#include "acim/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "acim/error.hpp"

namespace acim::cli {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

[[noreturn]] void fail(const std::string& origin, int line, const std::string& msg) {
  throw ConfigError(origin + ":" + std::to_string(line) + ": " + msg);
}

}  // namespace

ConfigFile parse_config_text(const std::string& text, const std::string& origin) {
  ConfigFile file;
  file.origin = origin;
  file.sections[""];
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find_first_of("#;");
    const std::string s = trim(std::string_view(raw).substr(0, hash));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail(origin, line, "unterminated section header");
      section = trim(std::string_view(s).substr(1, s.size() - 2));
      if (section.empty()) fail(origin, line, "empty section name");
      if (file.sections.count(section) && !file.sections[section].empty())
        fail(origin, line, "section [" + section + "] appears twice");
      file.sections[section];
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) fail(origin, line, "expected 'key = value', got '" + s + "'");
    const std::string key = trim(std::string_view(s).substr(0, eq));
    const std::string value = trim(std::string_view(s).substr(eq + 1));
    if (key.empty()) fail(origin, line, "missing key before '='");
    auto& entries = file.sections[section];
    if (entries.count(key))
      fail(origin, line, "key '" + key + "' repeats (first set on line " +
                             std::to_string(entries[key].line) + ")");
    entries[key] = {value, line};
  }
  return file;
}

ConfigFile read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path.string());
}

namespace {

// Typed view of one section. Every getter records the key as known so that
// leftovers can be reported as typos.
class Section {
 public:
  Section(const ConfigFile& file, const std::string& name) : file_(file), name_(name) {
    const auto it = file.sections.find(name);
    if (it != file.sections.end()) entries_ = &it->second;
  }

  bool has(const std::string& key) {
    known_.insert(key);
    return entries_ && entries_->count(key);
  }

  std::string text(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    return unquote(entries_->at(key).value);
  }

  template <typename T>
  T number(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    const auto& e = entries_->at(key);
    return parse_number<T>(e.value, key, e.line);
  }

  template <typename T>
  std::vector<T> list(const std::string& key) {
    if (!has(key)) return {};
    const auto& e = entries_->at(key);
    std::string body = e.value;
    if (body.size() >= 2 && body.front() == '[' && body.back() == ']')
      body = body.substr(1, body.size() - 2);
    std::vector<T> out;
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) error(e.line, key, "empty list element");
      out.push_back(parse_number<T>(item, key, e.line));
    }
    if (out.empty()) error(e.line, key, "list must not be empty");
    return out;
  }

  bool flag(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const auto& e = entries_->at(key);
    if (e.value == "true" || e.value == "yes" || e.value == "1") return true;
    if (e.value == "false" || e.value == "no" || e.value == "0") return false;
    error(e.line, key, "expected true/false, got '" + e.value + "'");
  }

  template <typename Enum>
  Enum choice(const std::string& key, Enum fallback,
              const std::vector<std::pair<std::string, Enum>>& options) {
    if (!has(key)) return fallback;
    const auto& e = entries_->at(key);
    const std::string v = unquote(e.value);
    std::string names;
    for (const auto& [name, value] : options) {
      if (name == v) return value;
      names += (names.empty() ? "" : ", ") + name;
    }
    error(e.line, key, "expected one of {" + names + "}, got '" + v + "'");
  }

  int line_of(const std::string& key) const {
    return entries_ && entries_->count(key) ? entries_->at(key).line : 0;
  }

  [[noreturn]] void error(int line, const std::string& key, const std::string& msg) const {
    fail(file_.origin, line, label(key) + ": " + msg);
  }

  void reject_unknown() const {
    if (!entries_) return;
    for (const auto& [key, e] : *entries_)
      if (!known_.count(key)) fail(file_.origin, e.line, "unknown key " + label(key));
  }

 private:
  std::string label(const std::string& key) const {
    return name_.empty() ? "'" + key + "'" : "[" + name_ + "] '" + key + "'";
  }

  static std::string unquote(const std::string& v) {
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
    return v;
  }

  template <typename T>
  T parse_number(const std::string& text, const std::string& key, int line) const {
    T value{};
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end) {
      const char* kind = std::is_integral_v<T> ? "an integer" : "a number";
      error(line, key, std::string("expected ") + kind + ", got '" + text + "'");
    }
    return value;
  }

  const ConfigFile& file_;
  std::string name_;
  const std::map<std::string, ConfigEntry>* entries_ = nullptr;
  std::set<std::string> known_;
};

const std::vector<std::pair<std::string, NoiseUnit>> kUnits{{"lsb_rms", NoiseUnit::LsbRms},
                                                            {"vpp_pct", NoiseUnit::VppPct}};
const std::vector<std::pair<std::string, Signedness>> kSignedness{
    {"unsigned", Signedness::Unsigned}, {"signed", Signedness::TwosComplement}};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

// Runs `body` and re-throws library validation errors as config errors
// pointing at the section.
template <typename F>
void checked(const ConfigFile& file, const std::string& section, F&& body) {
  try {
    body();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(file.origin + ": [" + section + "]: " + e.what());
  }
}

}  // namespace

ExperimentConfig build_experiment(const ConfigFile& file, const std::filesystem::path& base_dir) {
  static const std::set<std::string> kSections{"",      "macro", "noise",     "mode",
                                               "model", "data",  "train",     "sweep",
                                               "linearity", "sparsity", "operands", "output"};
  for (const auto& [name, entries] : file.sections)
    if (!kSections.count(name)) {
      const int line = entries.empty() ? 0 : entries.begin()->second.line;
      fail(file.origin, line, "unknown section [" + name + "]");
    }

  ExperimentConfig x;
  x.raw = file;

  Section global(file, "");
  if (!global.has("seed")) throw ConfigError(file.origin + ": 'seed' is mandatory");
  x.seed = global.number<std::uint64_t>("seed", 0);
  global.reject_unknown();

  Section macro(file, "macro");
  x.macro.rows = macro.number("rows", x.macro.rows);
  x.macro.adc_bits = macro.number("adc_bits", x.macro.adc_bits);
  x.macro.enc_bits = macro.number("enc_bits", x.macro.enc_bits);
  macro.reject_unknown();
  checked(file, "macro", [&] { x.macro.validate(); });

  Section noise(file, "noise");
  x.noise.random.value = noise.number("random", 0.0);
  x.noise.random.unit = noise.choice("random_unit", NoiseUnit::LsbRms, kUnits);
  x.noise.nonlin.value = noise.number("nonlin", 0.0);
  x.noise.nonlin.unit = noise.choice("nonlin_unit", NoiseUnit::LsbRms, kUnits);
  x.noise.seed = noise.number<std::uint64_t>("seed", x.seed);
  noise.reject_unknown();
  checked(file, "noise", [&] { x.noise.validate(); });

  Section mode(file, "mode");
  x.mode.scheme = mode.choice(
      "scheme", x.macro.enc_bits > 1 ? Scheme::BitParallel : Scheme::BitSerial,
      std::vector<std::pair<std::string, Scheme>>{{"bit_serial", Scheme::BitSerial},
                                                  {"bit_parallel", Scheme::BitParallel}});
  x.mode.enc_bits = x.macro.enc_bits;
  if (mode.has("hybrid_boundary")) x.mode.hybrid_boundary = mode.number("hybrid_boundary", 0);
  if (mode.has("voting_boundary") || mode.has("voting_samples"))
    x.mode.voting = VotingSpec{mode.number("voting_boundary", 3), mode.number("voting_samples", 1)};
  mode.reject_unknown();
  checked(file, "mode", [&] { x.mode.validate(); });

  Section model(file, "model");
  x.model.checkpoint = resolve(base_dir, model.text("checkpoint", ""));
  x.model.builtin = model.text("builtin", x.model.builtin);
  if (model.has("hidden")) {
    x.model.hidden.clear();
    for (long h : model.list<long>("hidden")) {
      if (h < 1) model.error(model.line_of("hidden"), "hidden", "widths must be >= 1");
      x.model.hidden.push_back(static_cast<std::size_t>(h));
    }
  }
  if (x.model.checkpoint.empty() && x.model.builtin != "blob_mlp")
    model.error(model.line_of("builtin"), "builtin", "only 'blob_mlp' is available");
  model.reject_unknown();

  Section data(file, "data");
  x.data.source = data.text("source", x.data.source);
  if (x.data.source != "blobs" && x.data.source != "idx")
    data.error(data.line_of("source"), "source", "expected blobs or idx");
  x.data.blobs.classes = data.number("classes", x.data.blobs.classes);
  x.data.blobs.dim = data.number("dim", x.data.blobs.dim);
  x.data.blobs.per_class = data.number("train_per_class", x.data.blobs.per_class);
  x.data.test_per_class = data.number("test_per_class", x.data.test_per_class);
  x.data.blobs.separation = data.number("separation", x.data.blobs.separation);
  x.data.blobs.spread = data.number("spread", x.data.blobs.spread);
  x.data.blobs.seed = data.number<std::uint64_t>("seed", x.seed);
  x.data.train_images = resolve(base_dir, data.text("train_images", ""));
  x.data.train_labels = resolve(base_dir, data.text("train_labels", ""));
  x.data.test_images = resolve(base_dir, data.text("test_images", ""));
  x.data.test_labels = resolve(base_dir, data.text("test_labels", ""));
  if (x.data.source == "idx" && (x.data.test_images.empty() || x.data.test_labels.empty()))
    throw ConfigError(file.origin + ": [data] idx source needs test_images and test_labels");
  if (x.data.test_per_class < 1)
    data.error(data.line_of("test_per_class"), "test_per_class", "must be >= 1");
  data.reject_unknown();

  Section train(file, "train");
  x.train.lr = train.number("lr", x.train.lr);
  x.train.epochs = train.number("epochs", x.train.epochs);
  x.train.batch = train.number("batch", x.train.batch);
  x.train.w_bits = train.number("w_bits", x.train.w_bits);
  x.train.x_bits = train.number("x_bits", x.train.x_bits);
  x.train.nat_sigma = train.number("nat_sigma", x.train.nat_sigma);
  x.train.seed = train.number<std::uint64_t>("seed", x.seed);
  x.train_checkpoint = train.text("checkpoint", x.train_checkpoint.string());
  x.eval_batch = train.number<std::size_t>("eval_batch", x.eval_batch);
  train.reject_unknown();
  checked(file, "train", [&] { x.train.validate(); });
  if (x.eval_batch < 1) train.error(train.line_of("eval_batch"), "eval_batch", "must be >= 1");

  Section sweep(file, "sweep");
  x.sweep.adc_bits = sweep.list<int>("adc_bits");
  x.sweep.enc_bits = sweep.list<int>("enc_bits");
  x.sweep.random = sweep.list<double>("random");
  x.sweep.nonlin = sweep.list<double>("nonlin");
  x.sweep.seeds = sweep.list<std::uint64_t>("seeds");
  sweep.reject_unknown();

  Section lin(file, "linearity");
  x.linearity.trials = lin.number("trials", x.linearity.trials);
  x.linearity.stride = lin.number("stride", x.linearity.stride);
  x.linearity.voting_samples = lin.number("voting_samples", x.linearity.voting_samples);
  lin.reject_unknown();

  Section sparsity(file, "sparsity");
  x.sparsity_source = sparsity.text("source", x.sparsity_source);
  if (x.sparsity_source != "random" && x.sparsity_source != "model")
    sparsity.error(sparsity.line_of("source"), "source", "expected random or model");
  sparsity.reject_unknown();

  Section ops(file, "operands");
  x.operands.batch = ops.number("batch", x.operands.batch);
  x.operands.inner = ops.number("inner", x.operands.inner);
  x.operands.columns = ops.number("columns", x.operands.columns);
  x.operands.w_bits = ops.number("w_bits", x.operands.w_bits);
  x.operands.x_bits = ops.number("x_bits", x.operands.x_bits);
  x.operands.x_signedness = ops.choice("x_signedness", x.operands.x_signedness, kSignedness);
  x.operands.distribution = ops.text("distribution", x.operands.distribution);
  if (x.operands.distribution != "uniform" && x.operands.distribution != "gaussian")
    ops.error(ops.line_of("distribution"), "distribution", "expected uniform or gaussian");
  if (x.operands.batch < 1 || x.operands.inner < 1 || x.operands.columns < 1)
    throw ConfigError(file.origin + ": [operands] batch, inner and columns must be >= 1");
  ops.reject_unknown();

  Section out(file, "output");
  x.output.dir = out.text("dir", x.output.dir.string());
  x.output.csv = out.flag("csv", x.output.csv);
  x.output.json = out.flag("json", x.output.json);
  out.reject_unknown();

  return x;
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
  return build_experiment(read_config_file(path), path.parent_path());
}

}  // namespace acim::cli
