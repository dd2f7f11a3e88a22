#include "klgeo/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "klgeo/format.hpp"

namespace klgeo {

namespace {

std::string where(std::size_t line, std::size_t column) {
  if (line == 0) return "";
  return "line " + std::to_string(line) + ", column " + std::to_string(column) + ": ";
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError("empty list element");
    out.push_back(item);
  }
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

std::uint64_t parse_u64(const std::string& text) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    throw ConfigError("not a non-negative integer: '" + text + "'");
  }
  return v;
}

std::size_t parse_size(const std::string& text) { return static_cast<std::size_t>(parse_u64(text)); }

double parse_real(const std::string& text) {
  double v = 0.0;
  try {
    v = parse_double(text);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!std::isfinite(v)) throw ConfigError("value must be finite: '" + text + "'");
  return v;
}

bool parse_bool(const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("not a boolean: '" + text + "'");
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v[i]);
  return s;
}

std::string join(const std::vector<std::uint64_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + std::to_string(v[i]);
  return s;
}

struct Key {
  std::string name;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

template <class T>
Key size_key(std::string name, T RunConfig::*field) {
  return {std::move(name), [field](const RunConfig& c) { return std::to_string(c.*field); },
          [field](RunConfig& c, const std::string& v) { c.*field = parse_size(v); }};
}

Key real_key(std::string name, double RunConfig::*field) {
  return {std::move(name), [field](const RunConfig& c) { return format_double(c.*field); },
          [field](RunConfig& c, const std::string& v) { c.*field = parse_real(v); }};
}

Key bool_key(std::string name, bool RunConfig::*field) {
  return {std::move(name), [field](const RunConfig& c) { return c.*field ? "true" : "false"; },
          [field](RunConfig& c, const std::string& v) { c.*field = parse_bool(v); }};
}

Key list_key(std::string name, std::vector<double> RunConfig::*field) {
  return {std::move(name), [field](const RunConfig& c) { return join(c.*field); },
          [field](RunConfig& c, const std::string& v) { c.*field = parse_double_list(v); }};
}

void optimizer_keys(std::vector<Key>& keys, const std::string& prefix,
                    OptimizerSettings RunConfig::*group) {
  auto real = [&](const char* n, double OptimizerSettings::*f) {
    keys.push_back({prefix + n, [=](const RunConfig& c) { return format_double(c.*group.*f); },
                    [=](RunConfig& c, const std::string& v) { c.*group.*f = parse_real(v); }});
  };
  auto size = [&](const char* n, std::size_t OptimizerSettings::*f) {
    keys.push_back({prefix + n, [=](const RunConfig& c) { return std::to_string(c.*group.*f); },
                    [=](RunConfig& c, const std::string& v) { c.*group.*f = parse_size(v); }});
  };
  real("learning_rate", &OptimizerSettings::learning_rate);
  size("steps", &OptimizerSettings::steps);
  size("restarts", &OptimizerSettings::restarts);
  size("decay_every", &OptimizerSettings::decay_every);
  real("decay_factor", &OptimizerSettings::decay_factor);
  real("init_stddev", &OptimizerSettings::init_stddev);
}

const std::vector<Key>& registry() {
  static const std::vector<Key> keys = [] {
    std::vector<Key> k;
    k.push_back({"out", [](const RunConfig& c) { return c.out_dir; },
                 [](RunConfig& c, const std::string& v) {
                   if (v.empty()) throw ConfigError("empty output directory");
                   c.out_dir = v;
                 }});
    k.push_back({"seeds", [](const RunConfig& c) { return join(c.seeds); },
                 [](RunConfig& c, const std::string& v) { c.seeds = parse_seed_list(v); }});
    k.push_back(list_key("lambdas", &RunConfig::lambdas));
    k.push_back({"order", [](const RunConfig& c) { return to_string(c.order); },
                 [](RunConfig& c, const std::string& v) {
                   try {
                     c.order = parse_family_order(v);
                   } catch (const DomainError& e) {
                     throw ConfigError(e.what());
                   }
                 }});
    k.push_back(bool_key("plots", &RunConfig::plots));
    k.push_back(bool_key("warm_start", &RunConfig::warm_start));
    k.push_back(real_key("warm_from_lambda", &RunConfig::warm_from_lambda));
    k.push_back(size_key("threads", &RunConfig::threads));
    k.push_back(size_key("vocab_size", &RunConfig::vocab_size));
    k.push_back(size_key("length", &RunConfig::length));
    k.push_back(real_key("sigma", &RunConfig::sigma));
    k.push_back(bool_key("sigma_is_variance", &RunConfig::sigma_is_variance));
    k.push_back(size_key("top_k", &RunConfig::top_k));
    k.push_back(bool_key("references", &RunConfig::references));
    optimizer_keys(k, "ascent.", &RunConfig::ascent);
    optimizer_keys(k, "fkl.", &RunConfig::fkl);
    optimizer_keys(k, "tvd.", &RunConfig::tvd);
    k.push_back(list_key("geometry.a1", &RunConfig::geometry_a1));
    k.push_back(list_key("geometry.lambdas", &RunConfig::geometry_lambdas));
    k.push_back(list_key("betamu.a1", &RunConfig::betamu_a1));
    k.push_back(list_key("betamu.mu", &RunConfig::betamu_mu));
    k.push_back(list_key("ordering.lambdas", &RunConfig::ordering_lambdas));
    k.push_back(size_key("a1_batch", &RunConfig::a1_batch));
    k.push_back({"tolerance",
                 [](const RunConfig& c) { return c.tolerance ? format_double(*c.tolerance) : "default"; },
                 [](RunConfig& c, const std::string& v) {
                   if (v == "default") {
                     c.tolerance.reset();
                   } else {
                     c.tolerance = parse_real(v);
                   }
                 }});
    k.push_back(real_key("gradcheck.h", &RunConfig::gradcheck_h));
    k.push_back(size_key("gradcheck.policies", &RunConfig::gradcheck_policies));
    return k;
  }();
  return keys;
}

const Key* find_key(const std::string& name) {
  for (const auto& k : registry()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

OptimizerConfig to_optimizer(const OptimizerSettings& s) {
  OptimizerConfig cfg;
  cfg.learning_rate = s.learning_rate;
  cfg.steps = s.steps;
  cfg.restarts = s.restarts;
  if (s.decay_every > 0) cfg.decay = DecaySchedule{s.decay_factor, s.decay_every};
  return cfg;
}

void check_settings(const OptimizerSettings& s, const std::string& prefix) {
  if (!(s.learning_rate > 0.0)) throw ConfigError(prefix + "learning_rate must be positive");
  if (s.steps == 0) throw ConfigError(prefix + "steps must be positive");
  if (s.restarts == 0) throw ConfigError(prefix + "restarts must be positive");
  if (s.decay_every > 0 && !(s.decay_factor > 0.0 && s.decay_factor < 1.0)) {
    throw ConfigError(prefix + "decay_factor must lie in (0, 1)");
  }
  if (!(s.init_stddev > 0.0)) throw ConfigError(prefix + "init_stddev must be positive");
}

}  // namespace

ConfigError::ConfigError(const std::string& message, std::size_t line, std::size_t column)
    : std::invalid_argument(where(line, column) + message), line_(line), column_(column) {}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(parse_real(item));
  return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  for (const auto& item : split_list(text)) {
    const auto dots = item.find("..");
    if (dots == std::string::npos) {
      out.push_back(parse_u64(item));
      continue;
    }
    const auto lo = parse_u64(trim(item.substr(0, dots)));
    const auto hi = parse_u64(trim(item.substr(dots + 2)));
    if (hi < lo || hi - lo > 100000) throw ConfigError("bad seed range '" + item + "'");
    for (auto s = lo; s <= hi; ++s) out.push_back(s);
  }
  return out;
}

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  const Key* k = find_key(key);
  if (k == nullptr) throw ConfigError("unknown key '" + key + "'");
  try {
    k->set(cfg, value);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("key '" + key + "': " + e.what());
  }
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    const auto key_col = line.find_first_not_of(" \t") + 1;
    if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line_no, key_col);
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("missing key", line_no, key_col);
    const Key* k = find_key(key);
    if (k == nullptr) throw ConfigError("unknown key '" + key + "'", line_no, key_col);
    const auto value_start = line.find_first_not_of(" \t", eq + 1);
    const std::size_t value_col = (value_start == std::string::npos ? eq + 1 : value_start) + 1;
    try {
      k->set(cfg, trim(line.substr(eq + 1)));
    } catch (const std::invalid_argument& e) {
      throw ConfigError("key '" + key + "': " + e.what(), line_no, value_col);
    }
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& k : registry()) out += k.name + " = " + k.get(cfg) + "\n";
  return out;
}

void RunConfig::validate() const {
  if (seeds.empty()) throw ConfigError("seeds must not be empty");
  if (lambdas.empty()) throw ConfigError("lambdas must not be empty");
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] > 0.0)) throw ConfigError("lambdas must be positive");
    if (i > 0 && !(lambdas[i] > lambdas[i - 1])) {
      throw ConfigError("lambdas must be strictly increasing");
    }
  }
  if (!(warm_from_lambda > 0.0)) throw ConfigError("warm_from_lambda must be positive");
  if (threads == 0) throw ConfigError("threads must be positive");
  if (vocab_size < 2) throw ConfigError("vocab_size must be at least 2");
  if (length < 2) throw ConfigError("length must be at least 2");
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  if (top_k == 0) throw ConfigError("top_k must be positive");
  check_settings(ascent, "ascent.");
  check_settings(fkl, "fkl.");
  check_settings(tvd, "tvd.");
  for (double a : geometry_a1) {
    if (!(a > 0.0 && a < 1.0)) throw ConfigError("geometry.a1 values must lie in (0, 1)");
  }
  for (double a : betamu_a1) {
    if (!(a > 0.0 && a < 1.0)) throw ConfigError("betamu.a1 values must lie in (0, 1)");
  }
  for (double m : betamu_mu) {
    if (!(m > 0.0 && m < 1.0)) throw ConfigError("betamu.mu values must lie in (0, 1)");
  }
  if (a1_batch == 0) throw ConfigError("a1_batch must be positive");
  if (tolerance && !(*tolerance > 0.0)) throw ConfigError("tolerance must be positive");
  if (!(gradcheck_h > 0.0)) throw ConfigError("gradcheck.h must be positive");
  if (gradcheck_policies == 0) throw ConfigError("gradcheck.policies must be positive");
}

SweepConfig RunConfig::sweep_config() const {
  SweepConfig sc;
  sc.vocab_size = vocab_size;
  sc.length = length;
  sc.sigma = sigma;
  sc.sigma_is_variance = sigma_is_variance;
  sc.ascent = to_optimizer(ascent);
  sc.fkl_fit = to_optimizer(fkl);
  sc.tvd_fit = to_optimizer(tvd);
  sc.tvd_fit.init = InitRandom{0, tvd.init_stddev};
  sc.tvd_fit.trace_stride = 500;
  sc.tvd_fit.threads = threads;
  sc.compute_references = references;
  sc.warm_start = warm_start;
  sc.warm_from_lambda = warm_from_lambda;
  sc.top_k = top_k;
  return sc;
}

}  // namespace klgeo
