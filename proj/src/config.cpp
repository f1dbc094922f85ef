#include "ymloop/config.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace ymloop {

std::string to_string(Command c) {
  switch (c) {
    case Command::verify: return "verify";
    case Command::sample: return "sample";
    case Command::enumerate: return "enumerate";
    case Command::oracle: return "oracle";
    case Command::check_sde: return "check-sde";
  }
  return "?";
}

Command parse_command(const std::string& text) {
  for (Command c : {Command::verify, Command::sample, Command::enumerate, Command::oracle, Command::check_sde})
    if (to_string(c) == text) return c;
  throw ConfigError("unknown command '" + text + "' (expected verify, sample, enumerate, oracle or check-sde)");
}

ChainConfig RunConfig::chain(Scheme s, double beta) const {
  ChainConfig c;
  c.scheme = s;
  c.step = s == Scheme::langevin ? langevin_step : proposal_scale;
  if (c.step <= 0.0) c.step = c.resolved_step(group_spec(), beta);
  c.burn_in = burn_in;
  c.n_samples = n_samples;
  c.thinning = thinning;
  c.seed = seed;
  c.n_chains = n_chains;
  c.batches = batches;
  return c;
}

ChainConfig RunConfig::chain(double beta) const { return chain(scheme, beta); }

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "command",   "group",      "n",         "beta",           "dim",      "lo",          "hi",
      "loops",     "scheme",     "langevin_step", "proposal_scale", "burn_in", "n_samples", "thinning",
      "seed",      "n_chains",   "batches",   "seeds",          "extrapolate", "n_sigma",  "n_points",
      "gauge_root", "sde_samples", "magic_pairs", "sde_h",       "output",   "csv"};
  return keys;
}

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(text);
  while (std::getline(is, item, sep)) out.push_back(trim(item));
  if (!text.empty() && text.back() == sep) out.emplace_back();
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, value);
  if (res.ec != std::errc() || res.ptr != end) throw ConfigError("key '" + key + "': cannot parse '" + text + "'");
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) throw ConfigError("key '" + key + "': value must be finite");
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("key '" + key + "': expected true or false, got '" + text + "'");
}

Coords parse_coords(const std::string& key, const std::string& text) {
  Coords c;
  for (const auto& item : split_list(text, ',')) c.push_back(parse_number<int>(key, item));
  return c;
}

std::string join_coords(const Coords& c) {
  std::string out;
  for (std::size_t i = 0; i < c.size(); ++i) out += (i ? "," : "") + std::to_string(c[i]);
  return out;
}

}  // namespace

std::map<std::string, std::string> parse_key_values(std::string_view text) {
  std::map<std::string, std::string> out;
  std::istringstream is{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value', got '" + body + "'");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    const auto& keys = config_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (!out.emplace(key, value).second)
      throw ConfigError("line " + std::to_string(lineno) + ": key '" + key + "' given twice");
  }
  return out;
}

RunConfig make_config(const std::map<std::string, std::string>& values) {
  RunConfig c;
  const auto& keys = config_keys();
  for (const auto& [key, v] : values) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) throw ConfigError("unknown key '" + key + "'");
    try {
      if (key == "command") c.command = parse_command(v);
      else if (key == "group") c.group = parse_group_kind(v);
      else if (key == "n") c.n = parse_number<int>(key, v);
      else if (key == "beta") {
        c.betas.clear();
        for (const auto& b : split_list(v, ',')) c.betas.push_back(parse_number<double>(key, b));
      } else if (key == "dim") c.dim = parse_number<int>(key, v);
      else if (key == "lo") c.lo = parse_coords(key, v);
      else if (key == "hi") c.hi = parse_coords(key, v);
      else if (key == "loops") c.sequences = split_list(v, '|');
      else if (key == "scheme") c.scheme = parse_scheme(v);
      else if (key == "langevin_step") c.langevin_step = parse_number<double>(key, v);
      else if (key == "proposal_scale") c.proposal_scale = parse_number<double>(key, v);
      else if (key == "burn_in") c.burn_in = parse_number<int>(key, v);
      else if (key == "n_samples") c.n_samples = parse_number<long>(key, v);
      else if (key == "thinning") c.thinning = parse_number<int>(key, v);
      else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, v);
      else if (key == "n_chains") c.n_chains = parse_number<int>(key, v);
      else if (key == "batches") c.batches = parse_number<int>(key, v);
      else if (key == "seeds") c.seeds = parse_number<int>(key, v);
      else if (key == "extrapolate") c.extrapolate = parse_bool(key, v);
      else if (key == "n_sigma") c.n_sigma = parse_number<double>(key, v);
      else if (key == "n_points") c.n_points = parse_number<int>(key, v);
      else if (key == "gauge_root") c.gauge_root = parse_number<int>(key, v);
      else if (key == "sde_samples") c.sde_samples = parse_number<long>(key, v);
      else if (key == "magic_pairs") c.magic_pairs = parse_number<int>(key, v);
      else if (key == "sde_h") c.sde_h = parse_number<double>(key, v);
      else if (key == "output") c.output = v;
      else if (key == "csv") c.csv = v;
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError("key '" + key + "': " + e.what());
    }
  }

  // validation
  try {
    c.group_spec();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("group: ") + e.what());
  }
  if (c.betas.empty()) throw ConfigError("beta: need at least one value");
  if (c.dim < 2) throw ConfigError("dim: must be >= 2");
  if (static_cast<int>(c.lo.size()) != c.dim || static_cast<int>(c.hi.size()) != c.dim)
    throw ConfigError("lo/hi: need exactly dim coordinates");
  std::optional<Lattice> lat;
  try {
    lat.emplace(c.lattice());
  } catch (const std::exception& e) {
    throw ConfigError(std::string("lattice: ") + e.what());
  }
  if (c.sequences.empty()) throw ConfigError("loops: need at least one loop sequence");
  for (const auto& text : c.sequences) {
    LoopSequence s;
    try {
      s = parse_sequence(*lat, text);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("loops: ") + e.what());
    }
    if ((c.command == Command::verify || c.command == Command::enumerate) && !is_padded(s, *lat))
      throw ConfigError("loops: '" + text + "' is not padded in the box (some vertex at distance 1 lies outside)");
  }
  if (!(c.langevin_step > 0.0)) throw ConfigError("langevin_step: must be > 0");
  try {
    for (double b : c.betas) {
      c.chain(Scheme::metropolis, b).validate();
      c.chain(Scheme::langevin, b).validate();
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("sampler: ") + e.what());
  }
  if (c.seeds < 1) throw ConfigError("seeds: must be >= 1");
  if (!(c.n_sigma > 0.0)) throw ConfigError("n_sigma: must be > 0");
  if (c.n_points < 8) throw ConfigError("n_points: must be >= 8");
  if (c.gauge_root < 0 || c.gauge_root >= lat->num_vertices()) throw ConfigError("gauge_root: not a vertex id");
  if (c.command == Command::oracle && !(c.group == GroupKind::U && c.n == 1))
    throw ConfigError("oracle: only available for group = U, n = 1");
  if (c.sde_samples < 10000) throw ConfigError("sde_samples: must be >= 10000");
  if (c.magic_pairs < 1) throw ConfigError("magic_pairs: must be >= 1");
  if (!(c.sde_h > 0.0)) throw ConfigError("sde_h: must be > 0");
  if (c.output.empty()) throw ConfigError("output: empty path (use - for stdout)");
  return c;
}

RunConfig parse_config(std::string_view text) { return make_config(parse_key_values(text)); }

std::map<std::string, std::string> to_key_values(const RunConfig& c) {
  std::map<std::string, std::string> m;
  m["command"] = to_string(c.command);
  m["group"] = to_string(c.group);
  m["n"] = std::to_string(c.n);
  std::string betas;
  for (std::size_t i = 0; i < c.betas.size(); ++i) betas += (i ? "," : "") + format_double(c.betas[i]);
  m["beta"] = betas;
  m["dim"] = std::to_string(c.dim);
  m["lo"] = join_coords(c.lo);
  m["hi"] = join_coords(c.hi);
  std::string loops;
  for (std::size_t i = 0; i < c.sequences.size(); ++i) loops += (i ? " | " : "") + c.sequences[i];
  m["loops"] = loops;
  m["scheme"] = to_string(c.scheme);
  m["langevin_step"] = format_double(c.langevin_step);
  m["proposal_scale"] = format_double(c.proposal_scale);
  m["burn_in"] = std::to_string(c.burn_in);
  m["n_samples"] = std::to_string(c.n_samples);
  m["thinning"] = std::to_string(c.thinning);
  m["seed"] = std::to_string(c.seed);
  m["n_chains"] = std::to_string(c.n_chains);
  m["batches"] = std::to_string(c.batches);
  m["seeds"] = std::to_string(c.seeds);
  m["extrapolate"] = c.extrapolate ? "true" : "false";
  m["n_sigma"] = format_double(c.n_sigma);
  m["n_points"] = std::to_string(c.n_points);
  m["gauge_root"] = std::to_string(c.gauge_root);
  m["sde_samples"] = std::to_string(c.sde_samples);
  m["magic_pairs"] = std::to_string(c.magic_pairs);
  m["sde_h"] = format_double(c.sde_h);
  m["output"] = c.output;
  m["csv"] = c.csv;
  return m;
}

std::string to_config_text(const RunConfig& c) {
  const auto m = to_key_values(c);
  std::string out;
  for (const auto& key : config_keys()) out += key + " = " + m.at(key) + "\n";
  return out;
}

}  // namespace ymloop
