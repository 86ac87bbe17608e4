#include "lmd/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace lmd {
namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

KeyValueFile KeyValueFile::parse(const std::string& text) {
  KeyValueFile f;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty())
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": empty key");
    f.kv_[key] = trim(line.substr(eq + 1));
  }
  return f;
}

KeyValueFile KeyValueFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string KeyValueFile::serialize() const {
  std::string out;
  for (const auto& [k, v] : kv_) out += k + " = " + v + "\n";
  return out;
}

void KeyValueFile::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("config: cannot write " + path);
  out << serialize();
}

bool KeyValueFile::has(const std::string& key) const {
  return kv_.count(key) != 0;
}

std::string KeyValueFile::get(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end())
    throw std::runtime_error("config: missing key '" + key + "'");
  return it->second;
}

std::string KeyValueFile::get(const std::string& key,
                              const std::string& fallback) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? fallback : it->second;
}

double KeyValueFile::get_double(const std::string& key, double fallback) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw std::runtime_error("config: key '" + key + "' is not a number: " +
                             it->second);
  }
}

int KeyValueFile::get_int(const std::string& key, int fallback) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  try {
    return std::stoi(it->second);
  } catch (const std::exception&) {
    throw std::runtime_error("config: key '" + key + "' is not an integer: " +
                             it->second);
  }
}

void KeyValueFile::set(const std::string& key, const std::string& value) {
  kv_[key] = value;
}

void KeyValueFile::set_double(const std::string& key, double value) {
  kv_[key] = fmt_double(value);
}

void KeyValueFile::set_int(const std::string& key, int value) {
  kv_[key] = std::to_string(value);
}

PipelineConfig PipelineConfig::from_file(const std::string& path) {
  return from_kv(KeyValueFile::load(path));
}

PipelineConfig PipelineConfig::from_kv(const KeyValueFile& kv) {
  PipelineConfig c;
  c.H = kv.get_int("grid.H", c.H);
  c.W = kv.get_int("grid.W", c.W);
  c.dx = kv.get_double("grid.dx", c.dx);
  c.interface_row = kv.get_int("grid.interface_row", c.interface_row);
  c.noise_amp = kv.get_double("grid.noise_amp", c.noise_amp);
  c.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<int>(c.seed)));
  if (kv.has("generate.concentrations")) {
    c.concentrations.clear();
    std::stringstream ss(kv.get("generate.concentrations"));
    std::string tok;
    while (std::getline(ss, tok, ','))
      c.concentrations.push_back(std::stod(tok));
  }
  c.n_steps = kv.get_int("generate.n_steps", c.n_steps);
  c.output_every = kv.get_int("generate.output_every", c.output_every);

  auto& p = c.physics;
  p.M_phi = kv.get_double("physics.M_phi", p.M_phi);
  p.eta = kv.get_double("physics.eta", p.eta);
  p.eps2 = kv.get_double("physics.eps2", p.eps2);
  p.W_dw = kv.get_double("physics.W_dw", p.W_dw);
  p.kappa_c = kv.get_double("physics.kappa_c", p.kappa_c);
  p.RT_v = kv.get_double("physics.RT_v", p.RT_v);
  p.omega_solid_AC = kv.get_double("physics.omega_solid_AC", p.omega_solid_AC);
  p.omega_solid_BC = kv.get_double("physics.omega_solid_BC", p.omega_solid_BC);
  p.omega_solid_AB = kv.get_double("physics.omega_solid_AB", p.omega_solid_AB);
  p.omega_liquid_AC = kv.get_double("physics.omega_liquid_AC", p.omega_liquid_AC);
  p.omega_liquid_BC = kv.get_double("physics.omega_liquid_BC", p.omega_liquid_BC);
  p.omega_liquid_AB = kv.get_double("physics.omega_liquid_AB", p.omega_liquid_AB);
  p.M_S = kv.get_double("physics.M_S", p.M_S);
  p.M_L = kv.get_double("physics.M_L", p.M_L);
  p.clip_delta = kv.get_double("physics.clip_delta", p.clip_delta);
  c.safety = kv.get_double("solver.safety", c.safety);

  c.unet.levels = kv.get_int("unet.levels", c.unet.levels);
  c.unet.base_channels = kv.get_int("unet.base_channels", c.unet.base_channels);
  c.unet.attention_in_bottleneck =
      kv.get_int("unet.attention", c.unet.attention_in_bottleneck ? 1 : 0) != 0;
  c.k_min = kv.get_int("train.k_min", c.k_min);
  c.k_max = kv.get_int("train.k_max", c.k_max);
  c.train.learning_rate = kv.get_double("train.lr", c.train.learning_rate);
  c.train.epochs = kv.get_int("train.epochs", c.train.epochs);
  c.train.batch_size = kv.get_int("train.batch_size", c.train.batch_size);
  c.train.seed = static_cast<std::uint64_t>(
      kv.get_int("train.seed", static_cast<int>(c.train.seed)));
  c.unet.cond_range.dtau_min = c.k_min;
  c.unet.cond_range.dtau_max = c.k_max;
  if (!c.concentrations.empty()) {
    double lo = c.concentrations.front(), hi = c.concentrations.front();
    for (double v : c.concentrations) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    c.unet.cond_range.ca_min = std::min(lo, 0.2);
    c.unet.cond_range.ca_max = std::max(hi, 0.4);
  }

  c.rollout_steps = kv.get_int("rollout.steps", c.rollout_steps);
  c.warm_start_time = kv.get_double("rollout.warm_start_time", c.warm_start_time);
  c.margin_rows = kv.get_int("rollout.margin_rows", c.margin_rows);
  c.grow_rows = kv.get_int("rollout.grow_rows", c.grow_rows);
  c.max_height = kv.get_int("rollout.max_height", c.max_height);
  return c;
}

KeyValueFile PipelineConfig::to_kv() const {
  KeyValueFile kv;
  kv.set_int("grid.H", H);
  kv.set_int("grid.W", W);
  kv.set_double("grid.dx", dx);
  kv.set_int("grid.interface_row", interface_row);
  kv.set_double("grid.noise_amp", noise_amp);
  kv.set_int("seed", static_cast<int>(seed));
  std::string cs;
  for (std::size_t i = 0; i < concentrations.size(); ++i) {
    if (i) cs += ",";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", concentrations[i]);
    cs += buf;
  }
  kv.set("generate.concentrations", cs);
  kv.set_int("generate.n_steps", n_steps);
  kv.set_int("generate.output_every", output_every);
  kv.set_double("physics.M_phi", physics.M_phi);
  kv.set_double("physics.eta", physics.eta);
  kv.set_double("physics.eps2", physics.eps2);
  kv.set_double("physics.W_dw", physics.W_dw);
  kv.set_double("physics.kappa_c", physics.kappa_c);
  kv.set_double("physics.RT_v", physics.RT_v);
  kv.set_double("physics.omega_solid_AC", physics.omega_solid_AC);
  kv.set_double("physics.omega_solid_BC", physics.omega_solid_BC);
  kv.set_double("physics.omega_solid_AB", physics.omega_solid_AB);
  kv.set_double("physics.omega_liquid_AC", physics.omega_liquid_AC);
  kv.set_double("physics.omega_liquid_BC", physics.omega_liquid_BC);
  kv.set_double("physics.omega_liquid_AB", physics.omega_liquid_AB);
  kv.set_double("physics.M_S", physics.M_S);
  kv.set_double("physics.M_L", physics.M_L);
  kv.set_double("physics.clip_delta", physics.clip_delta);
  kv.set_double("solver.safety", safety);
  kv.set_int("unet.levels", unet.levels);
  kv.set_int("unet.base_channels", unet.base_channels);
  kv.set_int("unet.attention", unet.attention_in_bottleneck ? 1 : 0);
  kv.set_int("train.k_min", k_min);
  kv.set_int("train.k_max", k_max);
  kv.set_double("train.lr", train.learning_rate);
  kv.set_int("train.epochs", train.epochs);
  kv.set_int("train.batch_size", train.batch_size);
  kv.set_int("train.seed", static_cast<int>(train.seed));
  kv.set_int("rollout.steps", rollout_steps);
  kv.set_double("rollout.warm_start_time", warm_start_time);
  kv.set_int("rollout.margin_rows", margin_rows);
  kv.set_int("rollout.grow_rows", grow_rows);
  kv.set_int("rollout.max_height", max_height);
  return kv;
}

}  // namespace lmd
