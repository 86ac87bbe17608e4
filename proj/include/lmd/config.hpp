#pragma once
// Flat key = value configuration file ('#' comments), plus the typed
// pipeline configuration assembled from it.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lmd/field.hpp"
#include "lmd/solver.hpp"
#include "lmd/unet.hpp"

namespace lmd {

class KeyValueFile {
 public:
  static KeyValueFile parse(const std::string& text);
  static KeyValueFile load(const std::string& path);
  std::string serialize() const;
  void save(const std::string& path) const;

  bool has(const std::string& key) const;
  std::string get(const std::string& key) const;  // throws if missing
  std::string get(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;

  void set(const std::string& key, const std::string& value);
  void set_double(const std::string& key, double value);
  void set_int(const std::string& key, int value);

  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
};

// Everything the pipeline commands need, with desk-scale defaults.
struct PipelineConfig {
  // grid / initial condition
  int H = 64, W = 64;
  double dx = 1.0;
  int interface_row = 16;
  double noise_amp = 0.02;
  std::uint64_t seed = 1;
  // generation protocol
  std::vector<double> concentrations = {0.2, 0.3, 0.4};
  int n_steps = 20000;
  int output_every = 1000;
  // solver
  PhysicsParams physics;
  double safety = 0.05;
  // surrogate
  UNetConfig unet;
  TrainConfig train;
  int k_min = 1, k_max = 4;
  // rollout
  int rollout_steps = 24;
  double warm_start_time = 0.0;
  int margin_rows = 8, grow_rows = 16, max_height = 1024;

  static PipelineConfig from_file(const std::string& path);
  static PipelineConfig from_kv(const KeyValueFile& kv);
  KeyValueFile to_kv() const;
};

}  // namespace lmd
