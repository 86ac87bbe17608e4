// Command-line driver for the dealloying pipeline:
// generate -> train -> rollout -> analyze -> compare, plus render/bench.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lmd/config.hpp"
#include "lmd/field.hpp"
#include "lmd/io.hpp"
#include "lmd/qoi.hpp"
#include "lmd/rollout.hpp"
#include "lmd/simd/dispatch.hpp"
#include "lmd/solver.hpp"
#include "lmd/unet.hpp"

namespace fs = std::filesystem;
using namespace lmd;

namespace {

std::vector<std::string> list_snapshots(const std::string& dir) {
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".lmdf")
      files.push_back(e.path().string());
  std::sort(files.begin(), files.end());
  if (files.empty())
    throw std::runtime_error("no .lmdf snapshots in " + dir);
  return files;
}

std::string snap_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "snap_%05d.lmdf", i);
  return buf;
}

int cmd_generate(const std::string& config_path, const std::string& out_dir) {
  const PipelineConfig cfg = PipelineConfig::from_file(config_path);
  fs::create_directories(out_dir);
  KeyValueFile manifest;
  manifest.set_int("n_trajectories", static_cast<int>(cfg.concentrations.size()));
  manifest.set_int("r0", cfg.interface_row);
  manifest.set_int("output_every", cfg.output_every);
  for (std::size_t t = 0; t < cfg.concentrations.size(); ++t) {
    const double ca = cfg.concentrations[t];
    SolverConfig scfg;
    scfg.safety = cfg.safety;
    scfg.output_every = cfg.output_every;
    scfg.cA_ref = ca;
    FieldState s0 = initial_state(cfg.H, cfg.W, cfg.dx, ca, cfg.interface_row,
                                  cfg.noise_amp, cfg.seed + t);
    auto snaps = run(s0, cfg.physics, scfg, cfg.n_steps);
    const std::string tdir = out_dir + "/traj_" + std::to_string(t);
    fs::create_directories(tdir);
    for (std::size_t i = 0; i < snaps.size(); ++i)
      write_snapshot(snaps[i], tdir + "/" + snap_name(static_cast<int>(i)), ca);
    manifest.set_double("traj." + std::to_string(t) + ".cA_ref", ca);
    manifest.set_int("traj." + std::to_string(t) + ".snapshots",
                     static_cast<int>(snaps.size()));
    std::cout << "trajectory " << t << " (cA_ref=" << ca << "): "
              << snaps.size() << " snapshots\n";
  }
  manifest.save(out_dir + "/manifest.txt");
  return 0;
}

int cmd_train(const std::string& data_dir, const std::string& config_path,
              const std::string& out_ckpt) {
  const PipelineConfig cfg = PipelineConfig::from_file(config_path);
  const KeyValueFile manifest = KeyValueFile::load(data_dir + "/manifest.txt");
  const int n_traj = manifest.get_int("n_trajectories", 0);
  if (n_traj < 1) throw std::invalid_argument("train: no trajectories in manifest");

  std::vector<Trajectory> trajs;
  for (int t = 0; t < n_traj; ++t) {
    Trajectory tr;
    tr.cA_ref =
        manifest.get_double("traj." + std::to_string(t) + ".cA_ref", 0.0);
    for (const auto& f : list_snapshots(data_dir + "/traj_" + std::to_string(t)))
      tr.snaps.push_back(read_snapshot(f));
    trajs.push_back(std::move(tr));
  }
  Dataset ds = training_pairs(trajs, cfg.k_min, cfg.k_max);
  std::cout << "dataset: " << ds.pairs.size() << " pairs from " << n_traj
            << " trajectories\n";

  UNet net(cfg.unet);
  net.init_weights(cfg.train.seed);
  const auto history = train(net, ds, cfg.train);
  save_checkpoint(net, out_ckpt);

  std::ofstream loss(out_ckpt + ".loss.csv");
  loss << "epoch,loss\n";
  for (std::size_t i = 0; i < history.size(); ++i) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%zu,%.9g\n", i, history[i]);
    loss << buf;
  }
  std::cout << "final epoch loss: " << history.back() << "\n";
  return 0;
}

int cmd_rollout(const std::string& ckpt, const std::string& init_snap,
                int steps, double dtau, double ca, const std::string& out_dir,
                double warm, const std::string& config_path) {
  PipelineConfig cfg;
  if (!config_path.empty()) cfg = PipelineConfig::from_file(config_path);
  auto net = load_checkpoint(ckpt);
  FieldState state = read_snapshot(init_snap);

  if (warm > 0.0) {
    SolverConfig scfg;
    scfg.safety = cfg.safety;
    scfg.cA_ref = ca;
    state = warm_start(state, cfg.physics, scfg, warm);
  }
  RolloutConfig rc;
  rc.n_steps = steps;
  rc.theta = {dtau, ca};
  rc.margin_rows = cfg.margin_rows;
  rc.grow_rows = cfg.grow_rows;
  rc.max_height = cfg.max_height;
  // physical time per surrogate step: dtau snapshot units of the solver
  rc.dtau_time = dtau * cfg.output_every *
                 stable_dt(cfg.physics, state.dx, cfg.safety);

  auto states = rollout(*net, state, rc);
  fs::create_directories(out_dir);
  for (std::size_t i = 0; i < states.size(); ++i)
    write_snapshot(states[i], out_dir + "/" + snap_name(static_cast<int>(i)),
                   ca);
  std::cout << "rollout: " << states.size() << " states, final height "
            << states.back().H << "\n";
  return 0;
}

int cmd_analyze(const std::string& traj_dir, int r0, const std::string& out) {
  std::vector<FieldState> states;
  for (const auto& f : list_snapshots(traj_dir))
    states.push_back(read_snapshot(f));
  write_qoi_csv(qoi_series(states, r0), out);
  std::cout << "analyzed " << states.size() << " snapshots -> " << out << "\n";
  return 0;
}

int cmd_compare(const std::string& pred, const std::string& ref,
                const std::string& out) {
  const auto errors = qoi_errors(read_qoi_csv(pred), read_qoi_csv(ref));
  std::ofstream f(out);
  if (!f) throw std::runtime_error("compare: cannot open " + out);
  f << "qoi,relative_l2\n";
  for (const auto& [name, err] : errors) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%s,%.9g\n", name.c_str(), err);
    f << buf;
    std::cout << name << ": " << err << "\n";
  }
  return 0;
}

int cmd_bench(const std::string& ckpt, const std::string& config_path) {
  const PipelineConfig cfg = PipelineConfig::from_file(config_path);
  auto net = load_checkpoint(ckpt);

  FieldState s0 = initial_state(cfg.H, cfg.W, cfg.dx, cfg.concentrations[0],
                                cfg.interface_row, cfg.noise_amp, cfg.seed);
  SolverConfig scfg;
  scfg.safety = cfg.safety;
  scfg.cA_ref = cfg.concentrations[0];

  using clock = std::chrono::steady_clock;
  // solver cost per step, measured over a short burst
  const int burst = 50;
  FieldState cur = s0;
  const auto t0 = clock::now();
  for (int i = 0; i < burst; ++i) cur = step(cur, cfg.physics, scfg);
  const double solver_per_step =
      std::chrono::duration<double>(clock::now() - t0).count() / burst;

  // surrogate cost per forward pass over the same grid
  const ConditioningInput theta{static_cast<double>(cfg.k_max),
                                cfg.concentrations[0]};
  Tensor4 x = to_tensor(cur);
  (void)net->forward(x, theta);  // warm-up
  const int reps = 5;
  const auto t1 = clock::now();
  for (int i = 0; i < reps; ++i) (void)net->forward(x, theta);
  const double surrogate_per_step =
      std::chrono::duration<double>(clock::now() - t1).count() / reps;

  // one surrogate step spans k_max snapshots of output_every solver steps
  const double solver_span =
      solver_per_step * cfg.k_max * cfg.output_every;
  const double speedup = solver_span / surrogate_per_step;
  std::printf("solver: %.3e s/step, surrogate: %.3e s/pass\n", solver_per_step,
              surrogate_per_step);
  std::printf("same-physical-time speedup: %.1fx\n", speedup);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"liquid-metal dealloying surrogate pipeline"};
  app.require_subcommand(1);
  int threads = 1;
  app.add_option("--threads", threads, "parallelism cap (single-threaded build)");

  std::string config_path, out_path, data_dir, ckpt, init_snap, traj_dir,
      pred_csv, ref_csv, snapshot_path;
  int steps = 24, r0 = 16;
  double dtau = 1.0, ca = 0.2, warm = 0.0;

  auto* gen = app.add_subcommand("generate", "run the solver, write snapshots");
  gen->add_option("--config", config_path)->required();
  gen->add_option("--out", out_path)->required();

  auto* tr = app.add_subcommand("train", "train the surrogate");
  tr->add_option("--data", data_dir)->required();
  tr->add_option("--config", config_path)->required();
  tr->add_option("--out", out_path)->required();

  auto* ro = app.add_subcommand("rollout", "autoregressive surrogate rollout");
  ro->add_option("--ckpt", ckpt)->required();
  ro->add_option("--init", init_snap)->required();
  ro->add_option("--steps", steps)->required();
  ro->add_option("--dtau", dtau)->required();
  ro->add_option("--ca", ca)->required();
  ro->add_option("--out", out_path)->required();
  ro->add_option("--warm", warm);
  ro->add_option("--config", config_path);

  auto* an = app.add_subcommand("analyze", "extract QoI series");
  an->add_option("--traj", traj_dir)->required();
  an->add_option("--r0", r0)->required();
  an->add_option("--out", out_path)->required();

  auto* cp = app.add_subcommand("compare", "per-QoI relative L2 table");
  cp->add_option("--pred", pred_csv)->required();
  cp->add_option("--ref", ref_csv)->required();
  cp->add_option("--out", out_path)->required();

  auto* re = app.add_subcommand("render", "render a snapshot to PNG");
  re->add_option("--snapshot", snapshot_path)->required();
  re->add_option("--out", out_path)->required();

  auto* be = app.add_subcommand("bench", "surrogate vs solver wall clock");
  be->add_option("--ckpt", ckpt)->required();
  be->add_option("--config", config_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return cmd_generate(config_path, out_path);
    if (tr->parsed()) return cmd_train(data_dir, config_path, out_path);
    if (ro->parsed())
      return cmd_rollout(ckpt, init_snap, steps, dtau, ca, out_path, warm,
                         config_path);
    if (an->parsed()) return cmd_analyze(traj_dir, r0, out_path);
    if (cp->parsed()) return cmd_compare(pred_csv, ref_csv, out_path);
    if (re->parsed()) {
      render_field(read_snapshot(snapshot_path), out_path);
      std::cout << "wrote " << out_path << "\n";
      return 0;
    }
    if (be->parsed()) return cmd_bench(ckpt, config_path);
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
