// Command-line front end: synth / reconstruct / train / sweep.
//
// Exit codes: 0 success, 2 usage error, 3 validation error, 4 numerical
// failure.  Every command writes a run manifest with input/output digests.

#include <chrono>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tse/augment.hpp"
#include "tse/baselines.hpp"
#include "tse/checkpoint.hpp"
#include "tse/eval.hpp"
#include "tse/flatcfg.hpp"
#include "tse/grid.hpp"
#include "tse/io.hpp"
#include "tse/manifest.hpp"
#include "tse/synth.hpp"

namespace fs = std::filesystem;
using namespace tse;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split_list(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  size_t at = 0;
  while (at <= s.size()) {
    size_t e = s.find(sep, at);
    if (e == std::string::npos) e = s.size();
    std::string part = s.substr(at, e - at);
    if (!part.empty()) out.push_back(part);
    at = e + 1;
  }
  return out;
}

std::vector<double> parse_p_list(const std::string& s) {
  std::vector<double> out;
  if (s.find(':') != std::string::npos) {
    auto parts = split_list(s, ':');
    if (parts.size() != 3) throw UsageError("--p range must be first:last:step");
    double a = std::stod(parts[0]), b = std::stod(parts[1]), st = std::stod(parts[2]);
    if (st <= 0) throw UsageError("--p step must be positive");
    for (double v = a; v <= b + 1e-9; v += st) out.push_back(v);
  } else {
    for (const std::string& part : split_list(s)) out.push_back(std::stod(part));
  }
  if (out.empty()) throw UsageError("--p list is empty");
  return out;
}

GridSpec spec_from_grid_arg(const std::string& s) {
  auto parts = split_list(s);
  if (parts.size() != 4 && parts.size() != 6)
    throw UsageError("--grid must be t0,duration,x0,length[,dt,dx]");
  double dt = parts.size() == 6 ? std::stod(parts[4]) : 60.0;
  double dx = parts.size() == 6 ? std::stod(parts[5]) : 100.0;
  return GridSpec::make(std::stod(parts[0]), std::stod(parts[1]), std::stod(parts[2]),
                        std::stod(parts[3]), dt, dx);
}

GridSpec spec_from_traces(const std::vector<Trajectory>& trs) {
  if (trs.empty()) throw ValidationError("cannot infer a grid from zero traces");
  double t0 = trs[0].points.front().t, t1 = t0;
  double x0 = trs[0].points.front().x, x1 = x0;
  for (const Trajectory& tr : trs)
    for (const TrajectoryPoint& p : tr.points) {
      t0 = std::min(t0, p.t);
      t1 = std::max(t1, p.t);
      x0 = std::min(x0, p.x);
      x1 = std::max(x1, p.x);
    }
  if (!(t1 > t0) || !(x1 > x0))
    throw ValidationError("traces span no area; pass --grid explicitly");
  return GridSpec::make(t0, t1 - t0, x0, x1 - x0);
}

FlatCfg load_params(const std::string& path) {
  if (path.empty()) return FlatCfg{};
  return read_flatcfg(path);
}

// Shared method dispatch for reconstruct and sweep.  Neural nets are loaded
// once; when eval_scenario is set, a checkpoint is refused unless that
// scenario is on its holdout list.
struct MethodPool {
  FlatCfg params;
  std::string tranet_ckpt, cnn6_ckpt;
  std::string eval_scenario;
  RunManifest* man = nullptr;
  std::shared_ptr<nn::Net<float>> tranet, cnn6;
  CheckpointMeta tranet_meta, cnn6_meta;

  std::shared_ptr<nn::Net<float>> load(const std::string& which) {
    const bool is_tranet = which == "tranet";
    std::string path = is_tranet ? tranet_ckpt : cnn6_ckpt;
    auto& slot = is_tranet ? tranet : cnn6;
    auto& meta = is_tranet ? tranet_meta : cnn6_meta;
    if (slot) return slot;
    if (path.empty())
      throw UsageError("method '" + which + "' needs --" + which + "-checkpoint");
    slot = load_checkpoint(path, &meta);
    if (slot->desc().net != which)
      throw ValidationError("checkpoint '" + path + "' holds a " + slot->desc().net +
                            ", not a " + which);
    if (!eval_scenario.empty()) {
      bool held_out = false;
      for (const std::string& h : meta.holdout) held_out |= h == eval_scenario;
      if (!held_out)
        throw ValidationError("checkpoint '" + path +
                              "' was not trained with scenario '" + eval_scenario +
                              "' held out; refusing to evaluate on it");
    }
    if (man) man->add_input(path);
    return slot;
  }

  SweepMethod make(const std::string& name) {
    if (name == "iso") {
      IsoParams p = iso_params_from(params);
      return {name, [p](const SparseSpeedField& f) { return isotropic(f, p); }};
    }
    if (name == "asm") {
      AsmParams p = asm_params_from(params);
      return {name, [p](const SparseSpeedField& f) { return asm_reconstruct(f, p); }};
    }
    if (name == "psm") {
      PsmParams p = psm_params_from(params);
      return {name, [p](const SparseSpeedField& f) { return psm_lite(f, p); }};
    }
    if (name == "tranet" || name == "cnn6") {
      auto net = load(name);
      PatchLayout lo{net->desc().K_T, net->desc().K_X, net->desc().L_T,
                     net->desc().L_X};
      return {name, [net, lo](const SparseSpeedField& f) {
                return infer_field(*net, f, lo);
              }};
    }
    throw UsageError("unknown method '" + name + "'");
  }
};

int cmd_synth(const std::string& scenario_file, int library_n, uint64_t seed,
              const std::string& out_dir, double entry_rate, double interval_min,
              double interval_max, double noise_std, uint64_t probe_seed,
              bool probe_seed_set, bool render, RunManifest& man) {
  fs::create_directories(out_dir);
  std::vector<Scenario> scns;
  if (!scenario_file.empty()) {
    scns.push_back(read_scenario(scenario_file));
    man.add_input(scenario_file);
  } else {
    if (library_n < 1) throw UsageError("pass --scenario <file> or --library <n>");
    scns = scenario_library(library_n, seed);
  }

  nlohmann::json scn_log = nlohmann::json::array();
  for (size_t k = 0; k < scns.size(); ++k) {
    const Scenario& scn = scns[k];
    SpeedField truth = render_ground_truth(scn);
    ProbeConfig pc;
    pc.entry_rate_vph = entry_rate;
    pc.interval_min_s = interval_min;
    pc.interval_max_s = interval_max;
    pc.speed_noise_std = noise_std;
    pc.rng_seed = probe_seed_set ? Rng::derive(probe_seed, k)
                                 : Rng::derive(scn.rng_seed, 0x9b0beULL);
    std::vector<Trajectory> traces = sample_probes(truth, pc);

    fs::path base = fs::path(out_dir) / scn.name;
    write_scenario(base.string() + ".scn", scn);
    write_field_tsf(base.string() + ".truth.tsf", truth);
    write_trajectories_csv(base.string() + ".traces.csv", traces);
    man.add_output(base.string() + ".scn");
    man.add_output(base.string() + ".truth.tsf");
    man.add_output(base.string() + ".traces.csv");
    if (render) {
      write_heatmap_ppm(base.string() + ".truth.ppm", truth);
      man.add_output(base.string() + ".truth.ppm");
    }
    scn_log.push_back({{"name", scn.name},
                       {"rng_seed", scn.rng_seed},
                       {"probe_seed", pc.rng_seed},
                       {"traces", traces.size()}});
    std::cerr << "synth: " << scn.name << ": " << traces.size() << " traces\n";
  }
  man.config["library_n"] = library_n;
  man.config["seed"] = seed;
  man.config["entry_rate_vph"] = entry_rate;
  man.config["interval_s"] = {interval_min, interval_max};
  man.config["speed_noise_std"] = noise_std;
  man.config["scenarios"] = scn_log;
  return 0;
}

int cmd_reconstruct(const std::string& traces_path, const std::string& method,
                    const std::string& params_path, const std::string& scn_path,
                    const std::string& grid_arg, MethodPool& pool,
                    const std::string& out_path, const std::string& render_path,
                    RunManifest& man) {
  std::vector<Trajectory> traces = read_trajectories_csv(traces_path);
  man.add_input(traces_path);
  GridSpec spec;
  if (!scn_path.empty()) {
    spec = read_scenario(scn_path).spec;
    man.add_input(scn_path);
  } else if (!grid_arg.empty()) {
    spec = spec_from_grid_arg(grid_arg);
  } else {
    spec = spec_from_traces(traces);
  }
  if (!params_path.empty()) man.add_input(params_path);

  SparseSpeedField field = grid_traces(traces, spec);
  SweepMethod m = pool.make(method);
  SpeedField est = m.reconstruct(field);
  write_field_tsf(out_path, est);
  man.add_output(out_path);
  if (!render_path.empty()) {
    write_heatmap_ppm(render_path, est);
    man.add_output(render_path);
  }
  man.config["method"] = method;
  man.config["grid"] = {{"t0_s", spec.t0_s}, {"duration_s", spec.duration_s},
                        {"x0_m", spec.x0_m}, {"length_m", spec.length_m},
                        {"dt_s", spec.dt_s}, {"dx_m", spec.dx_m},
                        {"n_t", spec.n_t},   {"n_x", spec.n_x}};
  man.config["measured_cells"] = field.entries.size();
  return 0;
}

int cmd_train(const std::string& dir, const std::string& net_name,
              const std::string& preset, const std::string& holdout_arg,
              int epochs, int batch, double lr, int n_samples, double p_min,
              double p_max, double val_frac, uint64_t seed,
              const std::string& out_path, std::string history_path,
              RunManifest& man) {
  nn::NetDesc desc;
  if (net_name == "tranet")
    desc = preset == "paper" ? nn::tranet_paper() : nn::tranet_toy();
  else if (net_name == "cnn6")
    desc = nn::cnn6_desc();
  else
    throw UsageError("--net must be tranet or cnn6");
  if (preset != "toy" && preset != "paper") throw UsageError("--preset must be toy or paper");
  if (net_name == "cnn6" && preset == "paper")
    throw UsageError("cnn6 has no paper preset");

  std::vector<std::string> holdout = split_list(holdout_arg);
  std::vector<fs::path> scn_files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".scn") scn_files.push_back(e.path());
  std::sort(scn_files.begin(), scn_files.end());
  if (scn_files.empty())
    throw ValidationError("no .scn scenario files in '" + dir + "'");

  PatchLayout layout{desc.K_T, desc.K_X, desc.L_T, desc.L_X};
  std::vector<GriddedScenario> gridded;
  std::vector<std::string> trained_names;
  for (const fs::path& sf : scn_files) {
    Scenario scn = read_scenario(sf.string());
    bool held = false;
    for (const std::string& h : holdout) held |= h == scn.name;
    if (held) continue;
    fs::path traces_file = sf.parent_path() / (sf.stem().string() + ".traces.csv");
    if (!fs::exists(traces_file))
      throw ValidationError("missing traces file '" + traces_file.string() + "'");
    std::vector<Trajectory> traces = read_trajectories_csv(traces_file.string());
    man.add_input(sf.string());
    man.add_input(traces_file.string());
    gridded.push_back(grid_scenario(scn.name, scn.spec, traces));
    trained_names.push_back(scn.name);
  }
  if (gridded.empty())
    throw ValidationError("holdout list covers every scenario in '" + dir + "'");
  if (gridded.size() < 2)
    throw ValidationError("training needs at least 2 scenarios, have " +
                          std::to_string(gridded.size()));

  AugmentConfig acfg;
  acfg.layout = layout;
  acfg.p_min = p_min;
  acfg.p_max = p_max;
  acfg.rng_seed = Rng::derive(seed, 0xaa);
  std::cerr << "train: generating " << n_samples << " samples from "
            << gridded.size() << " scenarios\n";
  std::vector<Sample> samples = augment(gridded, n_samples, acfg);

  auto net = nn::build_net<float>(desc);
  net->glorot_init(Rng::derive(seed, 0x11));
  nn::TrainConfig tcfg;
  tcfg.epochs = epochs;
  tcfg.batch = batch;
  tcfg.lr = lr;
  tcfg.val_frac = val_frac;
  tcfg.rng_seed = Rng::derive(seed, 0x22);
  auto fill = make_fill_fn<float>(samples);
  nn::TrainResult tr = nn::train<float>(*net, fill, n_samples, tcfg,
                                        [&](int epoch, const nn::EpochStats& st) {
                                          std::cerr << "train: epoch " << epoch + 1
                                                    << "/" << epochs << " train "
                                                    << st.train_loss << " val "
                                                    << st.val_loss << "\n";
                                        });

  if (history_path.empty()) history_path = out_path + ".history.csv";
  {
    std::ofstream f(history_path);
    if (!f) throw ValidationError("cannot write '" + history_path + "'");
    f << "epoch,train_loss,val_loss\n";
    for (size_t e = 0; e < tr.history.size(); ++e)
      f << e << ',' << format_double(tr.history[e].train_loss) << ','
        << format_double(tr.history[e].val_loss) << '\n';
  }

  CheckpointMeta meta;
  meta.desc = desc;
  meta.train_info = {{"epochs", epochs},
                     {"batch", batch},
                     {"lr", lr},
                     {"n_samples", n_samples},
                     {"p_min", p_min},
                     {"p_max", p_max},
                     {"val_frac", val_frac},
                     {"best_epoch", tr.best_epoch},
                     {"best_val", tr.best_val}};
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& st : tr.history)
    hist.push_back({{"train", st.train_loss}, {"val", st.val_loss}});
  meta.train_info["history"] = hist;
  meta.trained_scenarios = trained_names;
  meta.holdout = holdout;
  meta.seed = seed;
  save_checkpoint(out_path, *net, meta);
  man.add_output(out_path);
  man.add_output(history_path);
  man.config["net"] = net_name;
  man.config["preset"] = preset;
  man.config["seed"] = seed;
  man.config["holdout"] = holdout;
  man.config["trained_scenarios"] = trained_names;
  man.config["train"] = meta.train_info;
  man.config["params"] = net->param_count(true);
  return 0;
}

int cmd_sweep(const std::string& traces_path, const std::string& scn_path,
              const std::string& methods_arg, const std::string& p_arg,
              int iterations, uint64_t seed, MethodPool& pool,
              const std::string& out_dir, RunManifest& man) {
  std::vector<Trajectory> traces = read_trajectories_csv(traces_path);
  Scenario scn = read_scenario(scn_path);
  man.add_input(traces_path);
  man.add_input(scn_path);
  pool.eval_scenario = scn.name;

  std::vector<double> p_list = parse_p_list(p_arg);
  std::vector<std::string> method_names = split_list(methods_arg);
  if (method_names.empty()) throw UsageError("--methods list is empty");
  std::vector<SweepMethod> methods;
  for (const std::string& name : method_names) methods.push_back(pool.make(name));

  SweepResult res = density_sweep(traces, scn.spec, methods, p_list, iterations, seed);

  fs::create_directories(out_dir);
  fs::path runs = fs::path(out_dir) / "runs.csv";
  fs::path summary = fs::path(out_dir) / "summary.csv";
  write_sweep_runs_csv(runs.string(), res.runs);
  write_sweep_summary_csv(summary.string(), res.summary);
  man.add_output(runs.string());
  man.add_output(summary.string());
  man.config["scenario"] = scn.name;
  man.config["methods"] = method_names;
  man.config["p"] = p_list;
  man.config["iterations"] = iterations;
  man.config["seed"] = seed;
  for (const SweepSummaryRow& r : res.summary)
    std::cerr << "sweep: " << r.method << " p=" << r.p << " imae " << r.mean
              << " +- " << r.stddev << " (n=" << r.n << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"space-time traffic speed field reconstruction toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolkitVersion);

  // synth
  auto* synth = app.add_subcommand("synth", "generate synthetic scenarios and probe traces");
  std::string sy_scenario, sy_out = "out";
  int sy_library = 0;
  uint64_t sy_seed = 1, sy_probe_seed = 0;
  double sy_rate = 600, sy_imin = 5, sy_imax = 20, sy_noise = 0.05;
  bool sy_render = false;
  synth->add_option("--scenario", sy_scenario, "scenario file to synthesize");
  synth->add_option("--library", sy_library, "generate the first n library scenarios");
  synth->add_option("--seed", sy_seed, "library seed");
  synth->add_option("--out", sy_out, "output directory")->required();
  synth->add_option("--entry-rate", sy_rate, "probe entries per hour");
  synth->add_option("--interval-min", sy_imin, "min sampling interval s");
  synth->add_option("--interval-max", sy_imax, "max sampling interval s");
  synth->add_option("--noise", sy_noise, "sampling re-timing noise std");
  auto* pseed = synth->add_option("--probe-seed", sy_probe_seed,
                                  "probe seed (default derived per scenario)");
  synth->add_flag("--render", sy_render, "also write ground-truth heatmaps");

  // reconstruct
  auto* rec = app.add_subcommand("reconstruct", "estimate a dense field from traces");
  std::string re_traces, re_method, re_params, re_scn, re_grid, re_out, re_render;
  std::string re_tranet_ckpt;
  rec->add_option("--traces", re_traces, "trajectory CSV")->required();
  rec->add_option("--method", re_method, "iso|asm|psm|tranet|cnn6")->required();
  rec->add_option("--params", re_params, "flat key=value parameter file");
  rec->add_option("--scenario", re_scn, "take the grid from this scenario file");
  rec->add_option("--grid", re_grid, "t0,duration,x0,length[,dt,dx]");
  rec->add_option("--checkpoint", re_tranet_ckpt, "checkpoint for tranet/cnn6");
  rec->add_option("--out", re_out, "output field file (.tsf)")->required();
  rec->add_option("--render", re_render, "also write a heatmap image (.ppm)");

  // train
  auto* train = app.add_subcommand("train", "train tranet or cnn6 on scenario data");
  std::string tr_dir, tr_net = "tranet", tr_preset = "toy", tr_holdout, tr_out,
              tr_history;
  int tr_epochs = 50, tr_batch = 32, tr_samples = 10000;
  double tr_lr = 1e-3, tr_pmin = 0.1, tr_pmax = 0.9, tr_valfrac = 0.1;
  uint64_t tr_seed = 1;
  train->add_option("--scenarios", tr_dir, "directory with .scn + .traces.csv pairs")
      ->required();
  train->add_option("--net", tr_net, "tranet|cnn6");
  train->add_option("--preset", tr_preset, "toy|paper");
  train->add_option("--holdout", tr_holdout, "comma list of scenario names to exclude");
  train->add_option("--epochs", tr_epochs, "training epochs");
  train->add_option("--batch", tr_batch, "batch size");
  train->add_option("--lr", tr_lr, "Adam learning rate");
  train->add_option("--samples", tr_samples, "augmented sample count");
  train->add_option("--p-min", tr_pmin, "min input trace ratio");
  train->add_option("--p-max", tr_pmax, "max input trace ratio");
  train->add_option("--val-frac", tr_valfrac, "validation fraction");
  train->add_option("--seed", tr_seed, "master seed");
  train->add_option("--out", tr_out, "output checkpoint path")->required();
  train->add_option("--history", tr_history, "history CSV path");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "data-density sweep on one scenario");
  std::string sw_traces, sw_scn, sw_methods = "iso,asm,psm", sw_p = "0.1:0.9:0.1",
              sw_params, sw_out = "sweep", sw_tranet_ckpt, sw_cnn6_ckpt;
  int sw_iter = 20;
  uint64_t sw_seed = 1;
  sweep->add_option("--traces", sw_traces, "trajectory CSV")->required();
  sweep->add_option("--scenario", sw_scn, "scenario file (grid + leakage guard)")
      ->required();
  sweep->add_option("--methods", sw_methods, "comma list of methods");
  sweep->add_option("--p", sw_p, "p values, list or first:last:step");
  sweep->add_option("--iterations", sw_iter, "splits per p");
  sweep->add_option("--seed", sw_seed, "sweep seed");
  sweep->add_option("--params", sw_params, "flat parameter file for baselines");
  sweep->add_option("--tranet-checkpoint", sw_tranet_ckpt, "tranet checkpoint");
  sweep->add_option("--cnn6-checkpoint", sw_cnn6_ckpt, "cnn6 checkpoint");
  sweep->add_option("--out", sw_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  RunManifest man;
  for (int i = 0; i < argc; ++i) man.argv.push_back(argv[i]);
  auto start = std::chrono::steady_clock::now();
  std::string manifest_path;
  try {
    if (*synth) {
      man.command = "synth";
      manifest_path = (fs::path(sy_out) / "manifest.json").string();
      cmd_synth(sy_scenario, sy_library, sy_seed, sy_out, sy_rate, sy_imin, sy_imax,
                sy_noise, sy_probe_seed, pseed->count() > 0, sy_render, man);
    } else if (*rec) {
      man.command = "reconstruct";
      manifest_path = re_out + ".manifest.json";
      MethodPool pool;
      pool.params = load_params(re_params);
      pool.tranet_ckpt = re_tranet_ckpt;
      pool.cnn6_ckpt = re_tranet_ckpt;  // one flag serves either net
      pool.man = &man;
      cmd_reconstruct(re_traces, re_method, re_params, re_scn, re_grid, pool, re_out,
                      re_render, man);
    } else if (*train) {
      man.command = "train";
      manifest_path = tr_out + ".manifest.json";
      cmd_train(tr_dir, tr_net, tr_preset, tr_holdout, tr_epochs, tr_batch, tr_lr,
                tr_samples, tr_pmin, tr_pmax, tr_valfrac, tr_seed, tr_out, tr_history,
                man);
    } else if (*sweep) {
      man.command = "sweep";
      manifest_path = (fs::path(sw_out) / "manifest.json").string();
      MethodPool pool;
      pool.params = load_params(sw_params);
      pool.tranet_ckpt = sw_tranet_ckpt;
      pool.cnn6_ckpt = sw_cnn6_ckpt;
      pool.man = &man;
      if (!sw_params.empty()) man.add_input(sw_params);
      cmd_sweep(sw_traces, sw_scn, sw_methods, sw_p, sw_iter, sw_seed, pool, sw_out,
                man);
    }
    man.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                     .count();
    man.write(manifest_path);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
