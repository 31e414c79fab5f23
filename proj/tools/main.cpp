// Command-line surface: simulate / mask / recon / eval / ablate / sweep /
// export. Every run writes a manifest listing its outputs; identical configs
// and seeds produce byte-identical arrays.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "inrecon/acquire.hpp"
#include "inrecon/core.hpp"
#include "inrecon/eval.hpp"
#include "inrecon/io.hpp"
#include "inrecon/unroll.hpp"
#include "inrecon/version.hpp"

namespace fs = std::filesystem;
using namespace inrecon;
using nlohmann::json;

namespace {

struct RunDir {
  fs::path dir;
  json manifest;
  std::vector<std::string> outputs;

  RunDir(const std::string &command, const std::string &fingerprint, const std::string &override_dir) {
    dir = override_dir.empty() ? fs::path(default_output_root()) / (command + "-" + fingerprint)
                               : fs::path(override_dir);
    fs::create_directories(dir);
    manifest["toolkit_version"] = kVersion;
    manifest["command"] = command;
    manifest["fingerprint"] = fingerprint;
    manifest["created_utc"] = now_iso8601_utc();
    manifest["inputs"] = json::array();
    manifest["outputs"] = json::array();
  }

  std::string path(const std::string &name) {
    outputs.push_back(name);
    return (dir / name).string();
  }

  void add_input(const std::string &p) { manifest["inputs"].push_back(p); }

  void finish() {
    for (const std::string &o : outputs) manifest["outputs"].push_back(o);
    manifest["outputs"].push_back("manifest.json");
    manifest["finished_utc"] = now_iso8601_utc();
    write_text_atomic((dir / "manifest.json").string(), manifest.dump(2) + "\n");
    std::cout << "run directory: " << dir.string() << "\n";
  }
};

std::string fingerprint_of(const RunConfig &cfg) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical_config_string(cfg))));
  return buf;
}

StoredArray mask_to_array(const SamplingMask &mask) {
  std::vector<double> values(mask.sampled.begin(), mask.sampled.end());
  return from_real_grid(mask.height, mask.width, values);
}

ComplexGrid mask_to_grid(const SamplingMask &mask) {
  ComplexGrid g(mask.height, mask.width);
  for (size_t i = 0; i < g.data.size(); ++i) g.data[i] = static_cast<double>(mask.sampled[i]);
  return g;
}

// data files (when given) override the simulated scenario
struct ReconInputs {
  MultiCoilKspace y;
  AcquisitionModel model;
  std::optional<ComplexGrid> reference;
};

ReconInputs prepare_inputs(const RunConfig &cfg, RunDir &run) {
  ReconInputs in;
  if (!cfg.data_kspace.empty()) {
    if (cfg.data_mask.empty())
      throw std::invalid_argument("config: data.mask is required when data.kspace is set");
    run.add_input(cfg.data_kspace);
    run.add_input(cfg.data_mask);
    in.y.coils = read_array(cfg.data_kspace).to_stack();
    StoredArray m = read_array(cfg.data_mask);
    if (m.dims.size() != 2 || m.dtype != ArrayDtype::float64)
      throw std::invalid_argument("config: data.mask must be a 2D float64 array");
    SamplingMask mask;
    mask.height = static_cast<int>(m.dims[0]);
    mask.width = static_cast<int>(m.dims[1]);
    mask.pattern = cfg.data_acs_square ? MaskPattern::radial : MaskPattern::random_lines;
    mask.acs = cfg.data_acs;
    mask.sampled.resize(m.rvalues.size());
    for (size_t i = 0; i < m.rvalues.size(); ++i) mask.sampled[i] = m.rvalues[i] != 0.0 ? 1 : 0;
    SensitivityMaps maps;
    if (!cfg.data_maps.empty()) {
      run.add_input(cfg.data_maps);
      maps.coils = read_array(cfg.data_maps).to_stack();
    } else {
      maps = estimate_sensitivities(in.y, mask);
    }
    in.model = AcquisitionModel(std::move(maps), std::move(mask));
    if (!cfg.data_reference.empty()) {
      run.add_input(cfg.data_reference);
      in.reference = read_array(cfg.data_reference).to_grid();
    }
  } else {
    ScenarioData d = build_scenario(cfg.scenario, 0);
    in.y = std::move(d.y);
    in.model = std::move(d.model);
    in.reference = std::move(d.reference);
  }
  return in;
}

int cmd_simulate(const RunConfig &cfg) {
  RunDir run("simulate", fingerprint_of(cfg), cfg.out_dir);
  ScenarioData d = build_scenario(cfg.scenario, 0);
  write_text_atomic(run.path("config.cfg"), print_run_config(cfg));
  write_array(run.path("phantom.cxg"), from_grid(d.reference));
  write_array(run.path("maps.cxg"), from_stack(d.model.maps.coils));
  write_array(run.path("mask.cxg"), mask_to_array(d.model.mask));
  write_array(run.path("kspace.cxg"), from_stack(d.y.coils));
  if (cfg.export_pngs) {
    export_png(d.reference, run.path("phantom.png"));
    export_png(mask_to_grid(d.model.mask), run.path("mask.png"), {{0.0, 1.0}});
  }
  run.manifest["mask"] = {{"pattern", to_string(d.model.mask.pattern)},
                          {"undersampling_rate", d.model.mask.undersampling_rate()},
                          {"sampled_lines", d.model.mask.sampled_lines()},
                          {"acs", d.model.mask.acs}};
  run.finish();
  return 0;
}

int cmd_mask(const RunConfig &cfg) {
  RunDir run("mask", fingerprint_of(cfg), cfg.out_dir);
  Rng rng(derive_seed(cfg.scenario.seed, 0));
  SamplingMask mask = gen_mask(cfg.scenario.pattern, cfg.scenario.height, cfg.scenario.width,
                               cfg.scenario.accel, cfg.scenario.acs, rng);
  write_text_atomic(run.path("config.cfg"), print_run_config(cfg));
  write_array(run.path("mask.cxg"), mask_to_array(mask));
  if (cfg.export_pngs) export_png(mask_to_grid(mask), run.path("mask.png"), {{0.0, 1.0}});
  run.manifest["mask"] = {{"pattern", to_string(mask.pattern)},
                          {"undersampling_rate", mask.undersampling_rate()},
                          {"sampled_lines", mask.sampled_lines()},
                          {"acs", mask.acs}};
  std::cout << "pattern " << to_string(mask.pattern) << ": " << mask.sampled_lines()
            << " lines, rate " << mask.undersampling_rate() * 100 << "%\n";
  run.finish();
  return 0;
}

int cmd_recon(const RunConfig &cfg) {
  RunDir run("recon", fingerprint_of(cfg), cfg.out_dir);
  write_text_atomic(run.path("config.cfg"), print_run_config(cfg));
  ReconInputs in = prepare_inputs(cfg, run);

  ReconConfig rc = cfg.scenario.recon;
  rc.unroll.seed = derive_seed(cfg.scenario.seed, 2);
  TrainResult result = train(in.y, in.model, rc, in.reference ? &*in.reference : nullptr);

  write_array(run.path("recon.cxg"), from_grid(result.report.x_hat));
  write_array(run.path("zero_filled.cxg"), from_grid(zero_filled(in.y, in.model)));
  write_text_atomic(run.path("loss_log.csv"), format_loss_log(result.report.history));
  if (cfg.export_pngs) export_png(result.report.x_hat, run.path("recon.png"));

  run.manifest["lambda_final"] = result.report.lambda_final;
  run.manifest["lambda_s_final"] = result.report.lambda_s_final;
  run.manifest["epochs_run"] = result.report.history.size();
  run.manifest["seconds"] = result.report.seconds;
  if (result.report.psnr_db) {
    SweepResult sr;
    sr.axis = "variant";
    SweepCell cell;
    cell.label = "recon";
    cell.psnr_per_seed = {*result.report.psnr_db};
    cell.ssim_per_seed = {*result.report.ssim};
    cell.seconds_per_seed = {result.report.seconds};
    sr.cells.push_back(cell);
    write_text_atomic(run.path("metrics.csv"), format_metrics_csv(sr));
    run.manifest["metrics"] = {{"psnr_db", *result.report.psnr_db}, {"ssim", *result.report.ssim}};
    std::cout << "psnr_db=" << *result.report.psnr_db << " ssim=" << *result.report.ssim << "\n";
  }
  std::cout << "final loss " << result.report.history.back().total << " after "
            << result.report.history.size() << " epochs (" << result.report.seconds << " s)\n";
  run.finish();
  return 0;
}

int cmd_eval(const std::string &ref_path, const std::string &test_path, const std::string &out_dir) {
  ComplexGrid ref = read_array(ref_path).to_grid();
  ComplexGrid test = read_array(test_path).to_grid();
  MetricPair m = metrics(ref, test);
  std::printf("psnr_db=%.6f ssim=%.6f\n", m.psnr_db, m.ssim);

  RunConfig pseudo = default_run_config();
  RunDir run("eval", fingerprint_of(pseudo).substr(0, 8) + "x", out_dir);
  run.add_input(ref_path);
  run.add_input(test_path);
  run.manifest["metrics"] = {{"psnr_db", m.psnr_db}, {"ssim", m.ssim}};
  run.finish();
  return 0;
}

int cmd_ablate(const RunConfig &cfg, const std::vector<std::string> &variants, int seeds) {
  RunDir run("ablate", fingerprint_of(cfg), cfg.out_dir);
  write_text_atomic(run.path("config.cfg"), print_run_config(cfg));
  SweepResult all;
  all.axis = "variant";
  for (const std::string &name : variants) {
    SweepResult one = run_ablation(ablation_variant_from_string(name), cfg.scenario, seeds);
    all.cells.push_back(one.cells[0]);
    std::cout << one.cells[0].label << ": psnr " << one.cells[0].psnr_mean << " +- "
              << one.cells[0].psnr_std << " dB, ssim " << one.cells[0].ssim_mean << "\n";
  }
  write_text_atomic(run.path("metrics.csv"), format_metrics_csv(all));
  write_text_atomic(run.path("ablation.json"), format_sweep_json(all));
  run.finish();
  return 0;
}

int cmd_sweep(const RunConfig &cfg, const std::string &axis, const std::string &values_arg,
              int seeds, bool cross) {
  RunDir run("sweep", fingerprint_of(cfg), cfg.out_dir);
  write_text_atomic(run.path("config.cfg"), print_run_config(cfg));

  auto parse_list = [](const std::string &s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    return out;
  };

  SweepResult result;
  if (axis == "lambda" || axis == "lambda_s" || axis == "hyperparams") {
    std::vector<double> lambda_grid, lambda_s_grid;
    if (axis == "lambda" || axis == "hyperparams")
      lambda_grid = values_arg.empty()
                        ? std::vector<double>{0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08, 0.09, 0.10}
                        : parse_list(values_arg);
    if (axis == "lambda_s" || axis == "hyperparams")
      lambda_s_grid = values_arg.empty()
                          ? std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0}
                          : parse_list(values_arg);
    result = sweep_hyperparams(cfg.scenario, lambda_grid, lambda_s_grid, seeds, cross);
  } else if (axis == "cg_iters") {
    std::vector<int> iters;
    if (values_arg.empty())
      iters = {10, 15, 20, 25, 30};
    else
      for (double v : parse_list(values_arg)) iters.push_back(static_cast<int>(v));
    result = sweep_cg_iters(cfg.scenario, iters, seeds);
  } else {
    throw CLI::ValidationError("--axis must be lambda, lambda_s, hyperparams or cg_iters");
  }
  for (const SweepCell &cell : result.cells)
    std::cout << cell.label << ": "
              << (cell.ok ? "psnr " + std::to_string(cell.psnr_mean) + " dB" : "FAILED " + cell.error)
              << "\n";
  write_text_atomic(run.path("sweep.csv"), format_sweep_csv(result));
  write_text_atomic(run.path("sweep.json"), format_sweep_json(result));
  run.finish();
  return 0;
}

int cmd_export(const std::string &in_path, const std::string &out_path, std::vector<double> window) {
  StoredArray a = read_array(in_path);
  ComplexGrid g;
  if (a.dtype == ArrayDtype::float64) {
    if (a.dims.size() != 2) throw std::invalid_argument("export: expected a 2D array");
    g = ComplexGrid(static_cast<int>(a.dims[0]), static_cast<int>(a.dims[1]));
    for (size_t i = 0; i < a.rvalues.size(); ++i) g.data[i] = a.rvalues[i];
  } else {
    g = a.to_grid();
  }
  std::optional<std::pair<double, double>> win;
  if (window.size() == 2) win = {window[0], window[1]};
  export_png(g, out_path, win);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

RunConfig load_config_checked(const std::string &path) {
  if (!fs::exists(path)) throw CLI::ValidationError("config file not found: " + path);
  return load_run_config(path);
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"scan-specific MRI reconstruction with an unrolled INR-regularized solver"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string config_path, out_dir_flag;
  bool print_default = false;

  auto add_config_opts = [&](CLI::App *sub, bool config_required) {
    sub->add_option("--config", config_path, "run configuration file")
        ->required(config_required);
    sub->add_option("--out", out_dir_flag, "override the run directory");
  };

  CLI::App *sim = app.add_subcommand("simulate", "generate phantom, maps, mask and k-space");
  add_config_opts(sim, false);
  int sim_size = 0, sim_coils = 0;
  double sim_noise = -1.0, sim_R = 0.0;
  int sim_acs = -1;
  uint64_t sim_seed = 0;
  bool sim_seed_set = false;
  std::string sim_pattern;
  sim->add_option("--size", sim_size, "square image size");
  sim->add_option("--coils", sim_coils, "number of coils");
  sim->add_option("--noise", sim_noise, "noise sigma");
  sim->add_option("--pattern", sim_pattern, "mask pattern");
  sim->add_option("--R", sim_R, "target acceleration");
  sim->add_option("--acs", sim_acs, "ACS size");
  sim->add_option("--seed", sim_seed, "base seed")->each([&](const std::string &) { sim_seed_set = true; });

  CLI::App *msk = app.add_subcommand("mask", "generate and save a sampling mask");
  add_config_opts(msk, false);
  msk->add_option("--pattern", sim_pattern, "mask pattern");
  int msk_h = 0, msk_w = 0;
  msk->add_option("--height", msk_h, "mask rows");
  msk->add_option("--width", msk_w, "mask columns");
  msk->add_option("--R", sim_R, "target acceleration");
  msk->add_option("--acs", sim_acs, "ACS size");
  msk->add_option("--seed", sim_seed, "seed")->each([&](const std::string &) { sim_seed_set = true; });

  CLI::App *rec = app.add_subcommand("recon", "train and reconstruct from a config");
  add_config_opts(rec, false);
  rec->add_flag("--print-default-config", print_default, "emit the reference config and exit");

  CLI::App *evl = app.add_subcommand("eval", "metrics between two arrays");
  std::string eval_ref, eval_test;
  evl->add_option("--ref", eval_ref, "reference array")->required();
  evl->add_option("--test", eval_test, "test array")->required();
  evl->add_option("--out", out_dir_flag, "override the run directory");

  CLI::App *abl = app.add_subcommand("ablate", "run ablation variants");
  add_config_opts(abl, false);
  std::vector<std::string> abl_variants{"baseline", "no_regularizer", "no_dc", "no_tv"};
  abl->add_option("--variants", abl_variants, "subset of baseline,no_regularizer,no_dc,no_tv");
  int abl_seeds = 3;
  abl->add_option("--seeds", abl_seeds, "seeds per variant");

  CLI::App *swp = app.add_subcommand("sweep", "hyperparameter or CG-iteration sweeps");
  add_config_opts(swp, false);
  std::string swp_axis = "hyperparams", swp_values;
  int swp_seeds = 1;
  bool swp_cross = false;
  swp->add_option("--axis", swp_axis, "lambda | lambda_s | hyperparams | cg_iters");
  swp->add_option("--values", swp_values, "comma-separated grid (default: published grids)");
  swp->add_option("--seeds", swp_seeds, "seeds per cell");
  swp->add_flag("--cross-product", swp_cross, "full lambda x lambda_s grid");

  CLI::App *exp = app.add_subcommand("export", "array to grayscale PNG");
  std::string exp_in, exp_out;
  std::vector<double> exp_window;
  exp->add_option("--in", exp_in, "input array")->required();
  exp->add_option("--out", exp_out, "output PNG")->required();
  exp->add_option("--window", exp_window, "display window lo hi")->expected(2);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e);  // usage errors -> exit 1 with message
  }

  try {
    if (rec->parsed() && print_default) {
      std::cout << print_run_config(default_run_config());
      return 0;
    }
    RunConfig cfg = config_path.empty() ? default_run_config() : load_config_checked(config_path);
    if (!out_dir_flag.empty()) cfg.out_dir = out_dir_flag;

    if (sim->parsed() || msk->parsed()) {
      if (sim_size > 0) { cfg.scenario.height = sim_size; cfg.scenario.width = sim_size; }
      if (msk_h > 0) cfg.scenario.height = msk_h;
      if (msk_w > 0) cfg.scenario.width = msk_w;
      if (sim_coils > 0) cfg.scenario.coils = sim_coils;
      if (sim_noise >= 0.0) cfg.scenario.noise_sigma = sim_noise;
      if (!sim_pattern.empty()) cfg.scenario.pattern = mask_pattern_from_string(sim_pattern);
      if (sim_R > 0.0) cfg.scenario.accel = sim_R;
      if (sim_acs >= 0) cfg.scenario.acs = sim_acs;
      if (sim_seed_set) cfg.scenario.seed = sim_seed;
    }

    if (sim->parsed()) return cmd_simulate(cfg);
    if (msk->parsed()) return cmd_mask(cfg);
    if (rec->parsed()) return cmd_recon(cfg);
    if (evl->parsed()) return cmd_eval(eval_ref, eval_test, out_dir_flag);
    if (abl->parsed()) return cmd_ablate(cfg, abl_variants, abl_seeds);
    if (swp->parsed()) return cmd_sweep(cfg, swp_axis, swp_values, swp_seeds, swp_cross);
    if (exp->parsed()) return cmd_export(exp_in, exp_out, exp_window);
  } catch (const CLI::ValidationError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception &e) {
    std::cerr << "runtime failure: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
