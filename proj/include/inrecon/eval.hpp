#pragma once

#include <span>
#include <string>
#include <vector>

#include "inrecon/acquire.hpp"
#include "inrecon/core.hpp"
#include "inrecon/unroll.hpp"

namespace inrecon {

// reported for identical inputs (zero error)
inline constexpr double kPsnrCap = 999.0;

struct MetricPair {
  double psnr_db = 0.0;
  double ssim = 0.0;
};

// 20*log10(max|ref| / RMSE) on magnitude images.
double psnr(const ComplexGrid &ref, const ComplexGrid &test);

// Single-scale SSIM on magnitude images: 11x11 Gaussian window sigma=1.5,
// K1=0.01, K2=0.03, mean over valid windows. The two-argument form takes the
// dynamic range from max|ref|.
double ssim(const ComplexGrid &ref, const ComplexGrid &test);
double ssim(const ComplexGrid &ref, const ComplexGrid &test, double dynamic_range);

MetricPair metrics(const ComplexGrid &ref, const ComplexGrid &test);

// E^H y: inverse transform with unsampled k-space left at zero.
ComplexGrid zero_filled(const MultiCoilKspace &y, const AcquisitionModel &model);

// Tikhonov-regularized SENSE: the CG solve with a zero prior.
ComplexGrid cg_sense(const MultiCoilKspace &y, const AcquisitionModel &model, double lambda0,
                     int n_iter);

// A reproducible experiment definition: phantom, coils, mask, noise, recon
// settings. Per-seed data (mask draw, noise, parameter init) derive from the
// base seed and the seed index.
struct Scenario {
  int height = 128;
  int width = 128;
  int coils = 8;
  double noise_sigma = 0.005;
  MaskPattern pattern = MaskPattern::random_lines;
  double accel = 4.0;
  int acs = 16;
  PhantomPhase phase = PhantomPhase::none;
  bool estimate_maps = false;
  uint64_t seed = 1;
  ReconConfig recon;
};

struct ScenarioData {
  ComplexGrid reference;
  AcquisitionModel model;
  MultiCoilKspace y;
};

ScenarioData build_scenario(const Scenario &s, uint64_t seed_index);
// the recon config for one seeded run of this scenario
ReconConfig scenario_recon_config(const Scenario &s, uint64_t seed_index);

enum class AblationVariant { baseline, no_regularizer, no_dc, no_tv };
const char *to_string(AblationVariant v);
AblationVariant ablation_variant_from_string(const std::string &s);

struct SweepCell {
  std::string label;
  double value = 0.0;
  bool ok = true;
  std::string error;
  std::vector<double> psnr_per_seed;
  std::vector<double> ssim_per_seed;
  std::vector<double> seconds_per_seed;
  double psnr_mean = 0.0, psnr_std = 0.0;
  double ssim_mean = 0.0, ssim_std = 0.0;
  double seconds_mean = 0.0;
};

struct SweepResult {
  std::string axis;
  std::vector<SweepCell> cells;
};

// baseline = full train; no_regularizer = cg_sense; no_dc = direct INR fit on
// the loss with no CG unit; no_tv = train with lambda_s frozen at 0.
SweepResult run_ablation(AblationVariant variant, const Scenario &s, int num_seeds);
SweepResult run_ablation_suite(const Scenario &s, int num_seeds);

// Varies one hyperparameter's initial value while the other stays fixed
// (cross_product trains the full grid instead). Failed cells are recorded and
// the sweep continues.
SweepResult sweep_hyperparams(const Scenario &s, std::span<const double> lambda_grid,
                              std::span<const double> lambda_s_grid, int num_seeds,
                              bool cross_product = false);

SweepResult sweep_cg_iters(const Scenario &s, std::span<const int> iters, int num_seeds = 1);

}  // namespace inrecon
