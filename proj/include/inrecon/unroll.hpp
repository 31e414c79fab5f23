#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "inrecon/acquire.hpp"
#include "inrecon/core.hpp"
#include "inrecon/inr.hpp"

namespace inrecon {

struct UnrollConfig {
  int num_units = 1;
  int cg_iters = 20;
  double lambda_init = 0.01;
  double lambda_s_init = 0.5;
  bool learnable_hparams = true;
  bool freeze_lambda_s = false;  // ablation hook: keep the TV weight pinned
  bool use_dc_units = true;      // ablation hook: drop the CG unit entirely
  double lr_theta = 1e-2;
  double lr_hparams = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int epochs = 600;
  uint64_t seed = 1;

  void validate() const;
};

// Everything train() needs besides the data.
struct ReconConfig {
  HashEncodingConfig encoding;  // growth <= 1 means: derive from image size
  std::vector<int> mlp_hidden{64, 64};
  UnrollConfig unroll;
};

std::string config_fingerprint(const ReconConfig &config, int height, int width, int coils);

// Runs n_iter conjugate-gradient iterations on (E^H E + lambda I) x = E^H y +
// lambda z starting from x = 0, stopping early once the residual drops below
// 1e-10 * ||rhs||. The operator is Hermitian positive definite for lambda > 0.
ComplexGrid cg_solve(const ComplexGrid &z, const MultiCoilKspace &y, const AcquisitionModel &model,
                     double lambda, int n_iter);

struct DcBackward {
  ComplexGrid grad_z;
  double grad_lambda = 0.0;
};

// Adjoint of the converged solve: a fresh CG solve of the same system applied
// to grad_x, no stored iterates. z and x are the forward inputs/solution.
DcBackward dc_backward(const ComplexGrid &grad_x, const ComplexGrid &z, const ComplexGrid &x,
                       const AcquisitionModel &model, double lambda, int n_iter);

struct UnrollCache {
  ComplexGrid x0;  // zero-filled initialization E^H y
  ComplexGrid z;
  RenderCache render;
  std::vector<ComplexGrid> unit_outputs;
};

// x0 = E^H y; for each basic unit: z = rendered image, x = CG data-consistency
// solve. The rendered image is parameter-only, so every unit produces the
// same output within one step.
ComplexGrid unroll_forward(const InrParams &params, const MultiCoilKspace &y,
                           const AcquisitionModel &model, double lambda, const UnrollConfig &config,
                           UnrollCache *cache);

struct DcLoss {
  double value = 0.0;
  MultiCoilKspace grad;  // wrt y_hat
};

// Normalized l1-l2 fidelity ||y-y_hat||_2/||y||_2 + ||y-y_hat||_1/||y||_1 over
// the sampled locations (both inputs are masked k-space).
DcLoss loss_dc(const MultiCoilKspace &y, const MultiCoilKspace &y_hat);

struct TvLoss {
  double value = 0.0;
  ComplexGrid grad;
};

// Anisotropic total variation with the complex modulus, no wraparound;
// subgradient 0 where a difference vanishes.
TvLoss loss_tv(const ComplexGrid &x);

struct TotalLoss {
  double total = 0.0;
  double dc = 0.0;
  double tv = 0.0;
  ComplexGrid grad_x;
  double grad_lambda_s = 0.0;
};

TotalLoss total_loss(const MultiCoilKspace &y, const ComplexGrid &x_hat,
                     const AcquisitionModel &model, double lambda_s);

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int64_t step_count = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

// Standard Adam with bias correction over a list of parameter groups. Throws
// on non-finite gradients without touching the state.
void adam_step(AdamState &state, std::span<std::span<double>> params,
               std::span<std::span<const double>> grads);

struct LossRecord {
  int epoch = 0;
  double total = 0.0;
  double dc = 0.0;
  double tv = 0.0;
  double lambda = 0.0;
  double lambda_s = 0.0;
};

struct TrainState {
  InrParams params;
  double lambda = 0.0;
  double lambda_s = 0.0;
  double rho = 0.0;  // lambda = softplus(rho)
  AdamState opt_theta;
  AdamState opt_hparams;
  int epoch = 0;
  std::vector<LossRecord> history;
};

struct ReconReport {
  ComplexGrid x_hat;
  std::vector<LossRecord> history;
  double lambda_final = 0.0;
  double lambda_s_final = 0.0;
  std::optional<double> psnr_db;
  std::optional<double> ssim;
  double seconds = 0.0;
  std::string fingerprint;
};

struct TrainResult {
  ReconReport report;
  TrainState state;
};

// Per-scan self-supervised training: render -> CG -> loss -> hand-written
// backward chain -> Adam, with learnable lambda (softplus-positive) and
// lambda_s (clamped at 0). Stops early when the relative loss change over 50
// epochs falls below 1e-6; aborts when the loss exceeds 1e3x its initial
// value. k-space is normalized so max |E^H y| = 1 during training.
TrainResult train(const MultiCoilKspace &y, const AcquisitionModel &model,
                  const ReconConfig &config, const ComplexGrid *reference = nullptr);

double softplus(double x);
double softplus_inverse(double y);

}  // namespace inrecon
