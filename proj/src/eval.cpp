#include "inrecon/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace inrecon {

namespace {

std::vector<double> magnitude(const ComplexGrid &g) {
  std::vector<double> m(g.data.size());
  for (size_t i = 0; i < m.size(); ++i) m[i] = std::abs(g.data[i]);
  return m;
}

}  // namespace

double psnr(const ComplexGrid &ref, const ComplexGrid &test) {
  if (!ref.same_shape(test)) throw std::invalid_argument("psnr: shape mismatch");
  const std::vector<double> a = magnitude(ref), b = magnitude(test);
  double peak = 0.0, sq = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    peak = std::max(peak, a[i]);
    sq += (a[i] - b[i]) * (a[i] - b[i]);
  }
  if (peak == 0.0) throw std::invalid_argument("psnr: reference is identically zero");
  const double rmse = std::sqrt(sq / static_cast<double>(a.size()));
  if (rmse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 20.0 * std::log10(peak / rmse));
}

double ssim(const ComplexGrid &ref, const ComplexGrid &test) {
  return ssim(ref, test, max_abs(ref));
}

double ssim(const ComplexGrid &ref, const ComplexGrid &test, double dynamic_range) {
  if (!ref.same_shape(test)) throw std::invalid_argument("ssim: shape mismatch");
  constexpr int kWin = 11;
  constexpr double kSigma = 1.5;
  if (ref.height < kWin || ref.width < kWin)
    throw std::invalid_argument("ssim: images smaller than the 11x11 window");

  double kernel[kWin];
  double ksum = 0.0;
  for (int i = 0; i < kWin; ++i) {
    const double d = i - (kWin - 1) / 2.0;
    kernel[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    ksum += kernel[i];
  }
  for (double &k : kernel) k /= ksum;

  const int h = ref.height, w = ref.width;
  const std::vector<double> a = magnitude(ref), b = magnitude(test);

  // separable valid-mode filtering of the five moment maps
  auto filter = [&](const std::vector<double> &src) {
    std::vector<double> tmp(static_cast<size_t>(h) * (w - kWin + 1));
    for (int r = 0; r < h; ++r)
      for (int c = 0; c + kWin <= w; ++c) {
        double s = 0.0;
        for (int k = 0; k < kWin; ++k) s += kernel[k] * src[static_cast<size_t>(r) * w + c + k];
        tmp[static_cast<size_t>(r) * (w - kWin + 1) + c] = s;
      }
    std::vector<double> out(static_cast<size_t>(h - kWin + 1) * (w - kWin + 1));
    for (int r = 0; r + kWin <= h; ++r)
      for (int c = 0; c < w - kWin + 1; ++c) {
        double s = 0.0;
        for (int k = 0; k < kWin; ++k)
          s += kernel[k] * tmp[static_cast<size_t>(r + k) * (w - kWin + 1) + c];
        out[static_cast<size_t>(r) * (w - kWin + 1) + c] = s;
      }
    return out;
  };

  std::vector<double> aa(a.size()), bb(a.size()), ab(a.size());
  for (size_t i = 0; i < a.size(); ++i) {
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  const std::vector<double> mu_a = filter(a), mu_b = filter(b);
  const std::vector<double> m_aa = filter(aa), m_bb = filter(bb), m_ab = filter(ab);

  const double c1 = (0.01 * dynamic_range) * (0.01 * dynamic_range);
  const double c2 = (0.03 * dynamic_range) * (0.03 * dynamic_range);
  double acc = 0.0;
  for (size_t i = 0; i < mu_a.size(); ++i) {
    const double va = m_aa[i] - mu_a[i] * mu_a[i];
    const double vb = m_bb[i] - mu_b[i] * mu_b[i];
    const double cov = m_ab[i] - mu_a[i] * mu_b[i];
    acc += ((2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2)) /
           ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2));
  }
  return acc / static_cast<double>(mu_a.size());
}

MetricPair metrics(const ComplexGrid &ref, const ComplexGrid &test) {
  return {psnr(ref, test), ssim(ref, test)};
}

ComplexGrid zero_filled(const MultiCoilKspace &y, const AcquisitionModel &model) {
  return apply_EH(y, model);
}

ComplexGrid cg_sense(const MultiCoilKspace &y, const AcquisitionModel &model, double lambda0,
                     int n_iter) {
  if (lambda0 <= 0.0) throw std::invalid_argument("cg_sense: lambda0 must be > 0");
  ComplexGrid zero(model.height(), model.width());
  return cg_solve(zero, y, model, lambda0, n_iter);
}

ScenarioData build_scenario(const Scenario &s, uint64_t seed_index) {
  ScenarioData d;
  d.reference = shepp_logan(s.height, s.width, s.phase);
  SensitivityMaps truth = synth_sensitivities(s.coils, s.height, s.width);
  Rng mask_rng(derive_seed(s.seed, 3 * seed_index));
  SamplingMask mask = gen_mask(s.pattern, s.height, s.width, s.accel, s.acs, mask_rng);
  AcquisitionModel sim_model(truth, mask);
  Rng noise_rng(derive_seed(s.seed, 3 * seed_index + 1));
  d.y = simulate_acquisition(d.reference, sim_model, s.noise_sigma, noise_rng);
  if (s.estimate_maps) {
    SensitivityMaps est = estimate_sensitivities(d.y, mask);
    d.model = AcquisitionModel(std::move(est), std::move(mask));
  } else {
    d.model = std::move(sim_model);
  }
  return d;
}

ReconConfig scenario_recon_config(const Scenario &s, uint64_t seed_index) {
  ReconConfig cfg = s.recon;
  cfg.unroll.seed = derive_seed(s.seed, 3 * seed_index + 2);
  return cfg;
}

const char *to_string(AblationVariant v) {
  switch (v) {
    case AblationVariant::baseline: return "baseline";
    case AblationVariant::no_regularizer: return "no_regularizer";
    case AblationVariant::no_dc: return "no_dc";
    case AblationVariant::no_tv: return "no_tv";
  }
  return "?";
}

AblationVariant ablation_variant_from_string(const std::string &s) {
  if (s == "baseline") return AblationVariant::baseline;
  if (s == "no_regularizer") return AblationVariant::no_regularizer;
  if (s == "no_dc") return AblationVariant::no_dc;
  if (s == "no_tv") return AblationVariant::no_tv;
  throw std::invalid_argument("unknown ablation variant: " + s);
}

namespace {

void finalize_cell(SweepCell &cell) {
  const size_t n = cell.psnr_per_seed.size();
  if (n == 0) return;
  auto mean_std = [n](const std::vector<double> &v, double &mean, double &sd) {
    mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(n);
    sd = 0.0;
    for (double x : v) sd += (x - mean) * (x - mean);
    sd = n > 1 ? std::sqrt(sd / static_cast<double>(n - 1)) : 0.0;
  };
  mean_std(cell.psnr_per_seed, cell.psnr_mean, cell.psnr_std);
  mean_std(cell.ssim_per_seed, cell.ssim_mean, cell.ssim_std);
  double dummy;
  mean_std(cell.seconds_per_seed, cell.seconds_mean, dummy);
}

SweepCell run_variant_cell(AblationVariant variant, const Scenario &s, int num_seeds) {
  SweepCell cell;
  cell.label = to_string(variant);
  for (int k = 0; k < num_seeds; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    ScenarioData d = build_scenario(s, k);
    ReconConfig cfg = scenario_recon_config(s, k);
    ComplexGrid x_hat;
    switch (variant) {
      case AblationVariant::baseline:
        x_hat = train(d.y, d.model, cfg, &d.reference).report.x_hat;
        break;
      case AblationVariant::no_regularizer:
        x_hat = cg_sense(d.y, d.model, cfg.unroll.lambda_init, cfg.unroll.cg_iters);
        break;
      case AblationVariant::no_dc:
        cfg.unroll.use_dc_units = false;
        x_hat = train(d.y, d.model, cfg, &d.reference).report.x_hat;
        break;
      case AblationVariant::no_tv:
        cfg.unroll.lambda_s_init = 0.0;
        cfg.unroll.freeze_lambda_s = true;
        x_hat = train(d.y, d.model, cfg, &d.reference).report.x_hat;
        break;
    }
    cell.psnr_per_seed.push_back(psnr(d.reference, x_hat));
    cell.ssim_per_seed.push_back(ssim(d.reference, x_hat));
    cell.seconds_per_seed.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  finalize_cell(cell);
  return cell;
}

SweepCell train_cell(const Scenario &s, const std::string &label, double value, int num_seeds,
                     void (*tweak)(ReconConfig &, double), double tweak_arg) {
  SweepCell cell;
  cell.label = label;
  cell.value = value;
  try {
    for (int k = 0; k < num_seeds; ++k) {
      const auto t0 = std::chrono::steady_clock::now();
      ScenarioData d = build_scenario(s, k);
      ReconConfig cfg = scenario_recon_config(s, k);
      tweak(cfg, tweak_arg);
      TrainResult r = train(d.y, d.model, cfg, &d.reference);
      cell.psnr_per_seed.push_back(*r.report.psnr_db);
      cell.ssim_per_seed.push_back(*r.report.ssim);
      cell.seconds_per_seed.push_back(
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    finalize_cell(cell);
  } catch (const std::exception &e) {
    cell.ok = false;
    cell.error = e.what();
  }
  return cell;
}

}  // namespace

SweepResult run_ablation(AblationVariant variant, const Scenario &s, int num_seeds) {
  if (num_seeds < 1) throw std::invalid_argument("run_ablation: need at least one seed");
  SweepResult out;
  out.axis = "variant";
  out.cells.push_back(run_variant_cell(variant, s, num_seeds));
  return out;
}

SweepResult run_ablation_suite(const Scenario &s, int num_seeds) {
  SweepResult out;
  out.axis = "variant";
  for (AblationVariant v : {AblationVariant::baseline, AblationVariant::no_regularizer,
                            AblationVariant::no_dc, AblationVariant::no_tv})
    out.cells.push_back(run_variant_cell(v, s, num_seeds));
  return out;
}

SweepResult sweep_hyperparams(const Scenario &s, std::span<const double> lambda_grid,
                              std::span<const double> lambda_s_grid, int num_seeds,
                              bool cross_product) {
  if (lambda_grid.empty() && lambda_s_grid.empty())
    throw std::invalid_argument("sweep_hyperparams: empty grids");
  SweepResult out;
  if (cross_product) {
    out.axis = "lambda x lambda_s";
    for (double l : lambda_grid)
      for (double ls : lambda_s_grid) {
        Scenario sc = s;
        sc.recon.unroll.lambda_init = l;
        char label[64];
        std::snprintf(label, sizeof label, "lambda=%g,lambda_s=%g", l, ls);
        out.cells.push_back(train_cell(
            sc, label, l, num_seeds,
            [](ReconConfig &c, double v) { c.unroll.lambda_s_init = v; }, ls));
      }
    return out;
  }
  out.axis = "lambda | lambda_s";
  for (double l : lambda_grid) {
    char label[64];
    std::snprintf(label, sizeof label, "lambda=%g", l);
    out.cells.push_back(train_cell(
        s, label, l, num_seeds, [](ReconConfig &c, double v) { c.unroll.lambda_init = v; }, l));
  }
  for (double ls : lambda_s_grid) {
    char label[64];
    std::snprintf(label, sizeof label, "lambda_s=%g", ls);
    out.cells.push_back(train_cell(
        s, label, ls, num_seeds, [](ReconConfig &c, double v) { c.unroll.lambda_s_init = v; }, ls));
  }
  return out;
}

SweepResult sweep_cg_iters(const Scenario &s, std::span<const int> iters, int num_seeds) {
  if (iters.empty()) throw std::invalid_argument("sweep_cg_iters: empty iteration list");
  for (int n : iters)
    if (n < 1) throw std::invalid_argument("sweep_cg_iters: iteration counts must be >= 1");
  SweepResult out;
  out.axis = "cg_iters";
  for (int n : iters) {
    char label[32];
    std::snprintf(label, sizeof label, "cg_iters=%d", n);
    out.cells.push_back(train_cell(
        s, label, static_cast<double>(n), num_seeds,
        [](ReconConfig &c, double v) { c.unroll.cg_iters = static_cast<int>(v); },
        static_cast<double>(n)));
  }
  return out;
}

}  // namespace inrecon
