#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "inrecon/eval.hpp"
#include "oracles.hpp"

using namespace inrecon;

TEST_CASE("psnr: identical inputs hit the cap; known error levels") {
  ComplexGrid ref = shepp_logan(64, 64);
  CHECK(psnr(ref, ref) == kPsnrCap);

  // uniform magnitude error of 0.1 against a unit-max reference: 20 dB
  ComplexGrid test = ref;
  for (cx &v : test.data) v += 0.1;
  CHECK(psnr(ref, test) == doctest::Approx(20.0).epsilon(1e-6));

  ComplexGrid zero(64, 64);
  CHECK_THROWS_AS(psnr(zero, ref), std::invalid_argument);
  ComplexGrid other(32, 32);
  CHECK_THROWS_AS(psnr(ref, other), std::invalid_argument);
}

TEST_CASE("psnr: sigma=0.01 noise on a unit-max phantom lands near 40 dB") {
  ComplexGrid ref = shepp_logan(128, 128);
  ComplexGrid noisy = ref;
  Rng rng(3);
  for (cx &v : noisy.data) v += 0.01 * rng.normal();
  CHECK(psnr(ref, noisy) == doctest::Approx(40.0).epsilon(0.005));
}

TEST_CASE("psnr decreases strictly with added noise") {
  ComplexGrid ref = shepp_logan(64, 64);
  Rng rng(4);
  ComplexGrid mild = ref, strong = ref;
  for (size_t i = 0; i < ref.data.size(); ++i) {
    const double n = rng.normal();
    mild.data[i] += 0.01 * n;
    strong.data[i] += 0.05 * n;
  }
  CHECK(psnr(ref, mild) > psnr(ref, strong));
}

TEST_CASE("ssim: identity, zero image, contrast monotonicity") {
  ComplexGrid ref = shepp_logan(64, 64);
  CHECK(ssim(ref, ref) == doctest::Approx(1.0).epsilon(1e-12));

  ComplexGrid zero(64, 64);
  CHECK(ssim(ref, zero) < 0.05);

  ComplexGrid half = cx(0.5, 0.0) * ref;
  const double s_half = ssim(ref, half);
  CHECK(s_half < 1.0);
  CHECK(s_half > ssim(ref, zero));
}

TEST_CASE("ssim is symmetric under an externally fixed dynamic range") {
  ComplexGrid a = shepp_logan(64, 64);
  Rng rng(5);
  ComplexGrid b = a;
  for (cx &v : b.data) v += 0.03 * rng.normal();
  const double range = 1.0;
  CHECK(ssim(a, b, range) == doctest::Approx(ssim(b, a, range)).epsilon(1e-12));
}

TEST_CASE("ssim rejects images smaller than its window") {
  ComplexGrid tiny(8, 8);
  CHECK_THROWS_AS(ssim(tiny, tiny), std::invalid_argument);
}

TEST_CASE("zero_filled: exact recovery under full sampling with a unit coil") {
  const int n = 32;
  Rng rng(6);
  ComplexGrid x = shepp_logan(n, n);
  SensitivityMaps unit;
  ComplexGrid ones(n, n);
  for (cx &v : ones.data) v = cx(1.0, 0.0);
  unit.coils.push_back(ones);
  SamplingMask full = gen_mask(MaskPattern::random_lines, n, n, 1.0, 8, rng);
  AcquisitionModel model(unit, full);
  MultiCoilKspace y = apply_E(x, model);
  CHECK(oracle::rel_err(zero_filled(y, model), x) < 1e-12);

  MultiCoilKspace zeros;
  zeros.coils.push_back(ComplexGrid(n, n));
  CHECK(norm2(zero_filled(zeros, model)) == 0.0);
}

TEST_CASE("zero_filled degrades under undersampling") {
  const int n = 64;
  ComplexGrid x = shepp_logan(n, n);
  SensitivityMaps maps = synth_sensitivities(8, n, n);
  Rng rng(7);
  SamplingMask full = gen_mask(MaskPattern::random_lines, n, n, 1.0, 16, rng);
  SamplingMask r4 = gen_mask(MaskPattern::random_lines, n, n, 4.0, 8, rng);
  AcquisitionModel m_full(maps, full);
  AcquisitionModel m_r4(maps, r4);
  Rng noise(8);
  const double full_psnr = psnr(x, zero_filled(simulate_acquisition(x, m_full, 0.0, noise), m_full));
  const double under_psnr = psnr(x, zero_filled(simulate_acquisition(x, m_r4, 0.0, noise), m_r4));
  CHECK(under_psnr < full_psnr);
}

TEST_CASE("cg_sense: near-exact inverse under full sampling, improves on zero-filled, vanishes as "
          "lambda grows") {
  const int n = 32;
  Rng rng(9);
  ComplexGrid x = shepp_logan(n, n);
  SensitivityMaps unit;
  ComplexGrid ones(n, n);
  for (cx &v : ones.data) v = cx(1.0, 0.0);
  unit.coils.push_back(ones);
  SamplingMask full = gen_mask(MaskPattern::random_lines, n, n, 1.0, 8, rng);
  AcquisitionModel model(unit, full);
  MultiCoilKspace y = apply_E(x, model);
  CHECK(oracle::rel_err(cg_sense(y, model, 1e-6, 50), zero_filled(y, model)) < 1e-4);

  // lambda -> infinity drives the solution to zero
  CHECK(norm2(cg_sense(y, model, 1e12, 50)) < 1e-6 * norm2(x));

  SensitivityMaps maps = synth_sensitivities(8, n, n);
  SamplingMask r4 = gen_mask(MaskPattern::random_lines, n, n, 4.0, 8, rng);
  AcquisitionModel m4(maps, r4);
  Rng noise(10);
  MultiCoilKspace y4 = simulate_acquisition(x, m4, 0.001, noise);
  CHECK(psnr(x, cg_sense(y4, m4, 0.01, 20)) >= psnr(x, zero_filled(y4, m4)));
}

TEST_CASE("build_scenario is deterministic per seed index and varies across indices") {
  Scenario s;
  s.height = 32;
  s.width = 32;
  s.coils = 2;
  s.accel = 2.0;
  s.acs = 8;
  s.seed = 5;
  ScenarioData a = build_scenario(s, 0);
  ScenarioData b = build_scenario(s, 0);
  ScenarioData c = build_scenario(s, 1);
  CHECK(a.y.coils[0].data == b.y.coils[0].data);
  CHECK(a.model.mask.sampled == b.model.mask.sampled);
  CHECK(a.y.coils[0].data != c.y.coils[0].data);
}

TEST_CASE("ablation structural identities at tiny scale") {
  Scenario s;
  s.height = 32;
  s.width = 32;
  s.coils = 2;
  s.noise_sigma = 0.001;
  s.accel = 2.0;
  s.acs = 8;
  s.seed = 11;
  s.recon.encoding.levels = 3;
  s.recon.encoding.table_size = 256;
  s.recon.encoding.growth = 0.0;
  s.recon.mlp_hidden = {8};
  s.recon.unroll.epochs = 20;

  // no_regularizer is bit-identical to cg_sense on the same data
  SweepResult no_reg = run_ablation(AblationVariant::no_regularizer, s, 1);
  ScenarioData d = build_scenario(s, 0);
  ComplexGrid sense = cg_sense(d.y, d.model, s.recon.unroll.lambda_init, s.recon.unroll.cg_iters);
  CHECK(no_reg.cells[0].psnr_per_seed[0] == psnr(d.reference, sense));

  // no_tv equals a baseline run with lambda_s pinned at zero
  SweepResult no_tv = run_ablation(AblationVariant::no_tv, s, 1);
  Scenario s0 = s;
  s0.recon.unroll.lambda_s_init = 0.0;
  s0.recon.unroll.freeze_lambda_s = true;
  SweepResult base0 = run_ablation(AblationVariant::baseline, s0, 1);
  CHECK(no_tv.cells[0].psnr_per_seed[0] == base0.cells[0].psnr_per_seed[0]);

  // single seed reports zero std
  CHECK(no_tv.cells[0].psnr_std == 0.0);
}

TEST_CASE("sweep_hyperparams: single-point grid equals a direct train call") {
  Scenario s;
  s.height = 32;
  s.width = 32;
  s.coils = 2;
  s.noise_sigma = 0.0;
  s.accel = 2.0;
  s.acs = 8;
  s.seed = 21;
  s.recon.encoding.levels = 3;
  s.recon.encoding.table_size = 256;
  s.recon.encoding.growth = 0.0;
  s.recon.mlp_hidden = {8};
  s.recon.unroll.epochs = 15;

  const double grid[1] = {0.03};
  SweepResult r = sweep_hyperparams(s, grid, {}, 1);
  CHECK(r.cells.size() == 1);
  CHECK(r.cells[0].ok);

  ScenarioData d = build_scenario(s, 0);
  ReconConfig cfg = scenario_recon_config(s, 0);
  cfg.unroll.lambda_init = 0.03;
  TrainResult direct = train(d.y, d.model, cfg, &d.reference);
  CHECK(r.cells[0].psnr_per_seed[0] == *direct.report.psnr_db);

  // duplicated grid point cannot change the argmax value
  const double dup[2] = {0.03, 0.03};
  SweepResult r2 = sweep_hyperparams(s, dup, {}, 1);
  CHECK(r2.cells[0].psnr_mean == r2.cells[1].psnr_mean);
  CHECK_THROWS_AS(sweep_hyperparams(s, {}, {}, 1), std::invalid_argument);
}

TEST_CASE("sweep_cg_iters: row per count, singleton equals plain train") {
  Scenario s;
  s.height = 32;
  s.width = 32;
  s.coils = 2;
  s.noise_sigma = 0.0;
  s.accel = 2.0;
  s.acs = 8;
  s.seed = 31;
  s.recon.encoding.levels = 3;
  s.recon.encoding.table_size = 256;
  s.recon.encoding.growth = 0.0;
  s.recon.mlp_hidden = {8};
  s.recon.unroll.epochs = 10;

  const int counts[2] = {5, 10};
  SweepResult r = sweep_cg_iters(s, counts);
  CHECK(r.cells.size() == 2);

  const int single[1] = {20};
  SweepResult one = sweep_cg_iters(s, single);
  ScenarioData d = build_scenario(s, 0);
  TrainResult direct = train(d.y, d.model, scenario_recon_config(s, 0), &d.reference);
  CHECK(one.cells[0].psnr_per_seed[0] == *direct.report.psnr_db);

  const int bad[1] = {0};
  CHECK_THROWS_AS(sweep_cg_iters(s, bad), std::invalid_argument);
}

TEST_CASE("failed sweep cells are recorded, not fatal") {
  Scenario s;
  s.height = 32;
  s.width = 32;
  s.coils = 2;
  s.accel = 2.0;
  s.acs = 8;
  s.recon.unroll.epochs = 1;
  const double bad_lambda[1] = {-1.0};  // rejected by config validation
  SweepResult r = sweep_hyperparams(s, bad_lambda, {}, 1);
  CHECK(r.cells.size() == 1);
  CHECK_FALSE(r.cells[0].ok);
  CHECK_FALSE(r.cells[0].error.empty());
}
