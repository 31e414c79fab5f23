// Integration gate: runs every acceptance criterion at its stated tolerance
// and prints one pass/fail line per criterion. Criteria can be selected by
// number on the command line; all run by default.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "inrecon/eval.hpp"
#include "inrecon/io.hpp"
#include "inrecon/unroll.hpp"
#include "oracles.hpp"

using namespace inrecon;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  std::string warning;
};

double now_s() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

std::string fmt(double v, int prec = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome criterion1_operators() {
  Outcome out;
  const double t0 = now_s();
  Rng rng(101);
  double worst_adj = 0.0, worst_unitary = 0.0, worst_roundtrip = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    AcquisitionModel model = oracle::random_model(3, 16, 16, rng);
    ComplexGrid x = oracle::random_grid(16, 16, rng);
    MultiCoilKspace y = oracle::random_kspace(3, 16, 16, rng);
    MultiCoilKspace ex = apply_E(x, model);
    ComplexGrid ehy = apply_EH(y, model);
    cx lhs(0.0, 0.0);
    for (int i = 0; i < 3; ++i) lhs += dot(ex.coils[i], y.coils[i]);
    const cx rhs = dot(x, ehy);
    worst_adj = std::max(worst_adj, std::abs(lhs - rhs) / std::abs(rhs));

    worst_unitary = std::max(worst_unitary, oracle::rel_err(norm2(fft2c(x)), norm2(x)));
    worst_roundtrip = std::max(worst_roundtrip, oracle::rel_err(ifft2c(fft2c(x)), x));
  }
  const double elapsed = now_s() - t0;
  out.pass = worst_adj < 1e-10 && worst_unitary < 1e-10 && worst_roundtrip < 1e-10 && elapsed < 5.0;
  out.detail = "adjoint " + fmt(worst_adj, 14) + ", unitarity " + fmt(worst_unitary, 14) +
               ", roundtrip " + fmt(worst_roundtrip, 14) + ", " + fmt(elapsed) + " s";
  return out;
}

Outcome criterion2_cg_oracle() {
  Outcome out;
  const double t0 = now_s();
  Rng rng(202);
  AcquisitionModel model = oracle::random_model(2, 8, 8, rng);
  ComplexGrid z = oracle::random_grid(8, 8, rng);
  MultiCoilKspace y = oracle::random_kspace(2, 8, 8, rng);
  double worst = 0.0;
  for (double lambda : {1e-3, 0.05, 10.0}) {
    ComplexGrid x = cg_solve(z, y, model, lambda, 500);
    ComplexGrid rhs = apply_EH(y, model);
    for (size_t i = 0; i < rhs.data.size(); ++i) rhs.data[i] += lambda * z.data[i];
    ComplexGrid x_ref = oracle::dense_normal_solve(rhs, model, lambda);
    worst = std::max(worst, oracle::rel_err(x, x_ref));
  }
  const double elapsed = now_s() - t0;
  out.pass = worst < 1e-8 && elapsed < 5.0;
  out.detail = "max rel err " + fmt(worst, 12) + " over lambda {1e-3, 0.05, 10}, " + fmt(elapsed) +
               " s";
  return out;
}

Outcome criterion3_gradients() {
  Outcome out;
  const double t0 = now_s();
  const int n = 16;
  Rng rng(303);
  ComplexGrid phantom = shepp_logan(n, n);
  SensitivityMaps maps = synth_sensitivities(2, n, n);
  SamplingMask mask = gen_mask(MaskPattern::random_lines, n, n, 2.0, 4, rng);
  AcquisitionModel model(maps, mask);
  Rng noise(7);
  MultiCoilKspace y = simulate_acquisition(phantom, model, 0.001, noise);

  HashEncodingConfig enc;
  enc.levels = 2;
  enc.table_size = 64;
  enc.features = 2;
  enc.n_min = 2;
  enc.growth = 2.0;
  Rng init(11);
  InrParams params = init_inr(enc, {4}, init);
  oracle::roughen(params, init);  // finite differences need a kink-free point
  const double lambda = 0.05, lambda_s = 0.2;
  const double eps = 1e-5;
  double worst_closed = 0.0;  // closed-form paths: encode, mlp, losses
  double worst_chain_truncated = 0.0, worst_chain_converged = 0.0;

  // --- hash encoding, component-wise on every touched table entry
  {
    std::vector<double> probe(enc.encoded_dim());
    for (double &v : probe) v = rng.uniform(-1.0, 1.0);
    const double vx = 0.43, vy = 0.68;
    EncodeCache cache;
    std::vector<double> feats(enc.encoded_dim());
    hash_encode(vx, vy, enc, params.tables, feats, &cache);
    InrParams grad = zeros_like(params);
    hash_encode_backward(cache, enc, probe, grad.tables);
    auto value = [&](const InrParams &q) {
      std::vector<double> f(enc.encoded_dim());
      hash_encode(vx, vy, enc, q.tables, f, nullptr);
      double s = 0.0;
      for (size_t i = 0; i < f.size(); ++i) s += probe[i] * f[i];
      return s;
    };
    for (size_t i = 0; i < params.tables.feats.size(); ++i) {
      if (grad.tables.feats[i] == 0.0) continue;
      InrParams p = params, m = params;
      p.tables.feats[i] += eps;
      m.tables.feats[i] -= eps;
      const double fd = (value(p) - value(m)) / (2.0 * eps);
      worst_closed = std::max(worst_closed, oracle::rel_err(grad.tables.feats[i], fd));
    }
  }

  // --- MLP, full component-wise sweep
  {
    std::vector<double> in(enc.encoded_dim());
    for (double &v : in) v = rng.uniform(-1.0, 1.0);
    double probe[2] = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    MlpCache cache;
    double o[2];
    mlp_forward(params.mlp, in, std::span<double>(o, 2), &cache);
    InrParams grad = zeros_like(params);
    std::vector<double> gin(in.size(), 0.0);
    mlp_backward(params.mlp, cache, std::span<const double>(probe, 2), grad.mlp, gin);
    auto value = [&](const MlpParams &mlp) {
      double oo[2];
      mlp_forward(mlp, in, std::span<double>(oo, 2), nullptr);
      return probe[0] * oo[0] + probe[1] * oo[1];
    };
    for (size_t li = 0; li < params.mlp.layers.size(); ++li) {
      for (size_t wi = 0; wi < params.mlp.layers[li].weights.size(); ++wi) {
        MlpParams p = params.mlp, m = params.mlp;
        p.layers[li].weights[wi] += eps;
        m.layers[li].weights[wi] -= eps;
        const double fd = (value(p) - value(m)) / (2.0 * eps);
        if (std::abs(fd) < 1e-9) continue;
        worst_closed =
            std::max(worst_closed, oracle::rel_err(grad.mlp.layers[li].weights[wi], fd));
      }
      for (size_t bi = 0; bi < params.mlp.layers[li].bias.size(); ++bi) {
        MlpParams p = params.mlp, m = params.mlp;
        p.layers[li].bias[bi] += eps;
        m.layers[li].bias[bi] -= eps;
        const double fd = (value(p) - value(m)) / (2.0 * eps);
        if (std::abs(fd) < 1e-9) continue;
        worst_closed = std::max(worst_closed, oracle::rel_err(grad.mlp.layers[li].bias[bi], fd));
      }
    }
  }

  // --- losses
  {
    ComplexGrid x = oracle::random_grid(n, n, rng);
    TotalLoss tl = total_loss(y, x, model, lambda_s);
    for (size_t idx : {size_t{5}, size_t{77}, size_t{200}}) {
      for (int part = 0; part < 2; ++part) {
        ComplexGrid p = x, m = x;
        const cx d = part == 0 ? cx(eps, 0.0) : cx(0.0, eps);
        p.data[idx] += d;
        m.data[idx] -= d;
        const double fd =
            (total_loss(y, p, model, lambda_s).total - total_loss(y, m, model, lambda_s).total) /
            (2.0 * eps);
        const double got = part == 0 ? tl.grad_x.data[idx].real() : tl.grad_x.data[idx].imag();
        worst_closed = std::max(worst_closed, oracle::rel_err(got, fd));
      }
    }
  }

  // --- dc_backward and the full chain, truncated and converged
  auto chain = [&](int iters, double &worst_chain) {
    auto scalar = [&](const InrParams &q, double l, double ls) {
      ComplexGrid z = render(q, n, n, nullptr);
      ComplexGrid x = cg_solve(z, y, model, l, iters);
      return total_loss(y, x, model, ls).total;
    };
    UnrollConfig ucfg;
    ucfg.cg_iters = iters;
    UnrollCache cache;
    ComplexGrid x_hat = unroll_forward(params, y, model, lambda, ucfg, &cache);
    TotalLoss tl = total_loss(y, x_hat, model, lambda_s);
    DcBackward db = dc_backward(tl.grad_x, cache.z, x_hat, model, lambda, iters);
    InrParams grad = zeros_like(params);
    render_backward(params, cache.render, db.grad_z, grad);

    // the forward map is affine in each table entry given fixed ReLU signs,
    // so eps=1e-4 rides above the CG early-exit noise without truncation cost
    const double eps_chain = 1e-4;
    std::vector<double> flat = pack_params(params);
    std::vector<double> gflat = pack_params(grad);
    for (size_t i = 0; i < flat.size(); ++i) {
      std::vector<double> fp = flat, fm = flat;
      fp[i] += eps_chain;
      fm[i] -= eps_chain;
      InrParams qp = params, qm = params;
      unpack_params(fp, qp);
      unpack_params(fm, qm);
      const double fd =
          (scalar(qp, lambda, lambda_s) - scalar(qm, lambda, lambda_s)) / (2.0 * eps_chain);
      if (std::abs(fd) < 1e-6 && std::abs(gflat[i]) < 1e-6) continue;  // untouched slot
      worst_chain = std::max(worst_chain, oracle::rel_err(gflat[i], fd));
    }
    const double fd_l = (scalar(params, lambda + eps_chain, lambda_s) -
                         scalar(params, lambda - eps_chain, lambda_s)) /
                        (2.0 * eps_chain);
    worst_chain = std::max(worst_chain, oracle::rel_err(db.grad_lambda, fd_l));
    const double fd_ls = (scalar(params, lambda, lambda_s + eps_chain) -
                          scalar(params, lambda, lambda_s - eps_chain)) /
                         (2.0 * eps_chain);
    worst_chain = std::max(worst_chain, oracle::rel_err(tl.grad_lambda_s, fd_ls));
  };
  chain(20, worst_chain_truncated);
  chain(400, worst_chain_converged);

  const double elapsed = now_s() - t0;
  out.pass = worst_closed < 1e-5 && worst_chain_truncated < 1e-3 &&
             worst_chain_converged < 1e-5 && elapsed < 120.0;
  out.detail = "closed-form " + fmt(worst_closed, 9) + ", chain(cg=20) " +
               fmt(worst_chain_truncated, 7) + ", chain(converged) " +
               fmt(worst_chain_converged, 9) + ", " + fmt(elapsed) + " s";
  return out;
}

Outcome criterion4_masks() {
  Outcome out;
  struct Case {
    int width, acs;
    double R;
    int lines;
  };
  const Case cases[] = {{368, 18, 6.0, 61}, {368, 16, 8.0, 46}, {368, 12, 10.0, 36},
                        {320, 18, 6.0, 53}, {320, 16, 8.0, 40}, {320, 12, 10.0, 32}};
  std::ostringstream detail;
  for (const Case &c : cases) {
    Rng rng(1);
    SamplingMask m = gen_mask(MaskPattern::random_lines, c.width, c.width, c.R, c.acs, rng);
    const int lines = m.sampled_lines();
    detail << c.width << "/R" << c.R << ":" << lines << " ";
    if (lines != c.lines) {
      out.pass = false;
      detail << "(want " << c.lines << ") ";
    }
  }
  out.detail = detail.str();
  return out;
}

// shared scenario for criteria 5 and 6; baseline runs are reused
Scenario desk_scenario() {
  Scenario s;
  s.height = 128;
  s.width = 128;
  s.coils = 8;
  s.noise_sigma = 0.005;
  s.pattern = MaskPattern::random_lines;
  s.accel = 4.0;
  s.acs = 16;
  s.seed = 1;
  return s;  // recon settings stay at library defaults
}

struct DeskRuns {
  std::vector<double> base_psnr, base_ssim, base_seconds;
  std::vector<double> zf_psnr, cgs_psnr;
};

const DeskRuns &desk_runs() {
  static const DeskRuns runs = [] {
    DeskRuns r;
    const Scenario s = desk_scenario();
    for (int k = 0; k < 3; ++k) {
      ScenarioData d = build_scenario(s, k);
      const double t0 = now_s();
      TrainResult tr = train(d.y, d.model, scenario_recon_config(s, k), &d.reference);
      r.base_seconds.push_back(now_s() - t0);
      r.base_psnr.push_back(*tr.report.psnr_db);
      r.base_ssim.push_back(*tr.report.ssim);
      r.zf_psnr.push_back(psnr(d.reference, zero_filled(d.y, d.model)));
      r.cgs_psnr.push_back(psnr(d.reference, cg_sense(d.y, d.model, s.recon.unroll.lambda_init,
                                                      s.recon.unroll.cg_iters)));
    }
    return r;
  }();
  return runs;
}

double mean(const std::vector<double> &v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

Outcome criterion5_desk_recon() {
  Outcome out;
  const DeskRuns &r = desk_runs();
  const double m_base = mean(r.base_psnr), m_zf = mean(r.zf_psnr), m_cgs = mean(r.cgs_psnr);
  const double m_ssim = mean(r.base_ssim);
  double worst_seconds = 0.0;
  for (double s : r.base_seconds) worst_seconds = std::max(worst_seconds, s);
  out.pass = (m_base >= m_zf + 6.0) && (m_base >= m_cgs + 2.0) && (m_ssim >= 0.90) &&
             (worst_seconds <= 15.0 * 60.0);
  out.detail = "psnr " + fmt(m_base) + " dB (zf " + fmt(m_zf) + ", cg-sense " + fmt(m_cgs) +
               "), ssim " + fmt(m_ssim, 4) + ", slowest seed " + fmt(worst_seconds, 1) + " s";
  return out;
}

Outcome criterion6_ablation() {
  Outcome out;
  const Scenario s = desk_scenario();
  const DeskRuns &base = desk_runs();
  const double m_base = mean(base.base_psnr);
  const double m_noreg = mean(base.cgs_psnr);  // structural identity with cg_sense

  SweepResult no_dc = run_ablation(AblationVariant::no_dc, s, 3);
  SweepResult no_tv = run_ablation(AblationVariant::no_tv, s, 3);
  const double m_nodc = no_dc.cells[0].psnr_mean;
  const double m_notv = no_tv.cells[0].psnr_mean;

  const bool order = (m_base > m_nodc + 0.3) && (m_nodc > m_noreg + 0.3);
  const double tv_gap = m_base - m_notv;
  bool tv_ok = tv_gap >= 0.0;
  if (!tv_ok && tv_gap > -0.3) {
    tv_ok = true;
    out.warning = "baseline trails no_tv by " + fmt(-tv_gap) + " dB (< 0.3 dB margin)";
  }
  out.pass = order && tv_ok;
  out.detail = "baseline " + fmt(m_base) + " > no_dc " + fmt(m_nodc) + " > no_regularizer " +
               fmt(m_noreg) + " dB; no_tv " + fmt(m_notv);
  return out;
}

Outcome criterion7_patterns() {
  Outcome out;
  const double t0 = now_s();
  std::ostringstream detail;
  bool all = true;
  struct P {
    MaskPattern pattern;
    int acs;
  };
  for (const P &p : {P{MaskPattern::uniform_lines, 8}, P{MaskPattern::radial, 12},
                     P{MaskPattern::spiral, 12}}) {
    Scenario s = desk_scenario();
    s.pattern = p.pattern;
    s.accel = 10.0;
    s.acs = p.acs;
    ScenarioData d = build_scenario(s, 0);
    const double realized_R = 1.0 / d.model.mask.undersampling_rate();
    TrainResult tr = train(d.y, d.model, scenario_recon_config(s, 0), &d.reference);
    const double zf = psnr(d.reference, zero_filled(d.y, d.model));
    const bool ok = *tr.report.psnr_db >= zf + 4.0 && realized_R >= 9.0 && realized_R <= 11.0;
    all = all && ok;
    detail << to_string(p.pattern) << " R=" << fmt(realized_R, 1) << " " << fmt(*tr.report.psnr_db)
           << " dB (zf " << fmt(zf) << ") ";
  }
  const double elapsed = now_s() - t0;
  out.pass = all && elapsed <= 45.0 * 60.0;
  out.detail = detail.str() + ", " + fmt(elapsed, 1) + " s total";
  return out;
}

Scenario fast_scenario() {
  Scenario s;
  s.height = 64;
  s.width = 64;
  s.coils = 4;
  s.noise_sigma = 0.005;
  s.pattern = MaskPattern::random_lines;
  s.accel = 4.0;
  s.acs = 12;
  s.seed = 2;
  s.recon.unroll.epochs = 200;
  return s;
}

Outcome criterion8_sweeps() {
  Outcome out;
  const Scenario s = fast_scenario();
  const std::vector<double> lambda_grid = {0.01, 0.02, 0.03, 0.04, 0.05,
                                           0.06, 0.07, 0.08, 0.09, 0.10};
  const std::vector<double> lambda_s_grid = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  SweepResult hp = sweep_hyperparams(s, lambda_grid, lambda_s_grid, 1);
  bool finite = hp.cells.size() == 20;
  for (const SweepCell &cell : hp.cells)
    finite = finite && cell.ok && std::isfinite(cell.psnr_mean) && std::isfinite(cell.ssim_mean);

  const std::vector<int> iters = {10, 15, 20, 25, 30};
  SweepResult cg = sweep_cg_iters(s, iters);
  bool clock_ok = true;
  for (size_t i = 1; i < cg.cells.size(); ++i)
    clock_ok = clock_ok && cg.cells[i].seconds_mean >= 0.9 * cg.cells[i - 1].seconds_mean;
  const double psnr20 = cg.cells[2].psnr_mean, psnr30 = cg.cells[4].psnr_mean;
  const bool stable = std::abs(psnr20 - psnr30) <= 0.5;

  out.pass = finite && clock_ok && stable;
  out.detail = std::to_string(hp.cells.size()) + " hyperparameter cells finite=" +
               (finite ? "yes" : "no") + "; cg wall-clock " +
               (clock_ok ? "non-decreasing" : "NOT monotone") + "; psnr(20)=" + fmt(psnr20) +
               " vs psnr(30)=" + fmt(psnr30);
  return out;
}

Outcome criterion9_determinism() {
  Outcome out;
  const fs::path tmp = fs::temp_directory_path() / "inrecon-acceptance-det";
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  {
    std::ofstream cfg(tmp / "run.cfg");
    cfg << "[scenario]\nheight = 48\nwidth = 48\ncoils = 4\nacceleration = 3\nacs = 8\nseed = 5\n"
        << "[encoding]\nlevels = 4\ntable_size = 1024\n"
        << "[unroll]\nepochs = 60\nmlp_hidden = 16\n";
  }
  auto run = [&](const std::string &sub) {
    const std::string cmd = std::string(INRECON_CLI_PATH) + " recon --config " +
                            (tmp / "run.cfg").string() + " --out " + (tmp / sub).string() +
                            " >/dev/null 2>&1";
    return WEXITSTATUS(std::system(cmd.c_str()));
  };
  if (run("a") != 0 || run("b") != 0) {
    out.pass = false;
    out.detail = "recon runs failed";
    return out;
  }
  const bool arrays = read_text((tmp / "a" / "recon.cxg").string()) ==
                      read_text((tmp / "b" / "recon.cxg").string());
  const bool logs = read_text((tmp / "a" / "loss_log.csv").string()) ==
                    read_text((tmp / "b" / "loss_log.csv").string());
  out.pass = arrays && logs;
  out.detail = std::string("arrays ") + (arrays ? "identical" : "DIFFER") + ", loss logs " +
               (logs ? "identical" : "DIFFER");
  fs::remove_all(tmp);
  return out;
}

Outcome criterion10_io() {
  Outcome out;
  const fs::path tmp = fs::temp_directory_path() / "inrecon-acceptance-io";
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  Rng rng(1010);
  bool all = true;
  for (int trial = 0; trial < 1000; ++trial) {
    StoredArray a;
    const int ndim = 1 + static_cast<int>(rng.below(3));
    a.dims.resize(ndim);
    size_t n = 1;
    for (int d = 0; d < ndim; ++d) {
      a.dims[d] = 1 + static_cast<uint32_t>(rng.below(8));
      n *= a.dims[d];
    }
    a.dtype = static_cast<ArrayDtype>(1 + rng.below(3));
    if (a.dtype == ArrayDtype::float64) {
      a.rvalues.resize(n);
      for (double &v : a.rvalues) v = rng.uniform(-100, 100);
    } else {
      a.cvalues.resize(n);
      for (cx &v : a.cvalues) {
        if (a.dtype == ArrayDtype::complex64)
          v = cx(static_cast<float>(rng.uniform(-100, 100)),
                 static_cast<float>(rng.uniform(-100, 100)));
        else
          v = cx(rng.uniform(-100, 100), rng.uniform(-100, 100));
      }
    }
    const std::string p = (tmp / "t.cxg").string();
    write_array(p, a);
    StoredArray b = read_array(p);
    all = all && b.dtype == a.dtype && b.dims == a.dims && b.cvalues == a.cvalues &&
          b.rvalues == a.rvalues;
  }

  // malformed files: distinct error codes
  ComplexGrid g(4, 4);
  g.at(1, 2) = cx(1.0, -1.0);
  const std::string p = (tmp / "ok.cxg").string();
  write_array(p, from_grid(g));
  std::string bytes = read_text(p);
  bool codes = true;
  {
    std::string bad = bytes;
    bad[1] = 'z';
    write_text_atomic((tmp / "m.cxg").string(), bad);
    try {
      read_array((tmp / "m.cxg").string());
      codes = false;
    } catch (const ArrayIoError &e) {
      codes = codes && e.code == ArrayIoError::Code::bad_magic;
    }
    write_text_atomic((tmp / "t2.cxg").string(), bytes.substr(0, bytes.size() - 3));
    try {
      read_array((tmp / "t2.cxg").string());
      codes = false;
    } catch (const ArrayIoError &e) {
      codes = codes && e.code == ArrayIoError::Code::truncated;
    }
    std::string unk = bytes;
    unk[16] = 7;
    write_text_atomic((tmp / "u.cxg").string(), unk);
    try {
      read_array((tmp / "u.cxg").string());
      codes = false;
    } catch (const ArrayIoError &e) {
      codes = codes && e.code == ArrayIoError::Code::unknown_dtype;
    }
  }
  fs::remove_all(tmp);
  out.pass = all && codes;
  out.detail = std::string("1000 round trips ") + (all ? "bit-exact" : "FAILED") +
               ", error codes " + (codes ? "as specified" : "WRONG");
  return out;
}

}  // namespace

int main(int argc, char **argv) {
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"operator correctness", criterion1_operators},
      {"cg vs dense oracle", criterion2_cg_oracle},
      {"gradient suite", criterion3_gradients},
      {"mask fidelity", criterion4_masks},
      {"desk-scale reconstruction", criterion5_desk_recon},
      {"ablation ordering", criterion6_ablation},
      {"pattern generalization", criterion7_patterns},
      {"sweep harness", criterion8_sweeps},
      {"determinism", criterion9_determinism},
      {"array format round trip", criterion10_io},
  };

  int failures = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    Outcome o;
    const double t0 = now_s();
    try {
      o = criteria[i].second();
    } catch (const std::exception &e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double elapsed = now_s() - t0;
    std::printf("%s criterion %d (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id,
                criteria[i].first.c_str(), o.detail.c_str(), elapsed);
    if (!o.warning.empty()) std::printf("WARN criterion %d: %s\n", id, o.warning.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
