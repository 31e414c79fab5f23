#include "inrecon/unroll.hpp"

#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "inrecon/eval.hpp"

namespace inrecon {

void UnrollConfig::validate() const {
  if (num_units < 1) throw std::invalid_argument("UnrollConfig: num_units must be >= 1");
  if (cg_iters < 1) throw std::invalid_argument("UnrollConfig: cg_iters must be >= 1");
  if (lambda_init <= 0.0) throw std::invalid_argument("UnrollConfig: lambda_init must be > 0");
  if (lambda_s_init < 0.0) throw std::invalid_argument("UnrollConfig: lambda_s_init must be >= 0");
  if (epochs < 0) throw std::invalid_argument("UnrollConfig: epochs must be >= 0");
  if (lr_theta <= 0.0 || lr_hparams <= 0.0)
    throw std::invalid_argument("UnrollConfig: learning rates must be > 0");
}

std::string config_fingerprint(const ReconConfig &config, int height, int width, int coils) {
  std::ostringstream s;
  s.precision(17);
  const UnrollConfig &u = config.unroll;
  const HashEncodingConfig &e = config.encoding;
  s << "h=" << height << ";w=" << width << ";coils=" << coils << ";units=" << u.num_units
    << ";cg=" << u.cg_iters << ";lambda=" << u.lambda_init << ";lambda_s=" << u.lambda_s_init
    << ";learnable=" << u.learnable_hparams << ";freeze_ls=" << u.freeze_lambda_s
    << ";dc=" << u.use_dc_units << ";lr=" << u.lr_theta << ";lrh=" << u.lr_hparams
    << ";b1=" << u.beta1 << ";b2=" << u.beta2 << ";eps=" << u.adam_eps << ";epochs=" << u.epochs
    << ";seed=" << u.seed << ";L=" << e.levels << ";T=" << e.table_size << ";F=" << e.features
    << ";nmin=" << e.n_min << ";b=" << e.growth << ";mlp=";
  for (int wdt : config.mlp_hidden) s << wdt << ",";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(s.str())));
  return buf;
}

namespace {

// E^H E x + lambda x, fused per coil with reused buffers; equals
// apply_EH(apply_E(x)) + lambda x (the mask is idempotent).
struct NormalOpWorkspace {
  ComplexGrid weighted, freq, img;
};

void normal_op_into(const ComplexGrid &x, const AcquisitionModel &model, double lambda,
                    ComplexGrid &out, NormalOpWorkspace &ws) {
  const size_t n = x.data.size();
  out.height = x.height;
  out.width = x.width;
  out.data.assign(n, cx(0.0, 0.0));
  ws.weighted.height = x.height;
  ws.weighted.width = x.width;
  ws.weighted.data.resize(n);
  for (const ComplexGrid &coil : model.maps.coils) {
    for (size_t i = 0; i < n; ++i) ws.weighted.data[i] = coil.data[i] * x.data[i];
    fft2c_into(ws.weighted, ws.freq);
    for (size_t i = 0; i < n; ++i)
      if (!model.mask.sampled[i]) ws.freq.data[i] = cx(0.0, 0.0);
    ifft2c_into(ws.freq, ws.img);
    for (size_t i = 0; i < n; ++i) out.data[i] += std::conj(coil.data[i]) * ws.img.data[i];
  }
  for (size_t i = 0; i < n; ++i) out.data[i] += lambda * x.data[i];
}

// CG on (E^H E + lambda I) x = rhs from x = 0.
ComplexGrid solve_normal(const ComplexGrid &rhs, const AcquisitionModel &model, double lambda,
                         int n_iter) {
  ComplexGrid x(rhs.height, rhs.width);
  ComplexGrid r = rhs;
  ComplexGrid p = r;
  ComplexGrid ap;
  NormalOpWorkspace ws;
  double rs_old = 0.0;
  for (const cx &v : r.data) rs_old += std::norm(v);
  const double rhs_norm = std::sqrt(rs_old);
  if (rhs_norm == 0.0) return x;
  const double stop = 1e-10 * rhs_norm;

  for (int it = 0; it < n_iter; ++it) {
    if (std::sqrt(rs_old) < stop) break;
    normal_op_into(p, model, lambda, ap, ws);
    const double p_ap = std::real(dot(p, ap));
    const double alpha = rs_old / p_ap;
    if (!std::isfinite(alpha))
      throw std::runtime_error("cg_solve: non-finite step at iteration " + std::to_string(it));
    double rs_new = 0.0;
    for (size_t i = 0; i < x.data.size(); ++i) {
      x.data[i] += alpha * p.data[i];
      r.data[i] -= alpha * ap.data[i];
      rs_new += std::norm(r.data[i]);
    }
    if (!std::isfinite(rs_new))
      throw std::runtime_error("cg_solve: non-finite residual at iteration " + std::to_string(it));
    const double beta = rs_new / rs_old;
    for (size_t i = 0; i < p.data.size(); ++i) p.data[i] = r.data[i] + beta * p.data[i];
    rs_old = rs_new;
  }
  return x;
}

}  // namespace

ComplexGrid cg_solve(const ComplexGrid &z, const MultiCoilKspace &y, const AcquisitionModel &model,
                     double lambda, int n_iter) {
  if (lambda <= 0.0) throw std::invalid_argument("cg_solve: lambda must be > 0");
  if (n_iter < 1) throw std::invalid_argument("cg_solve: need at least one iteration");
  if (z.height != model.height() || z.width != model.width())
    throw std::invalid_argument("cg_solve: prior shape disagrees with model");
  ComplexGrid rhs = apply_EH(y, model);
  for (size_t i = 0; i < rhs.data.size(); ++i) rhs.data[i] += lambda * z.data[i];
  return solve_normal(rhs, model, lambda, n_iter);
}

DcBackward dc_backward(const ComplexGrid &grad_x, const ComplexGrid &z, const ComplexGrid &x,
                       const AcquisitionModel &model, double lambda, int n_iter) {
  if (lambda <= 0.0) throw std::invalid_argument("dc_backward: lambda must be > 0");
  ComplexGrid s = solve_normal(grad_x, model, lambda, n_iter);
  DcBackward out;
  out.grad_z = ComplexGrid(grad_x.height, grad_x.width);
  for (size_t i = 0; i < s.data.size(); ++i) out.grad_z.data[i] = lambda * s.data[i];
  cx acc(0.0, 0.0);
  for (size_t i = 0; i < s.data.size(); ++i)
    acc += std::conj(s.data[i]) * (z.data[i] - x.data[i]);
  out.grad_lambda = acc.real();
  return out;
}

ComplexGrid unroll_forward(const InrParams &params, const MultiCoilKspace &y,
                           const AcquisitionModel &model, double lambda, const UnrollConfig &config,
                           UnrollCache *cache) {
  config.validate();
  UnrollCache local;
  UnrollCache &c = cache ? *cache : local;
  c.x0 = apply_EH(y, model);
  c.z = render(params, model.height(), model.width(), &c.render);
  c.unit_outputs.clear();
  ComplexGrid x = c.x0;
  for (int t = 0; t < config.num_units; ++t) {
    x = config.use_dc_units ? cg_solve(c.z, y, model, lambda, config.cg_iters) : c.z;
    c.unit_outputs.push_back(x);
  }
  return x;
}

DcLoss loss_dc(const MultiCoilKspace &y, const MultiCoilKspace &y_hat) {
  if (y.num_coils() != y_hat.num_coils() || y.height() != y_hat.height() ||
      y.width() != y_hat.width())
    throw std::invalid_argument("loss_dc: shape mismatch");
  double y_l2sq = 0.0, y_l1 = 0.0;
  for (const ComplexGrid &coil : y.coils)
    for (const cx &v : coil.data) {
      y_l2sq += std::norm(v);
      y_l1 += std::abs(v);
    }
  const double y_l2 = std::sqrt(y_l2sq);
  if (y_l2 == 0.0 || y_l1 == 0.0)
    throw std::invalid_argument("loss_dc: all-zero measurements, normalization undefined");

  double r_l2sq = 0.0, r_l1 = 0.0;
  for (int i = 0; i < y.num_coils(); ++i)
    for (size_t j = 0; j < y.coils[i].data.size(); ++j) {
      const cx r = y.coils[i].data[j] - y_hat.coils[i].data[j];
      r_l2sq += std::norm(r);
      r_l1 += std::abs(r);
    }
  const double r_l2 = std::sqrt(r_l2sq);

  DcLoss out;
  out.value = r_l2 / y_l2 + r_l1 / y_l1;
  out.grad.coils.reserve(y.coils.size());
  for (int i = 0; i < y.num_coils(); ++i) {
    ComplexGrid g(y.height(), y.width());
    for (size_t j = 0; j < g.data.size(); ++j) {
      const cx r = y.coils[i].data[j] - y_hat.coils[i].data[j];
      cx term(0.0, 0.0);
      if (r_l2 > 0.0) term += r / (r_l2 * y_l2);
      const double mag = std::abs(r);
      if (mag > 0.0) term += (r / mag) / y_l1;
      g.data[j] = -term;
    }
    out.grad.coils.push_back(std::move(g));
  }
  return out;
}

TvLoss loss_tv(const ComplexGrid &x) {
  TvLoss out;
  out.grad = ComplexGrid(x.height, x.width);
  for (int r = 0; r + 1 < x.height; ++r)
    for (int c = 0; c < x.width; ++c) {
      const cx d = x.at(r + 1, c) - x.at(r, c);
      const double mag = std::abs(d);
      out.value += mag;
      if (mag > 0.0) {
        const cx u = d / mag;
        out.grad.at(r + 1, c) += u;
        out.grad.at(r, c) -= u;
      }
    }
  for (int r = 0; r < x.height; ++r)
    for (int c = 0; c + 1 < x.width; ++c) {
      const cx d = x.at(r, c + 1) - x.at(r, c);
      const double mag = std::abs(d);
      out.value += mag;
      if (mag > 0.0) {
        const cx u = d / mag;
        out.grad.at(r, c + 1) += u;
        out.grad.at(r, c) -= u;
      }
    }
  return out;
}

TotalLoss total_loss(const MultiCoilKspace &y, const ComplexGrid &x_hat,
                     const AcquisitionModel &model, double lambda_s) {
  MultiCoilKspace y_hat = apply_E(x_hat, model);
  DcLoss dc = loss_dc(y, y_hat);
  TvLoss tv = loss_tv(x_hat);

  TotalLoss out;
  out.dc = dc.value;
  out.tv = tv.value;
  out.total = dc.value + lambda_s * tv.value;
  out.grad_x = apply_EH(dc.grad, model);
  for (size_t i = 0; i < out.grad_x.data.size(); ++i)
    out.grad_x.data[i] += lambda_s * tv.grad.data[i];
  out.grad_lambda_s = tv.value;
  return out;
}

void adam_step(AdamState &state, std::span<std::span<double>> params,
               std::span<std::span<const double>> grads) {
  if (params.size() != grads.size())
    throw std::invalid_argument("adam_step: group count mismatch");
  for (size_t g = 0; g < grads.size(); ++g) {
    if (params[g].size() != grads[g].size())
      throw std::invalid_argument("adam_step: group size mismatch");
    for (double v : grads[g])
      if (!std::isfinite(v)) throw std::runtime_error("adam_step: non-finite gradient");
  }
  if (state.m.empty()) {
    state.m.resize(params.size());
    state.v.resize(params.size());
    for (size_t g = 0; g < params.size(); ++g) {
      state.m[g].assign(params[g].size(), 0.0);
      state.v[g].assign(params[g].size(), 0.0);
    }
  }
  ++state.step_count;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
  for (size_t g = 0; g < params.size(); ++g) {
    double *m = state.m[g].data();
    double *v = state.v[g].data();
    double *p = params[g].data();
    const double *gr = grads[g].data();
    const size_t n = params[g].size();
    for (size_t i = 0; i < n; ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * gr[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * gr[i] * gr[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

double softplus(double x) {
  if (x > 30.0) return x;
  return std::log1p(std::exp(x));
}

double softplus_inverse(double y) {
  if (y > 30.0) return y;
  return std::log(std::expm1(y));
}

namespace {

struct ThetaGroups {
  std::vector<std::span<double>> params;
  std::vector<std::span<const double>> grads;
};

ThetaGroups theta_groups(InrParams &p, const InrParams &g) {
  ThetaGroups out;
  out.params.push_back(std::span<double>(p.tables.feats));
  out.grads.push_back(std::span<const double>(g.tables.feats));
  for (size_t i = 0; i < p.mlp.layers.size(); ++i) {
    out.params.push_back(std::span<double>(p.mlp.layers[i].weights));
    out.grads.push_back(std::span<const double>(g.mlp.layers[i].weights));
    out.params.push_back(std::span<double>(p.mlp.layers[i].bias));
    out.grads.push_back(std::span<const double>(g.mlp.layers[i].bias));
  }
  return out;
}

void zero_grads(InrParams &g) {
  std::fill(g.tables.feats.begin(), g.tables.feats.end(), 0.0);
  for (MlpLayer &l : g.mlp.layers) {
    std::fill(l.weights.begin(), l.weights.end(), 0.0);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
}

}  // namespace

TrainResult train(const MultiCoilKspace &y, const AcquisitionModel &model,
                  const ReconConfig &config_in, const ComplexGrid *reference) {
  const auto t_start = std::chrono::steady_clock::now();

  ReconConfig config = config_in;
  config.unroll.validate();
  if (config.encoding.growth <= 1.0) {
    // finest level targets about half the image resolution
    const double target = std::max(2.0, std::max(model.height(), model.width()) / 2.0);
    config.encoding.growth =
        std::pow(target / config.encoding.n_min, 1.0 / std::max(1, config.encoding.levels - 1));
    if (config.encoding.growth <= 1.0) config.encoding.growth = 1.0 + 1e-9;
  }
  config.encoding.validate();

  // scale so max |E^H y| = 1; undone on the returned image
  ComplexGrid x0 = apply_EH(y, model);
  const double scale = max_abs(x0);
  if (scale <= 0.0) throw std::runtime_error("train: all-zero measurements");
  MultiCoilKspace ys;
  ys.coils.reserve(y.coils.size());
  for (const ComplexGrid &coil : y.coils) ys.coils.push_back((cx(1.0 / scale, 0.0)) * coil);

  TrainState state;
  Rng rng(config.unroll.seed);
  state.params = init_inr(config.encoding, config.mlp_hidden, rng);
  state.rho = softplus_inverse(config.unroll.lambda_init);
  state.lambda = config.unroll.lambda_init;
  state.lambda_s = config.unroll.lambda_s_init;
  state.opt_theta.lr = config.unroll.lr_theta;
  state.opt_theta.beta1 = config.unroll.beta1;
  state.opt_theta.beta2 = config.unroll.beta2;
  state.opt_theta.eps = config.unroll.adam_eps;
  state.opt_hparams = state.opt_theta;
  state.opt_hparams.lr = config.unroll.lr_hparams;

  InrParams grads = zeros_like(state.params);
  UnrollCache cache;

  for (int epoch = 0; epoch < config.unroll.epochs; ++epoch) {
    state.lambda = softplus(state.rho);
    ComplexGrid x_hat = unroll_forward(state.params, ys, model, state.lambda, config.unroll, &cache);
    TotalLoss loss = total_loss(ys, x_hat, model, state.lambda_s);
    state.history.push_back(
        {epoch, loss.total, loss.dc, loss.tv, state.lambda, state.lambda_s});
    state.epoch = epoch + 1;

    if (!std::isfinite(loss.total))
      throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch));
    if (loss.total > 1e3 * state.history.front().total)
      throw std::runtime_error("train: diverged at epoch " + std::to_string(epoch) + " (loss " +
                               std::to_string(loss.total) + " vs initial " +
                               std::to_string(state.history.front().total) + ")");

    zero_grads(grads);
    double grad_lambda = 0.0;
    if (config.unroll.use_dc_units) {
      // z is parameter-only, so only the last unit carries gradient
      DcBackward db = dc_backward(loss.grad_x, cache.z, cache.unit_outputs.back(), model,
                                  state.lambda, config.unroll.cg_iters);
      render_backward(state.params, cache.render, db.grad_z, grads);
      grad_lambda = db.grad_lambda;
    } else {
      render_backward(state.params, cache.render, loss.grad_x, grads);
    }

    ThetaGroups tg = theta_groups(state.params, grads);
    adam_step(state.opt_theta, tg.params, tg.grads);

    if (config.unroll.learnable_hparams) {
      const double sig = 1.0 / (1.0 + std::exp(-state.rho));
      const double grad_rho = grad_lambda * sig;
      const double grad_ls = config.unroll.freeze_lambda_s ? 0.0 : loss.grad_lambda_s;
      double h[2] = {state.rho, state.lambda_s};
      const double gh[2] = {grad_rho, grad_ls};
      std::span<double> hp[2] = {std::span<double>(h, 1), std::span<double>(h + 1, 1)};
      std::span<const double> hg[2] = {std::span<const double>(gh, 1),
                                       std::span<const double>(gh + 1, 1)};
      adam_step(state.opt_hparams, hp, hg);
      state.rho = h[0];
      state.lambda_s = config.unroll.freeze_lambda_s ? config.unroll.lambda_s_init
                                                     : std::max(h[1], 0.0);
    }

    // relative loss change below 1e-6 over 50 epochs stops the run
    const size_t n = state.history.size();
    if (n > 50) {
      const double prev = state.history[n - 51].total;
      if (prev != 0.0 && std::abs(state.history[n - 1].total - prev) / std::abs(prev) < 1e-6)
        break;
    }
  }

  state.lambda = softplus(state.rho);
  ComplexGrid x_final = unroll_forward(state.params, ys, model, state.lambda, config.unroll, &cache);

  TrainResult out;
  out.report.x_hat = cx(scale, 0.0) * x_final;
  out.report.history = state.history;
  out.report.lambda_final = state.lambda;
  out.report.lambda_s_final = state.lambda_s;
  if (reference) {
    out.report.psnr_db = psnr(*reference, out.report.x_hat);
    out.report.ssim = ssim(*reference, out.report.x_hat);
  }
  out.report.fingerprint =
      config_fingerprint(config, model.height(), model.width(), model.num_coils());
  out.report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  out.state = std::move(state);
  return out;
}

}  // namespace inrecon
