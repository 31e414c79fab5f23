#include "inrecon/inr.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace inrecon {

int HashEncodingConfig::level_resolution(int level) const {
  return static_cast<int>(std::floor(n_min * std::pow(growth, level)));
}

void HashEncodingConfig::validate() const {
  if (levels < 1 || table_size < 1 || features < 1 || n_min < 1)
    throw std::invalid_argument("HashEncodingConfig: all dimensions must be positive");
  if (growth <= 1.0) throw std::invalid_argument("HashEncodingConfig: growth factor must exceed 1");
}

HashEncodingConfig default_encoding(int height, int width) {
  HashEncodingConfig cfg;
  const double target = std::max(2.0, std::max(height, width) / 2.0);
  cfg.growth = std::pow(target / cfg.n_min, 1.0 / (cfg.levels - 1));
  if (cfg.growth <= 1.0) cfg.growth = 1.0 + 1e-9;
  return cfg;
}

size_t MlpParams::param_count() const {
  size_t n = 0;
  for (const MlpLayer &l : layers) n += l.weights.size() + l.bias.size();
  return n;
}

InrParams zeros_like(const InrParams &p) {
  InrParams z;
  z.config = p.config;
  z.tables.levels = p.tables.levels;
  z.tables.table_size = p.tables.table_size;
  z.tables.features = p.tables.features;
  z.tables.feats.assign(p.tables.feats.size(), 0.0);
  z.mlp.layers.resize(p.mlp.layers.size());
  for (size_t i = 0; i < p.mlp.layers.size(); ++i) {
    z.mlp.layers[i].in = p.mlp.layers[i].in;
    z.mlp.layers[i].out = p.mlp.layers[i].out;
    z.mlp.layers[i].weights.assign(p.mlp.layers[i].weights.size(), 0.0);
    z.mlp.layers[i].bias.assign(p.mlp.layers[i].bias.size(), 0.0);
  }
  return z;
}

std::vector<double> pack_params(const InrParams &p) {
  std::vector<double> flat;
  flat.reserve(p.param_count());
  flat.insert(flat.end(), p.tables.feats.begin(), p.tables.feats.end());
  for (const MlpLayer &l : p.mlp.layers) {
    flat.insert(flat.end(), l.weights.begin(), l.weights.end());
    flat.insert(flat.end(), l.bias.begin(), l.bias.end());
  }
  return flat;
}

void unpack_params(std::span<const double> flat, InrParams &p) {
  if (flat.size() != p.param_count())
    throw std::invalid_argument("unpack_params: flat length disagrees with parameter shape");
  size_t off = 0;
  std::copy(flat.begin(), flat.begin() + p.tables.feats.size(), p.tables.feats.begin());
  off += p.tables.feats.size();
  for (MlpLayer &l : p.mlp.layers) {
    std::copy(flat.begin() + off, flat.begin() + off + l.weights.size(), l.weights.begin());
    off += l.weights.size();
    std::copy(flat.begin() + off, flat.begin() + off + l.bias.size(), l.bias.begin());
    off += l.bias.size();
  }
}

InrParams init_inr(const HashEncodingConfig &config, const std::vector<int> &hidden_widths,
                   Rng &rng) {
  config.validate();
  for (int w : hidden_widths)
    if (w < 1) throw std::invalid_argument("init_inr: hidden widths must be positive");

  InrParams p;
  p.config = config;
  p.tables.levels = config.levels;
  p.tables.table_size = config.table_size;
  p.tables.features = config.features;
  p.tables.feats.resize(static_cast<size_t>(config.levels) * config.table_size * config.features);
  for (double &f : p.tables.feats) f = rng.uniform(-1e-4, 1e-4);

  std::vector<int> widths;
  widths.push_back(config.encoded_dim());
  widths.insert(widths.end(), hidden_widths.begin(), hidden_widths.end());
  widths.push_back(2);
  for (size_t i = 0; i + 1 < widths.size(); ++i) {
    MlpLayer l;
    l.in = widths[i];
    l.out = widths[i + 1];
    const double bound = std::sqrt(6.0 / (l.in + l.out));
    l.weights.resize(static_cast<size_t>(l.out) * l.in);
    for (double &w : l.weights) w = rng.uniform(-bound, bound);
    l.bias.assign(l.out, 0.0);
    p.mlp.layers.push_back(std::move(l));
  }
  return p;
}

namespace {

inline uint32_t corner_slot(int x, int y, int resolution, int table_size) {
  const long long verts = static_cast<long long>(resolution + 1) * (resolution + 1);
  if (verts <= table_size)
    return static_cast<uint32_t>(y) * (resolution + 1) + static_cast<uint32_t>(x);
  const uint32_t hashed = static_cast<uint32_t>(x) ^ (static_cast<uint32_t>(y) * 2654435761u);
  return hashed % static_cast<uint32_t>(table_size);
}

}  // namespace

void hash_encode(double vx, double vy, const HashEncodingConfig &config, const HashTables &tables,
                 std::span<double> out_features, EncodeCache *cache) {
  const int L = config.levels, F = config.features;
  if (out_features.size() != static_cast<size_t>(L) * F)
    throw std::invalid_argument("hash_encode: output span has wrong length");

  bool clamped = false;
  if (vx < 0.0 || vx > 1.0 || vy < 0.0 || vy > 1.0) {
    clamped = true;
    vx = std::clamp(vx, 0.0, 1.0);
    vy = std::clamp(vy, 0.0, 1.0);
  }
  if (cache) {
    cache->slots.resize(static_cast<size_t>(L) * 4);
    cache->weights.resize(static_cast<size_t>(L) * 4);
    cache->clamped = clamped;
  }

  for (int l = 0; l < L; ++l) {
    const int n = config.level_resolution(l);
    const double sx = vx * n, sy = vy * n;
    int x0 = std::min(static_cast<int>(sx), n - 1);
    int y0 = std::min(static_cast<int>(sy), n - 1);
    const double fx = sx - x0, fy = sy - y0;

    const uint32_t s00 = corner_slot(x0, y0, n, config.table_size);
    const uint32_t s10 = corner_slot(x0 + 1, y0, n, config.table_size);
    const uint32_t s01 = corner_slot(x0, y0 + 1, n, config.table_size);
    const uint32_t s11 = corner_slot(x0 + 1, y0 + 1, n, config.table_size);
    const double w00 = (1.0 - fx) * (1.0 - fy);
    const double w10 = fx * (1.0 - fy);
    const double w01 = (1.0 - fx) * fy;
    const double w11 = fx * fy;

    const double *f00 = tables.slot(l, s00);
    const double *f10 = tables.slot(l, s10);
    const double *f01 = tables.slot(l, s01);
    const double *f11 = tables.slot(l, s11);
    double *out = out_features.data() + static_cast<size_t>(l) * F;
    for (int f = 0; f < F; ++f)
      out[f] = w00 * f00[f] + w10 * f10[f] + w01 * f01[f] + w11 * f11[f];

    if (cache) {
      uint32_t *cs = cache->slots.data() + static_cast<size_t>(l) * 4;
      double *cw = cache->weights.data() + static_cast<size_t>(l) * 4;
      cs[0] = s00; cs[1] = s10; cs[2] = s01; cs[3] = s11;
      cw[0] = w00; cw[1] = w10; cw[2] = w01; cw[3] = w11;
    }
  }
}

void hash_encode_backward(const EncodeCache &cache, const HashEncodingConfig &config,
                          std::span<const double> grad_features, HashTables &grad_tables) {
  const int L = config.levels, F = config.features;
  for (int l = 0; l < L; ++l) {
    const uint32_t *cs = cache.slots.data() + static_cast<size_t>(l) * 4;
    const double *cw = cache.weights.data() + static_cast<size_t>(l) * 4;
    const double *g = grad_features.data() + static_cast<size_t>(l) * F;
    for (int k = 0; k < 4; ++k) {
      double *slot = grad_tables.slot(l, cs[k]);
      const double w = cw[k];
      for (int f = 0; f < F; ++f) slot[f] += w * g[f];
    }
  }
}

void mlp_forward(const MlpParams &mlp, std::span<const double> input, std::span<double> output,
                 MlpCache *cache) {
  if (static_cast<int>(input.size()) != mlp.input_dim())
    throw std::invalid_argument("mlp_forward: input width mismatch");
  if (static_cast<int>(output.size()) != mlp.output_dim())
    throw std::invalid_argument("mlp_forward: output width mismatch");

  // activation storage lives in the cache (reused across calls) or in
  // thread-local scratch, so the hot render loop does not allocate
  thread_local MlpCache scratch;
  std::vector<std::vector<double>> &acts = (cache ? *cache : scratch).acts;
  acts.resize(mlp.layers.size() + 1);
  acts[0].assign(input.begin(), input.end());
  for (size_t li = 0; li < mlp.layers.size(); ++li) {
    const MlpLayer &l = mlp.layers[li];
    const bool hidden = li + 1 < mlp.layers.size();
    const std::vector<double> &src = acts[li];
    std::vector<double> &dst = acts[li + 1];
    dst.resize(l.out);
    for (int o = 0; o < l.out; ++o) {
      const double *wrow = l.weights.data() + static_cast<size_t>(o) * l.in;
      double s = l.bias[o];
      for (int i = 0; i < l.in; ++i) s += wrow[i] * src[i];
      dst[o] = hidden ? std::max(s, 0.0) : s;
    }
  }
  std::copy(acts.back().begin(), acts.back().end(), output.begin());
}

void mlp_backward(const MlpParams &mlp, const MlpCache &cache, std::span<const double> grad_output,
                  MlpParams &grad_mlp, std::span<double> grad_input) {
  std::vector<double> g(grad_output.begin(), grad_output.end());
  std::vector<double> gprev;
  for (size_t li = mlp.layers.size(); li-- > 0;) {
    const MlpLayer &l = mlp.layers[li];
    MlpLayer &gl = grad_mlp.layers[li];
    const std::vector<double> &in_act = cache.acts[li];
    const bool hidden = li + 1 < mlp.layers.size();
    if (hidden) {
      // post-activation value > 0 marks the active side of the ReLU
      const std::vector<double> &out_act = cache.acts[li + 1];
      for (int o = 0; o < l.out; ++o)
        if (out_act[o] <= 0.0) g[o] = 0.0;
    }
    gprev.assign(l.in, 0.0);
    for (int o = 0; o < l.out; ++o) {
      const double go = g[o];
      gl.bias[o] += go;
      double *gw = gl.weights.data() + static_cast<size_t>(o) * l.in;
      const double *wrow = l.weights.data() + static_cast<size_t>(o) * l.in;
      for (int i = 0; i < l.in; ++i) {
        gw[i] += go * in_act[i];
        gprev[i] += go * wrow[i];
      }
    }
    g.swap(gprev);
  }
  std::copy(g.begin(), g.end(), grad_input.begin());
}

ComplexGrid render(const InrParams &params, int height, int width, RenderCache *cache) {
  params.config.validate();
  const int dim = params.config.encoded_dim();
  ComplexGrid z(height, width);
  if (cache) {
    cache->height = height;
    cache->width = width;
    cache->encode.resize(static_cast<size_t>(height) * width);
    cache->mlp.resize(static_cast<size_t>(height) * width);
    cache->any_clamped = false;
  }
  std::vector<double> features(dim);
  double out[2];
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const size_t idx = static_cast<size_t>(r) * width + c;
      double vx, vy;
      pixel_coord(r, c, height, width, vx, vy);
      hash_encode(vx, vy, params.config, params.tables, features,
                  cache ? &cache->encode[idx] : nullptr);
      mlp_forward(params.mlp, features, std::span<double>(out, 2),
                  cache ? &cache->mlp[idx] : nullptr);
      z.data[idx] = cx(out[0], out[1]);
      if (cache && cache->encode[idx].clamped) cache->any_clamped = true;
    }
  }
  return z;
}

void render_backward(const InrParams &params, const RenderCache &cache, const ComplexGrid &grad_z,
                     InrParams &grad) {
  if (grad_z.height != cache.height || grad_z.width != cache.width)
    throw std::invalid_argument("render_backward: gradient shape disagrees with cache");
  const int dim = params.config.encoded_dim();
  std::vector<double> grad_features(dim);
  double grad_out[2];
  for (size_t idx = 0; idx < grad_z.data.size(); ++idx) {
    const cx g = grad_z.data[idx];
    if (g.real() == 0.0 && g.imag() == 0.0) continue;
    grad_out[0] = g.real();
    grad_out[1] = g.imag();
    std::fill(grad_features.begin(), grad_features.end(), 0.0);
    mlp_backward(params.mlp, cache.mlp[idx], std::span<const double>(grad_out, 2), grad.mlp,
                 grad_features);
    hash_encode_backward(cache.encode[idx], params.config, grad_features, grad.tables);
  }
}

}  // namespace inrecon
