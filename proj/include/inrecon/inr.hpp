#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "inrecon/core.hpp"

namespace inrecon {

// Multi-resolution grid geometry: level l lives on an N_l x N_l cell grid with
// N_l = floor(n_min * growth^l), features looked up through a fixed-size table.
struct HashEncodingConfig {
  int levels = 8;
  int table_size = 1 << 14;
  int features = 2;
  int n_min = 8;
  double growth = 1.3459;

  int level_resolution(int level) const;
  int encoded_dim() const { return levels * features; }
  void validate() const;
};

// growth chosen so the finest level resolves about half the image resolution
HashEncodingConfig default_encoding(int height, int width);

struct HashTables {
  int levels = 0;
  int table_size = 0;
  int features = 0;
  std::vector<double> feats;  // [level][slot][feature]

  double *slot(int level, uint32_t idx) {
    return feats.data() + (static_cast<size_t>(level) * table_size + idx) * features;
  }
  const double *slot(int level, uint32_t idx) const {
    return feats.data() + (static_cast<size_t>(level) * table_size + idx) * features;
  }
  size_t param_count() const { return feats.size(); }
};

struct MlpLayer {
  int in = 0;
  int out = 0;
  std::vector<double> weights;  // row-major, out x in
  std::vector<double> bias;     // out
};

struct MlpParams {
  std::vector<MlpLayer> layers;
  int input_dim() const { return layers.empty() ? 0 : layers.front().in; }
  int output_dim() const { return layers.empty() ? 0 : layers.back().out; }
  size_t param_count() const;
};

// The trainable state: per-level feature tables plus the shallow MLP.
struct InrParams {
  HashEncodingConfig config;
  HashTables tables;
  MlpParams mlp;
  size_t param_count() const { return tables.param_count() + mlp.param_count(); }
};

InrParams zeros_like(const InrParams &p);
std::vector<double> pack_params(const InrParams &p);
void unpack_params(std::span<const double> flat, InrParams &p);

// Hash features ~ U(-1e-4, 1e-4); MLP weights Glorot-uniform, biases zero.
// hidden_widths lists the hidden layer sizes (output width is fixed at 2).
InrParams init_inr(const HashEncodingConfig &config, const std::vector<int> &hidden_widths,
                   Rng &rng);

// Normalized pixel-center coordinate of pixel (r,c) on an h x w grid.
inline void pixel_coord(int r, int c, int h, int w, double &vx, double &vy) {
  vx = (c + 0.5) / w;
  vy = (r + 0.5) / h;
}

struct EncodeCache {
  std::vector<uint32_t> slots;   // levels*4 corner table indices
  std::vector<double> weights;   // levels*4 bilinear weights
  bool clamped = false;
};

// Bilinear interpolation of the 4 enclosing corner features at every level,
// concatenated coarse-to-fine into out_features (length levels*features).
// Coordinates outside [0,1]^2 are clamped and flagged in the cache.
void hash_encode(double vx, double vy, const HashEncodingConfig &config, const HashTables &tables,
                 std::span<double> out_features, EncodeCache *cache);

// Scatter grad_features back onto the 4 corner slots per level; colliding
// corners accumulate.
void hash_encode_backward(const EncodeCache &cache, const HashEncodingConfig &config,
                          std::span<const double> grad_features, HashTables &grad_tables);

struct MlpCache {
  // acts[0] is the input; acts[l] the post-activation output of layer l
  std::vector<std::vector<double>> acts;
};

// Affine layers with ReLU on hidden layers, identity output.
void mlp_forward(const MlpParams &mlp, std::span<const double> input, std::span<double> output,
                 MlpCache *cache);

// Reverse-mode pass; ReLU subgradient at 0 is 0. Parameter gradients
// accumulate into grad_mlp, the input gradient is written to grad_input.
void mlp_backward(const MlpParams &mlp, const MlpCache &cache, std::span<const double> grad_output,
                  MlpParams &grad_mlp, std::span<double> grad_input);

struct RenderCache {
  int height = 0;
  int width = 0;
  std::vector<EncodeCache> encode;
  std::vector<MlpCache> mlp;
  bool any_clamped = false;
};

// Evaluates encode + MLP at every pixel-center coordinate; the two output
// channels are the real and imaginary image parts.
ComplexGrid render(const InrParams &params, int height, int width, RenderCache *cache);

// Accumulates per-pixel backward passes in fixed row-major order; grad_z maps
// onto the (Re, Im) channels as (Re(grad), Im(grad)).
void render_backward(const InrParams &params, const RenderCache &cache, const ComplexGrid &grad_z,
                     InrParams &grad);

}  // namespace inrecon
