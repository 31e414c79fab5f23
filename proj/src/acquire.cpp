#include "inrecon/acquire.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace inrecon {

const char *to_string(MaskPattern p) {
  switch (p) {
    case MaskPattern::random_lines: return "random-lines";
    case MaskPattern::uniform_lines: return "uniform-lines";
    case MaskPattern::radial: return "radial";
    case MaskPattern::spiral: return "spiral";
  }
  return "?";
}

MaskPattern mask_pattern_from_string(const std::string &s) {
  if (s == "random-lines") return MaskPattern::random_lines;
  if (s == "uniform-lines") return MaskPattern::uniform_lines;
  if (s == "radial") return MaskPattern::radial;
  if (s == "spiral") return MaskPattern::spiral;
  throw std::invalid_argument("unknown mask pattern: " + s);
}

bool is_line_pattern(MaskPattern p) {
  return p == MaskPattern::random_lines || p == MaskPattern::uniform_lines;
}

size_t SamplingMask::count() const {
  size_t n = 0;
  for (uint8_t v : sampled) n += v;
  return n;
}

double SamplingMask::undersampling_rate() const {
  return static_cast<double>(count()) / (static_cast<double>(height) * width);
}

int SamplingMask::sampled_lines() const {
  int lines = 0;
  for (int c = 0; c < width; ++c) {
    bool all = true;
    for (int r = 0; r < height; ++r)
      if (!at(r, c)) { all = false; break; }
    if (all) ++lines;
  }
  return lines;
}

AcquisitionModel::AcquisitionModel(SensitivityMaps m, SamplingMask k)
    : maps(std::move(m)), mask(std::move(k)) {
  if (maps.num_coils() < 1) throw std::invalid_argument("AcquisitionModel: need at least one coil");
  if (maps.height() != mask.height || maps.width() != mask.width)
    throw std::invalid_argument("AcquisitionModel: maps and mask shapes disagree");
}

namespace {

// Central block [start, start+acs) of a width-n axis.
int acs_start(int n, int acs) { return (n - acs) / 2; }

SamplingMask all_ones_mask(MaskPattern pattern, int height, int width, int acs) {
  SamplingMask m;
  m.height = height;
  m.width = width;
  m.pattern = pattern;
  m.acs = acs;
  m.sampled.assign(static_cast<size_t>(height) * width, 1);
  return m;
}

SamplingMask lines_to_mask(MaskPattern pattern, int height, int width, int acs,
                           const std::vector<uint8_t> &line) {
  SamplingMask m;
  m.height = height;
  m.width = width;
  m.pattern = pattern;
  m.acs = acs;
  m.sampled.assign(static_cast<size_t>(height) * width, 0);
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) m.sampled[static_cast<size_t>(r) * width + c] = line[c];
  return m;
}

SamplingMask gen_line_mask(MaskPattern pattern, int height, int width, double accel, int acs,
                           Rng &rng) {
  if (acs >= width) throw std::invalid_argument("gen_mask: acs must be smaller than width");
  // Table-1 counts: floor(width/R) lines realize the published rates
  // (368 at R=10 gives 36 lines, 9.78%).
  const int n_lines = static_cast<int>(std::floor(static_cast<double>(width) / accel + 1e-9));
  if (n_lines < acs)
    throw std::invalid_argument("gen_mask: floor(width/R) < acs; lower acs or R");

  std::vector<uint8_t> line(width, 0);
  const int start = acs_start(width, acs);
  for (int c = start; c < start + acs; ++c) line[c] = 1;

  std::vector<int> outside;
  outside.reserve(width - acs);
  for (int c = 0; c < width; ++c)
    if (!line[c]) outside.push_back(c);

  const int extra = n_lines - acs;
  if (pattern == MaskPattern::random_lines) {
    // partial Fisher-Yates: uniform without replacement
    for (int j = 0; j < extra; ++j) {
      const size_t pick = j + rng.below(outside.size() - j);
      std::swap(outside[j], outside[pick]);
      line[outside[j]] = 1;
    }
  } else {
    const size_t m = outside.size();
    for (int j = 0; j < extra; ++j)
      line[outside[static_cast<size_t>(j) * m / extra]] = 1;
  }
  return lines_to_mask(pattern, height, width, acs, line);
}

void stamp_acs_square(std::vector<uint8_t> &grid, int height, int width, int acs) {
  const int r0 = acs_start(height, acs), c0 = acs_start(width, acs);
  for (int r = r0; r < r0 + acs; ++r)
    for (int c = c0; c < c0 + acs; ++c) grid[static_cast<size_t>(r) * width + c] = 1;
}

size_t count_ones(const std::vector<uint8_t> &grid) {
  size_t n = 0;
  for (uint8_t v : grid) n += v;
  return n;
}

void rasterize_spoke(std::vector<uint8_t> &grid, int height, int width, double theta) {
  const double cy = height / 2, cx = width / 2;
  const double r_max = 0.5 * std::hypot(height, width);
  const double ct = std::cos(theta), st = std::sin(theta);
  for (double t = -r_max; t <= r_max; t += 0.5) {
    const int r = static_cast<int>(std::lround(cy + t * st));
    const int c = static_cast<int>(std::lround(cx + t * ct));
    if (r >= 0 && r < height && c >= 0 && c < width)
      grid[static_cast<size_t>(r) * width + c] = 1;
  }
}

SamplingMask gen_radial_mask(int height, int width, double accel, int acs, Rng & /*rng*/) {
  const double target = 1.0 / accel;
  const double total = static_cast<double>(height) * width;

  std::vector<uint8_t> grid(static_cast<size_t>(height) * width, 0);
  stamp_acs_square(grid, height, width, acs);
  double rate = count_ones(grid) / total;
  const double acs_rate = rate;
  if (rate > target + 0.01) {
    throw std::invalid_argument(
        "gen_mask: radial density infeasible; ACS square alone samples " +
        std::to_string(acs_rate * 100) + "%, achievable rates are [" +
        std::to_string(acs_rate * 100) + "%, 100%]");
  }

  // golden-angle spoke sequence; coverage grows monotonically with spokes
  const double golden = std::numbers::pi * (std::sqrt(5.0) - 1.0) / 2.0;
  double best_diff = std::abs(rate - target);
  std::vector<uint8_t> best = grid;
  const int max_spokes = 8 * std::max(height, width);
  for (int s = 0; s < max_spokes && rate < target; ++s) {
    rasterize_spoke(grid, height, width, std::fmod(s * golden, std::numbers::pi));
    rate = count_ones(grid) / total;
    if (std::abs(rate - target) < best_diff) {
      best_diff = std::abs(rate - target);
      best = grid;
    }
  }
  if (best_diff > 0.01)
    throw std::invalid_argument("gen_mask: radial density cannot reach " +
                                std::to_string(target * 100) + "% within 1 percentage point");

  SamplingMask m;
  m.height = height;
  m.width = width;
  m.pattern = MaskPattern::radial;
  m.acs = acs;
  m.sampled = std::move(best);
  return m;
}

double rasterize_spiral(std::vector<uint8_t> &grid, int height, int width, int acs, double pitch) {
  std::fill(grid.begin(), grid.end(), 0);
  stamp_acs_square(grid, height, width, acs);
  const double cy = height / 2, cx = width / 2;
  const double r_max = 0.5 * std::hypot(height, width);
  // r = pitch * phi, stepped at equal arc length
  double phi = 0.0;
  const double ds = 0.5;
  while (pitch * phi <= r_max) {
    const double rad = pitch * phi;
    const int r = static_cast<int>(std::lround(cy + rad * std::sin(phi)));
    const int c = static_cast<int>(std::lround(cx + rad * std::cos(phi)));
    if (r >= 0 && r < height && c >= 0 && c < width)
      grid[static_cast<size_t>(r) * width + c] = 1;
    phi += ds / (pitch * std::sqrt(1.0 + phi * phi) + 1e-12);
  }
  return count_ones(grid) / (static_cast<double>(height) * width);
}

SamplingMask gen_spiral_mask(int height, int width, double accel, int acs, Rng & /*rng*/) {
  const double target = 1.0 / accel;
  std::vector<uint8_t> grid(static_cast<size_t>(height) * width, 0);

  double lo = 0.02, hi = 2.0 * std::max(height, width);  // rate decreasing in pitch
  const double rate_lo = rasterize_spiral(grid, height, width, acs, lo);
  const double rate_hi = rasterize_spiral(grid, height, width, acs, hi);
  if (target > rate_lo + 0.01 || target < rate_hi - 0.01)
    throw std::invalid_argument("gen_mask: spiral density cannot reach " +
                                std::to_string(target * 100) + "%; achievable rates are [" +
                                std::to_string(rate_hi * 100) + "%, " +
                                std::to_string(rate_lo * 100) + "%]");

  double rate = 0.0;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    rate = rasterize_spiral(grid, height, width, acs, mid);
    if (rate > target)
      lo = mid;
    else
      hi = mid;
    if (std::abs(rate - target) < 2e-3) break;
  }
  if (std::abs(rate - target) > 0.01)
    throw std::invalid_argument("gen_mask: spiral bisection missed " + std::to_string(target * 100) +
                                "% by more than 1 percentage point");

  SamplingMask m;
  m.height = height;
  m.width = width;
  m.pattern = MaskPattern::spiral;
  m.acs = acs;
  m.sampled = std::move(grid);
  return m;
}

}  // namespace

SamplingMask gen_mask(MaskPattern pattern, int height, int width, double accel, int acs, Rng &rng) {
  if (height <= 0 || width <= 0) throw std::invalid_argument("gen_mask: dimensions must be positive");
  if (accel < 1.0) throw std::invalid_argument("gen_mask: acceleration must be >= 1");
  if (acs < 0) throw std::invalid_argument("gen_mask: acs must be non-negative");
  if (accel == 1.0) return all_ones_mask(pattern, height, width, acs);
  switch (pattern) {
    case MaskPattern::random_lines:
    case MaskPattern::uniform_lines:
      return gen_line_mask(pattern, height, width, accel, acs, rng);
    case MaskPattern::radial:
      return gen_radial_mask(height, width, accel, acs, rng);
    case MaskPattern::spiral:
      return gen_spiral_mask(height, width, accel, acs, rng);
  }
  throw std::invalid_argument("gen_mask: unknown pattern");
}

SensitivityMaps synth_sensitivities(int num_coils, int height, int width) {
  if (num_coils < 1) throw std::invalid_argument("synth_sensitivities: need at least one coil");
  const double cy = (height - 1) / 2.0, cx = (width - 1) / 2.0;
  const double ring = 0.5 * std::max(height, width);
  const double sigma = 0.45 * std::max(height, width);
  const double ramp = 1.2 * std::numbers::pi / std::max(height, width);

  SensitivityMaps maps;
  maps.coils.reserve(num_coils);
  for (int i = 0; i < num_coils; ++i) {
    const double angle = 2.0 * std::numbers::pi * i / num_coils;
    const double gy = cy + ring * std::sin(angle), gx = cx + ring * std::cos(angle);
    ComplexGrid coil(height, width);
    for (int r = 0; r < height; ++r) {
      for (int c = 0; c < width; ++c) {
        const double d2 = (r - gy) * (r - gy) + (c - gx) * (c - gx);
        const double mag = std::exp(-d2 / (2.0 * sigma * sigma));
        const double phase = ramp * (std::cos(angle) * (c - cx) + std::sin(angle) * (r - cy));
        coil.at(r, c) = std::polar(mag, phase);
      }
    }
    maps.coils.push_back(std::move(coil));
  }
  // Gaussian lobes are strictly positive, so RSS never vanishes
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      double rss = 0.0;
      for (const ComplexGrid &coil : maps.coils) rss += std::norm(coil.at(r, c));
      rss = std::sqrt(rss);
      for (ComplexGrid &coil : maps.coils) coil.at(r, c) /= rss;
    }
  }
  return maps;
}

SensitivityMaps estimate_sensitivities(const MultiCoilKspace &ksp, const SamplingMask &mask) {
  if (mask.acs <= 0) throw std::invalid_argument("estimate_sensitivities: mask has no ACS region");
  if (ksp.height() != mask.height || ksp.width() != mask.width)
    throw std::invalid_argument("estimate_sensitivities: shape mismatch");
  const int h = mask.height, w = mask.width, acs = mask.acs;

  auto hann = [acs](int j) {
    if (acs == 1) return 1.0;
    return 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * j / (acs - 1)));
  };
  ComplexGrid window(h, w);
  if (is_line_pattern(mask.pattern)) {
    const int c0 = acs_start(w, acs);
    for (int r = 0; r < h; ++r)
      for (int j = 0; j < acs; ++j) window.at(r, c0 + j) = hann(j);
  } else {
    const int r0 = acs_start(h, acs), c0 = acs_start(w, acs);
    for (int i = 0; i < acs; ++i)
      for (int j = 0; j < acs; ++j) window.at(r0 + i, c0 + j) = hann(i) * hann(j);
  }

  std::vector<ComplexGrid> low;
  low.reserve(ksp.coils.size());
  for (const ComplexGrid &coil : ksp.coils) {
    ComplexGrid win(h, w);
    for (size_t i = 0; i < win.data.size(); ++i) win.data[i] = coil.data[i] * window.data[i];
    low.push_back(ifft2c(win));
  }

  ComplexGrid rss(h, w);
  double rss_max = 0.0;
  for (size_t i = 0; i < rss.data.size(); ++i) {
    double s = 0.0;
    for (const ComplexGrid &l : low) s += std::norm(l.data[i]);
    rss.data[i] = std::sqrt(s);
    rss_max = std::max(rss_max, rss.data[i].real());
  }
  const double support = 0.05 * rss_max;
  const double eps = 1e-12;

  SensitivityMaps maps;
  maps.coils = std::move(low);
  for (size_t i = 0; i < rss.data.size(); ++i) {
    const double r = rss.data[i].real();
    for (ComplexGrid &coil : maps.coils)
      coil.data[i] = (r > support) ? coil.data[i] / std::max(r, eps) : cx(0.0, 0.0);
  }
  return maps;
}

ComplexGrid shepp_logan(int height, int width, PhantomPhase phase) {
  if (height < 16 || width < 16)
    throw std::invalid_argument("shepp_logan: dimensions must be at least 16");
  struct Ellipse {
    double a, ax, ay, x0, y0, phi_deg;
  };
  static const Ellipse ellipses[10] = {
      {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},
      {-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0},
      {-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0},
      {-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0},
      {0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0},
      {0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0},
      {0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0},
      {0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0},
      {0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0},
      {0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0},
  };
  ComplexGrid g(height, width);
  for (int r = 0; r < height; ++r) {
    const double y = 1.0 - 2.0 * (r + 0.5) / height;
    for (int c = 0; c < width; ++c) {
      const double x = -1.0 + 2.0 * (c + 0.5) / width;
      double v = 0.0;
      for (const Ellipse &e : ellipses) {
        const double phi = e.phi_deg * std::numbers::pi / 180.0;
        const double dx = x - e.x0, dy = y - e.y0;
        const double u = dx * std::cos(phi) + dy * std::sin(phi);
        const double t = -dx * std::sin(phi) + dy * std::cos(phi);
        if ((u * u) / (e.ax * e.ax) + (t * t) / (e.ay * e.ay) <= 1.0) v += e.a;
      }
      v = std::max(v, 0.0);  // additive cancellation can leave -1e-17
      if (phase == PhantomPhase::quadratic)
        g.at(r, c) = std::polar(v, 0.5 * std::numbers::pi * (x * x + y * y));
      else
        g.at(r, c) = v;
    }
  }
  return g;
}

MultiCoilKspace apply_E(const ComplexGrid &x, const AcquisitionModel &model) {
  if (x.height != model.height() || x.width != model.width())
    throw std::invalid_argument("apply_E: image shape disagrees with model");
  MultiCoilKspace out;
  out.coils.reserve(model.maps.coils.size());
  ComplexGrid weighted(x.height, x.width);
  for (const ComplexGrid &coil : model.maps.coils) {
    for (size_t i = 0; i < weighted.data.size(); ++i)
      weighted.data[i] = coil.data[i] * x.data[i];
    ComplexGrid k = fft2c(weighted);
    for (size_t i = 0; i < k.data.size(); ++i)
      if (!model.mask.sampled[i]) k.data[i] = cx(0.0, 0.0);
    out.coils.push_back(std::move(k));
  }
  return out;
}

ComplexGrid apply_EH(const MultiCoilKspace &y, const AcquisitionModel &model) {
  if (y.num_coils() != model.num_coils() || y.height() != model.height() ||
      y.width() != model.width())
    throw std::invalid_argument("apply_EH: k-space shape disagrees with model");
  ComplexGrid out(model.height(), model.width());
  ComplexGrid masked(model.height(), model.width());
  for (int i = 0; i < y.num_coils(); ++i) {
    for (size_t j = 0; j < masked.data.size(); ++j)
      masked.data[j] = model.mask.sampled[j] ? y.coils[i].data[j] : cx(0.0, 0.0);
    ComplexGrid img = ifft2c(masked);
    const ComplexGrid &coil = model.maps.coils[i];
    for (size_t j = 0; j < out.data.size(); ++j)
      out.data[j] += std::conj(coil.data[j]) * img.data[j];
  }
  return out;
}

MultiCoilKspace simulate_acquisition(const ComplexGrid &x, const AcquisitionModel &model,
                                     double noise_sigma, Rng &rng) {
  if (noise_sigma < 0.0)
    throw std::invalid_argument("simulate_acquisition: noise sigma must be non-negative");
  MultiCoilKspace y = apply_E(x, model);
  if (noise_sigma == 0.0) return y;
  for (ComplexGrid &coil : y.coils)
    for (size_t j = 0; j < coil.data.size(); ++j)
      if (model.mask.sampled[j])
        coil.data[j] += cx(noise_sigma * rng.normal(), noise_sigma * rng.normal());
  return y;
}

}  // namespace inrecon
