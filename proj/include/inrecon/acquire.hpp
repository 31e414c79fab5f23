#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "inrecon/core.hpp"

namespace inrecon {

enum class MaskPattern { random_lines, uniform_lines, radial, spiral };

const char *to_string(MaskPattern p);
MaskPattern mask_pattern_from_string(const std::string &s);
bool is_line_pattern(MaskPattern p);

// Binary k-space sampling indicator. For line patterns whole phase-encode
// columns are sampled; acs is the count of central fully sampled lines, or
// the side of the fully sampled central square for point patterns.
struct SamplingMask {
  int height = 0;
  int width = 0;
  MaskPattern pattern = MaskPattern::random_lines;
  int acs = 0;
  std::vector<uint8_t> sampled;  // 0/1, row-major

  uint8_t at(int r, int c) const { return sampled[static_cast<size_t>(r) * width + c]; }
  size_t count() const;
  double undersampling_rate() const;
  double acceleration() const { return 1.0 / undersampling_rate(); }
  // 1 when every row of the column is sampled (line patterns)
  int sampled_lines() const;
};

struct SensitivityMaps {
  std::vector<ComplexGrid> coils;
  int num_coils() const { return static_cast<int>(coils.size()); }
  int height() const { return coils.empty() ? 0 : coils[0].height; }
  int width() const { return coils.empty() ? 0 : coils[0].width; }
};

struct MultiCoilKspace {
  std::vector<ComplexGrid> coils;
  int num_coils() const { return static_cast<int>(coils.size()); }
  int height() const { return coils.empty() ? 0 : coils[0].height; }
  int width() const { return coils.empty() ? 0 : coils[0].width; }
};

// Sensitivities plus mask: everything needed to apply E and its adjoint.
struct AcquisitionModel {
  SensitivityMaps maps;
  SamplingMask mask;

  AcquisitionModel() = default;
  AcquisitionModel(SensitivityMaps m, SamplingMask k);
  int height() const { return mask.height; }
  int width() const { return mask.width; }
  int num_coils() const { return maps.num_coils(); }
};

// Line patterns sample exactly floor(width/R) phase-encode lines (the Table-1
// counts) including the central acs block; radial/spiral rasterize continuous
// trajectories with density tuned to within one percentage point of 1/R.
SamplingMask gen_mask(MaskPattern pattern, int height, int width, double accel, int acs, Rng &rng);

// Smooth synthetic coils: Gaussian magnitude lobes centered at equally spaced
// angles on a circle around the image, linear phase ramps, RSS-normalized.
SensitivityMaps synth_sensitivities(int num_coils, int height, int width);

// ACS-windowed low-resolution estimate, RSS-normalized inside the object
// support (RSS > 5% of max) and zero outside.
SensitivityMaps estimate_sensitivities(const MultiCoilKspace &ksp, const SamplingMask &mask);

enum class PhantomPhase { none, quadratic };

// 10-ellipse Shepp-Logan intensity in [0,1]; optional smooth quadratic phase.
ComplexGrid shepp_logan(int height, int width, PhantomPhase phase = PhantomPhase::none);

// Per coil i: mask .* fft2c(C_i .* x)
MultiCoilKspace apply_E(const ComplexGrid &x, const AcquisitionModel &model);

// sum_i conj(C_i) .* ifft2c(mask .* y_i)
ComplexGrid apply_EH(const MultiCoilKspace &y, const AcquisitionModel &model);

// apply_E plus complex Gaussian noise (sigma per real/imag component) at the
// sampled locations only.
MultiCoilKspace simulate_acquisition(const ComplexGrid &x, const AcquisitionModel &model,
                                     double noise_sigma, Rng &rng);

}  // namespace inrecon
