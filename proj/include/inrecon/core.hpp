#pragma once

#include <complex>
#include <cstdint>
#include <vector>

namespace inrecon {

using cx = std::complex<double>;

// Dense row-major complex 2D array. Carries images, k-space planes and
// masks-as-weights throughout the toolkit.
struct ComplexGrid {
  int height = 0;
  int width = 0;
  std::vector<cx> data;

  ComplexGrid() = default;
  ComplexGrid(int h, int w);

  cx &at(int r, int c) { return data[static_cast<size_t>(r) * width + c]; }
  const cx &at(int r, int c) const { return data[static_cast<size_t>(r) * width + c]; }

  size_t size() const { return data.size(); }
  bool same_shape(const ComplexGrid &o) const { return height == o.height && width == o.width; }
  bool finite() const;
};

// sum over entries of conj(a)*b
cx dot(const ComplexGrid &a, const ComplexGrid &b);
double norm2(const ComplexGrid &g);
double max_abs(const ComplexGrid &g);

ComplexGrid operator+(const ComplexGrid &a, const ComplexGrid &b);
ComplexGrid operator-(const ComplexGrid &a, const ComplexGrid &b);
ComplexGrid operator*(cx s, const ComplexGrid &g);

// Centered orthonormal 2D DFT: fftshift(F(ifftshift(x)))/sqrt(N) with the DC
// component at (h/2, w/2). Unitary, so the encoding adjoint below is exact.
ComplexGrid fft2c(const ComplexGrid &img);
ComplexGrid ifft2c(const ComplexGrid &ksp);

// Scratch-reusing variants for solver inner loops; out is resized as needed
// and may not alias in.
void fft2c_into(const ComplexGrid &img, ComplexGrid &out);
void ifft2c_into(const ComplexGrid &ksp, ComplexGrid &out);

// Counter-based generator (splitmix64). Streams are identical for identical
// seeds on every platform, which the reproducibility contract depends on.
struct Rng {
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64();
  // [0,1)
  double uniform();
  double uniform(double lo, double hi);
  // standard normal, Box-Muller
  double normal();
  // integer in [0,n)
  uint64_t below(uint64_t n);
  std::vector<double> uniforms(size_t n);

 private:
  uint64_t state_;
};

// Stable 64-bit fingerprint of arbitrary text (FNV-1a).
uint64_t fnv1a64(const std::string &text);

// Derives an independent stream seed from a base seed and a stream index.
uint64_t derive_seed(uint64_t base, uint64_t stream);

}  // namespace inrecon
