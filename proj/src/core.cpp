#include "inrecon/core.hpp"

#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace inrecon {

ComplexGrid::ComplexGrid(int h, int w) : height(h), width(w) {
  if (h <= 0 || w <= 0) throw std::invalid_argument("ComplexGrid: dimensions must be positive");
  data.assign(static_cast<size_t>(h) * w, cx(0.0, 0.0));
}

bool ComplexGrid::finite() const {
  for (const cx &v : data)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  return true;
}

cx dot(const ComplexGrid &a, const ComplexGrid &b) {
  cx s(0.0, 0.0);
  for (size_t i = 0; i < a.data.size(); ++i) s += std::conj(a.data[i]) * b.data[i];
  return s;
}

double norm2(const ComplexGrid &g) {
  double s = 0.0;
  for (const cx &v : g.data) s += std::norm(v);
  return std::sqrt(s);
}

double max_abs(const ComplexGrid &g) {
  double m = 0.0;
  for (const cx &v : g.data) m = std::max(m, std::abs(v));
  return m;
}

ComplexGrid operator+(const ComplexGrid &a, const ComplexGrid &b) {
  ComplexGrid r = a;
  for (size_t i = 0; i < r.data.size(); ++i) r.data[i] += b.data[i];
  return r;
}

ComplexGrid operator-(const ComplexGrid &a, const ComplexGrid &b) {
  ComplexGrid r = a;
  for (size_t i = 0; i < r.data.size(); ++i) r.data[i] -= b.data[i];
  return r;
}

ComplexGrid operator*(cx s, const ComplexGrid &g) {
  ComplexGrid r = g;
  for (cx &v : r.data) v *= s;
  return r;
}

// ---------------------------------------------------------------------------
// 1D FFT: iterative radix-2 for powers of two, Bluestein (chirp-z) otherwise.
// Twiddle/chirp tables are cached per length in thread-local storage so the
// transforms stay pure functions of their inputs.
// ---------------------------------------------------------------------------

namespace {

bool is_pow2(size_t n) { return n != 0 && (n & (n - 1)) == 0; }

size_t next_pow2(size_t n) {
  size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

struct FftPlan {
  size_t n = 0;
  // radix-2 pieces (n power of two)
  std::vector<size_t> bitrev;
  std::vector<std::vector<cx>> stage_twiddle;  // per stage, contiguous len/2 factors
  // Bluestein pieces (general n)
  size_t m = 0;                    // convolution length, power of two >= 2n-1
  std::vector<cx> chirp;           // exp(-i*pi*k^2/n), k < n
  std::vector<cx> chirp_kernel_f;  // forward FFT (length m) of wrapped conj chirp
  std::shared_ptr<const FftPlan> conv_plan;
};

template <bool Inverse>
void radix2_inplace(cx *a, const FftPlan &plan) {
  const size_t n = plan.n;
  for (size_t i = 0; i < n; ++i) {
    size_t j = plan.bitrev[i];
    if (i < j) std::swap(a[i], a[j]);
  }
  size_t stage = 0;
  for (size_t len = 2; len <= n; len <<= 1, ++stage) {
    const size_t half = len / 2;
    const cx *tw = plan.stage_twiddle[stage].data();
    for (size_t base = 0; base < n; base += len) {
      cx *lo = a + base;
      cx *hi = a + base + half;
      for (size_t k = 0; k < half; ++k) {
        const cx w = Inverse ? std::conj(tw[k]) : tw[k];
        const cx u = lo[k];
        const cx v = hi[k] * w;
        lo[k] = u + v;
        hi[k] = u - v;
      }
    }
  }
}

std::shared_ptr<const FftPlan> get_plan(size_t n);

std::shared_ptr<FftPlan> make_plan(size_t n) {
  auto plan = std::make_shared<FftPlan>();
  plan->n = n;
  if (is_pow2(n)) {
    plan->bitrev.resize(n);
    size_t log2n = 0;
    while ((size_t{1} << log2n) < n) ++log2n;
    for (size_t i = 0; i < n; ++i) {
      size_t r = 0;
      for (size_t b = 0; b < log2n; ++b)
        if (i & (size_t{1} << b)) r |= size_t{1} << (log2n - 1 - b);
      plan->bitrev[i] = r;
    }
    plan->stage_twiddle.resize(log2n);
    size_t stage = 0;
    for (size_t len = 2; len <= n; len <<= 1, ++stage) {
      plan->stage_twiddle[stage].resize(len / 2);
      for (size_t k = 0; k < len / 2; ++k) {
        const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(len);
        plan->stage_twiddle[stage][k] = cx(std::cos(ang), std::sin(ang));
      }
    }
  } else {
    plan->m = next_pow2(2 * n - 1);
    plan->chirp.resize(n);
    for (size_t k = 0; k < n; ++k) {
      // reduce k^2 mod 2n first so the phase argument stays small and exact
      unsigned long long k2 = (static_cast<unsigned long long>(k) * k) % (2ull * n);
      double ang = -std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n);
      plan->chirp[k] = cx(std::cos(ang), std::sin(ang));
    }
    plan->conv_plan = get_plan(plan->m);
    std::vector<cx> b(plan->m, cx(0.0, 0.0));
    b[0] = std::conj(plan->chirp[0]);
    for (size_t k = 1; k < n; ++k) {
      b[k] = std::conj(plan->chirp[k]);
      b[plan->m - k] = b[k];
    }
    radix2_inplace<false>(b.data(), *plan->conv_plan);
    plan->chirp_kernel_f = std::move(b);
  }
  return plan;
}

std::shared_ptr<const FftPlan> get_plan(size_t n) {
  thread_local std::unordered_map<size_t, std::shared_ptr<const FftPlan>> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::shared_ptr<const FftPlan> plan = make_plan(n);
  cache.emplace(n, plan);
  return plan;
}

// Unnormalized DFT (inverse = conjugate-sign sum, also unnormalized).
template <bool Inverse>
void fft_1d(cx *a, size_t n, std::vector<cx> &bluestein_buf) {
  if (n <= 1) return;
  auto plan = get_plan(n);
  if (is_pow2(n)) {
    radix2_inplace<Inverse>(a, *plan);
    return;
  }
  // Bluestein. Inverse via conj(DFT(conj(x))).
  if (Inverse)
    for (size_t k = 0; k < n; ++k) a[k] = std::conj(a[k]);
  std::vector<cx> &buf = bluestein_buf;
  buf.assign(plan->m, cx(0.0, 0.0));
  for (size_t k = 0; k < n; ++k) buf[k] = a[k] * plan->chirp[k];
  radix2_inplace<false>(buf.data(), *plan->conv_plan);
  for (size_t k = 0; k < plan->m; ++k) buf[k] *= plan->chirp_kernel_f[k];
  radix2_inplace<true>(buf.data(), *plan->conv_plan);
  const double inv_m = 1.0 / static_cast<double>(plan->m);
  for (size_t k = 0; k < n; ++k) a[k] = buf[k] * inv_m * plan->chirp[k];
  if (Inverse)
    for (size_t k = 0; k < n; ++k) a[k] = std::conj(a[k]);
}

// fftshift moves index 0 to floor(n/2); ifftshift is its inverse.
size_t fftshift_index(size_t i, size_t n) { return (i + n / 2) % n; }
size_t ifftshift_index(size_t i, size_t n) { return (i + n - n / 2) % n; }

struct TransformScratch {
  std::vector<cx> work;
  std::vector<cx> col;
  std::vector<cx> bluestein;
};

template <bool Inverse>
void transform2c(const ComplexGrid &g, ComplexGrid &out) {
  if (g.height <= 0 || g.width <= 0)
    throw std::invalid_argument("fft2c: grid dimensions must be positive");
  const size_t h = static_cast<size_t>(g.height), w = static_cast<size_t>(g.width);

  thread_local TransformScratch scratch;
  scratch.work.resize(h * w);
  cx *work = scratch.work.data();
  for (size_t r = 0; r < h; ++r) {
    const size_t rs = ifftshift_index(r, h);
    for (size_t c = 0; c < w; ++c) work[rs * w + ifftshift_index(c, w)] = g.data[r * w + c];
  }

  for (size_t r = 0; r < h; ++r) fft_1d<Inverse>(work + r * w, w, scratch.bluestein);

  scratch.col.resize(h);
  cx *col = scratch.col.data();
  for (size_t c = 0; c < w; ++c) {
    for (size_t r = 0; r < h; ++r) col[r] = work[r * w + c];
    fft_1d<Inverse>(col, h, scratch.bluestein);
    for (size_t r = 0; r < h; ++r) work[r * w + c] = col[r];
  }

  const double scale = 1.0 / std::sqrt(static_cast<double>(h) * static_cast<double>(w));
  out.height = g.height;
  out.width = g.width;
  out.data.resize(h * w);
  for (size_t r = 0; r < h; ++r) {
    const size_t rd = fftshift_index(r, h);
    for (size_t c = 0; c < w; ++c)
      out.data[rd * w + fftshift_index(c, w)] = work[r * w + c] * scale;
  }
}

}  // namespace

ComplexGrid fft2c(const ComplexGrid &img) {
  ComplexGrid out;
  transform2c<false>(img, out);
  return out;
}

ComplexGrid ifft2c(const ComplexGrid &ksp) {
  ComplexGrid out;
  transform2c<true>(ksp, out);
  return out;
}

void fft2c_into(const ComplexGrid &img, ComplexGrid &out) { transform2c<false>(img, out); }
void ifft2c_into(const ComplexGrid &ksp, ComplexGrid &out) { transform2c<true>(ksp, out); }

// ---------------------------------------------------------------------------

uint64_t Rng::next_u64() {
  uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
  double u1 = uniform();
  double u2 = uniform();
  return std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

uint64_t Rng::below(uint64_t n) {
  return n == 0 ? 0 : static_cast<uint64_t>(uniform() * static_cast<double>(n));
}

std::vector<double> Rng::uniforms(size_t n) {
  std::vector<double> out(n);
  for (double &v : out) v = uniform();
  return out;
}

uint64_t fnv1a64(const std::string &text) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

uint64_t derive_seed(uint64_t base, uint64_t stream) {
  Rng mix(base ^ (0xA5A5A5A5DEADBEEFull + stream * 0x9E3779B97F4A7C15ull));
  return mix.next_u64();
}

}  // namespace inrecon
