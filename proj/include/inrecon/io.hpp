#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "inrecon/core.hpp"
#include "inrecon/eval.hpp"

namespace inrecon {

// "CXG1" | u32 ndim | u32 dims[ndim] | u32 dtype | row-major payload, all
// little-endian. Complex payloads are interleaved (re, im).
enum class ArrayDtype : uint32_t { complex64 = 1, complex128 = 2, float64 = 3 };

struct ArrayIoError : std::runtime_error {
  enum class Code { bad_magic, truncated, unknown_dtype, bad_dims, io };
  Code code;
  ArrayIoError(Code c, const std::string &msg) : std::runtime_error(msg), code(c) {}
};

struct StoredArray {
  ArrayDtype dtype = ArrayDtype::complex128;
  std::vector<uint32_t> dims;
  std::vector<cx> cvalues;       // complex64/complex128
  std::vector<double> rvalues;   // float64

  size_t element_count() const;
  ComplexGrid to_grid() const;
  std::vector<ComplexGrid> to_stack() const;
};

StoredArray from_grid(const ComplexGrid &g, ArrayDtype dtype = ArrayDtype::complex128);
StoredArray from_stack(const std::vector<ComplexGrid> &coils,
                       ArrayDtype dtype = ArrayDtype::complex128);
StoredArray from_real_grid(int height, int width, const std::vector<double> &values);

// Atomic (write-temp-then-rename); round trips are bit-exact.
void write_array(const std::string &path, const StoredArray &arr);
StoredArray read_array(const std::string &path);

// 8-bit grayscale PNG of the magnitude, linearly windowed. Default window is
// (0, max|grid|). Bytes are deterministic for fixed input.
void export_png(const ComplexGrid &grid, const std::string &path,
                std::optional<std::pair<double, double>> window = std::nullopt);

// ---------------------------------------------------------------------------
// Run configuration: INI-style sections with every key validated against the
// schema; unknown keys are rejected with the offending path named.
// ---------------------------------------------------------------------------

struct RunConfig {
  Scenario scenario;  // includes the recon settings
  // optional file inputs overriding the simulated scenario
  std::string data_kspace;
  std::string data_mask;
  std::string data_maps;
  std::string data_reference;
  int data_acs = 0;
  bool data_acs_square = false;
  // output
  std::string out_dir;
  bool export_pngs = true;
};

RunConfig default_run_config();
RunConfig parse_run_config(const std::string &text);
RunConfig load_run_config(const std::string &path);
// reference config with all defaults explicit
std::string print_run_config(const RunConfig &cfg);
// canonical key=value serialization used for fingerprinting
std::string canonical_config_string(const RunConfig &cfg);

// ---------------------------------------------------------------------------

std::string now_iso8601_utc();
void write_text_atomic(const std::string &path, const std::string &content);
std::string read_text(const std::string &path);

// loss log: epoch,total,dc,tv,lambda,lambda_s
std::string format_loss_log(const std::vector<LossRecord> &history);
// metrics CSV: variant,seed,psnr_db,ssim,seconds
std::string format_metrics_csv(const SweepResult &result);
std::string format_sweep_csv(const SweepResult &result);
std::string format_sweep_json(const SweepResult &result);

// default output root: $INRECON_OUT or ./runs
std::string default_output_root();

}  // namespace inrecon
