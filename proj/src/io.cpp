#include "inrecon/io.hpp"

#include <zlib.h>

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

namespace inrecon {

namespace {

void append_u32le(std::string &buf, uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void append_f32le(std::string &buf, float v) {
  append_u32le(buf, std::bit_cast<uint32_t>(v));
}

void append_f64le(std::string &buf, double v) {
  const uint64_t u = std::bit_cast<uint64_t>(v);
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
}

uint32_t read_u32le(const unsigned char *p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

float read_f32le(const unsigned char *p) { return std::bit_cast<float>(read_u32le(p)); }

double read_f64le(const unsigned char *p) {
  uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= static_cast<uint64_t>(p[i]) << (8 * i);
  return std::bit_cast<double>(u);
}

size_t dtype_bytes(ArrayDtype d) {
  switch (d) {
    case ArrayDtype::complex64: return 8;
    case ArrayDtype::complex128: return 16;
    case ArrayDtype::float64: return 8;
  }
  return 0;
}

void validate_dims(const std::vector<uint32_t> &dims) {
  if (dims.empty())
    throw ArrayIoError(ArrayIoError::Code::bad_dims, "array has no dimensions");
  for (uint32_t d : dims)
    if (d == 0) throw ArrayIoError(ArrayIoError::Code::bad_dims, "array has a zero dimension");
}

}  // namespace

size_t StoredArray::element_count() const {
  size_t n = 1;
  for (uint32_t d : dims) n *= d;
  return n;
}

ComplexGrid StoredArray::to_grid() const {
  if (dims.size() != 2 || dtype == ArrayDtype::float64)
    throw ArrayIoError(ArrayIoError::Code::bad_dims, "expected a 2D complex array");
  ComplexGrid g(static_cast<int>(dims[0]), static_cast<int>(dims[1]));
  g.data = cvalues;
  return g;
}

std::vector<ComplexGrid> StoredArray::to_stack() const {
  if (dims.size() != 3 || dtype == ArrayDtype::float64)
    throw ArrayIoError(ArrayIoError::Code::bad_dims, "expected a 3D complex array");
  std::vector<ComplexGrid> coils;
  const size_t plane = static_cast<size_t>(dims[1]) * dims[2];
  for (uint32_t i = 0; i < dims[0]; ++i) {
    ComplexGrid g(static_cast<int>(dims[1]), static_cast<int>(dims[2]));
    std::copy(cvalues.begin() + i * plane, cvalues.begin() + (i + 1) * plane, g.data.begin());
    coils.push_back(std::move(g));
  }
  return coils;
}

StoredArray from_grid(const ComplexGrid &g, ArrayDtype dtype) {
  StoredArray a;
  a.dtype = dtype;
  a.dims = {static_cast<uint32_t>(g.height), static_cast<uint32_t>(g.width)};
  a.cvalues = g.data;
  return a;
}

StoredArray from_stack(const std::vector<ComplexGrid> &coils, ArrayDtype dtype) {
  if (coils.empty()) throw ArrayIoError(ArrayIoError::Code::bad_dims, "empty coil stack");
  StoredArray a;
  a.dtype = dtype;
  a.dims = {static_cast<uint32_t>(coils.size()), static_cast<uint32_t>(coils[0].height),
            static_cast<uint32_t>(coils[0].width)};
  for (const ComplexGrid &g : coils)
    a.cvalues.insert(a.cvalues.end(), g.data.begin(), g.data.end());
  return a;
}

StoredArray from_real_grid(int height, int width, const std::vector<double> &values) {
  StoredArray a;
  a.dtype = ArrayDtype::float64;
  a.dims = {static_cast<uint32_t>(height), static_cast<uint32_t>(width)};
  a.rvalues = values;
  return a;
}

void write_array(const std::string &path, const StoredArray &arr) {
  validate_dims(arr.dims);
  if (arr.dtype != ArrayDtype::complex64 && arr.dtype != ArrayDtype::complex128 &&
      arr.dtype != ArrayDtype::float64)
    throw ArrayIoError(ArrayIoError::Code::unknown_dtype, "unknown dtype code");
  const size_t n = arr.element_count();
  if (arr.dtype == ArrayDtype::float64 ? arr.rvalues.size() != n : arr.cvalues.size() != n)
    throw ArrayIoError(ArrayIoError::Code::bad_dims, "payload length disagrees with dims");

  std::string buf;
  buf.reserve(16 + n * dtype_bytes(arr.dtype));
  buf += "CXG1";
  append_u32le(buf, static_cast<uint32_t>(arr.dims.size()));
  for (uint32_t d : arr.dims) append_u32le(buf, d);
  append_u32le(buf, static_cast<uint32_t>(arr.dtype));
  switch (arr.dtype) {
    case ArrayDtype::complex64:
      for (const cx &v : arr.cvalues) {
        append_f32le(buf, static_cast<float>(v.real()));
        append_f32le(buf, static_cast<float>(v.imag()));
      }
      break;
    case ArrayDtype::complex128:
      for (const cx &v : arr.cvalues) {
        append_f64le(buf, v.real());
        append_f64le(buf, v.imag());
      }
      break;
    case ArrayDtype::float64:
      for (double v : arr.rvalues) append_f64le(buf, v);
      break;
  }
  write_text_atomic(path, buf);
}

StoredArray read_array(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArrayIoError(ArrayIoError::Code::io, "cannot open " + path);
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto *p = reinterpret_cast<const unsigned char *>(buf.data());

  if (buf.size() < 8 || std::memcmp(p, "CXG1", 4) != 0)
    throw ArrayIoError(ArrayIoError::Code::bad_magic, path + ": bad magic");
  const uint32_t ndim = read_u32le(p + 4);
  if (ndim == 0 || ndim > 8)
    throw ArrayIoError(ArrayIoError::Code::bad_dims, path + ": bad dimension count");
  const size_t header = 8 + 4 * static_cast<size_t>(ndim) + 4;
  if (buf.size() < header)
    throw ArrayIoError(ArrayIoError::Code::truncated, path + ": truncated header");

  StoredArray a;
  a.dims.resize(ndim);
  for (uint32_t i = 0; i < ndim; ++i) a.dims[i] = read_u32le(p + 8 + 4 * i);
  validate_dims(a.dims);
  const uint32_t dtype = read_u32le(p + 8 + 4 * ndim);
  if (dtype < 1 || dtype > 3)
    throw ArrayIoError(ArrayIoError::Code::unknown_dtype,
                       path + ": unknown dtype code " + std::to_string(dtype));
  a.dtype = static_cast<ArrayDtype>(dtype);
  const size_t n = a.element_count();
  if (buf.size() != header + n * dtype_bytes(a.dtype))
    throw ArrayIoError(ArrayIoError::Code::truncated, path + ": payload length mismatch");

  const unsigned char *q = p + header;
  switch (a.dtype) {
    case ArrayDtype::complex64:
      a.cvalues.resize(n);
      for (size_t i = 0; i < n; ++i)
        a.cvalues[i] = cx(read_f32le(q + 8 * i), read_f32le(q + 8 * i + 4));
      break;
    case ArrayDtype::complex128:
      a.cvalues.resize(n);
      for (size_t i = 0; i < n; ++i)
        a.cvalues[i] = cx(read_f64le(q + 16 * i), read_f64le(q + 16 * i + 8));
      break;
    case ArrayDtype::float64:
      a.rvalues.resize(n);
      for (size_t i = 0; i < n; ++i) a.rvalues[i] = read_f64le(q + 8 * i);
      break;
  }
  return a;
}

// ---------------------------------------------------------------------------
// PNG export
// ---------------------------------------------------------------------------

namespace {

void append_chunk(std::string &out, const char type[4], const std::string &payload) {
  append_u32le(out, 0);  // placeholder, PNG wants big-endian; fix below
  const size_t len_pos = out.size() - 4;
  const uint32_t len = static_cast<uint32_t>(payload.size());
  out[len_pos + 0] = static_cast<char>((len >> 24) & 0xff);
  out[len_pos + 1] = static_cast<char>((len >> 16) & 0xff);
  out[len_pos + 2] = static_cast<char>((len >> 8) & 0xff);
  out[len_pos + 3] = static_cast<char>(len & 0xff);
  const size_t crc_start = out.size();
  out.append(type, 4);
  out += payload;
  uLong crc = crc32(0L, reinterpret_cast<const Bytef *>(out.data() + crc_start),
                    static_cast<uInt>(out.size() - crc_start));
  for (int i = 3; i >= 0; --i) out.push_back(static_cast<char>((crc >> (8 * i)) & 0xff));
}

}  // namespace

void export_png(const ComplexGrid &grid, const std::string &path,
                std::optional<std::pair<double, double>> window) {
  const int h = grid.height, w = grid.width;
  if (h <= 0 || w <= 0) throw std::invalid_argument("export_png: empty grid");
  double lo = 0.0, hi = max_abs(grid);
  if (window) {
    lo = window->first;
    hi = window->second;
  }
  const double span = hi - lo;

  std::string raw;
  raw.reserve(static_cast<size_t>(h) * (w + 1));
  for (int r = 0; r < h; ++r) {
    raw.push_back('\0');  // filter type 0
    for (int c = 0; c < w; ++c) {
      double t = span > 0.0 ? (std::abs(grid.at(r, c)) - lo) / span : 0.0;
      t = std::clamp(t, 0.0, 1.0);
      raw.push_back(static_cast<char>(static_cast<int>(std::floor(t * 255.0 + 0.5))));
    }
  }

  uLongf comp_len = compressBound(static_cast<uLong>(raw.size()));
  std::string comp(comp_len, '\0');
  if (compress2(reinterpret_cast<Bytef *>(comp.data()), &comp_len,
                reinterpret_cast<const Bytef *>(raw.data()), static_cast<uLong>(raw.size()),
                6) != Z_OK)
    throw std::runtime_error("export_png: deflate failed for " + path);
  comp.resize(comp_len);

  std::string png("\x89PNG\r\n\x1a\n", 8);
  std::string ihdr;
  for (int i = 3; i >= 0; --i) ihdr.push_back(static_cast<char>((w >> (8 * i)) & 0xff));
  for (int i = 3; i >= 0; --i) ihdr.push_back(static_cast<char>((h >> (8 * i)) & 0xff));
  ihdr.push_back(8);   // bit depth
  ihdr.push_back(0);   // grayscale
  ihdr.push_back(0);   // compression
  ihdr.push_back(0);   // filter
  ihdr.push_back(0);   // no interlace
  append_chunk(png, "IHDR", ihdr);
  append_chunk(png, "IDAT", comp);
  append_chunk(png, "IEND", "");
  write_text_atomic(path, png);
}

// ---------------------------------------------------------------------------
// RunConfig
// ---------------------------------------------------------------------------

namespace {

struct KeyHandler {
  std::function<void(RunConfig &, const std::string &)> set;
  std::function<std::string(const RunConfig &)> get;
  std::string comment;
};

int parse_int(const std::string &path, const std::string &v) {
  try {
    size_t pos = 0;
    int r = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return r;
  } catch (...) {
    throw std::invalid_argument("config: " + path + ": expected an integer, got '" + v + "'");
  }
}

uint64_t parse_u64(const std::string &path, const std::string &v) {
  try {
    size_t pos = 0;
    unsigned long long r = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return r;
  } catch (...) {
    throw std::invalid_argument("config: " + path + ": expected an unsigned integer, got '" + v +
                                "'");
  }
}

double parse_double(const std::string &path, const std::string &v) {
  try {
    size_t pos = 0;
    double r = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return r;
  } catch (...) {
    throw std::invalid_argument("config: " + path + ": expected a number, got '" + v + "'");
  }
}

bool parse_bool(const std::string &path, const std::string &v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("config: " + path + ": expected a boolean, got '" + v + "'");
}

std::string fmt_double(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

std::string fmt_hidden(const std::vector<int> &widths) {
  std::string s;
  for (size_t i = 0; i < widths.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(widths[i]);
  }
  return s;
}

std::vector<int> parse_hidden(const std::string &path, const std::string &v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_int(path, item));
  if (out.empty()) throw std::invalid_argument("config: " + path + ": expected a width list");
  return out;
}

// schema: section -> key -> handler
const std::map<std::string, std::map<std::string, KeyHandler>> &config_schema() {
  static const std::map<std::string, std::map<std::string, KeyHandler>> schema = [] {
    std::map<std::string, std::map<std::string, KeyHandler>> s;
    auto &sc = s["scenario"];
    sc["height"] = {[](RunConfig &c, const std::string &v) { c.scenario.height = parse_int("scenario.height", v); },
                    [](const RunConfig &c) { return std::to_string(c.scenario.height); },
                    "image rows"};
    sc["width"] = {[](RunConfig &c, const std::string &v) { c.scenario.width = parse_int("scenario.width", v); },
                   [](const RunConfig &c) { return std::to_string(c.scenario.width); },
                   "image columns"};
    sc["coils"] = {[](RunConfig &c, const std::string &v) { c.scenario.coils = parse_int("scenario.coils", v); },
                   [](const RunConfig &c) { return std::to_string(c.scenario.coils); },
                   "synthetic receive coils"};
    sc["noise_sigma"] = {[](RunConfig &c, const std::string &v) { c.scenario.noise_sigma = parse_double("scenario.noise_sigma", v); },
                         [](const RunConfig &c) { return fmt_double(c.scenario.noise_sigma); },
                         "complex noise std per component at sampled points"};
    sc["pattern"] = {[](RunConfig &c, const std::string &v) { c.scenario.pattern = mask_pattern_from_string(v); },
                     [](const RunConfig &c) { return to_string(c.scenario.pattern); },
                     "random-lines | uniform-lines | radial | spiral"};
    sc["acceleration"] = {[](RunConfig &c, const std::string &v) { c.scenario.accel = parse_double("scenario.acceleration", v); },
                          [](const RunConfig &c) { return fmt_double(c.scenario.accel); },
                          "target acceleration R"};
    sc["acs"] = {[](RunConfig &c, const std::string &v) { c.scenario.acs = parse_int("scenario.acs", v); },
                 [](const RunConfig &c) { return std::to_string(c.scenario.acs); },
                 "fully sampled central lines (line patterns) or square side"};
    sc["phantom_phase"] = {[](RunConfig &c, const std::string &v) {
                             if (v == "none") c.scenario.phase = PhantomPhase::none;
                             else if (v == "quadratic") c.scenario.phase = PhantomPhase::quadratic;
                             else throw std::invalid_argument("config: scenario.phantom_phase: expected none|quadratic, got '" + v + "'");
                           },
                           [](const RunConfig &c) { return c.scenario.phase == PhantomPhase::none ? "none" : "quadratic"; },
                           "none | quadratic"};
    sc["maps"] = {[](RunConfig &c, const std::string &v) {
                    if (v == "synth") c.scenario.estimate_maps = false;
                    else if (v == "estimate") c.scenario.estimate_maps = true;
                    else throw std::invalid_argument("config: scenario.maps: expected synth|estimate, got '" + v + "'");
                  },
                  [](const RunConfig &c) { return c.scenario.estimate_maps ? "estimate" : "synth"; },
                  "synth: ground-truth maps; estimate: ACS-based estimate"};
    sc["seed"] = {[](RunConfig &c, const std::string &v) { c.scenario.seed = parse_u64("scenario.seed", v); },
                  [](const RunConfig &c) { return std::to_string(c.scenario.seed); },
                  "base seed for mask, noise and parameter init"};

    auto &en = s["encoding"];
    en["levels"] = {[](RunConfig &c, const std::string &v) { c.scenario.recon.encoding.levels = parse_int("encoding.levels", v); },
                    [](const RunConfig &c) { return std::to_string(c.scenario.recon.encoding.levels); },
                    "resolution levels L"};
    en["table_size"] = {[](RunConfig &c, const std::string &v) { c.scenario.recon.encoding.table_size = parse_int("encoding.table_size", v); },
                        [](const RunConfig &c) { return std::to_string(c.scenario.recon.encoding.table_size); },
                        "feature vectors per level T"};
    en["features"] = {[](RunConfig &c, const std::string &v) { c.scenario.recon.encoding.features = parse_int("encoding.features", v); },
                      [](const RunConfig &c) { return std::to_string(c.scenario.recon.encoding.features); },
                      "feature dimension F"};
    en["n_min"] = {[](RunConfig &c, const std::string &v) { c.scenario.recon.encoding.n_min = parse_int("encoding.n_min", v); },
                   [](const RunConfig &c) { return std::to_string(c.scenario.recon.encoding.n_min); },
                   "coarsest grid resolution"};
    en["growth"] = {[](RunConfig &c, const std::string &v) { c.scenario.recon.encoding.growth = parse_double("encoding.growth", v); },
                    [](const RunConfig &c) { return fmt_double(c.scenario.recon.encoding.growth); },
                    "per-level growth factor; values <= 1 mean derive from image size"};

    auto &un = s["unroll"];
    un["units"] = {[](RunConfig &c, const std::string &v) { c.scenario.recon.unroll.num_units = parse_int("unroll.units", v); },
                   [](const RunConfig &c) { return std::to_string(c.scenario.recon.unroll.num_units); },
                   "basic units T"};
    un["cg_iters"] = {[](RunConfig &c, const std::string &v) { c.scenario.recon.unroll.cg_iters = parse_int("unroll.cg_iters", v); },
                      [](const RunConfig &c) { return std::to_string(c.scenario.recon.unroll.cg_iters); },
                      "CG iterations inside the data-consistency module"};
    un["preset"] = {[](RunConfig &c, const std::string &v) {
                      if (v == "retrospective") { c.scenario.recon.unroll.lambda_init = 0.01; c.scenario.recon.unroll.lambda_s_init = 0.5; }
                      else if (v == "prospective") { c.scenario.recon.unroll.lambda_init = 0.05; c.scenario.recon.unroll.lambda_s_init = 2.0; }
                      else if (v != "custom") throw std::invalid_argument("config: unroll.preset: expected retrospective|prospective|custom, got '" + v + "'");
                    },
                    [](const RunConfig &) { return "custom"; },
                    "retrospective (0.01/0.5) | prospective (0.05/2.0) | custom"};
    un["lambda_init"] = {[](RunConfig &c, const std::string &v) { c.scenario.recon.unroll.lambda_init = parse_double("unroll.lambda_init", v); },
                         [](const RunConfig &c) { return fmt_double(c.scenario.recon.unroll.lambda_init); },
                         "initial data-consistency weight"};
    un["lambda_s_init"] = {[](RunConfig &c, const std::string &v) { c.scenario.recon.unroll.lambda_s_init = parse_double("unroll.lambda_s_init", v); },
                           [](const RunConfig &c) { return fmt_double(c.scenario.recon.unroll.lambda_s_init); },
                           "initial TV loss weight"};
    un["learnable_hparams"] = {[](RunConfig &c, const std::string &v) { c.scenario.recon.unroll.learnable_hparams = parse_bool("unroll.learnable_hparams", v); },
                               [](const RunConfig &c) { return c.scenario.recon.unroll.learnable_hparams ? "true" : "false"; },
                               "update lambda and lambda_s during training"};
    un["epochs"] = {[](RunConfig &c, const std::string &v) { c.scenario.recon.unroll.epochs = parse_int("unroll.epochs", v); },
                    [](const RunConfig &c) { return std::to_string(c.scenario.recon.unroll.epochs); },
                    "training epochs (early stop may end sooner)"};
    un["lr"] = {[](RunConfig &c, const std::string &v) { c.scenario.recon.unroll.lr_theta = parse_double("unroll.lr", v); },
                [](const RunConfig &c) { return fmt_double(c.scenario.recon.unroll.lr_theta); },
                "Adam step size for the network parameters"};
    un["lr_hparams"] = {[](RunConfig &c, const std::string &v) { c.scenario.recon.unroll.lr_hparams = parse_double("unroll.lr_hparams", v); },
                        [](const RunConfig &c) { return fmt_double(c.scenario.recon.unroll.lr_hparams); },
                        "Adam step size for lambda and lambda_s"};
    un["beta1"] = {[](RunConfig &c, const std::string &v) { c.scenario.recon.unroll.beta1 = parse_double("unroll.beta1", v); },
                   [](const RunConfig &c) { return fmt_double(c.scenario.recon.unroll.beta1); }, ""};
    un["beta2"] = {[](RunConfig &c, const std::string &v) { c.scenario.recon.unroll.beta2 = parse_double("unroll.beta2", v); },
                   [](const RunConfig &c) { return fmt_double(c.scenario.recon.unroll.beta2); }, ""};
    un["adam_eps"] = {[](RunConfig &c, const std::string &v) { c.scenario.recon.unroll.adam_eps = parse_double("unroll.adam_eps", v); },
                      [](const RunConfig &c) { return fmt_double(c.scenario.recon.unroll.adam_eps); }, ""};
    un["mlp_hidden"] = {[](RunConfig &c, const std::string &v) { c.scenario.recon.mlp_hidden = parse_hidden("unroll.mlp_hidden", v); },
                        [](const RunConfig &c) { return fmt_hidden(c.scenario.recon.mlp_hidden); },
                        "hidden layer widths, comma separated"};

    auto &da = s["data"];
    da["kspace"] = {[](RunConfig &c, const std::string &v) { c.data_kspace = v; },
                    [](const RunConfig &c) { return c.data_kspace; },
                    "measured multi-coil k-space (.cxg, coils x h x w); empty: simulate"};
    da["mask"] = {[](RunConfig &c, const std::string &v) { c.data_mask = v; },
                  [](const RunConfig &c) { return c.data_mask; },
                  "sampling mask (.cxg float64); required with kspace"};
    da["maps"] = {[](RunConfig &c, const std::string &v) { c.data_maps = v; },
                  [](const RunConfig &c) { return c.data_maps; },
                  "externally computed sensitivity maps; empty: estimate from ACS"};
    da["reference"] = {[](RunConfig &c, const std::string &v) { c.data_reference = v; },
                       [](const RunConfig &c) { return c.data_reference; },
                       "reference image for metrics (optional)"};
    da["acs"] = {[](RunConfig &c, const std::string &v) { c.data_acs = parse_int("data.acs", v); },
                 [](const RunConfig &c) { return std::to_string(c.data_acs); },
                 "ACS size of the loaded mask (for map estimation)"};
    da["acs_region"] = {[](RunConfig &c, const std::string &v) {
                          if (v == "lines") c.data_acs_square = false;
                          else if (v == "square") c.data_acs_square = true;
                          else throw std::invalid_argument("config: data.acs_region: expected lines|square, got '" + v + "'");
                        },
                        [](const RunConfig &c) { return c.data_acs_square ? "square" : "lines"; },
                        "lines: central columns; square: central block"};

    auto &ou = s["output"];
    ou["dir"] = {[](RunConfig &c, const std::string &v) { c.out_dir = v; },
                 [](const RunConfig &c) { return c.out_dir; },
                 "run directory; empty: <output root>/<command>-<fingerprint>"};
    ou["export_png"] = {[](RunConfig &c, const std::string &v) { c.export_pngs = parse_bool("output.export_png", v); },
                        [](const RunConfig &c) { return c.export_pngs ? "true" : "false"; },
                        "write magnitude PNGs alongside arrays"};
    return s;
  }();
  return schema;
}

}  // namespace

RunConfig default_run_config() {
  RunConfig cfg;
  cfg.scenario.recon.encoding.growth = 0.0;  // derive from image size
  return cfg;
}

RunConfig parse_run_config(const std::string &text) {
  RunConfig cfg = default_run_config();
  const auto &schema = config_schema();
  std::string section;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  // apply preset before explicit lambda values regardless of file order
  std::vector<std::pair<std::string, std::pair<std::string, std::string>>> entries;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto ltrim = line.find_first_not_of(" \t\r\n");
    if (ltrim == std::string::npos) continue;
    auto rtrim = line.find_last_not_of(" \t\r\n");
    line = line.substr(ltrim, rtrim - ltrim + 1);
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                    ": malformed section header");
      section = line.substr(1, line.size() - 2);
      if (!schema.count(section))
        throw std::invalid_argument("config: unknown section [" + section + "]");
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                  ": expected key = value");
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    auto trim = [](std::string &s) {
      const auto a = s.find_first_not_of(" \t");
      const auto b = s.find_last_not_of(" \t");
      s = a == std::string::npos ? "" : s.substr(a, b - a + 1);
    };
    trim(key);
    trim(value);
    if (section.empty())
      throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                  ": key outside any section");
    const auto &keys = schema.at(section);
    if (!keys.count(key))
      throw std::invalid_argument("config: unknown key: " + section + "." + key);
    entries.push_back({section, {key, value}});
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto &a, const auto &b) {
                     const bool pa = a.second.first == "preset", pb = b.second.first == "preset";
                     return pa && !pb;
                   });
  for (const auto &[sec, kv] : entries)
    schema.at(sec).at(kv.first).set(cfg, kv.second);
  return cfg;
}

RunConfig load_run_config(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config file not found: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_run_config(text);
}

std::string print_run_config(const RunConfig &cfg) {
  const auto &schema = config_schema();
  std::ostringstream out;
  for (const char *section : {"scenario", "encoding", "unroll", "data", "output"}) {
    out << "[" << section << "]\n";
    for (const auto &[key, handler] : schema.at(section)) {
      if (key == "preset") continue;  // expands into lambda_init / lambda_s_init
      if (!handler.comment.empty()) out << "# " << handler.comment << "\n";
      out << key << " = " << handler.get(cfg) << "\n";
    }
    out << "\n";
  }
  return out.str();
}

std::string canonical_config_string(const RunConfig &cfg) {
  const auto &schema = config_schema();
  std::ostringstream out;
  for (const auto &[section, keys] : schema)
    for (const auto &[key, handler] : keys) {
      if (key == "preset") continue;
      out << section << "." << key << "=" << handler.get(cfg) << ";";
    }
  return out.str();
}

// ---------------------------------------------------------------------------

std::string now_iso8601_utc() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_text_atomic(const std::string &path, const std::string &content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
  }
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ArrayIoError(ArrayIoError::Code::io, "cannot write " + tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw ArrayIoError(ArrayIoError::Code::io, "short write to " + tmp);
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw ArrayIoError(ArrayIoError::Code::io, "cannot rename " + tmp + " to " + path);
}

std::string read_text(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArrayIoError(ArrayIoError::Code::io, "cannot open " + path);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

std::string format_loss_log(const std::vector<LossRecord> &history) {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,total,dc,tv,lambda,lambda_s\n";
  for (const LossRecord &r : history)
    out << r.epoch << "," << r.total << "," << r.dc << "," << r.tv << "," << r.lambda << ","
        << r.lambda_s << "\n";
  return out.str();
}

std::string format_metrics_csv(const SweepResult &result) {
  std::ostringstream out;
  out.precision(17);
  out << "variant,seed,psnr_db,ssim,seconds\n";
  for (const SweepCell &cell : result.cells) {
    for (size_t k = 0; k < cell.psnr_per_seed.size(); ++k)
      out << cell.label << "," << k << "," << cell.psnr_per_seed[k] << "," << cell.ssim_per_seed[k]
          << "," << cell.seconds_per_seed[k] << "\n";
  }
  return out.str();
}

std::string format_sweep_csv(const SweepResult &result) {
  std::ostringstream out;
  out.precision(17);
  out << "cell,value,seeds,psnr_mean,psnr_std,ssim_mean,ssim_std,seconds_mean,ok,error\n";
  for (const SweepCell &cell : result.cells)
    out << cell.label << "," << cell.value << "," << cell.psnr_per_seed.size() << ","
        << cell.psnr_mean << "," << cell.psnr_std << "," << cell.ssim_mean << "," << cell.ssim_std
        << "," << cell.seconds_mean << "," << (cell.ok ? "1" : "0") << ",\"" << cell.error
        << "\"\n";
  return out.str();
}

std::string format_sweep_json(const SweepResult &result) {
  nlohmann::json j;
  j["axis"] = result.axis;
  j["cells"] = nlohmann::json::array();
  for (const SweepCell &cell : result.cells) {
    nlohmann::json c;
    c["label"] = cell.label;
    c["value"] = cell.value;
    c["ok"] = cell.ok;
    if (!cell.ok) c["error"] = cell.error;
    c["psnr_per_seed"] = cell.psnr_per_seed;
    c["ssim_per_seed"] = cell.ssim_per_seed;
    c["seconds_per_seed"] = cell.seconds_per_seed;
    c["psnr_mean"] = cell.psnr_mean;
    c["psnr_std"] = cell.psnr_std;
    c["ssim_mean"] = cell.ssim_mean;
    c["ssim_std"] = cell.ssim_std;
    c["seconds_mean"] = cell.seconds_mean;
    j["cells"].push_back(c);
  }
  return j.dump(2) + "\n";
}

std::string default_output_root() {
  const char *env = std::getenv("INRECON_OUT");
  return env && *env ? env : "./runs";
}

}  // namespace inrecon
