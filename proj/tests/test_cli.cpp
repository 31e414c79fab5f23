// End-to-end checks of the command-line surface against a tiny scenario.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "inrecon/io.hpp"

using namespace inrecon;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path dir;
  TempDir() {
    dir = fs::temp_directory_path() / ("inrecon-cli-" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~TempDir() { fs::remove_all(dir); }
  std::string path(const std::string &name) const { return (dir / name).string(); }
};

int run(const std::string &args) {
  const std::string cmd = std::string(INRECON_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

const char *kTinyConfig = R"(
[scenario]
height = 32
width = 32
coils = 2
noise_sigma = 0.001
pattern = random-lines
acceleration = 2
acs = 8
seed = 3

[encoding]
levels = 3
table_size = 256

[unroll]
epochs = 10
mlp_hidden = 8
)";

}  // namespace

TEST_CASE("unknown subcommands and missing required flags exit with 1") {
  CHECK(run("frobnicate") == 1);
  CHECK(run("eval") == 1);
  CHECK(run("recon --config /nonexistent/place.cfg") == 1);
}

TEST_CASE("recon --print-default-config emits a parseable reference config") {
  TempDir tmp;
  const std::string cmd = std::string(INRECON_CLI_PATH) + " recon --print-default-config > " +
                          tmp.path("default.cfg") + " 2>/dev/null";
  REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
  RunConfig cfg = load_run_config(tmp.path("default.cfg"));
  CHECK(cfg.scenario.height == 128);
}

TEST_CASE("simulate is deterministic: identical output files for identical seeds") {
  TempDir tmp;
  REQUIRE(run("simulate --size 32 --coils 2 --seed 7 --out " + tmp.path("a")) == 0);
  REQUIRE(run("simulate --size 32 --coils 2 --seed 7 --out " + tmp.path("b")) == 0);
  for (const char *f : {"phantom.cxg", "maps.cxg", "mask.cxg", "kspace.cxg"}) {
    const std::string fa = read_text(tmp.path("a") + "/" + f);
    const std::string fb = read_text(tmp.path("b") + "/" + f);
    CHECK(fa == fb);
  }
  CHECK(fs::exists(tmp.path("a") + "/manifest.json"));
}

TEST_CASE("eval on identical arrays prints the capped metrics and exits 0") {
  TempDir tmp;
  REQUIRE(run("simulate --size 32 --coils 2 --seed 7 --out " + tmp.path("sim")) == 0);
  const std::string out = tmp.path("eval_out.txt");
  const std::string cmd = std::string(INRECON_CLI_PATH) + " eval --ref " + tmp.path("sim") +
                          "/phantom.cxg --test " + tmp.path("sim") + "/phantom.cxg --out " +
                          tmp.path("ev") + " > " + out + " 2>/dev/null";
  REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
  const std::string printed = read_text(out);
  CHECK(printed.find("psnr_db=999") != std::string::npos);
  CHECK(printed.find("ssim=1.0") != std::string::npos);
}

TEST_CASE("recon runs end to end and is byte-deterministic") {
  TempDir tmp;
  {
    std::ofstream cfg(tmp.path("tiny.cfg"));
    cfg << kTinyConfig;
  }
  REQUIRE(run("recon --config " + tmp.path("tiny.cfg") + " --out " + tmp.path("r1")) == 0);
  REQUIRE(run("recon --config " + tmp.path("tiny.cfg") + " --out " + tmp.path("r2")) == 0);
  CHECK(read_text(tmp.path("r1") + "/recon.cxg") == read_text(tmp.path("r2") + "/recon.cxg"));
  CHECK(read_text(tmp.path("r1") + "/loss_log.csv") == read_text(tmp.path("r2") + "/loss_log.csv"));
  CHECK(fs::exists(tmp.path("r1") + "/metrics.csv"));
  CHECK(fs::exists(tmp.path("r1") + "/recon.png"));
  CHECK(fs::exists(tmp.path("r1") + "/config.cfg"));

  // every file in the run directory is listed in the manifest
  const std::string manifest = read_text(tmp.path("r1") + "/manifest.json");
  for (const auto &entry : fs::directory_iterator(tmp.path("r1"))) {
    const std::string name = entry.path().filename().string();
    CHECK(manifest.find("\"" + name + "\"") != std::string::npos);
  }
}

TEST_CASE("mask subcommand writes the mask and reports the line count") {
  TempDir tmp;
  const std::string out = tmp.path("mask_out.txt");
  const std::string cmd = std::string(INRECON_CLI_PATH) +
                          " mask --pattern random-lines --height 368 --width 368 --R 8 --acs 16 "
                          "--seed 1 --out " +
                          tmp.path("m") + " > " + out + " 2>/dev/null";
  REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
  CHECK(read_text(out).find("46 lines") != std::string::npos);
  StoredArray mask = read_array(tmp.path("m") + "/mask.cxg");
  CHECK(mask.dims[0] == 368);
  CHECK(mask.dtype == ArrayDtype::float64);
}

TEST_CASE("export converts an array to a PNG") {
  TempDir tmp;
  REQUIRE(run("simulate --size 32 --coils 2 --seed 9 --out " + tmp.path("sim")) == 0);
  REQUIRE(run("export --in " + tmp.path("sim") + "/phantom.cxg --out " + tmp.path("p.png")) == 0);
  const std::string png = read_text(tmp.path("p.png"));
  CHECK(png.substr(1, 3) == "PNG");
}
