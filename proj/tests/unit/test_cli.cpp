#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "dociiw/image_io.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path& work() {
  static const fs::path d = [] {
    const auto p = fs::temp_directory_path() / "dociiw_cli";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return d;
}

int run(const std::string& args) {
  const std::string cmd = "cd '" + work().string() + "' && '" DOCIIW_CLI_PATH "' " + args + " >cli.out 2>cli.err";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::set<std::string> listing(const fs::path& dir) {
  std::set<std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) out.insert(fs::relative(e.path(), dir).string());
  return out;
}

}  // namespace

TEST_CASE("usage errors exit 2") {
  CHECK(run("") == 2);
  CHECK(run("frobnicate") == 2);
  CHECK(run("synth") == 2);
  CHECK(run("synth --out x --no-such-flag") == 2);
  CHECK(run("train-wb --out x") == 2);
  CHECK(run("infer --out x") == 2);
  CHECK(run("--help") == 0);
}

TEST_CASE("contract failures exit 1") {
  std::ofstream(work() / "bad.json") << R"({"synth": {"width": 64, "colour": 3}})";
  CHECK(run("synth --config bad.json --out bad") == 1);
  CHECK(slurp(work() / "cli.err").find("UnknownConfigKey") != std::string::npos);
  std::ofstream(work() / "neg.json") << R"({"synth": {"shading_lo": -1}})";
  CHECK(run("synth --config neg.json --out neg") == 1);
}

TEST_CASE("selftest and gradcheck pass") {
  CHECK(run("selftest") == 0);
  CHECK(run("gradcheck --seed 3") == 0);
  CHECK(slurp(work() / "cli.out").find("FAIL") == std::string::npos);
}

TEST_CASE("synth is reproducible and logs its resolved config") {
  REQUIRE(run("synth --out s1 --size 16 --samples 4 --seed 9") == 0);
  REQUIRE(run("synth --out s2 --size 16 --samples 4 --seed 9") == 0);
  CHECK(slurp(work() / "s1/manifest.jsonl") == slurp(work() / "s2/manifest.jsonl"));
  CHECK(slurp(work() / "s1/samples/000000_input.pfm") == slurp(work() / "s2/samples/000000_input.pfm"));
  CHECK(slurp(work() / "cli.err").find("resolved config") != std::string::npos);
  CHECK(slurp(work() / "s1/config.json").find("\"seed\": 9") != std::string::npos);
}

TEST_CASE("config file with flag overrides; DOCIIW_THREADS fallback") {
  std::ofstream(work() / "cfg.json") << R"({"seed": 4, "synth": {"width": 32, "height": 32, "val_samples": 2}})";
  REQUIRE(run("synth --config cfg.json --size 16 --samples 2 --out c1") == 0);
  const auto cfg = slurp(work() / "c1/config.json");
  CHECK(cfg.find("\"width\": 16") != std::string::npos);
  CHECK(cfg.find("\"val_samples\": 2") != std::string::npos);
  CHECK(run("synth --config cfg.json --out c2 --threads 0") == 2);
  REQUIRE(run("synth --config cfg.json --size 16 --samples 2 --out c3") == 0);
  setenv("DOCIIW_THREADS", "1", 1);
  REQUIRE(run("synth --config cfg.json --size 16 --samples 2 --out c4") == 0);
  unsetenv("DOCIIW_THREADS");
  CHECK(slurp(work() / "c4/config.json").find("\"threads\": 1") != std::string::npos);
}

TEST_CASE("train, infer and eval end to end; inputs untouched, outputs under --out") {
  REQUIRE(run("synth --out data --size 16 --samples 4 --seed 2") == 0);
  const auto before = listing(work() / "data");
  const auto manifest_bytes = slurp(work() / "data/manifest.jsonl");

  REQUIRE(run("train-wb --manifest data/manifest.jsonl --out wb --epochs 1 --batch 2") == 0);
  REQUIRE(run("train-smt --manifest data/manifest.jsonl --out smt --epochs 1 --batch 2 --wb-checkpoint wb/wbnet.ckpt") == 0);
  CHECK(fs::exists(work() / "wb/wbnet.log.jsonl"));
  CHECK(slurp(work() / "smt/config.json").find("\"wb_source\": \"checkpoint\"") != std::string::npos);

  oracle::Gen gen(1);
  dociiw::io::write_png(work() / "odd.png", gen.image(21, 11, 0.0, 1.0));
  const auto odd_bytes = slurp(work() / "odd.png");
  REQUIRE(run("infer odd.png --wb wb/wbnet.ckpt --smt smt/smtnet.ckpt --out inf") == 0);
  CHECK(fs::exists(work() / "inf/odd/preview.png"));
  CHECK(dociiw::io::read_pfm(work() / "inf/odd/reflectance.pfm").width() == 21);
  CHECK(slurp(work() / "odd.png") == odd_bytes);
  CHECK(run("infer odd.png --wb smt/smtnet.ckpt --smt smt/smtnet.ckpt --out inf2") == 1);

  REQUIRE(run("eval --manifest data/manifest.jsonl --wb wb/wbnet.ckpt --smt smt/smtnet.ckpt --out ev "
              "--ocr-cmd 'no-such-ocr {input}'") == 0);
  CHECK(slurp(work() / "cli.out").find("OcrUnavailable") != std::string::npos);
  CHECK(fs::exists(work() / "ev/report.json"));
  REQUIRE(run("eval --pair odd.png=odd.png --out ev2") == 0);
  CHECK(slurp(work() / "ev2/report.txt").find("1.000000") != std::string::npos);
  CHECK(run("eval --out ev3") == 2);

  CHECK(listing(work() / "data") == before);
  CHECK(slurp(work() / "data/manifest.jsonl") == manifest_bytes);
}
