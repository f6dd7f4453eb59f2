#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "sme/config.hpp"

namespace {
int run(const std::string& args) {
  const std::string cmd = std::string(SME_LAB_BIN) + " " + args;
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}
}  // namespace

TEST_CASE("usage and config errors exit with code 2") {
  CHECK(run("definitely-not-a-subcommand 2>/dev/null") == 2);
  CHECK(run("simulate --config /no/such/file.cfg 2>/dev/null") == 2);
  CHECK(run("weak-error --optimizer adam --tau 0.125 --horizon 1 "
            "--paths 10 2>/dev/null") == 2);  // adam without t_start
  // tau outside the stability window tau < 1/(2 lambda0)
  const std::string cfg = "/tmp/sme_cli_bad.cfg";
  std::ofstream(cfg) << "[optimizer]\nlambda0 = 1.0\n[simulation]\ntau = 0.9\n";
  CHECK(run("simulate --config " + cfg + " 2>/dev/null") == 2);
  std::remove(cfg.c_str());
}

TEST_CASE("simulate emits a manifest-tagged csv") {
  const std::string out = "/tmp/sme_cli_sim.csv";
  CHECK(run("simulate --bogus-flag 2>/dev/null") == 2);
  REQUIRE(run("simulate --optimizer rmsprop --regime balistic --order 1 "
              "--source continuous --tau 0.125 --horizon 1 --out " + out +
              " >/dev/null") == 0);
  const std::string text = slurp(out);
  CHECK(text.rfind("# manifest=", 0) == 0);
  CHECK(text.find("t,E[f1],se_f1,E[f2],se_f2") != std::string::npos);
  CHECK(slurp(out + ".manifest.json").find("\"subcommand\"") !=
        std::string::npos);
  std::remove(out.c_str());
  std::remove((out + ".manifest.json").c_str());
}

TEST_CASE("outputs are byte-identical across runs and thread counts") {
  const std::string args =
      "simulate --optimizer rmsprop --regime batch-equivalent --order 1 "
      "--source continuous --tau 0.125 --horizon 0.5 --paths 600 ";
  const std::string o1 = "/tmp/sme_cli_t1.csv", o2 = "/tmp/sme_cli_t2.csv";
  REQUIRE(run(args + "--threads 1 --out " + o1 + " >/dev/null") == 0);
  REQUIRE(run(args + "--threads 2 --out " + o2 + " >/dev/null") == 0);
  CHECK(slurp(o1) == slurp(o2));
  std::remove(o1.c_str());
  std::remove(o2.c_str());
}

TEST_CASE("toy subcommand prints the report fields") {
  const std::string out = "/tmp/sme_cli_toy.json";
  REQUIRE(run("toy --xi normal --n 2000 --replicas 500 --out " + out +
              " >/dev/null") == 0);
  const std::string text = slurp(out);
  for (const char* key : {"\"corr\"", "\"ks_b\"", "\"ks_w\"",
                          "\"covariation_mean\"", "\"qv_mean\""})
    CHECK(text.find(key) != std::string::npos);
  std::remove(out.c_str());
  std::remove((out + ".manifest.json").c_str());
}

TEST_CASE("sweep prints slope lines and json parses") {
  const std::string out = "/tmp/sme_cli_sweep.json";
  const std::string log = "/tmp/sme_cli_sweep.log";
  REQUIRE(run("sweep --optimizer rmsprop --regime balistic --order 1 "
              "--tau-list 0.25,0.125 --horizon 1 --paths 400 "
              "--noise-mode gaussian-surrogate --format json --out " + out +
              " > " + log) == 0);
  CHECK(slurp(log).find("slope=") != std::string::npos);
  CHECK(slurp(out).find("\"experiment\"") != std::string::npos);
  std::remove(out.c_str());
  std::remove((out + ".manifest.json").c_str());
  std::remove(log.c_str());
}

TEST_CASE("gen-problem round trips through --verify") {
  const std::string out = "/tmp/sme_cli_data.bin";
  REQUIRE(run("gen-problem --out " + out + " --verify >/dev/null") == 0);
  std::remove(out.c_str());
}
