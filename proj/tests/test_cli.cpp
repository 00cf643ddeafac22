#include "doctest.h"

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "radau/wp.hpp"

namespace {

struct Run {
  int code = -1;
  std::string out;
};

// Runs the CLI with a private reference cache; stderr is discarded.
Run cli(const std::string& args) {
  static const std::string cache = (std::filesystem::temp_directory_path() / "radau-cli-test-cache").string();
  const std::string cmd = "RADAU_CACHE_DIR=" + cache + " " RADAU_CLI_PATH " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

}  // namespace

TEST_CASE("tableau subcommand") {
  const auto r = cli("tableau --stages 3");
  CHECK(r.code == 0);
  CHECK(r.out == radau::export_tableau(3, 53));
  const auto wide = cli("tableau --stages 5 --precision 128");
  CHECK(wide.code == 0);
  CHECK(wide.out.starts_with("# radau-iia s=5 prec=128\n"));
  CHECK(cli("tableau --stages 4").code == 1);
  CHECK(cli("tableau --stages 3 --precision 20").code == 1);
}

TEST_CASE("solve subcommand") {
  const auto r = cli("solve --problem robertson --rtol 1e-6 --atol 1e-11");
  CHECK(r.code == 0);
  CHECK(r.out.find("status: success") != std::string::npos);
  CHECK(r.out.find("y[3]: 0.98213") != std::string::npos);
  CHECK(r.out.find("f_evals: ") != std::string::npos);

  const auto mp = cli("solve --problem robertson --rtol 1e-10 --atol 1e-15 --precision 113");
  CHECK(mp.code == 0);
  CHECK(mp.out.find("y[1]: 1.78659211") != std::string::npos);

  CHECK(cli("solve --problem hires --rtol 1e-6 --atol 1e-8 --max-steps 5").code == 2);
  CHECK(cli("solve --problem lorenz --rtol 1e-6 --atol 1e-6").code == 1);
  CHECK(cli("solve --problem hires --rtol abc --atol 1e-6").code == 1);
  CHECK(cli("solve --problem hires --rtol 1e-6 --atol 1e-8 --fixed-order 7").code == 1);
  CHECK(cli("solve --problem hires").code == 1);
}

TEST_CASE("bench subcommand") {
  const auto dir = std::filesystem::temp_directory_path() / "radau-cli-test-out";
  std::filesystem::create_directories(dir);
  const auto csv = (dir / "rob.csv").string();
  const auto svg = (dir / "rob.svg").string();
  const auto r = cli("bench --problem robertson --rtol-exps -4..-6 --reps 1 --out " + csv + " --plot " + svg);
  CHECK(r.code == 0);
  CHECK(r.out.find("rank correlation") != std::string::npos);
  const auto recs = radau::read_csv(csv);
  REQUIRE(recs.size() == 3);
  CHECK(recs[0].rtol == 1e-4);
  CHECK(recs[2].atol == doctest::Approx(1e-11));
  CHECK(std::filesystem::file_size(svg) > 100);

  const auto fixed = cli("bench --problem robertson --rtol-exps=-5 --fixed-order 5 --reps 1 --out " + csv);
  CHECK(fixed.code == 0);
  const auto one = radau::read_csv(csv);
  REQUIRE(one.size() == 1);
  CHECK(one[0].orders.max == 5);

  CHECK(cli("bench --problem robertson --ref-tol 1e-6 --out " + csv).code == 1);
  CHECK(cli("bench --problem robertson --rtol-exps x..y --out " + csv).code == 1);
  CHECK(cli("bench --problem robertson").code == 1);
  std::filesystem::remove_all(dir);
}
