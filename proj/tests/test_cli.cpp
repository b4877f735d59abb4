// End-to-end checks of the command-line tool: exit codes, report content,
// output files, and byte determinism across repeated runs.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "latq/io.hpp"
#include "latq/types.hpp"

namespace fs = std::filesystem;
using namespace latq;

namespace {

struct CliResult {
  int exit_code;
  std::string output;  // stdout and stderr interleaved
};

CliResult run_cli(const std::string& args) {
  const std::string cmd = std::string(LATQ_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  size_t got = 0;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, got);
  const int status = pclose(pipe);
  const int code = (status >= 0 && (status & 0x7f) == 0) ? (status >> 8) & 0xff : -1;
  return {code, out};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

fs::path fixture_dir() {
  const fs::path dir = fs::temp_directory_path() / "latq_cli_tests";
  fs::create_directories(dir);
  return dir;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("quantize with identity calibration reproduces integer weights") {
  const fs::path dir = fixture_dir();
  Matrix calib = Matrix::Identity(6, 3);
  Matrix weights(3, 2);
  weights << 2, -1, 0, 3, -4, 1;
  io::write_matrix(dir / "eye_calib.latq", calib);
  io::write_matrix(dir / "int_weights.latq", weights);

  const fs::path out = dir / "exact";
  const CliResult res = run_cli(
      "quantize --weights " + q(dir / "int_weights.latq") + " --calib " +
      q(dir / "eye_calib.latq") + " --lambda 0 --out " + q(out));
  CHECK(res.exit_code == 0);
  CHECK(res.output.find("total_err=0\n") != std::string::npos);
  CHECK(res.output.find("algorithm=gptq") != std::string::npos);

  const IntMatrix z = io::read_i64(out / "z.latq");
  REQUIRE(z.rows() == 3);
  REQUIRE(z.cols() == 2);
  CHECK((z.cast<double>().array() == weights.array()).all());
  const Matrix dequant = io::read_f64(out / "q.latq");
  CHECK((dequant - weights).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("quantize runs are byte deterministic") {
  const fs::path dir = fixture_dir();
  Matrix calib(8, 3);
  calib << 1.0, 0.2, -0.3, 0.1, 1.1, 0.4, -0.2, 0.3, 0.9, 0.5, -0.1, 0.2,
      0.7, 0.6, -0.4, 0.3, 0.8, 0.1, -0.6, 0.2, 0.5, 0.4, -0.5, 1.2;
  Matrix weights(3, 2);
  weights << 1.2, -0.4, 0.5, 2.49, -3.5, 0.7;
  io::write_matrix(dir / "det_calib.latq", calib);
  io::write_matrix(dir / "det_weights.latq", weights);

  const std::string base =
      "quantize --weights " + q(dir / "det_weights.latq") + " --calib " +
      q(dir / "det_calib.latq") + " --scales absmax --bits 4 --order act ";
  const CliResult a = run_cli(base + "--out " + q(dir / "det_a"));
  const CliResult b = run_cli(base + "--out " + q(dir / "det_b"));
  REQUIRE(a.exit_code == 0);
  REQUIRE(b.exit_code == 0);
  CHECK(a.output == b.output);
  for (const char* name : {"z.latq", "q.latq", "report.txt", "report.json"}) {
    CHECK(slurp(dir / "det_a" / name) == slurp(dir / "det_b" / name));
  }
}

TEST_CASE("reversed front-to-back run matches the back-to-front baseline") {
  const fs::path dir = fixture_dir();
  Matrix calib(8, 4);
  calib << 1.3, 0.2, -0.1, 0.4, 0.2, 1.1, 0.3, -0.2, -0.1, 0.3, 0.9, 0.1,
      0.4, -0.2, 0.1, 1.2, 0.6, 0.1, -0.3, 0.2, 0.1, 0.7, 0.2, -0.1, -0.2,
      0.1, 0.8, 0.3, 0.3, -0.1, 0.2, 0.6;
  Matrix weights(4, 2);
  weights << 0.7, -1.3, 2.1, 0.4, -0.9, 1.6, 0.3, -2.2;
  io::write_matrix(dir / "pair_calib.latq", calib);
  io::write_matrix(dir / "pair_weights.latq", weights);

  const std::string shared = "--weights " + q(dir / "pair_weights.latq") +
                             " --calib " + q(dir / "pair_calib.latq") +
                             " --lambda 0.1 ";
  const CliResult gptq = run_cli("quantize " + shared +
                                 "--algorithm gptq --order reversed --out " +
                                 q(dir / "pair_gptq"));
  const CliResult babai = run_cli("quantize " + shared +
                                  "--algorithm babai --order identity --out " +
                                  q(dir / "pair_babai"));
  REQUIRE(gptq.exit_code == 0);
  REQUIRE(babai.exit_code == 0);
  CHECK(slurp(dir / "pair_gptq" / "z.latq") ==
        slurp(dir / "pair_babai" / "z.latq"));
}

TEST_CASE("exit codes distinguish failure classes") {
  const fs::path dir = fixture_dir();
  Matrix calib = Matrix::Identity(4, 2);
  Matrix weights(2, 1);
  weights << 1.5, -0.5;
  io::write_matrix(dir / "ec_calib.latq", calib);
  io::write_matrix(dir / "ec_weights.latq", weights);
  const std::string base = "quantize --weights " + q(dir / "ec_weights.latq") +
                           " --calib " + q(dir / "ec_calib.latq") + " --out " +
                           q(dir / "ec_out") + " ";

  SUBCASE("missing input file") {
    const CliResult res = run_cli("quantize --weights " +
                                  q(dir / "does_not_exist.latq") + " --calib " +
                                  q(dir / "ec_calib.latq") + " --out " +
                                  q(dir / "ec_out"));
    CHECK(res.exit_code == 1);
  }
  SUBCASE("corrupt input file") {
    std::ofstream bad(dir / "bad.latq", std::ios::binary);
    bad << "LATQMAT1f64";
    bad.close();
    const CliResult res = run_cli("quantize --weights " + q(dir / "bad.latq") +
                                  " --calib " + q(dir / "ec_calib.latq") +
                                  " --out " + q(dir / "ec_out"));
    CHECK(res.exit_code == 2);
  }
  SUBCASE("singular undamped hessian") {
    Matrix flat(3, 2);
    flat << 1, 1, 1, 1, 2, 2;
    io::write_matrix(dir / "flat_calib.latq", flat);
    const CliResult res = run_cli(
        "quantize --weights " + q(dir / "ec_weights.latq") + " --calib " +
        q(dir / "flat_calib.latq") + " --lambda 0 --out " + q(dir / "ec_out"));
    CHECK(res.exit_code == 3);
    CHECK(res.output.find("--lambda") != std::string::npos);
  }
  SUBCASE("invalid bit width") {
    CHECK(run_cli(base + "--bits 1").exit_code == 4);
  }
  SUBCASE("bad lambda text") {
    CHECK(run_cli(base + "--lambda soon").exit_code == 4);
  }
  SUBCASE("scales file shape mismatch") {
    Matrix wrong = Matrix::Ones(1, 1);
    io::write_matrix(dir / "wrong_scales.latq", wrong);
    CHECK(run_cli(base + "--scales " + q(dir / "wrong_scales.latq")).exit_code ==
          4);
  }
  SUBCASE("unknown flag") {
    CHECK(run_cli(base + "--frobnicate 3").exit_code == 64);
  }
  SUBCASE("unknown algorithm") {
    CHECK(run_cli(base + "--algorithm newton").exit_code == 64);
  }
  SUBCASE("clipped grid refused by the bounds suite") {
    const CliResult res = run_cli("check --suite bounds --bits 4 --count 5");
    CHECK(res.exit_code == 4);
  }
  SUBCASE("rank deficient region basis") {
    Matrix singular(2, 2);
    singular << 1, 1, 1, 1;
    io::write_matrix(dir / "singular_basis.latq", singular);
    const CliResult res = run_cli("regions --basis " +
                                  q(dir / "singular_basis.latq") + " --out " +
                                  q(dir / "ec_regions.csv"));
    CHECK(res.exit_code == 6);
  }
}

TEST_CASE("check suites pass and report their measurements") {
  const CliResult res =
      run_cli("check --suite all --count 8 --c 4 --r 2 --trials 1500");
  CHECK(res.exit_code == 0);
  for (const char* name : {"equivalence", "bounds", "expected_error",
                           "invariance", "refinement_noop"}) {
    CHECK(res.output.find(std::string("PASS ") + name) != std::string::npos);
  }
  CHECK(res.output.find("FAIL") == std::string::npos);
  CHECK(res.output.find("z_mismatches=0") != std::string::npos);
}

TEST_CASE("regions writes the sampled CSV") {
  const fs::path dir = fixture_dir();
  Matrix basis(2, 2);
  basis << 1.0, 0.6, 0.0, 0.8;
  io::write_matrix(dir / "region_basis.latq", basis);
  const fs::path out = dir / "regions.csv";
  const CliResult res =
      run_cli("regions --basis " + q(dir / "region_basis.latq") +
              " --resolution 5 --method babai_reversed --out " + q(out));
  REQUIRE(res.exit_code == 0);
  const std::string csv = slurp(out);
  CHECK(csv.rfind("x,y,z1,z2\n", 0) == 0);
  long lines = 0;
  for (char ch : csv) lines += ch == '\n';
  CHECK(lines == 1 + 5 * 5);
}

TEST_CASE("order emits a valid one-based permutation and pivot traces") {
  const fs::path dir = fixture_dir();
  Matrix calib(8, 3);
  calib << 2.0, 0.1, 0.3, 0.1, 0.5, 0.2, 0.3, 0.2, 1.4, -1.8, 0.2, 0.1,
      0.2, -0.6, 0.3, 0.1, 0.4, -1.1, 0.9, 0.1, 0.2, -0.3, 0.2, 0.8;
  io::write_matrix(dir / "order_calib.latq", calib);
  const fs::path out = dir / "order_out";
  const CliResult res = run_cli("order --calib " + q(dir / "order_calib.latq") +
                                " --heuristic min_pivot --out " + q(out));
  REQUIRE(res.exit_code == 0);
  CHECK(res.output.find("trace_identity=") != std::string::npos);
  CHECK(res.output.find("trace_act=") != std::string::npos);
  CHECK(res.output.find("trace_min_pivot=") != std::string::npos);

  const IntMatrix order = io::read_i64(out / "order.latq");
  REQUIRE(order.rows() == 1);
  REQUIRE(order.cols() == 3);
  bool seen[3] = {false, false, false};
  for (Index j = 0; j < 3; ++j) {
    REQUIRE(order(0, j) >= 1);
    REQUIRE(order(0, j) <= 3);
    seen[order(0, j) - 1] = true;
  }
  CHECK((seen[0] && seen[1] && seen[2]));
}

TEST_CASE("order file round trips through quantize") {
  const fs::path dir = fixture_dir();
  Matrix calib(8, 3);
  calib << 1.3, 0.2, -0.1, 0.2, 1.1, 0.3, -0.1, 0.3, 0.9, 0.4, -0.2, 0.1,
      0.6, 0.1, -0.3, 0.1, 0.7, 0.2, -0.2, 0.1, 0.8, 0.3, -0.1, 0.2;
  Matrix weights(3, 1);
  weights << 1.7, -0.8, 2.3;
  io::write_matrix(dir / "rt_calib.latq", calib);
  io::write_matrix(dir / "rt_weights.latq", weights);
  IntMatrix perm(1, 3);
  perm << 3, 1, 2;
  io::write_matrix(dir / "rt_order.latq", perm);

  const CliResult res = run_cli(
      "quantize --weights " + q(dir / "rt_weights.latq") + " --calib " +
      q(dir / "rt_calib.latq") + " --order " + q(dir / "rt_order.latq") +
      " --algorithm babai --out " + q(dir / "rt_out"));
  REQUIRE(res.exit_code == 0);
  CHECK(res.output.find("order=3,1,2\n") != std::string::npos);
}

}  // TEST_SUITE
