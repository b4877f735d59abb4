// Command-line front end: quantization runs, property-check suites, region
// maps, and ordering reports over the binary matrix container.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "latq/analysis.hpp"
#include "latq/errors.hpp"
#include "latq/io.hpp"
#include "latq/lattice.hpp"
#include "latq/quantize.hpp"
#include "latq/report.hpp"
#include "latq/rng.hpp"
#include "latq/synth.hpp"
#include "latq/tolerances.hpp"
#include "latq/version.hpp"

namespace fs = std::filesystem;
using namespace latq;

namespace {

// Exit-code contract, also documented in the README.
constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitMalformed = 2;
constexpr int kExitNotPd = 3;
constexpr int kExitConfig = 4;
constexpr int kExitCheckFailed = 5;
constexpr int kExitRankDeficient = 6;
constexpr int kExitUsage = 64;
constexpr int kExitInternal = 70;

std::optional<double> parse_lambda(const std::string& text) {
  if (text == "auto") return std::nullopt;
  size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("--lambda must be a number or 'auto'");
  }
  if (used != text.size()) {
    throw std::invalid_argument("--lambda must be a number or 'auto'");
  }
  return v;
}

std::string join_int(const std::vector<std::int64_t>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

void create_out_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw IoError("cannot create output directory: " + dir.string());
  }
}

void write_reports(const fs::path& out_dir, const Report& report) {
  io::write_text(out_dir / "report.txt", report.to_text());
  io::write_text(out_dir / "report.json", report.to_json());
}

struct QuantizeConfig {
  std::string weights_path;
  std::string calib_path;
  std::string scales = "unit";
  Index group = 0;
  int bits = 0;
  std::string order = "identity";
  std::string algorithm = "gptq";
  std::string lambda = "auto";
  std::uint64_t seed = 0;
  std::string out_dir;
};

bool front_to_back(const std::string& algorithm) {
  return algorithm == "gptq" || algorithm == "type2_front";
}

linalg::Permutation resolve_order(const std::string& spec, const Matrix& calib,
                                  double lambda, const std::string& algorithm) {
  const Index c = calib.cols();
  if (spec == "identity") return linalg::Permutation::identity(c);
  if (spec == "reversed") return linalg::Permutation::reversal(c);
  if (spec == "act") {
    const auto target = front_to_back(algorithm) ? quant::ActTarget::Gptq
                                                 : quant::ActTarget::Babai;
    return quant::order_act(calib, lambda, target);
  }
  if (spec == "min_pivot") {
    const Matrix hessian = linalg::damped_hessian(
        calib, lambda, linalg::Permutation::identity(c));
    return quant::order_min_pivot(hessian);
  }
  // Anything else names a permutation file: 1 x c, one-based entries.
  const IntMatrix stored = io::read_i64(spec);
  if (stored.rows() != 1 || stored.cols() != c) {
    throw std::invalid_argument("order file must be 1 x " + std::to_string(c));
  }
  std::vector<std::int64_t> map(stored.data(), stored.data() + c);
  return linalg::Permutation::from_one_based(map);
}

Matrix resolve_scales(const std::string& spec, Index group,
                      const Matrix& weights, const lattice::QuantGrid& grid) {
  if (spec == "unit") return Matrix::Ones(weights.rows(), weights.cols());
  if (spec == "absmax") {
    return quant::compute_scales(weights, grid, quant::ScaleMethod::AbsMax,
                                 group);
  }
  if (spec == "mse") {
    return quant::compute_scales(weights, grid, quant::ScaleMethod::Mse, group);
  }
  const Matrix stored = io::read_f64(spec);
  if (stored.rows() != weights.rows() || stored.cols() != weights.cols()) {
    throw std::invalid_argument("scales file shape must match the weights");
  }
  return stored;
}

int run_quantize(const QuantizeConfig& cfg) {
  const Matrix weights = io::read_f64(cfg.weights_path);
  const Matrix calib = io::read_f64(cfg.calib_path);
  const lattice::QuantGrid grid = lattice::QuantGrid::for_bits(cfg.bits);
  const double lambda = quant::resolve_lambda(calib, parse_lambda(cfg.lambda));

  quant::QuantProblem p;
  p.weights = weights;
  p.calib = calib;
  p.lambda = lambda;
  p.grid = grid;
  p.scales = resolve_scales(cfg.scales, cfg.group, weights, grid);
  p.order = resolve_order(cfg.order, calib, lambda, cfg.algorithm);

  quant::QuantResult res;
  if (cfg.algorithm == "gptq") {
    res = quant::gptq(p);
  } else if (cfg.algorithm == "babai") {
    res = quant::babai_quantize(p);
  } else if (cfg.algorithm == "type2_front") {
    res = quant::gptq_type2_front(p);
  } else if (cfg.algorithm == "type2_back") {
    res = quant::gptq_type2_back(p);
  } else {
    res = quant::rtn_quantize(p);
  }

  create_out_dir(cfg.out_dir);
  io::write_matrix(fs::path(cfg.out_dir) / "z.latq", res.z);
  io::write_matrix(fs::path(cfg.out_dir) / "q.latq", res.dequant);

  const std::string canonical =
      "cmd=quantize|weights=" + cfg.weights_path + "|calib=" + cfg.calib_path +
      "|scales=" + cfg.scales + "|group=" + std::to_string(cfg.group) +
      "|bits=" + std::to_string(cfg.bits) + "|order=" + cfg.order +
      "|algorithm=" + cfg.algorithm + "|lambda=" + format_double(lambda) +
      "|seed=" + std::to_string(cfg.seed);

  Report report;
  report.add("version", kVersion);
  report.add("config_hash", config_hash(canonical));
  report.add("seed", cfg.seed);
  report.add("algorithm", cfg.algorithm);
  report.add("bits", cfg.bits);
  report.add("lambda", lambda);
  report.add("scales", cfg.scales);
  report.add("group", static_cast<std::int64_t>(cfg.group));
  report.add("order_spec", cfg.order);
  report.add("order", p.order.one_based());
  report.add("dims", static_cast<std::int64_t>(weights.rows()));
  report.add("channels", static_cast<std::int64_t>(weights.cols()));
  report.add("samples", static_cast<std::int64_t>(calib.rows()));
  report.add("per_channel_err", res.per_channel_err);
  report.add("total_err", res.per_channel_err.sum());
  if (!grid.clipped && cfg.algorithm != "rtn") {
    const auto dir = front_to_back(cfg.algorithm)
                         ? analysis::BoundDirection::GptqFrontToBack
                         : analysis::BoundDirection::BabaiBackToFront;
    report.add("per_channel_bound", analysis::error_bound(p, dir).per_channel_bound);
  }
  write_reports(cfg.out_dir, report);
  std::cout << report.to_text();
  return kExitOk;
}

struct CheckConfig {
  std::string suite = "all";
  std::uint64_t seed = 42;
  Index c = 6;
  Index r = 3;
  Index n = 0;  // 0 means 2c
  int count = 50;
  std::uint64_t trials = 20000;
  int bits = 0;
};

bool wants(const CheckConfig& cfg, const char* name) {
  return cfg.suite == "all" || cfg.suite == name;
}

void print_check(const char* name, bool pass, const std::string& detail) {
  std::cout << (pass ? "PASS " : "FAIL ") << name << ' ' << detail << '\n';
}

bool check_equivalence(const CheckConfig& cfg) {
  Rng rng(cfg.seed);
  const std::vector<lattice::QuantGrid> grids{
      lattice::QuantGrid::unbounded(), lattice::QuantGrid::for_bits(4)};
  long z_mismatches = 0;
  double max_q_diff = 0.0;
  for (int i = 0; i < cfg.count; ++i) {
    synth::ProblemSpec spec;
    spec.c = cfg.c;
    spec.r = cfg.r;
    spec.n = cfg.n > 0 ? cfg.n : 2 * cfg.c;
    quant::QuantProblem p =
        synth::tie_free_problem(rng, spec, grids, tol::kBoundaryMargin);
    quant::QuantProblem flipped = p;
    flipped.order = p.order.composed_with_reversal();
    for (const lattice::QuantGrid& grid : grids) {
      p.grid = grid;
      flipped.grid = grid;
      const quant::QuantResult base = quant::babai_quantize(p);
      const quant::QuantResult probes[] = {quant::gptq(flipped),
                                           quant::gptq_type2_front(flipped),
                                           quant::gptq_type2_back(p)};
      for (const quant::QuantResult& probe : probes) {
        if (!(base.z.array() == probe.z.array()).all()) ++z_mismatches;
        max_q_diff = std::max(
            max_q_diff, (base.dequant - probe.dequant).cwiseAbs().maxCoeff());
      }
    }
  }
  const bool pass = z_mismatches == 0 && max_q_diff <= tol::kErrorComparison;
  print_check("equivalence", pass,
              "instances=" + std::to_string(cfg.count) +
                  " z_mismatches=" + std::to_string(z_mismatches) +
                  " max_q_diff=" + format_double(max_q_diff));
  return pass;
}

bool check_bounds(const CheckConfig& cfg) {
  if (cfg.bits != 0) {
    throw IncompatibleOptions(
        "the bounds suite needs an unbounded grid; pass --bits 0");
  }
  Rng rng(cfg.seed);
  double max_violation = -std::numeric_limits<double>::infinity();
  double ratio_lo = 2.0, ratio_hi = -1.0;
  for (int i = 0; i < cfg.count; ++i) {
    synth::ProblemSpec spec;
    spec.c = cfg.c;
    spec.r = cfg.r;
    spec.n = cfg.n > 0 ? cfg.n : 2 * cfg.c;
    spec.lambda = 0.0;  // keeps the corner construction exact
    const quant::QuantProblem p =
        synth::random_problem(rng, spec, lattice::QuantGrid::unbounded());
    for (auto dir : {analysis::BoundDirection::BabaiBackToFront,
                     analysis::BoundDirection::GptqFrontToBack}) {
      const analysis::BoundReport rep = analysis::error_bound(p, dir);
      max_violation = std::max(
          max_violation,
          (rep.per_channel_actual - rep.per_channel_bound).maxCoeff());
    }
    const quant::QuantProblem witness = analysis::corner_witness(p, 0);
    const analysis::BoundReport rep = analysis::error_bound(
        witness, analysis::BoundDirection::BabaiBackToFront);
    const double ratio = rep.per_channel_actual(0) / rep.per_channel_bound(0);
    ratio_lo = std::min(ratio_lo, ratio);
    ratio_hi = std::max(ratio_hi, ratio);
  }
  const bool pass = max_violation <= tol::kErrorComparison &&
                    ratio_lo >= 1.0 - tol::kErrorComparison && ratio_hi <= 1.0;
  print_check("bounds", pass,
              "instances=" + std::to_string(cfg.count) +
                  " max_violation=" + format_double(max_violation) +
                  " corner_ratio_min=" + format_double(ratio_lo) +
                  " corner_ratio_max=" + format_double(ratio_hi));
  return pass;
}

bool check_expected_error(const CheckConfig& cfg) {
  Rng rng(cfg.seed);
  synth::ProblemSpec spec;
  spec.c = cfg.c;
  spec.r = 1;
  spec.n = cfg.n > 0 ? cfg.n : 2 * cfg.c;
  spec.lambda = 0.0;
  const quant::QuantProblem tpl =
      synth::random_problem(rng, spec, lattice::QuantGrid::unbounded());
  const analysis::McResult mc =
      analysis::expected_error_mc(tpl, cfg.trials, cfg.seed);
  const double gap = std::abs(mc.mean_ratio - 1.0 / 3.0);
  const bool pass = gap <= 3.0 * mc.std_error;
  print_check("expected_error", pass,
              "trials=" + std::to_string(cfg.trials) +
                  " mean_ratio=" + format_double(mc.mean_ratio) +
                  " std_error=" + format_double(mc.std_error) +
                  " gap=" + format_double(gap));
  return pass;
}

bool check_invariance(const CheckConfig& cfg) {
  Rng rng(cfg.seed);
  bool all_match = true;
  double max_err_diff = 0.0, max_gram_diff = 0.0;
  for (int i = 0; i < cfg.count; ++i) {
    synth::ProblemSpec spec;
    spec.c = cfg.c;
    spec.r = cfg.r;
    spec.n = cfg.n > 0 ? cfg.n : 2 * cfg.c;
    const lattice::QuantGrid grid = (i % 2 == 0)
                                        ? lattice::QuantGrid::unbounded()
                                        : lattice::QuantGrid::for_bits(4);
    const quant::QuantProblem p = synth::random_problem(rng, spec, grid);
    for (auto kind :
         {analysis::FactorKind::Cholesky, analysis::FactorKind::EigenSqrt}) {
      const analysis::FactorInvarianceReport rep =
          analysis::check_factor_invariance(p, kind);
      all_match = all_match && rep.coeffs_match;
      max_err_diff = std::max(max_err_diff, rep.max_err_diff);
      max_gram_diff = std::max(max_gram_diff, rep.max_gram_diff);
    }
  }
  const bool pass = all_match && max_err_diff <= tol::kCrossFactor &&
                    max_gram_diff <= tol::kReconstruction;
  print_check("invariance", pass,
              "instances=" + std::to_string(cfg.count) +
                  " coeffs_match=" + (all_match ? "true" : "false") +
                  " max_err_diff=" + format_double(max_err_diff) +
                  " max_gram_diff=" + format_double(max_gram_diff));
  return pass;
}

bool check_refinement_noop(const CheckConfig& cfg) {
  Rng rng(cfg.seed);
  bool all_pass = true;
  double max_omega_diff = 0.0;
  for (int i = 0; i < cfg.count; ++i) {
    synth::ProblemSpec spec;
    spec.c = cfg.c;
    spec.r = cfg.r;
    spec.n = cfg.n > 0 ? cfg.n : 2 * cfg.c;
    const lattice::QuantGrid grid = (i % 2 == 0)
                                        ? lattice::QuantGrid::unbounded()
                                        : lattice::QuantGrid::for_bits(4);
    const quant::QuantProblem p = synth::random_problem(rng, spec, grid);
    const analysis::RefinementReport rep = analysis::check_refinement_noop(p);
    all_pass = all_pass && rep.pass;
    max_omega_diff = std::max(max_omega_diff, rep.omega_max_diff);
  }
  print_check("refinement_noop", all_pass,
              "instances=" + std::to_string(cfg.count) +
                  " max_omega_diff=" + format_double(max_omega_diff));
  return all_pass;
}

int run_check(const CheckConfig& cfg) {
  bool all = true;
  if (wants(cfg, "equivalence")) all = check_equivalence(cfg) && all;
  if (wants(cfg, "bounds")) all = check_bounds(cfg) && all;
  if (wants(cfg, "expected_error")) all = check_expected_error(cfg) && all;
  if (wants(cfg, "invariance")) all = check_invariance(cfg) && all;
  if (wants(cfg, "refinement_noop")) all = check_refinement_noop(cfg) && all;
  return all ? kExitOk : kExitCheckFailed;
}

struct RegionsConfig {
  std::string basis_path;
  std::vector<double> window{-2.0, 2.0, -2.0, 2.0};
  Index resolution = 50;
  std::string method = "babai";
  std::string out_path;
};

int run_regions(const RegionsConfig& cfg) {
  const Matrix basis = io::read_f64(cfg.basis_path);
  if (basis.rows() != 2 || basis.cols() != 2) {
    throw std::invalid_argument("regions: basis file must be 2 x 2");
  }
  lattice::RegionMethod method = lattice::RegionMethod::Babai;
  if (cfg.method == "voronoi") method = lattice::RegionMethod::Voronoi;
  else if (cfg.method == "rtn") method = lattice::RegionMethod::Rtn;
  else if (cfg.method == "babai_reversed") method = lattice::RegionMethod::BabaiReversed;
  const lattice::RegionWindow window{cfg.window[0], cfg.window[1],
                                     cfg.window[2], cfg.window[3]};
  const lattice::RegionMap map =
      lattice::region_map(basis, window, cfg.resolution, method);
  std::ostringstream csv;
  lattice::write_region_csv(map, csv);
  io::write_text(cfg.out_path, csv.str());
  std::cout << "samples=" << map.coeffs.size() << '\n';
  return kExitOk;
}

struct OrderConfig {
  std::string calib_path;
  std::string lambda = "auto";
  std::string heuristic = "min_pivot";
  std::string out_dir;
};

double pivot_trace(const Matrix& hessian, const linalg::Permutation& order) {
  const Index c = hessian.rows();
  Matrix permuted(c, c);
  for (Index a = 0; a < c; ++a)
    for (Index b = 0; b < c; ++b) permuted(a, b) = hessian(order[a], order[b]);
  return linalg::ldl_lower(permuted).diag.sum();
}

int run_order(const OrderConfig& cfg) {
  const Matrix calib = io::read_f64(cfg.calib_path);
  const double lambda = quant::resolve_lambda(calib, parse_lambda(cfg.lambda));
  const Index c = calib.cols();
  const Matrix hessian =
      linalg::damped_hessian(calib, lambda, linalg::Permutation::identity(c));

  const linalg::Permutation act =
      quant::order_act(calib, lambda, quant::ActTarget::Babai);
  const linalg::Permutation min_pivot = quant::order_min_pivot(hessian);
  linalg::Permutation chosen = min_pivot;
  if (cfg.heuristic == "act_babai") chosen = act;
  if (cfg.heuristic == "act_gptq") {
    chosen = quant::order_act(calib, lambda, quant::ActTarget::Gptq);
  }

  create_out_dir(cfg.out_dir);
  const std::vector<std::int64_t> one_based = chosen.one_based();
  IntMatrix stored(1, c);
  for (Index j = 0; j < c; ++j) stored(0, j) = one_based[static_cast<size_t>(j)];
  io::write_matrix(fs::path(cfg.out_dir) / "order.latq", stored);

  const std::string canonical = "cmd=order|calib=" + cfg.calib_path +
                                "|lambda=" + format_double(lambda) +
                                "|heuristic=" + cfg.heuristic;
  Report report;
  report.add("version", kVersion);
  report.add("config_hash", config_hash(canonical));
  report.add("heuristic", cfg.heuristic);
  report.add("lambda", lambda);
  report.add("dims", static_cast<std::int64_t>(c));
  report.add("order", one_based);
  report.add("trace_identity",
             pivot_trace(hessian, linalg::Permutation::identity(c)));
  report.add("trace_act", pivot_trace(hessian, act));
  report.add("trace_min_pivot", pivot_trace(hessian, min_pivot));
  write_reports(cfg.out_dir, report);
  std::cout << report.to_text();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lattice-view linear-layer quantization toolkit"};
  app.require_subcommand(1);

  QuantizeConfig qc;
  CLI::App* quantize = app.add_subcommand(
      "quantize", "quantize a weight matrix against calibration data");
  quantize->add_option("--weights", qc.weights_path, "weight matrix file (f64, c x r)")
      ->required();
  quantize->add_option("--calib", qc.calib_path, "calibration file (f64, n x c)")
      ->required();
  quantize->add_option("--scales", qc.scales,
                       "unit, absmax, mse, or a scales file (f64, c x r)");
  quantize->add_option("--group", qc.group, "scale group size, 0 = per column");
  quantize->add_option("--bits", qc.bits, "grid width in bits, 0 = unbounded");
  quantize->add_option("--order", qc.order,
                       "identity, act, min_pivot, reversed, or a permutation "
                       "file (i64, 1 x c, one-based)");
  quantize
      ->add_option("--algorithm", qc.algorithm, "quantizer to run")
      ->check(CLI::IsMember(
          {"gptq", "babai", "type2_front", "type2_back", "rtn"}));
  quantize->add_option("--lambda", qc.lambda, "damping, a number or 'auto'");
  quantize->add_option("--seed", qc.seed, "seed recorded in the report");
  quantize->add_option("--out", qc.out_dir, "output directory")->required();

  CheckConfig cc;
  CLI::App* check = app.add_subcommand(
      "check", "run seeded property suites and print PASS/FAIL lines");
  check->add_option("--suite", cc.suite, "which suite to run")
      ->check(CLI::IsMember({"equivalence", "bounds", "expected_error",
                             "invariance", "refinement_noop", "all"}));
  check->add_option("--seed", cc.seed, "base seed for instance generation");
  check->add_option("--c", cc.c, "input dimension of generated instances");
  check->add_option("--r", cc.r, "channel count of generated instances");
  check->add_option("--n", cc.n, "calibration rows, 0 = twice the dimension");
  check->add_option("--count", cc.count, "instances per suite");
  check->add_option("--trials", cc.trials, "Monte Carlo trials");
  check->add_option("--bits", cc.bits, "grid width in bits, 0 = unbounded");

  RegionsConfig rc;
  CLI::App* regions = app.add_subcommand(
      "regions", "sample 2-d assignment regions into a CSV");
  regions->add_option("--basis", rc.basis_path, "basis file (f64, 2 x 2)")
      ->required();
  regions->add_option("--window", rc.window, "window as x0 x1 y0 y1")
      ->expected(4);
  regions->add_option("--resolution", rc.resolution, "samples per axis");
  regions->add_option("--method", rc.method, "assignment rule")
      ->check(CLI::IsMember({"voronoi", "rtn", "babai", "babai_reversed"}));
  regions->add_option("--out", rc.out_path, "output CSV path")->required();

  OrderConfig oc;
  CLI::App* order = app.add_subcommand(
      "order", "compute an iteration order and compare pivot traces");
  order->add_option("--calib", oc.calib_path, "calibration file (f64, n x c)")
      ->required();
  order->add_option("--lambda", oc.lambda, "damping, a number or 'auto'");
  order->add_option("--heuristic", oc.heuristic, "which order to emit")
      ->check(CLI::IsMember({"act_gptq", "act_babai", "min_pivot"}));
  order->add_option("--out", oc.out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*quantize) return run_quantize(qc);
    if (*check) return run_check(cc);
    if (*regions) return run_regions(rc);
    return run_order(oc);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const MalformedFile& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitMalformed;
  } catch (const NotPositiveDefinite& e) {
    std::cerr << "error: " << e.what() << '\n'
              << "hint: the damped Hessian is not positive definite; raise "
                 "--lambda (or pass --lambda auto)\n";
    return kExitNotPd;
  } catch (const RankDeficient& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRankDeficient;
  } catch (const IncompatibleOptions& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const SearchSpaceTooLarge& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}
