// fwtt: command-line front end for fiber-wise tensor-train completion.
//
// Exit codes: 0 success, 1 usage or invalid argument, 2 validation failure,
// 3 identifiability failure, 4 I/O or format error. Failures print a JSON
// object {"error": {...}} on stderr.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fwtt/completion.hpp"
#include "fwtt/dtns.hpp"
#include "fwtt/errors.hpp"
#include "fwtt/harness.hpp"
#include "fwtt/patterns.hpp"

namespace {

using nlohmann::ordered_json;
using namespace fwtt;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitIdentifiability = 3;
constexpr int kExitFormat = 4;

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  if (out.empty()) throw InvalidArgument("empty list '" + s + "'");
  return out;
}

std::vector<Index> parse_indices(const std::string& s) {
  std::vector<Index> out;
  for (const auto& item : split_list(s)) {
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw InvalidArgument("not an integer: '" + item + "'");
    out.push_back(static_cast<Index>(v));
  }
  return out;
}

std::vector<double> parse_doubles(const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) {
    if (item == "inf" || item == "+inf") {
      out.push_back(std::numeric_limits<double>::infinity());
      continue;
    }
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw InvalidArgument("not a number: '" + item + "'");
    out.push_back(v);
  }
  return out;
}

ordered_json number(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

ordered_json report_json(const ConditionReport& r) {
  ordered_json splits = ordered_json::array();
  for (const auto& s : r.splits) {
    splits.push_back({{"split", s.split},
                      {"rank", s.rank},
                      {"slices", s.slice_count},
                      {"used_slices", s.used_slices},
                      {"min_rows_per_slice", s.min_rows_per_slice},
                      {"generic_slice_rank", s.generic_slice_rank},
                      {"slices_isorank", s.slices_isorank},
                      {"overlap_graph_connected", s.overlap_graph_connected},
                      {"union_covers_all_rows", s.union_covers_all_rows}});
  }
  return {{"overall_valid", r.overall_valid},
          {"generically_valid", r.overall_valid},
          {"observed_fiber_count", r.observed_fiber_count},
          {"required_fibers", r.required_fibers},
          {"last_core_ok", r.last_core_ok},
          {"penultimate_ok", r.penultimate_ok},
          {"penultimate_deficient_slices", r.penultimate_deficient_slices},
          {"splits", splits},
          {"failed_conditions", r.failed_conditions()},
          {"messages", r.messages}};
}

// Data NaNs, if any, must mark exactly the unobserved fibers.
void check_mask(const DenseTensor& data, const FiberPattern& p) {
  check_pattern_shape(p, data.shape());
  bool any_nan = false;
  for (double x : data.values()) any_nan = any_nan || std::isnan(x);
  if (!any_nan) return;
  std::vector<std::uint8_t> observed;
  const Index fibers = p.fiber_count();
  const auto v = data.values();
  for (Index f = 0; f < fibers; ++f) {
    const bool missing = std::isnan(v[static_cast<std::size_t>(f)]);
    if (missing == p.observed(f)) {
      throw FormatError("NaN positions in the input do not match the pattern (fiber " + std::to_string(f) + ")");
    }
  }
}

struct CompleteArgs {
  std::string input, pattern, ranks, output, method = "intersection", combine = "none";
  double tol = kDefaultRankTol;
  bool no_validate = false;
};

int run_complete(const CompleteArgs& a) {
  const DenseTensor data = load_dense(a.input);
  const FiberPattern pattern = load_pattern(a.pattern);
  check_mask(data, pattern);
  CompletionConfig cfg{parse_indices(a.ranks), parse_method(a.method), parse_combination(a.combine), a.tol,
                       !a.no_validate};
  const auto out = complete(data, pattern, cfg);
  save_dtns(a.output, out.tt);

  ordered_json unf = ordered_json::array();
  for (const auto& u : out.unfoldings) {
    unf.push_back({{"split", u.split}, {"gap", number(u.gap)}, {"submatrices", u.submatrices}, {"warnings", u.warnings}});
  }
  ordered_json res = ordered_json::array();
  for (const auto& s : out.slice_residuals) {
    res.push_back({{"slice", s.slice}, {"rows", s.rows}, {"residual", number(s.residual)}, {"rcond", number(s.rcond)}});
  }
  ordered_json j;
  j["status"] = "ok";
  j["output"] = a.output;
  j["ranks"] = out.tt.ranks();
  j["method"] = a.method;
  j["combine"] = a.combine;
  j["unfoldings"] = unf;
  j["last_singular_values"] = out.last_singular_values;
  j["slice_residuals"] = res;
  j["validity"] = out.report ? report_json(*out.report) : ordered_json(nullptr);
  std::cout << j.dump(2) << '\n';
  return kExitOk;
}

struct ReconstructArgs {
  std::string tt, input, pattern, output;
};

int run_reconstruct(const ReconstructArgs& a) {
  const TTDecomposition tt = load_tt(a.tt);
  if (a.input.empty() != a.pattern.empty()) throw InvalidArgument("--input and --pattern must be given together");
  DenseTensor out;
  if (a.input.empty()) {
    out = tt_to_dense(tt);
  } else {
    const DenseTensor data = load_dense(a.input);
    const FiberPattern pattern = load_pattern(a.pattern);
    check_mask(data, pattern);
    out = reconstruct_fibers(tt, data, pattern);
  }
  save_dtns(a.output, out);
  std::cout << ordered_json{{"status", "ok"}, {"output", a.output}, {"shape", out.shape()}}.dump() << '\n';
  return kExitOk;
}

int run_validate(const std::string& pattern_path, const std::string& ranks) {
  const FiberPattern pattern = load_pattern(pattern_path);
  const auto report = validate(pattern, parse_indices(ranks));
  std::cout << report_json(report).dump(2) << '\n';
  return report.overall_valid ? kExitOk : kExitValidation;
}

struct SynthArgs {
  std::string shape, ranks_true, ranks_fit, snr = "inf", missing = "0", csv, method = "intersection", combine = "none";
  Index trials = 1;
  std::uint64_t seed = 0;
  double tol = kDefaultRankTol;
};

int run_synth(const SynthArgs& a, unsigned threads) {
  ExperimentSpec spec;
  spec.shape = parse_indices(a.shape);
  spec.ranks_true = parse_indices(a.ranks_true);
  spec.ranks_fit = a.ranks_fit.empty() ? spec.ranks_true : parse_indices(a.ranks_fit);
  spec.snr_db = parse_doubles(a.snr);
  spec.missing_rate = parse_doubles(a.missing);
  spec.trials = a.trials;
  spec.seed = a.seed;
  spec.method = parse_method(a.method);
  spec.combine = parse_combination(a.combine);
  spec.tol = a.tol;
  const auto results = run_sweep(spec, threads);
  {
    std::ofstream os(a.csv);
    if (!os) throw FormatError("cannot open " + a.csv + " for writing");
    write_csv(os, spec, results);
    if (!os) throw FormatError("failed writing " + a.csv);
  }
  ordered_json points = ordered_json::array();
  for (const auto& p : summarize(spec, results)) {
    points.push_back({{"snr_db", number(p.snr_db)},
                      {"missing_rate", p.missing_rate},
                      {"median_relative_error", number(p.median_error)},
                      {"median_wall_time_s", number(p.median_time_s)},
                      {"succeeded", p.succeeded},
                      {"failed", p.failed}});
  }
  std::cout << ordered_json{{"status", "ok"}, {"csv", a.csv}, {"points", points}}.dump(2) << '\n';
  return kExitOk;
}

int run_error(const std::string& ref, const std::string& est) {
  const double e = relative_error(load_dense(ref), load_dense(est));
  std::printf("%.17g\n", e);
  return kExitOk;
}

int fail(const char* kind, const std::string& message, int code, ordered_json extra = ordered_json::object()) {
  ordered_json err = {{"kind", kind}, {"message", message}, {"exit_code", code}};
  err.update(extra);
  std::cerr << ordered_json{{"error", err}}.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tensor-train decomposition of tensors with missing mode-N fibers"};
  app.require_subcommand(1);
  unsigned threads = 1;
  app.add_option("--threads", threads, "Worker threads for independent trials")->check(CLI::PositiveNumber);

  CompleteArgs ca;
  auto* complete_cmd = app.add_subcommand("complete", "Compute the TT cores of a fiber-wise observed tensor");
  complete_cmd->add_option("--input", ca.input, "Dense tensor (.dtns), NaN on missing fibers")->required();
  complete_cmd->add_option("--pattern", ca.pattern, "Fiber pattern (.dtns)")->required();
  complete_cmd->add_option("--ranks", ca.ranks, "TT ranks R_0,...,R_N")->required();
  complete_cmd->add_option("--method", ca.method, "intersection or constraint")->check(CLI::IsMember({"intersection", "constraint"}));
  complete_cmd->add_option("--combine", ca.combine, "none or pairs")->check(CLI::IsMember({"none", "pairs"}));
  complete_cmd->add_option("--tol", ca.tol, "Numerical rank threshold");
  complete_cmd->add_option("--output", ca.output, "Output TT file (.dtns)")->required();
  complete_cmd->add_flag("--no-validate", ca.no_validate, "Skip the combinatorial pattern screen");

  ReconstructArgs ra;
  auto* reconstruct_cmd = app.add_subcommand("reconstruct", "Expand a TT file to a dense tensor");
  reconstruct_cmd->add_option("--tt", ra.tt, "TT file (.dtns)")->required();
  reconstruct_cmd->add_option("--input", ra.input, "Observed data; observed fibers are copied verbatim");
  reconstruct_cmd->add_option("--pattern", ra.pattern, "Fiber pattern matching --input");
  reconstruct_cmd->add_option("--output", ra.output, "Output dense file (.dtns)")->required();

  std::string vpattern, vranks;
  auto* validate_cmd = app.add_subcommand("validate", "Check a pattern against the recovery conditions");
  validate_cmd->add_option("--pattern", vpattern, "Fiber pattern (.dtns)")->required();
  validate_cmd->add_option("--ranks", vranks, "TT ranks R_0,...,R_N")->required();

  SynthArgs sa;
  auto* synth_cmd = app.add_subcommand("synth", "Run a synthetic noise / missing-rate sweep");
  synth_cmd->add_option("--shape", sa.shape, "I_1,...,I_N")->required();
  synth_cmd->add_option("--ranks-true", sa.ranks_true, "Ranks of the generated trains")->required();
  synth_cmd->add_option("--ranks-fit", sa.ranks_fit, "Ranks used for completion (default: --ranks-true)");
  synth_cmd->add_option("--snr", sa.snr, "SNR values in dB (inf allowed)");
  synth_cmd->add_option("--missing", sa.missing, "Missing fiber rates");
  synth_cmd->add_option("--trials", sa.trials, "Trials per grid point")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--seed", sa.seed, "Experiment seed");
  synth_cmd->add_option("--method", sa.method, "intersection or constraint")->check(CLI::IsMember({"intersection", "constraint"}));
  synth_cmd->add_option("--combine", sa.combine, "none or pairs")->check(CLI::IsMember({"none", "pairs"}));
  synth_cmd->add_option("--tol", sa.tol, "Numerical rank threshold");
  synth_cmd->add_option("--csv", sa.csv, "Output CSV path")->required();

  std::string ref, est;
  auto* error_cmd = app.add_subcommand("error", "Relative Frobenius error ||ref - est|| / ||ref||");
  error_cmd->add_option("--ref", ref, "Reference dense tensor (.dtns)")->required();
  error_cmd->add_option("--est", est, "Estimate dense tensor (.dtns)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), kExitUsage);
  }

  try {
    if (*complete_cmd) return run_complete(ca);
    if (*reconstruct_cmd) return run_reconstruct(ra);
    if (*validate_cmd) return run_validate(vpattern, vranks);
    if (*synth_cmd) return run_synth(sa, threads);
    if (*error_cmd) return run_error(ref, est);
  } catch (const ValidationError& e) {
    return fail(e.kind(), e.what(), kExitValidation, {{"conditions", e.conditions()}});
  } catch (const IdentifiabilityError& e) {
    return fail(e.kind(), e.what(), kExitIdentifiability, {{"stage", e.stage()}});
  } catch (const FormatError& e) {
    return fail(e.kind(), e.what(), kExitFormat);
  } catch (const Error& e) {
    return fail(e.kind(), e.what(), kExitUsage);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), kExitUsage);
  }
  return kExitUsage;
}
