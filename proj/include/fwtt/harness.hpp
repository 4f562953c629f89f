#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fwtt/completion.hpp"
#include "fwtt/tensor.hpp"

namespace fwtt {

/// Train with i.i.d. standard normal core entries drawn from a generator
/// seeded with `seed`.
TTDecomposition random_tt(const Shape& shape, const std::vector<Index>& ranks, std::uint64_t seed);

/// t + noise, the Gaussian noise rescaled so that 20 log10(||t|| / ||noise||)
/// equals `snr_db` exactly. An infinite SNR returns `t` unchanged.
DenseTensor add_noise(const DenseTensor& t, double snr_db, std::uint64_t seed);

/// ||ref - est||_F / ||ref||_F.
double relative_error(const DenseTensor& ref, const DenseTensor& est);

struct ExperimentSpec {
  Shape shape;
  std::vector<Index> ranks_true;
  std::vector<Index> ranks_fit;
  std::vector<double> snr_db;
  std::vector<double> missing_rate;
  Index trials = 1;
  std::uint64_t seed = 0;
  SubspaceMethod method = SubspaceMethod::intersection;
  SliceCombination combine = SliceCombination::none;
  double tol = kDefaultRankTol;
};

struct TrialResult {
  double snr_db = 0.0;
  double missing_rate = 0.0;
  Index trial = 0;
  double relative_error = 0.0;  // NaN when the trial did not complete
  double wall_time_s = 0.0;     // around complete() only
  bool valid_pattern = false;
  std::string failure;          // empty on success
};

struct SweepPoint {
  double snr_db = 0.0;
  double missing_rate = 0.0;
  double median_error = 0.0;  // NaN when no trial succeeded
  double median_time_s = 0.0;
  Index succeeded = 0;
  Index failed = 0;
};

/// Seed of one trial: splitmix64 applied in turn to the experiment seed and
/// the SNR, rate and trial indices, so adding grid points never reshuffles
/// the others.
std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t snr_index, std::uint64_t rate_index, std::uint64_t trial);

/// Runs every (snr, rate, trial) combination: generate, add noise, mask,
/// complete, measure. Failures are recorded in the result, never thrown.
/// Results are ordered by snr, then rate, then trial regardless of `threads`.
std::vector<TrialResult> run_sweep(const ExperimentSpec& spec, unsigned threads = 1);

/// Medians over successful trials for each grid point, in grid order.
std::vector<SweepPoint> summarize(const ExperimentSpec& spec, const std::vector<TrialResult>& results);

/// CSV with header snr_db,missing_rate,trial,method,combine,relative_error,wall_time_s,valid_pattern.
void write_csv(std::ostream& os, const ExperimentSpec& spec, const std::vector<TrialResult>& results);

/// Median of a non-empty sample (mean of the two central values for even sizes).
double median(std::vector<double> xs);

}  // namespace fwtt
