#include "fwtt/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "fwtt/errors.hpp"
#include "fwtt/patterns.hpp"

namespace fwtt {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

TrialResult run_trial(const ExperimentSpec& spec, std::size_t si, std::size_t ri, Index trial) {
  TrialResult res;
  res.snr_db = spec.snr_db[si];
  res.missing_rate = spec.missing_rate[ri];
  res.trial = trial;
  res.relative_error = std::numeric_limits<double>::quiet_NaN();
  const std::uint64_t base = trial_seed(spec.seed, si, ri, static_cast<std::uint64_t>(trial));
  try {
    const DenseTensor truth = tt_to_dense(random_tt(spec.shape, spec.ranks_true, splitmix64(base ^ 1)));
    const DenseTensor noisy = add_noise(truth, res.snr_db, splitmix64(base ^ 2));
    const Shape base_shape(spec.shape.begin(), spec.shape.end() - 1);
    const FiberPattern pattern = random_pattern(base_shape, res.missing_rate, splitmix64(base ^ 3));
    const auto report = validate(pattern, spec.ranks_fit);
    res.valid_pattern = report.overall_valid;
    if (!res.valid_pattern) {
      res.failure = "invalid pattern:";
      for (const auto& c : report.failed_conditions()) res.failure += " " + c;
      return res;
    }
    const DenseTensor masked = mask_apply(noisy, pattern);
    CompletionConfig cfg{spec.ranks_fit, spec.method, spec.combine, spec.tol, false};
    const auto start = std::chrono::steady_clock::now();
    const auto out = complete(masked, pattern, cfg);
    res.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    res.relative_error = relative_error(truth, tt_to_dense(out.tt));
  } catch (const std::exception& e) {
    res.failure = e.what();
  }
  return res;
}

}  // namespace

TTDecomposition random_tt(const Shape& shape, const std::vector<Index>& ranks, std::uint64_t seed) {
  check_ranks(shape, ranks);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<DenseTensor> cores;
  for (std::size_t n = 0; n < shape.size(); ++n) {
    DenseTensor core({ranks[n], shape[n], ranks[n + 1]});
    for (double& x : core.values()) x = normal(rng);
    cores.push_back(std::move(core));
  }
  return TTDecomposition(std::move(cores));
}

DenseTensor add_noise(const DenseTensor& t, double snr_db, std::uint64_t seed) {
  if (std::isinf(snr_db) && snr_db > 0) return t;
  if (std::isnan(snr_db)) throw InvalidArgument("SNR must be a number");
  for (double x : t.values()) {
    if (!std::isfinite(x)) throw InvalidArgument("add_noise needs a finite tensor");
  }
  const double signal = t.frobenius_norm();
  if (signal == 0.0) throw InvalidArgument("add_noise: SNR is undefined for a zero tensor");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> noise(static_cast<std::size_t>(t.size()));
  for (double& x : noise) x = normal(rng);
  const double raw = Eigen::Map<const Vector>(noise.data(), t.size()).norm();
  const double scale = signal * std::pow(10.0, -snr_db / 20.0) / raw;
  DenseTensor out = t;
  auto v = out.values();
  for (std::size_t i = 0; i < noise.size(); ++i) v[i] += scale * noise[i];
  return out;
}

double relative_error(const DenseTensor& ref, const DenseTensor& est) {
  if (ref.shape() != est.shape()) throw InvalidArgument("relative_error: shapes differ");
  const double denom = ref.frobenius_norm();
  if (denom == 0.0) throw InvalidArgument("relative_error: reference tensor is zero");
  const Eigen::Map<const Vector> a(ref.values().data(), ref.size());
  const Eigen::Map<const Vector> b(est.values().data(), est.size());
  return (a - b).norm() / denom;
}

std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t snr_index, std::uint64_t rate_index, std::uint64_t trial) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ snr_index);
  h = splitmix64(h ^ rate_index);
  return splitmix64(h ^ trial);
}

std::vector<TrialResult> run_sweep(const ExperimentSpec& spec, unsigned threads) {
  if (spec.trials < 1) throw InvalidArgument("an experiment needs at least one trial");
  if (spec.shape.size() < 2) throw InvalidArgument("an experiment needs a tensor of order >= 2");
  for (double r : spec.missing_rate) {
    if (!(r >= 0.0 && r < 1.0)) throw InvalidArgument("missing rates must lie in [0, 1)");
  }
  check_ranks(spec.shape, spec.ranks_true);
  check_ranks(spec.shape, spec.ranks_fit);

  const std::size_t rates = spec.missing_rate.size();
  const auto trials = static_cast<std::size_t>(spec.trials);
  const std::size_t total = spec.snr_db.size() * rates * trials;
  std::vector<TrialResult> results(total);
  auto job = [&](std::size_t k) {
    const std::size_t trial = k % trials;
    const std::size_t ri = (k / trials) % rates;
    const std::size_t si = k / (trials * rates);
    results[k] = run_trial(spec, si, ri, static_cast<Index>(trial));
  };
  threads = std::max(1u, threads);
  if (threads == 1) {
    for (std::size_t k = 0; k < total; ++k) job(k);
    return results;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < total; k = next++) job(k);
    });
  }
  pool.clear();
  return results;
}

double median(std::vector<double> xs) {
  if (xs.empty()) throw InvalidArgument("median of an empty sample");
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

std::vector<SweepPoint> summarize(const ExperimentSpec& spec, const std::vector<TrialResult>& results) {
  std::vector<SweepPoint> out;
  for (double snr : spec.snr_db) {
    for (double rate : spec.missing_rate) {
      SweepPoint pt;
      pt.snr_db = snr;
      pt.missing_rate = rate;
      std::vector<double> errors, times;
      for (const auto& r : results) {
        if (r.snr_db != snr || r.missing_rate != rate) continue;
        if (r.failure.empty()) {
          errors.push_back(r.relative_error);
          times.push_back(r.wall_time_s);
        } else {
          ++pt.failed;
        }
      }
      pt.succeeded = static_cast<Index>(errors.size());
      pt.median_error = errors.empty() ? std::numeric_limits<double>::quiet_NaN() : median(errors);
      pt.median_time_s = times.empty() ? std::numeric_limits<double>::quiet_NaN() : median(times);
      out.push_back(pt);
    }
  }
  return out;
}

void write_csv(std::ostream& os, const ExperimentSpec& spec, const std::vector<TrialResult>& results) {
  os << "snr_db,missing_rate,trial,method,combine,relative_error,wall_time_s,valid_pattern\n";
  const std::string method = to_string(spec.method);
  const std::string combine = to_string(spec.combine);
  for (const auto& r : results) {
    os << format_double(r.snr_db) << ',' << format_double(r.missing_rate) << ',' << r.trial << ',' << method << ','
       << combine << ',' << format_double(r.relative_error) << ',' << format_double(r.wall_time_s) << ','
       << (r.valid_pattern ? "true" : "false") << '\n';
  }
}

}  // namespace fwtt
