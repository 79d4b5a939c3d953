#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "core.hpp"

namespace robust_filter {

struct ThresholdRecord {
  double t = 0.0;
  double delta = 0.0;
  double c2 = 0.0;
};

struct ProbeRecord {
  double c2 = 0.0;
  Index removed = 0;
  bool stuck = false;
};

struct StepInfo {
  double spectral_value = std::numeric_limits<double>::quiet_NaN();
  bool power_converged = true;
  bool c2_dependent = false;  // false when removal did not go through a tail test
  std::vector<ThresholdRecord> thresholds;
  std::vector<ProbeRecord> probes;
  bool probe_cap_hit = false;
};

// Either a final estimate or the rows (relative to the step input) to keep.
template <class Estimate>
class StepOutcome {
 public:
  static StepOutcome estimate(Estimate e, StepInfo info = {}) { return StepOutcome(std::move(e), std::move(info)); }
  static StepOutcome retained(IndexList rows, StepInfo info = {}) {
    return StepOutcome(std::move(rows), std::move(info));
  }

  bool is_estimate() const { return std::holds_alternative<Estimate>(value_); }
  const Estimate& estimate_value() const { return std::get<Estimate>(value_); }
  const IndexList& retained_rows() const { return std::get<IndexList>(value_); }
  StepInfo info;

 private:
  template <class V>
  StepOutcome(V v, StepInfo i) : info(std::move(i)), value_(std::move(v)) {}
  std::variant<Estimate, IndexList> value_;
};

struct AdaptiveRecord {
  Index size = 0;  // points entering the step
  std::vector<ProbeRecord> probes;
  bool cap_hit = false;
};

struct FilterDiagnostics {
  int iterations = 0;
  // Entry per filter step that removed points; a leading NaivePrune entry
  // when the filter runs one (see `pruned`).
  std::vector<Index> removed_per_iteration;
  Index pruned = 0;
  std::optional<Index> removed_inliers;
  std::optional<Index> removed_outliers;
  double final_spectral_norm = std::numeric_limits<double>::quiet_NaN();
  std::vector<ThresholdRecord> thresholds_used;
  std::vector<AdaptiveRecord> adaptive;  // one per step whose removals depended on C2
  std::vector<std::string> warnings;
  Index initial_size = 0;
  IndexList retained;  // rows of the input that survived
  bool stuck = false;
};

// Binary search on C2 until the removed fraction lands in [eps/2, 3eps/2].
// Bracket by doubling/halving, then bisect geometrically. Stuck probes count
// as removing nothing. Returns the last non-stuck outcome when the probe
// budget runs out.
template <class Estimate, class Step>
StepOutcome<Estimate> adaptive_filter(Step&& step, Index n, const FilterConfig& cfg, double c2_start) {
  const double lo_target = 0.5 * cfg.epsilon * static_cast<double>(n);
  const double hi_target = 1.5 * cfg.epsilon * static_cast<double>(n);
  std::optional<double> too_low, too_high;
  double c2 = std::clamp(c2_start, cfg.c2_min, cfg.c2_max);
  std::optional<StepOutcome<Estimate>> last_ok;
  std::vector<ProbeRecord> probes;
  double last_spectral = std::numeric_limits<double>::quiet_NaN();
  for (int probe = 0; probe < cfg.max_probes; ++probe) {
    std::optional<StepOutcome<Estimate>> out;
    try {
      out.emplace(step(c2));
    } catch (const FilterStuck& e) {
      last_spectral = e.spectral_value();
    }
    // Outcomes that do not depend on C2 carry no probe record.
    if (out && (out->is_estimate() || !out->info.c2_dependent)) {
      out->info.probes = probes;
      return std::move(*out);
    }
    const Index removed = out ? n - static_cast<Index>(out->retained_rows().size()) : 0;
    probes.push_back({c2, removed, !out});
    const auto r = static_cast<double>(removed);
    if (out) {
      if (r >= lo_target && r <= hi_target) {
        out->info.probes = probes;
        return std::move(*out);
      }
      last_ok = std::move(out);
    }
    if (r > hi_target)
      too_high = c2;
    else
      too_low = c2;
    double next;
    if (too_low && too_high)
      next = std::sqrt(*too_low * *too_high);
    else if (too_high)
      next = *too_high / 2.0;
    else
      next = *too_low * 2.0;
    next = std::clamp(next, cfg.c2_min, cfg.c2_max);
    if (next == c2) break;
    c2 = next;
  }
  if (!last_ok) throw FilterStuck("adaptive tail bounding: every probe was stuck", last_spectral);
  last_ok->info.probes = probes;
  last_ok->info.probe_cap_hit = true;
  return std::move(*last_ok);
}

inline void record_provenance(const SampleSet& s, FilterDiagnostics& diag) {
  if (!s.labeled()) return;
  const auto& ls = s.labels();
  Index kept_in = 0, kept_out = 0;
  for (Index r : diag.retained) (ls[static_cast<std::size_t>(r)] == Label::Inlier ? kept_in : kept_out) += 1;
  diag.removed_inliers = s.count(Label::Inlier) - kept_in;
  diag.removed_outliers = s.count(Label::Outlier) - kept_out;
}

// Filter-loop driver: `step(sub, c2)` runs one step on the current subset.
template <class Estimate, class Step, class Fallback>
Estimate run_filter_loop(const SampleSet& s, IndexList current, const FilterConfig& cfg, double c2_start,
                         bool adaptive, Step&& step, Fallback&& fallback, FilterDiagnostics& diag) {
  // Every round removes more outliers than inliers, so more than 2 eps n
  // removals in total cannot be justified; adaptive runs stop there.
  const double budget = 2.0 * cfg.epsilon * static_cast<double>(s.size());
  for (int it = 0; it < cfg.max_iterations; ++it) {
    SampleSet sub = s.subset(current);
    const Index n = sub.size();
    if (adaptive && static_cast<double>(s.size() - n) >= budget) {
      diag.warnings.push_back("adaptive removal budget 2 eps n reached at iteration " + std::to_string(it));
      diag.retained = current;
      return fallback(sub);
    }
    std::optional<StepOutcome<Estimate>> out;
    try {
      if (adaptive)
        out.emplace(adaptive_filter<Estimate>([&](double c2) { return step(sub, c2); }, n, cfg, c2_start));
      else
        out.emplace(step(sub, c2_start));
    } catch (const FilterStuck& e) {
      diag.final_spectral_norm = e.spectral_value();
      diag.stuck = true;
      diag.warnings.push_back(std::string("filter stuck at iteration ") + std::to_string(it) + ": " + e.what());
      diag.retained = current;
      return fallback(sub);
    }
    diag.iterations += 1;
    diag.final_spectral_norm = out->info.spectral_value;
    if (!out->info.power_converged)
      diag.warnings.push_back("power iteration did not converge at iteration " + std::to_string(it));
    if (adaptive && !out->info.probes.empty())
      diag.adaptive.push_back({n, out->info.probes, out->info.probe_cap_hit});
    if (out->is_estimate()) {
      diag.retained = current;
      return out->estimate_value();
    }
    const IndexList& keep = out->retained_rows();
    if (keep.empty() || static_cast<Index>(keep.size()) >= n)
      throw Error("filter step returned a retained set that is empty or not smaller");
    for (const auto& t : out->info.thresholds) diag.thresholds_used.push_back(t);
    IndexList next;
    next.reserve(keep.size());
    for (Index r : keep) next.push_back(current[static_cast<std::size_t>(r)]);
    diag.removed_per_iteration.push_back(n - static_cast<Index>(next.size()));
    current = std::move(next);
  }
  diag.warnings.push_back("max_iterations reached");
  diag.retained = current;
  return fallback(s.subset(current));
}

}  // namespace robust_filter
