#pragma once

#include <string>

#include <json.hpp>

#include "core.hpp"
#include "filter_common.hpp"
#include "scenario.hpp"

namespace robust_filter {

using Json = nlohmann::ordered_json;

inline std::string to_string(Centering c) { return c == Centering::Median ? "median" : "mean"; }
inline Centering centering_from(const std::string& s) {
  if (s == "median") return Centering::Median;
  if (s == "mean") return Centering::Mean;
  throw InvalidArgument("unknown centering '" + s + "'");
}
inline std::string to_string(CovarianceTail t) { return t == CovarianceTail::Weakened ? "weakened" : "hanson-wright"; }
inline CovarianceTail cov_tail_from(const std::string& s) {
  if (s == "weakened") return CovarianceTail::Weakened;
  if (s == "hanson-wright") return CovarianceTail::HansonWright;
  throw InvalidArgument("unknown covariance tail '" + s + "'");
}

inline Json to_json(const FilterConfig& c) {
  Json j;
  j["epsilon"] = c.epsilon;
  j["tau"] = c.tau;
  j["nu"] = c.nu;
  j["centering"] = to_string(c.centering);
  j["adaptive"] = c.adaptive;
  j["c2_initial"] = c.c2_initial;
  j["c2_min"] = c.c2_min;
  j["c2_max"] = c.c2_max;
  j["max_iterations"] = c.max_iterations;
  j["spectral_tol"] = c.spectral_tol;
  j["seed"] = c.seed;
  j["power_tol"] = c.power.tol;
  j["power_max_iter"] = c.power.max_iter;
  j["max_probes"] = c.max_probes;
  j["thres_constant"] = c.thres_constant;
  j["cov_outlier_constant"] = c.cov_outlier_constant;
  j["cov_gap_constant"] = c.cov_gap_constant;
  j["cov_tail"] = to_string(c.cov_tail);
  j["cov_c2"] = c.cov_c2;
  j["cov_tail_c1"] = c.cov_tail_c1;
  j["cov_slack"] = c.resolved_cov_slack();
  j["cov_t_floor"] = c.resolved_cov_t_floor();
  return j;
}

// Missing keys keep their defaults.
inline FilterConfig filter_config_from(const Json& j, FilterConfig c = {}) {
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("epsilon", c.epsilon);
  get("tau", c.tau);
  get("nu", c.nu);
  if (j.contains("centering")) c.centering = centering_from(j.at("centering").get<std::string>());
  get("adaptive", c.adaptive);
  get("c2_initial", c.c2_initial);
  get("c2_min", c.c2_min);
  get("c2_max", c.c2_max);
  get("max_iterations", c.max_iterations);
  get("spectral_tol", c.spectral_tol);
  get("seed", c.seed);
  get("power_tol", c.power.tol);
  get("power_max_iter", c.power.max_iter);
  get("max_probes", c.max_probes);
  get("thres_constant", c.thres_constant);
  get("cov_outlier_constant", c.cov_outlier_constant);
  get("cov_gap_constant", c.cov_gap_constant);
  if (j.contains("cov_tail")) c.cov_tail = cov_tail_from(j.at("cov_tail").get<std::string>());
  get("cov_c2", c.cov_c2);
  get("cov_tail_c1", c.cov_tail_c1);
  if (j.contains("cov_slack")) c.cov_slack = j.at("cov_slack").get<double>();
  if (j.contains("cov_t_floor")) c.cov_t_floor = j.at("cov_t_floor").get<double>();
  return c;
}

inline Json to_json(const InlierSpec& s) {
  return Json{{"kind", s.kind}, {"mean_value", s.mean_value}, {"spike_scale", s.spike_scale}, {"sigma", s.sigma}};
}
inline InlierSpec inlier_spec_from(const Json& j, InlierSpec s = {}) {
  if (j.contains("kind")) s.kind = j.at("kind").get<std::string>();
  if (j.contains("mean_value")) s.mean_value = j.at("mean_value").get<double>();
  if (j.contains("spike_scale")) s.spike_scale = j.at("spike_scale").get<double>();
  if (j.contains("sigma")) s.sigma = j.at("sigma").get<double>();
  return s;
}
inline Json to_json(const NoiseSpec& s) { return Json{{"kind", s.kind}, {"point_scale", s.point_scale}}; }
inline NoiseSpec noise_spec_from(const Json& j, NoiseSpec s = {}) {
  if (j.contains("kind")) s.kind = j.at("kind").get<std::string>();
  if (j.contains("point_scale")) s.point_scale = j.at("point_scale").get<double>();
  return s;
}

inline Json diagnostics_to_json(const FilterDiagnostics& d) {
  Json j;
  j["iterations"] = d.iterations;
  j["initial_size"] = d.initial_size;
  j["retained_size"] = d.retained.size();
  j["pruned"] = d.pruned;
  j["removed_per_iteration"] = d.removed_per_iteration;
  j["removed_inliers"] = d.removed_inliers ? Json(*d.removed_inliers) : Json(nullptr);
  j["removed_outliers"] = d.removed_outliers ? Json(*d.removed_outliers) : Json(nullptr);
  j["final_spectral_norm"] = std::isfinite(d.final_spectral_norm) ? Json(d.final_spectral_norm) : Json(nullptr);
  Json th = Json::array();
  for (const auto& t : d.thresholds_used)
    th.push_back(Json{{"T", t.t}, {"delta", t.delta}, {"c2", std::isfinite(t.c2) ? Json(t.c2) : Json(nullptr)}});
  j["thresholds_used"] = th;
  Json pr = Json::array();
  for (const auto& a : d.adaptive) {
    Json inv = Json::array();
    for (const auto& p : a.probes) inv.push_back(Json{{"c2", p.c2}, {"removed", p.removed}, {"stuck", p.stuck}});
    pr.push_back(Json{{"size", a.size}, {"probes", inv}, {"cap_hit", a.cap_hit}});
  }
  j["adaptive_invocations"] = pr;
  j["warnings"] = d.warnings;
  j["stuck"] = d.stuck;
  return j;
}

}  // namespace robust_filter
