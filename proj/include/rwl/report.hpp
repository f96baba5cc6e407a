#pragma once

#include <cstdio>
#include <ostream>
#include <string>

#include "json.hpp"

#include "rwl/admissibility.hpp"
#include "rwl/estimates.hpp"

namespace rwl {

inline constexpr const char* kVersion = "0.1.0";

// Fixed round-trip formatting so CSV output is byte-stable.
inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline nlohmann::json to_json(const NormEstimate& e) {
  nlohmann::json j{{"p", e.p},           {"lower", e.lower},         {"method", e.method},
                   {"probes", e.probes}, {"iterations", e.iterations}, {"converged", e.converged}};
  j["certified"] = e.certified ? nlohmann::json(*e.certified) : nlohmann::json(nullptr);
  if (!e.note.empty()) j["note"] = e.note;
  return j;
}

inline nlohmann::json to_json(const FitResult& f) {
  return {{"slope", f.slope}, {"intercept", f.intercept}, {"residual", f.residual}, {"points", f.points}};
}

inline nlohmann::json to_json(const ScanReport& r) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& pt : r.points) {
    auto e = to_json(pt.estimate);
    e["value"] = pt.value;
    e["in_fit"] = pt.in_fit;
    pts.push_back(e);
  }
  nlohmann::json j{{"axis", r.axis}, {"series", r.series}, {"p", r.p}, {"points", pts}};
  j["fit"] = r.fit ? to_json(*r.fit) : nlohmann::json(nullptr);
  j["c_fit"] = r.c_fit ? nlohmann::json(*r.c_fit) : nlohmann::json(nullptr);
  if (!r.envelope.empty()) j["envelope"] = r.envelope;
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

inline nlohmann::json to_json(const ConditionResult& c) {
  nlohmann::json per = nlohmann::json::array();
  for (std::size_t i = 0; i < c.scales.size(); ++i) per.push_back({{"j", c.scales[i]}, {"constant", c.per_scale[i]}});
  return {{"name", c.name}, {"pass", c.pass}, {"constant", c.constant}, {"per_scale", per}, {"note", c.note}};
}

inline nlohmann::json to_json(const AdmissibilityReport& r) {
  return {{"filter", r.filter},
          {"delta", r.delta},
          {"alpha", r.alpha},
          {"seed", r.seed},
          {"decay", to_json(r.decay)},
          {"sectional", to_json(r.sectional)},
          {"holder", to_json(r.holder)},
          {"alpha_effective", r.alpha_effective},
          {"admissible", r.admissible()}};
}

// CSV with columns axis,value,p,estimate,method,probes,slope_fit,residual.
inline void write_scan_csv(std::ostream& os, const ScanReport& r) {
  os << "axis,value,p,estimate,method,probes,slope_fit,residual\n";
  const std::string slope = r.fit ? format_number(r.fit->slope) : "";
  const std::string resid = r.fit ? format_number(r.fit->residual) : "";
  for (const auto& pt : r.points) {
    os << r.axis << ',' << pt.value << ',' << format_number(r.p) << ',' << format_number(pt.estimate.value()) << ','
       << pt.estimate.method << ',' << pt.estimate.probes << ',' << slope << ',' << resid << '\n';
  }
}

}  // namespace rwl
