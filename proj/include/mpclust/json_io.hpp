#pragma once

#include <json.hpp>

#include "mpclust/assignment.hpp"
#include "mpclust/fractional.hpp"
#include "mpclust/mp_facility.hpp"
#include "mpclust/mpc.hpp"
#include "mpclust/rounding.hpp"

namespace mpclust {

using json = nlohmann::json;

inline json to_json(const RadiusProfile& p) {
  return json{{"beta", p.beta}, {"lambda", p.lambda}, {"radii", p.radii}};
}

inline RadiusProfile radius_profile_from_json(const json& j) {
  RadiusProfile p;
  p.beta = j.at("beta").get<double>();
  p.lambda = j.at("lambda").get<double>();
  p.radii = j.at("radii").get<std::vector<double>>();
  return p;
}

inline json to_json(const CostReport& r) {
  json j{{"total", r.total}, {"gamma", r.gamma}};
  if (!r.per_point.empty()) j["per_point"] = r.per_point;
  if (!r.estimated_per_point.empty()) {
    j["estimated_per_point"] = r.estimated_per_point;
    j["estimated_total"] = r.estimated_total;
  }
  return j;
}

inline json to_json(const SweepTrace& t) {
  return json{{"L", t.L},
              {"lambdas", t.lambdas},
              {"masses", t.masses},
              {"ell_star", t.ell_star},
              {"alpha", t.alpha}};
}

inline json to_json(const ValueEstimate& v) {
  return json{{"eta", v.eta},          {"alpha_scale", v.alpha_scale},
              {"k", v.k},              {"z", v.z},
              {"gamma", v.gamma},      {"normalize_scale", v.normalize_scale},
              {"trace", to_json(v.trace)}};
}

inline json to_json(const RunStats& s) {
  json charges = json::array();
  for (const auto& c : s.charges)
    charges.push_back(
        {{"primitive", c.primitive}, {"rounds", c.rounds}, {"memory", c.memory_words}});
  return json{{"rounds", s.rounds()},
              {"supersteps", s.supersteps},
              {"peak_local", s.peak_local},
              {"total_memory", s.total_memory()},
              {"charges", charges}};
}

inline json to_json(const SolveResult& r) {
  return json{{"schema", "mpc-kclust/1"},
              {"centers", r.centers},
              {"cost", r.cost},
              {"k", r.k},
              {"z", r.z},
              {"gamma", r.gamma},
              {"normalize_scale", r.normalize_scale},
              {"sweep", to_json(r.sweep)}};
}

}  // namespace mpclust
