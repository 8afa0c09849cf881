// Named estimator = (loss family, penalty family, row weights).
//
// Names follow the HA/TA/CA x Lasso/MCP convention, e.g. "HA-Lasso",
// "TA-MCP", "CA-SCAD". A leading "W" selects the infinity-cap weights
// ("WHA-MCP"), and "LS" stands for the plain quadratic loss.
#pragma once

#include "pram/losses.hpp"
#include "pram/penalties.hpp"

#include <string>
#include <string_view>

namespace pram {

struct EstimatorSpec {
  LossFamily loss = LossFamily::Huber;
  PenaltyFamily penalty = PenaltyFamily::Lasso;
  double shape = 0.0;
  WeightSpec weight{};

  std::string name() const {
    std::string out = weight.kind == WeightKind::InfinityCap ? "W" : "";
    switch (loss) {
      case LossFamily::Huber: out += "HA"; break;
      case LossFamily::Tukey: out += "TA"; break;
      case LossFamily::Cauchy: out += "CA"; break;
      case LossFamily::Quadratic: out += "LS"; break;
    }
    switch (penalty) {
      case PenaltyFamily::Lasso: out += "-Lasso"; break;
      case PenaltyFamily::SCAD: out += "-SCAD"; break;
      case PenaltyFamily::MCP: out += "-MCP"; break;
    }
    return out;
  }

  PenaltySpec penalty_spec(double lambda) const { return {penalty, lambda, shape}; }
  LossSpec loss_spec(double alpha) const { return {loss, alpha}; }
};

inline EstimatorSpec make_estimator(LossFamily loss, PenaltyFamily penalty, WeightSpec weight = {}) {
  return {loss, penalty, default_shape(penalty), weight};
}

inline EstimatorSpec parse_estimator(std::string_view name, double cap = 4.0) {
  const std::string original(name);
  WeightSpec weight{};
  if (!name.empty() && name.front() == 'W') {
    weight = {WeightKind::InfinityCap, cap};
    name.remove_prefix(1);
  }
  const auto dash = name.find('-');
  if (dash == std::string_view::npos) throw std::invalid_argument("bad estimator name: " + original);
  const std::string_view l = name.substr(0, dash);
  const std::string_view p = name.substr(dash + 1);
  LossFamily loss;
  if (l == "HA")
    loss = LossFamily::Huber;
  else if (l == "TA")
    loss = LossFamily::Tukey;
  else if (l == "CA")
    loss = LossFamily::Cauchy;
  else if (l == "LS")
    loss = LossFamily::Quadratic;
  else
    throw std::invalid_argument("bad estimator name: " + original);
  PenaltyFamily pen;
  if (p == "Lasso")
    pen = PenaltyFamily::Lasso;
  else if (p == "MCP")
    pen = PenaltyFamily::MCP;
  else if (p == "SCAD")
    pen = PenaltyFamily::SCAD;
  else
    throw std::invalid_argument("bad estimator name: " + original);
  return make_estimator(loss, pen, weight);
}

inline bool same_weights(const WeightSpec& a, const WeightSpec& b) {
  return a.kind == b.kind && (a.kind == WeightKind::Unweighted || a.cap == b.cap);
}

}  // namespace pram
