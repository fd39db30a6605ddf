#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <vector>

#include "psmooth/ou_engine.hpp"

// Builtin terminal costs on R^N. Each node carries a sup bound (infinity when
// the function is unbounded).
namespace psmooth::terminal {

struct Monomial {
  double coeff = 0.0;
  std::vector<int> powers;  // one per coordinate
};

ProjectedTerminalCost constant(int dim, double c);
ProjectedTerminalCost polynomial(int dim, std::vector<Monomial> terms);
ProjectedTerminalCost linear(const Eigen::VectorXd& a, double b = 0.0);
// scale * tanh(arg / scale)
ProjectedTerminalCost tanh_clamp(double scale, ProjectedTerminalCost arg);
// height / (1 + exp((|y - center|^2 - radius^2) / (width (2 radius + width))))
ProjectedTerminalCost smoothed_indicator(const Eigen::VectorXd& center, double radius,
                                         double width, double height);
ProjectedTerminalCost sum(const std::vector<ProjectedTerminalCost>& terms);

// One of
//   {"constant": c}
//   {"polynomial": [{"coeff": c, "powers": [...]}, ...]}
//   {"linear": {"coeffs": [...], "offset": b}}
//   {"tanh_clamp": {"scale": s, "arg": <expr>}}
//   {"smoothed_indicator": {"center": [...], "radius": r, "width": w, "height": h}}
//   {"sum": [<expr>, ...]}
ProjectedTerminalCost from_json(const nlohmann::json& j, int dim);

}  // namespace psmooth::terminal
