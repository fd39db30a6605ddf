#include <cmath>
#include <limits>

#include "psmooth/terminal_cost.hpp"

namespace psmooth::terminal {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::VectorXd vec(const nlohmann::json& j, const char* what) {
  if (!j.is_array()) fail(ErrorKind::ConfigParse, std::string(what) + " must be an array");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

}  // namespace

ProjectedTerminalCost constant(int dim, double c) {
  return ProjectedTerminalCost(dim, [c](const Eigen::VectorXd&) { return c; }, std::abs(c));
}

ProjectedTerminalCost polynomial(int dim, std::vector<Monomial> terms) {
  bool bounded = true;
  double bound = 0.0;
  for (const Monomial& m : terms) {
    require(static_cast<int>(m.powers.size()) == dim, ErrorKind::DimensionMismatch,
            "monomial powers must have one entry per coordinate");
    for (int p : m.powers)
      require(p >= 0, ErrorKind::ConfigInvalid, "monomial powers must be nonnegative");
    bool is_const = true;
    for (int p : m.powers) is_const = is_const && p == 0;
    if (is_const) bound += std::abs(m.coeff);
    else if (m.coeff != 0.0) bounded = false;
  }
  auto fn = [terms = std::move(terms)](const Eigen::VectorXd& y) {
    double acc = 0.0;
    for (const Monomial& m : terms) {
      double v = m.coeff;
      for (std::size_t d = 0; d < m.powers.size(); ++d) v *= std::pow(y(d), m.powers[d]);
      acc += v;
    }
    return acc;
  };
  return ProjectedTerminalCost(dim, fn, bounded ? bound : kInf);
}

ProjectedTerminalCost linear(const Eigen::VectorXd& a, double b) {
  const bool zero = a.isZero(0.0);
  return ProjectedTerminalCost(
      static_cast<int>(a.size()), [a, b](const Eigen::VectorXd& y) { return a.dot(y) + b; },
      zero ? std::abs(b) : kInf);
}

ProjectedTerminalCost tanh_clamp(double scale, ProjectedTerminalCost arg) {
  require(scale > 0.0, ErrorKind::ConfigInvalid, "tanh_clamp scale must be positive");
  const int dim = arg.dim();
  const double bound = std::min(scale, arg.bound());
  return ProjectedTerminalCost(
      dim, [scale, arg = std::move(arg)](const Eigen::VectorXd& y) {
        return scale * std::tanh(arg(y) / scale);
      },
      bound);
}

ProjectedTerminalCost smoothed_indicator(const Eigen::VectorXd& center, double radius,
                                         double width, double height) {
  require(radius >= 0.0 && width > 0.0, ErrorKind::ConfigInvalid,
          "smoothed_indicator needs radius >= 0 and width > 0");
  return ProjectedTerminalCost(
      static_cast<int>(center.size()),
      [center, radius, width, height](const Eigen::VectorXd& y) {
        const double r2 = (y - center).squaredNorm();
        return height / (1.0 + std::exp((r2 - radius * radius) / (width * (2.0 * radius + width))));
      },
      std::abs(height));
}

ProjectedTerminalCost sum(const std::vector<ProjectedTerminalCost>& terms) {
  require(!terms.empty(), ErrorKind::ConfigInvalid, "sum needs at least one term");
  const int dim = terms.front().dim();
  double bound = 0.0;
  for (const auto& t : terms) {
    require(t.dim() == dim, ErrorKind::DimensionMismatch, "sum terms differ in dimension");
    bound += t.bound();
  }
  return ProjectedTerminalCost(
      dim, [terms](const Eigen::VectorXd& y) {
        double acc = 0.0;
        for (const auto& t : terms) acc += t(y);
        return acc;
      },
      bound);
}

ProjectedTerminalCost from_json(const nlohmann::json& j, int dim) {
  if (!j.is_object() || j.size() != 1)
    fail(ErrorKind::ConfigParse, "terminal cost node must be an object with exactly one key");
  const std::string kind = j.begin().key();
  const nlohmann::json& b = j.begin().value();
  try {
    if (kind == "constant") return constant(dim, b.get<double>());
    if (kind == "polynomial") {
      std::vector<Monomial> terms;
      for (const auto& t : b) {
        Monomial m;
        m.coeff = t.at("coeff").get<double>();
        m.powers = t.at("powers").get<std::vector<int>>();
        terms.push_back(std::move(m));
      }
      return polynomial(dim, std::move(terms));
    }
    if (kind == "linear") {
      const Eigen::VectorXd a = vec(b.at("coeffs"), "linear.coeffs");
      require(a.size() == dim, ErrorKind::DimensionMismatch, "linear coefficients dimension");
      return linear(a, b.value("offset", 0.0));
    }
    if (kind == "tanh_clamp") return tanh_clamp(b.at("scale").get<double>(), from_json(b.at("arg"), dim));
    if (kind == "smoothed_indicator") {
      const Eigen::VectorXd c = vec(b.at("center"), "smoothed_indicator.center");
      require(c.size() == dim, ErrorKind::DimensionMismatch, "indicator center dimension");
      return smoothed_indicator(c, b.at("radius").get<double>(), b.at("width").get<double>(),
                                b.value("height", 1.0));
    }
    if (kind == "sum") {
      std::vector<ProjectedTerminalCost> terms;
      for (const auto& t : b) terms.push_back(from_json(t, dim));
      return sum(terms);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::ConfigParse, "terminal cost '" + kind + "': " + e.what());
  }
  fail(ErrorKind::ConfigParse, "unknown terminal cost node '" + kind + "'");
}

}  // namespace psmooth::terminal
