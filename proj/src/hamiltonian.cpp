#include "psmooth/hjb_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace psmooth {

Hamiltonian::Hamiltonian(const std::vector<Eigen::VectorXd>& points, std::vector<double> costs) {
  require(!points.empty(), ErrorKind::ConfigInvalid, "control grid is empty");
  require(points.size() == costs.size(), ErrorKind::ConfigInvalid,
          "running cost table length differs from the control grid");
  const Eigen::Index m = points.front().size();
  require(m >= 1, ErrorKind::ConfigInvalid, "control points must be nonempty vectors");
  points_.resize(m, static_cast<Eigen::Index>(points.size()));
  costs_.resize(static_cast<Eigen::Index>(costs.size()));
  for (std::size_t j = 0; j < points.size(); ++j) {
    require(points[j].size() == m, ErrorKind::ConfigInvalid, "control points differ in size");
    require(points[j].allFinite() && std::isfinite(costs[j]), ErrorKind::ConfigInvalid,
            "non-finite control point or cost");
    points_.col(j) = points[j];
    costs_(j) = costs[j];
  }
}

Hamiltonian Hamiltonian::trivial(int m) {
  return Hamiltonian({Eigen::VectorXd::Zero(m)}, {0.0});
}

double Hamiltonian::max_control_norm() const { return points_.colwise().norm().maxCoeff(); }

double Hamiltonian::min_value(const double* p) const {
  const Eigen::Index m = points_.rows();
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < points_.cols(); ++j) {
    const double* u = points_.col(j).data();
    double v = costs_(j);
    for (Eigen::Index k = 0; k < m; ++k) v += p[k] * u[k];
    best = std::min(best, v);
  }
  return best;
}

HMin h_min(const Hamiltonian& ham, const Eigen::VectorXd& p) {
  require(p.size() == ham.control_dim(), ErrorKind::DimensionMismatch,
          "h_min: p has the wrong dimension");
  HMin out{std::numeric_limits<double>::infinity(), 0};
  for (int j = 0; j < ham.size(); ++j) {
    const double v = p.dot(ham.points().col(j)) + ham.costs()(j);
    if (v < out.value) out = {v, j};
  }
  return out;
}

TimeFunction::TimeFunction(double constant) : times_{0.0}, values_{constant} {}

TimeFunction::TimeFunction(std::vector<double> times, std::vector<double> values)
    : times_(std::move(times)), values_(std::move(values)) {
  require(!times_.empty() && times_.size() == values_.size(), ErrorKind::ConfigInvalid,
          "time table needs matching nonempty times and values");
  for (std::size_t i = 1; i < times_.size(); ++i)
    require(times_[i] > times_[i - 1], ErrorKind::ConfigInvalid, "time table must be increasing");
  for (double v : values_) require(std::isfinite(v), ErrorKind::ConfigInvalid, "non-finite value");
}

double TimeFunction::operator()(double t) const {
  if (t <= times_.front()) return values_.front();
  if (t >= times_.back()) return values_.back();
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  const std::size_t j = static_cast<std::size_t>(it - times_.begin()) - 1;
  const double th = (t - times_[j]) / (times_[j + 1] - times_[j]);
  return (1.0 - th) * values_[j] + th * values_[j + 1];
}

double TimeFunction::integral(double a, double b) const {
  if (b <= a) return 0.0;
  std::vector<double> knots{a};
  for (double t : times_)
    if (t > a && t < b) knots.push_back(t);
  knots.push_back(b);
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i)
    acc += 0.5 * (knots[i + 1] - knots[i]) * ((*this)(knots[i]) + (*this)(knots[i + 1]));
  return acc;
}

double TimeFunction::sup_abs() const {
  double s = 0.0;
  for (double v : values_) s = std::max(s, std::abs(v));
  return s;
}

}  // namespace psmooth
