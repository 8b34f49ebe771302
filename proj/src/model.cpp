#include "qsdlab/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "qsdlab/errors.hpp"

namespace qsdlab {

PhysParams::PhysParams(double beta, double gamma) : beta_(beta), gamma_(gamma) {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw_input("beta must be positive and finite");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw_input("gamma must be positive and finite");
}

Domain Domain::interval(double a, double b) {
  if (!(a < b) || !std::isfinite(a) || !std::isfinite(b))
    throw_input("interval domain requires finite a < b");
  return Domain(Interval1D{a, b});
}

Domain Domain::ball(std::vector<double> center, double radius) {
  if (center.empty()) throw_input("ball domain requires dim >= 1");
  if (!(radius > 0.0) || !std::isfinite(radius)) throw_input("ball radius must be positive");
  return Domain(Ball{std::move(center), radius});
}

std::size_t Domain::dim() const {
  if (const auto* ball = std::get_if<Ball>(&shape_)) return ball->center.size();
  return 1;
}

const Interval1D& Domain::as_interval() const {
  const auto* iv = std::get_if<Interval1D>(&shape_);
  if (iv == nullptr) throw_input("domain is not an interval");
  return *iv;
}

void Domain::check_dim(std::span<const double> q) const {
  if (q.size() != dim()) {
    std::ostringstream msg;
    msg << "position has dimension " << q.size() << " but domain has dimension " << dim();
    throw_input(msg.str());
  }
}

namespace {

double distance_from_center(const Ball& ball, std::span<const double> q) {
  double s = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double d = q[i] - ball.center[i];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace

bool Domain::contains(std::span<const double> q) const {
  check_dim(q);
  if (const auto* iv = std::get_if<Interval1D>(&shape_)) return q[0] > iv->a && q[0] < iv->b;
  const auto& ball = std::get<Ball>(shape_);
  return distance_from_center(ball, q) < ball.radius;
}

double Domain::dist_to_boundary(std::span<const double> q) const {
  check_dim(q);
  if (const auto* iv = std::get_if<Interval1D>(&shape_)) {
    if (!(q[0] > iv->a && q[0] < iv->b)) return 0.0;
    return std::min(q[0] - iv->a, iv->b - q[0]);
  }
  const auto& ball = std::get<Ball>(shape_);
  return std::max(0.0, ball.radius - distance_from_center(ball, q));
}

double Domain::circumscribed_radius() const {
  if (const auto* iv = std::get_if<Interval1D>(&shape_))
    return std::max(std::abs(iv->a), std::abs(iv->b));
  const auto& ball = std::get<Ball>(shape_);
  double c = 0.0;
  for (double x : ball.center) c += x * x;
  return std::sqrt(c) + ball.radius;
}

std::string Domain::describe() const {
  std::ostringstream out;
  out.precision(17);
  if (const auto* iv = std::get_if<Interval1D>(&shape_)) {
    out << "interval(" << iv->a << "," << iv->b << ")";
  } else {
    const auto& ball = std::get<Ball>(shape_);
    out << "ball([";
    for (std::size_t i = 0; i < ball.center.size(); ++i) out << (i ? "," : "") << ball.center[i];
    out << "]," << ball.radius << ")";
  }
  return out.str();
}

bool contains(const Domain& domain, std::span<const double> q) { return domain.contains(q); }

double dist_to_boundary(const Domain& domain, std::span<const double> q) {
  return domain.dist_to_boundary(q);
}

std::string to_string(FieldKind kind) {
  switch (kind) {
    case FieldKind::zero: return "zero";
    case FieldKind::harmonic: return "harmonic";
    case FieldKind::double_well: return "double_well";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------

namespace {

// Smoothstep taper on [R, 2R]: 1 at R, 0 at 2R, zero slope at both ends.
double taper(double r, double R) {
  if (r <= R) return 1.0;
  if (r >= 2.0 * R) return 0.0;
  const double u = (r - R) / R;
  return 1.0 - u * u * (3.0 - 2.0 * u);
}

}  // namespace

ForceField::ForceField(FieldSpec spec, double clamp_radius)
    : spec_(spec), clamp_radius_(clamp_radius) {
  const double R = clamp_radius;
  const double k = spec.strength;
  switch (spec.kind) {
    case FieldKind::zero:
      break;
    case FieldKind::harmonic:
      f_sup_ = 2.0 * k * R;
      lipschitz_ = 4.0 * k;
      break;
    case FieldKind::double_well: {
      const double r2 = 2.0 * R;
      const double inner_extremum = 2.0 / (3.0 * std::sqrt(3.0));
      f_sup_ = 4.0 * k * std::max(inner_extremum, std::abs(r2 * (r2 * r2 - 1.0)));
      const double g_max = 4.0 * k * std::max(1.0, r2 * r2 - 1.0);
      const double v2_max = 4.0 * k * std::max(1.0, 3.0 * r2 * r2 - 1.0);
      lipschitz_ = std::max(g_max, v2_max + f_sup_ * 1.5 / R);
      break;
    }
  }
}

double ForceField::radial_derivative(double r) const {
  switch (spec_.kind) {
    case FieldKind::zero: return 0.0;
    case FieldKind::harmonic: return spec_.strength * r;
    case FieldKind::double_well: return 4.0 * spec_.strength * r * (r * r - 1.0);
  }
  return 0.0;
}

double ForceField::radial_potential(double r) const {
  switch (spec_.kind) {
    case FieldKind::zero: return 0.0;
    case FieldKind::harmonic: return 0.5 * spec_.strength * r * r;
    case FieldKind::double_well: {
      const double s = r * r - 1.0;
      return spec_.strength * s * s;
    }
  }
  return 0.0;
}

double ForceField::potential(std::span<const double> q) const {
  double r2 = 0.0;
  for (double x : q) r2 += x * x;
  const double r = std::sqrt(r2);
  const double R = clamp_radius_;
  if (r <= R) return radial_potential(r);
  // V(R) + int_R^min(r,2R) V'(s) taper(s) ds; integrand is a degree-6
  // polynomial, so 5-point Gauss-Legendre is exact.
  static constexpr std::array<double, 5> nodes = {0.0, -0.5384693101056831, 0.5384693101056831,
                                                  -0.9061798459386640, 0.9061798459386640};
  static constexpr std::array<double, 5> weights = {0.5688888888888889, 0.4786286704993665,
                                                    0.4786286704993665, 0.2369268850561891,
                                                    0.2369268850561891};
  const double upper = std::min(r, 2.0 * R);
  const double mid = 0.5 * (upper + R);
  const double half = 0.5 * (upper - R);
  double integral = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double s = mid + half * nodes[i];
    integral += weights[i] * radial_derivative(s) * taper(s, R);
  }
  return radial_potential(R) + half * integral;
}

void ForceField::force(std::span<const double> q, std::span<double> out) const {
  if (spec_.kind == FieldKind::zero) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  double r2 = 0.0;
  for (double x : q) r2 += x * x;
  // V'(r)/r, finite at the origin for both builtin potentials.
  double g = spec_.kind == FieldKind::harmonic ? spec_.strength
                                               : 4.0 * spec_.strength * (r2 - 1.0);
  if (r2 > clamp_radius_ * clamp_radius_) g *= taper(std::sqrt(r2), clamp_radius_);
  for (std::size_t i = 0; i < q.size(); ++i) out[i] = -g * q[i];
}

std::vector<double> ForceField::force(std::span<const double> q) const {
  std::vector<double> out(q.size());
  force(q, out);
  return out;
}

ForceField builtin_force(const FieldSpec& spec, double clamp_radius,
                         const std::optional<Domain>& domain) {
  if (spec.kind != FieldKind::zero && !(spec.strength > 0.0))
    throw_config(to_string(spec.kind) + " field strength must be positive");
  if (!(clamp_radius > 0.0) || !std::isfinite(clamp_radius))
    throw_config("clamp_radius must be positive and finite");
  if (domain && !(clamp_radius > domain->circumscribed_radius())) {
    std::ostringstream msg;
    msg << "clamp_radius " << clamp_radius << " must exceed the domain's circumscribed radius "
        << domain->circumscribed_radius();
    throw_config(msg.str());
  }
  return ForceField(spec, clamp_radius);
}

State::State(std::vector<double> q_, std::vector<double> p_) : q(std::move(q_)), p(std::move(p_)) {
  if (q.size() != p.size()) throw_input("state position and momentum dimensions differ");
}

State State::at_rest(std::vector<double> q_) {
  std::vector<double> p_(q_.size(), 0.0);
  return State(std::move(q_), std::move(p_));
}

}  // namespace qsdlab
