#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace qsdlab {

/// Inverse temperature and friction. The noise intensity of the momentum
/// equation is sigma^2 = 2 gamma / beta.
class PhysParams {
 public:
  PhysParams(double beta, double gamma);

  double beta() const { return beta_; }
  double gamma() const { return gamma_; }
  double temperature() const { return 1.0 / beta_; }
  double sigma2() const { return 2.0 * gamma_ / beta_; }

  PhysParams with_gamma(double gamma) const { return {beta_, gamma}; }

 private:
  double beta_;
  double gamma_;
};

struct Interval1D {
  double a;
  double b;
};

struct Ball {
  std::vector<double> center;
  double radius;
};

/// Bounded connected C^2 position domain O. Momentum is unconstrained.
class Domain {
 public:
  using Variant = std::variant<Interval1D, Ball>;

  static Domain interval(double a, double b);
  static Domain ball(std::vector<double> center, double radius);

  std::size_t dim() const;
  const Variant& shape() const { return shape_; }
  bool is_interval() const { return std::holds_alternative<Interval1D>(shape_); }
  const Interval1D& as_interval() const;

  /// Strict membership in the open set.
  bool contains(std::span<const double> q) const;
  /// Euclidean distance to the boundary; 0 outside the open set.
  double dist_to_boundary(std::span<const double> q) const;
  /// Radius of the smallest origin-centred ball containing the closure.
  double circumscribed_radius() const;

  std::string describe() const;

 private:
  explicit Domain(Variant shape) : shape_(std::move(shape)) {}
  void check_dim(std::span<const double> q) const;

  Variant shape_;
};

bool contains(const Domain& domain, std::span<const double> q);
double dist_to_boundary(const Domain& domain, std::span<const double> q);

enum class FieldKind { zero, harmonic, double_well };

/// Builtin potential: zero, kappa |q|^2 / 2, or height (|q|^2 - 1)^2.
struct FieldSpec {
  FieldKind kind = FieldKind::zero;
  double strength = 1.0;  // kappa for harmonic, height for double_well

  static FieldSpec zero() { return {FieldKind::zero, 1.0}; }
  static FieldSpec harmonic(double kappa) { return {FieldKind::harmonic, kappa}; }
  static FieldSpec double_well(double height) { return {FieldKind::double_well, height}; }
};

std::string to_string(FieldKind kind);

/// Conservative force F = -grad V of a radial builtin potential. Inside
/// |q| <= clamp_radius the field is exact; on [R, 2R] the force is multiplied by
/// the C^1 taper 1 - 3u^2 + 2u^3 (u = |q|/R - 1) and vanishes beyond 2R, so F
/// is bounded and globally Lipschitz. The potential is extended consistently.
class ForceField {
 public:
  const FieldSpec& spec() const { return spec_; }
  double clamp_radius() const { return clamp_radius_; }
  /// Upper bound on |F| over all of space.
  double f_sup() const { return f_sup_; }
  /// Upper bound on the global Lipschitz constant of F.
  double lipschitz() const { return lipschitz_; }
  bool is_zero() const { return spec_.kind == FieldKind::zero; }

  double potential(std::span<const double> q) const;
  void force(std::span<const double> q, std::span<double> out) const;
  std::vector<double> force(std::span<const double> q) const;

 private:
  friend ForceField builtin_force(const FieldSpec&, double, const std::optional<Domain>&);
  ForceField(FieldSpec spec, double clamp_radius);

  double radial_derivative(double r) const;  // V'(r)
  double radial_potential(double r) const;   // V(r) inside the clamp

  FieldSpec spec_;
  double clamp_radius_;
  double f_sup_ = 0.0;
  double lipschitz_ = 0.0;
};

/// Constructs a builtin field. When a domain is given the clamp radius must
/// strictly exceed its circumscribed radius.
ForceField builtin_force(const FieldSpec& spec, double clamp_radius,
                         const std::optional<Domain>& domain = std::nullopt);

/// Phase-space point x = (q, p) with unit mass.
struct State {
  std::vector<double> q;
  std::vector<double> p;

  State() = default;
  State(std::vector<double> q_, std::vector<double> p_);
  static State at_rest(std::vector<double> q_);

  std::size_t dim() const { return q.size(); }
};

}  // namespace qsdlab
