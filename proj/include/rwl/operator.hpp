#pragma once

#include <functional>
#include <string>
#include <utility>

#include "rwl/grid.hpp"
#include "rwl/rng.hpp"

namespace rwl {

using FieldMap = std::function<DiscreteField(const DiscreteField&)>;

// An opaque field -> field map with the metadata the norm engine needs.
// When `domain` is set, the operator is understood as A o P with P the
// orthogonal projector onto the declared domain.
struct LinearOperatorHandle {
  std::string label;
  TorusGrid grid;
  FieldMap apply;
  FieldMap adjoint;  // optional; required for p != 2 ascent and p = 2 power iteration
  FieldMap domain;   // optional orthogonal projector
  std::string domain_description = "all fields";
  bool linear = true;
  bool maps_real_to_real = true;

  DiscreteField operator()(const DiscreteField& u) const { return apply(domain ? domain(u) : u); }

  DiscreteField apply_adjoint(const DiscreteField& v) const {
    if (!adjoint) throw OperatorError(label + ": no adjoint available");
    DiscreteField w = adjoint(v);
    return domain ? domain(w) : w;
  }

  bool has_adjoint() const { return static_cast<bool>(adjoint); }
};

inline LinearOperatorHandle identity_operator(const TorusGrid& grid, double scale = 1.0) {
  LinearOperatorHandle op;
  op.label = scale == 1.0 ? "identity" : std::to_string(scale) + "*identity";
  op.grid = grid;
  op.apply = [scale](const DiscreteField& u) { return cdouble(scale) * u; };
  op.adjoint = op.apply;
  return op;
}

inline DiscreteField random_real_field(const TorusGrid& grid, Rng& rng) {
  DiscreteField u(grid);
  for (auto& v : u.values()) v = rng.normal();
  return u;
}

inline DiscreteField random_complex_field(const TorusGrid& grid, Rng& rng) {
  DiscreteField u(grid);
  for (auto& v : u.values()) v = cdouble(rng.normal(), rng.normal());
  return u;
}

// Largest relative defect |A(au+bv) - aAu - bAv| over a few random probes.
inline double linearity_defect(const LinearOperatorHandle& op, Rng& rng, int probes = 2) {
  double worst = 0.0;
  for (int t = 0; t < probes; ++t) {
    const DiscreteField u = random_real_field(op.grid, rng);
    const DiscreteField v = random_real_field(op.grid, rng);
    const cdouble a(rng.normal(), 0.0), b(rng.normal(), 0.0);
    const DiscreteField Au = op(u), Av = op(v);
    const DiscreteField lhs = op(a * u + b * v);
    const DiscreteField rhs = a * Au + b * Av;
    const double scale = std::abs(a) * l2_norm(Au) + std::abs(b) * l2_norm(Av);
    const double diff = l2_norm(lhs - rhs);
    worst = std::max(worst, scale > 0.0 ? diff / scale : diff);
  }
  return worst;
}

}  // namespace rwl
