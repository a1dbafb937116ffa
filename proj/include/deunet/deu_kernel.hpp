#pragma once

#include <span>
#include <string>
#include <utility>

#include "deunet/tensor.hpp"

namespace deunet {

/// Which coefficients of a*y'' + b*y' + c*y = u(t) are structurally zero.
enum class Structural {
  Full,           // a, b, c all nonzero
  NoDamping,      // b = 0
  NoStiffness,    // c = 0
  NoMass,         // a = 0
  MassOnly,       // b = c = 0
  DampingOnly,    // a = c = 0
  StiffnessOnly,  // a = b = 0
};

enum class Regime {
  Overdamped,   // Full, b^2 - 4ac >= eps
  Underdamped,  // Full, b^2 - 4ac <= -eps
  Critical,     // Full, |b^2 - 4ac| < eps
  Oscillatory,  // NoDamping, a*c > 0
  Hyperbolic,   // NoDamping, a*c < 0
  NotApplicable,
};

struct SubspaceId {
  Structural structural = Structural::Full;
  Regime regime = Regime::NotApplicable;
  bool operator==(const SubspaceId&) const = default;
};

const char* to_string(Structural s);
const char* to_string(Regime r);
std::string to_string(const SubspaceId& id);  // "Full/Overdamped", "NoMass", ...

/// The five learnable coefficients of one unit. A frozen coefficient is
/// exactly zero and stays zero; its reported gradient is zero.
struct DeuParams {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  bool frozen_a = false;
  bool frozen_b = false;
  bool frozen_c = false;
};

struct KernelConfig {
  double epsilon = 1e-3;        // projection threshold
  double exp_arg_clamp = 30.0;  // max magnitude of any exponent argument
  double output_clamp = 1e4;    // max magnitude of the value and each partial

  void validate() const;  // throws std::invalid_argument
};

/// Activation value and the analytic partials needed for backprop.
/// dy_dc1 and dy_dc2 are by definition the homogeneous basis values f1(t)
/// and f2(t), clamped to +-output_clamp.
struct EvalResult {
  double y = 0.0;
  double dy_dt = 0.0;
  double dy_da = 0.0;
  double dy_db = 0.0;
  double dy_dc = 0.0;
  double dy_dc1 = 0.0;
  double dy_dc2 = 0.0;
};

/// Projects near-zero coefficients to exactly zero (freezing them), forces
/// c = epsilon when all three would vanish, snaps b onto the critical
/// discriminant when |b^2-4ac| < epsilon with a*c > 0, and classifies the
/// resulting subspace. Idempotent.
std::pair<DeuParams, SubspaceId> resolve_subspace(DeuParams p, const KernelConfig& cfg);

/// Classification half of resolve_subspace; requires already-resolved params.
SubspaceId classify_subspace(const DeuParams& p, const KernelConfig& cfg);

/// Closed-form activation y = f(t) + c1*f1(t) + c2*f2(t) and all partials,
/// where f is the zero-initial-condition step response (identically 0 for
/// t <= 0) and (f1, f2) is the canonical homogeneous basis of the subspace.
/// Requires resolved params whose zero pattern matches id.structural.
EvalResult eval(const DeuParams& p, const SubspaceId& id, double t, const KernelConfig& cfg);

/// Value-only path for inference; bit-identical to eval(...).y.
double eval_value(const DeuParams& p, const SubspaceId& id, double t, const KernelConfig& cfg);

/// Canonical homogeneous basis values (f1(t), f2(t)), clamped to
/// +-output_clamp. eval's dy_dc1/dy_dc2 equal these bit-exactly. f2 is
/// identically zero in first-order subspaces, and f1 too in StiffnessOnly.
std::pair<double, double> homogeneous_basis(const DeuParams& p, const SubspaceId& id,
                                            double t, const KernelConfig& cfg);

struct DeuNeuron {
  DeuParams params;
  SubspaceId id;
};

/// Struct-of-arrays result grid of eval over a batch.
struct EvalGrid {
  Tensor2D y, dy_dt, dy_da, dy_db, dy_dc, dy_dc1, dy_dc2;
};

/// Elementwise eval with one unit per column of ts. A pure map: the output is
/// independent of evaluation order and may be computed in parallel.
EvalGrid eval_batch(std::span<const DeuNeuron> units, const Tensor2D& ts,
                    const KernelConfig& cfg);

/// Value-only batch map for inference; out must have ts's shape.
void eval_batch_values(std::span<const DeuNeuron> units, const Tensor2D& ts,
                       const KernelConfig& cfg, Tensor2D& out);

}  // namespace deunet
