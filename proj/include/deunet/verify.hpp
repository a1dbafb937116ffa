#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "deunet/deu_kernel.hpp"
#include "deunet/ode_oracle.hpp"
#include "deunet/rng.hpp"

namespace deunet::verify {

/// One entry per structural subspace and damping regime.
enum class RegimeClass {
  FullOverdamped,
  FullUnderdamped,
  FullCritical,
  Oscillatory,
  Hyperbolic,
  NoStiffness,
  NoMass,
  MassOnly,
  DampingOnly,
  StiffnessOnly,
};

inline constexpr std::array<RegimeClass, 10> kAllRegimeClasses{
    RegimeClass::FullOverdamped, RegimeClass::FullUnderdamped,
    RegimeClass::FullCritical,   RegimeClass::Oscillatory,
    RegimeClass::Hyperbolic,     RegimeClass::NoStiffness,
    RegimeClass::NoMass,         RegimeClass::MassOnly,
    RegimeClass::DampingOnly,    RegimeClass::StiffnessOnly,
};

const char* to_string(RegimeClass cls);

struct Draw {
  DeuParams params;
  SubspaceId id;
  double t = 0.0;  // evaluation point used by gradient checks
};

/// Random resolved parameters inside cls, rejection-sampled to stay away from
/// subspace and discriminant boundaries and from the clamp saturation zones,
/// so finite differences and the RK4 oracle are valid where they are applied.
/// `for_gradients` tightens the bounds for five-point differencing.
Draw make_draw(RegimeClass cls, Rng& rng, const KernelConfig& cfg, bool for_gradients);

struct ClassReport {
  RegimeClass cls = RegimeClass::FullOverdamped;
  int oracle_draws = 0;
  int grad_draws = 0;
  double max_residual = 0.0;  // |a*y''+b*y'+c*y-u| / max(1,|y|)
  double max_rk4_err = 0.0;   // |y_rk4 - y_closed| / max(1,|y|)
  double max_grad_err = 0.0;  // worst relative five-point mismatch
  std::string worst_grad_field;
  bool pass = true;
};

struct Report {
  std::vector<ClassReport> classes;
  bool pass = true;
  double seconds = 0.0;
  int total_oracle_draws = 0;
  int total_grad_draws = 0;
  std::uint64_t seed = 0;
  double residual_tol = 1e-3;
  double rk4_tol = 1e-5;
  double grad_tol = 1e-4;
};

struct VerifyOptions {
  int draws = 1000;       // oracle draws, split across all ten classes
  int grad_draws = 500;   // gradient draws, split across classes off the
                          // discriminant boundary (FullCritical excluded)
  std::uint64_t seed = 42;
  KernelConfig kernel;
  double rk4_step = 1e-4;
  double residual_fd_step = 1e-4;
  double grad_fd_step = 1e-4;
  KernelEvalFn eval_fn;   // defaults to deunet::eval; injectable for mutation tests
};

Report run_verification(const VerifyOptions& opts);

/// Aligned text report, one line per class plus an overall line.
std::string format_report(const Report& report);

/// Relative five-point finite-difference check of all partials of eval at one
/// draw. Returns the worst relative error and names the field it came from.
std::pair<double, std::string> gradient_check(const KernelEvalFn& eval_fn,
                                              const Draw& draw, const KernelConfig& cfg,
                                              double fd_step);

}  // namespace deunet::verify
