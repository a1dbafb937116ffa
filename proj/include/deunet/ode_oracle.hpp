#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "deunet/deu_kernel.hpp"

namespace deunet {

/// Initial-value problem for a*y'' + b*y' + c*y = u(t), u = step at 0.
/// yprime0 is ignored when a == 0. The integrator is split at t = 0 so the
/// forcing discontinuity always falls on a leg boundary.
struct IvpSpec {
  double a = 0.0, b = 0.0, c = 0.0;
  double t0 = 0.0;
  double y0 = 0.0;
  double yprime0 = 0.0;
  double t_end = 0.0;
  double step = 1e-4;
};

/// Classic RK4 propagation (algebraic solution u(t)/c when a = b = 0).
/// Returns (t, y) at every grid point including both endpoints.
std::vector<std::pair<double, double>> integrate(const IvpSpec& spec);

using KernelEvalFn = std::function<EvalResult(const DeuParams&, const SubspaceId&,
                                              double, const KernelConfig&)>;

/// Max over the grid of |a*y'' + b*y' + c*y - u(t)| where y and y' come from
/// the kernel and y'' is a central difference of y' with step fd_step.
/// The grid must stay at least 10*fd_step away from t = 0.
double residual_scan(const DeuParams& p, const SubspaceId& id,
                     std::span<const double> grid, const KernelConfig& cfg,
                     double fd_step = 1e-4);

struct ResidualStats {
  double max_raw = 0.0;         // max |residual|
  double max_normalized = 0.0;  // max |residual| / max(1, |y|)
};

/// Same scan through an injectable kernel evaluation, for corruption tests.
ResidualStats residual_scan_stats(const KernelEvalFn& eval_fn, const DeuParams& p,
                                  const SubspaceId& id, std::span<const double> grid,
                                  const KernelConfig& cfg, double fd_step = 1e-4);

}  // namespace deunet
