#include "deunet/ode_oracle.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace deunet {

namespace {

void check_spec(const IvpSpec& s) {
  for (double v : {s.a, s.b, s.c, s.t0, s.y0, s.yprime0, s.t_end, s.step}) {
    if (!std::isfinite(v)) throw std::invalid_argument("invalid-spec: non-finite field");
  }
  if (s.a == 0.0 && s.b == 0.0 && s.c == 0.0) {
    throw std::invalid_argument("invalid-spec: all coefficients zero");
  }
  if (!(s.step > 0.0)) throw std::invalid_argument("invalid-spec: step must be positive");
  if (!(s.t_end > s.t0)) throw std::invalid_argument("invalid-spec: t_end must exceed t0");
}

void check_state(double t, double y) {
  if (!std::isfinite(y) || std::abs(y) > 1e100) {
    throw std::runtime_error("divergence: state blew up at t=" + std::to_string(t));
  }
}

long leg_steps(double span, double step) {
  const long n = std::lround(span / step);
  if (n < 1) {
    throw std::invalid_argument("invalid-spec: step does not align t=0 within the leg");
  }
  if (n > 200000000L) throw std::invalid_argument("invalid-spec: step too small for span");
  return n;
}

// Second-order RK4 leg on state (y, y') with constant forcing u.
void run_leg_second_order(double a, double b, double c, double u, double t_begin,
                          double t_end, double step, double& y, double& yp,
                          std::vector<std::pair<double, double>>& out, bool emit_first) {
  const long n = leg_steps(t_end - t_begin, step);
  const double h = (t_end - t_begin) / static_cast<double>(n);
  if (emit_first) out.emplace_back(t_begin, y);
  auto acc = [&](double yv, double ypv) { return (u - b * ypv - c * yv) / a; };
  for (long i = 0; i < n; ++i) {
    const double k1y = yp, k1p = acc(y, yp);
    const double k2y = yp + 0.5 * h * k1p, k2p = acc(y + 0.5 * h * k1y, yp + 0.5 * h * k1p);
    const double k3y = yp + 0.5 * h * k2p, k3p = acc(y + 0.5 * h * k2y, yp + 0.5 * h * k2p);
    const double k4y = yp + h * k3p, k4p = acc(y + h * k3y, yp + h * k3p);
    y += (h / 6.0) * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
    yp += (h / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
    const double t = t_begin + (i + 1) * h;
    check_state(t, y);
    out.emplace_back(t, y);
  }
}

// First-order RK4 leg on y with constant forcing u (a = 0, b != 0).
void run_leg_first_order(double b, double c, double u, double t_begin, double t_end,
                         double step, double& y, std::vector<std::pair<double, double>>& out,
                         bool emit_first) {
  const long n = leg_steps(t_end - t_begin, step);
  const double h = (t_end - t_begin) / static_cast<double>(n);
  if (emit_first) out.emplace_back(t_begin, y);
  auto rhs = [&](double yv) { return (u - c * yv) / b; };
  for (long i = 0; i < n; ++i) {
    const double k1 = rhs(y);
    const double k2 = rhs(y + 0.5 * h * k1);
    const double k3 = rhs(y + 0.5 * h * k2);
    const double k4 = rhs(y + h * k3);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    const double t = t_begin + (i + 1) * h;
    check_state(t, y);
    out.emplace_back(t, y);
  }
}

void run_leg_algebraic(double c, double t_begin, double t_end, double step,
                       std::vector<std::pair<double, double>>& out, bool emit_first) {
  const long n = leg_steps(t_end - t_begin, step);
  const double h = (t_end - t_begin) / static_cast<double>(n);
  auto value = [&](double t) { return t > 0.0 ? 1.0 / c : 0.0; };
  if (emit_first) out.emplace_back(t_begin, value(t_begin));
  for (long i = 1; i <= n; ++i) {
    const double t = t_begin + i * h;
    out.emplace_back(t, value(t));
  }
}

}  // namespace

std::vector<std::pair<double, double>> integrate(const IvpSpec& spec) {
  check_spec(spec);
  std::vector<std::pair<double, double>> out;

  // Legs with constant forcing; u(t) = 1 strictly right of 0.
  struct Leg {
    double begin, end, u;
  };
  std::vector<Leg> legs;
  if (spec.t0 < 0.0 && spec.t_end > 0.0) {
    legs.push_back({spec.t0, 0.0, 0.0});
    legs.push_back({0.0, spec.t_end, 1.0});
  } else if (spec.t_end <= 0.0) {
    legs.push_back({spec.t0, spec.t_end, 0.0});
  } else {  // t0 >= 0
    legs.push_back({spec.t0, spec.t_end, 1.0});
  }

  if (spec.a == 0.0 && spec.b == 0.0) {
    for (std::size_t i = 0; i < legs.size(); ++i) {
      run_leg_algebraic(spec.c, legs[i].begin, legs[i].end, spec.step, out, i == 0);
    }
    return out;
  }

  double y = spec.y0;
  double yp = spec.yprime0;
  for (std::size_t i = 0; i < legs.size(); ++i) {
    if (spec.a != 0.0) {
      run_leg_second_order(spec.a, spec.b, spec.c, legs[i].u, legs[i].begin, legs[i].end,
                           spec.step, y, yp, out, i == 0);
    } else {
      run_leg_first_order(spec.b, spec.c, legs[i].u, legs[i].begin, legs[i].end, spec.step,
                          y, out, i == 0);
    }
  }
  return out;
}

ResidualStats residual_scan_stats(const KernelEvalFn& eval_fn, const DeuParams& p,
                                  const SubspaceId& id, std::span<const double> grid,
                                  const KernelConfig& cfg, double fd_step) {
  if (grid.empty()) throw std::invalid_argument("residual-scan: empty grid");
  if (!(fd_step > 0.0)) throw std::invalid_argument("residual-scan: fd_step must be positive");
  ResidualStats stats;
  for (double t : grid) {
    if (std::abs(t) < 10.0 * fd_step) {
      throw std::invalid_argument("residual-scan: grid point too close to the forcing jump");
    }
    const EvalResult mid = eval_fn(p, id, t, cfg);
    const EvalResult lo = eval_fn(p, id, t - fd_step, cfg);
    const EvalResult hi = eval_fn(p, id, t + fd_step, cfg);
    const double ypp = (hi.dy_dt - lo.dy_dt) / (2.0 * fd_step);
    const double u = t > 0.0 ? 1.0 : 0.0;
    const double res = std::abs(p.a * ypp + p.b * mid.dy_dt + p.c * mid.y - u);
    stats.max_raw = std::max(stats.max_raw, res);
    stats.max_normalized =
        std::max(stats.max_normalized, res / std::max(1.0, std::abs(mid.y)));
  }
  return stats;
}

double residual_scan(const DeuParams& p, const SubspaceId& id,
                     std::span<const double> grid, const KernelConfig& cfg,
                     double fd_step) {
  const KernelEvalFn fn = [](const DeuParams& q, const SubspaceId& qid, double t,
                             const KernelConfig& c) { return eval(q, qid, t, c); };
  return residual_scan_stats(fn, p, id, grid, cfg, fd_step).max_raw;
}

}  // namespace deunet
