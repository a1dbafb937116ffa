#include "deunet/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "deunet/parallel.hpp"

namespace deunet::verify {

namespace {

const char* class_name(RegimeClass cls) {
  switch (cls) {
    case RegimeClass::FullOverdamped:  return "Full/Overdamped";
    case RegimeClass::FullUnderdamped: return "Full/Underdamped";
    case RegimeClass::FullCritical:    return "Full/Critical";
    case RegimeClass::Oscillatory:     return "NoDamping/Oscillatory";
    case RegimeClass::Hyperbolic:      return "NoDamping/Hyperbolic";
    case RegimeClass::NoStiffness:     return "NoStiffness";
    case RegimeClass::NoMass:          return "NoMass";
    case RegimeClass::MassOnly:        return "MassOnly";
    case RegimeClass::DampingOnly:     return "DampingOnly";
    case RegimeClass::StiffnessOnly:   return "StiffnessOnly";
  }
  return "?";
}

RegimeClass class_of(const SubspaceId& id) {
  switch (id.structural) {
    case Structural::Full:
      if (id.regime == Regime::Overdamped) return RegimeClass::FullOverdamped;
      if (id.regime == Regime::Underdamped) return RegimeClass::FullUnderdamped;
      return RegimeClass::FullCritical;
    case Structural::NoDamping:
      return id.regime == Regime::Oscillatory ? RegimeClass::Oscillatory
                                              : RegimeClass::Hyperbolic;
    case Structural::NoStiffness:   return RegimeClass::NoStiffness;
    case Structural::NoMass:        return RegimeClass::NoMass;
    case Structural::MassOnly:      return RegimeClass::MassOnly;
    case Structural::DampingOnly:   return RegimeClass::DampingOnly;
    case Structural::StiffnessOnly: return RegimeClass::StiffnessOnly;
  }
  return RegimeClass::StiffnessOnly;
}

// Coefficient magnitudes sit well clear of the projection band: at least
// 10*epsilon from zero for any epsilon, [0.05, 2] at the default 1e-3.
double coeff_floor(const KernelConfig& cfg) { return std::max(0.05, 10.0 * cfg.epsilon); }

double nonzero_coeff(Rng& rng, const KernelConfig& cfg) {
  const double lo = coeff_floor(cfg);
  return rng.pick_sign() * rng.uniform(lo, std::max(2.0, 4.0 * lo));
}

/// Largest exponential growth/decay rate appearing in the closed forms.
double max_rate(const DeuParams& p, const SubspaceId& id) {
  switch (id.structural) {
    case Structural::Full: {
      if (id.regime == Regime::Overdamped) {
        const double sq = std::sqrt(p.b * p.b - 4.0 * p.a * p.c);
        const double r1 = (-p.b + sq) / (2.0 * p.a);
        const double r2 = (-p.b - sq) / (2.0 * p.a);
        return std::max(std::abs(r1), std::abs(r2));
      }
      return std::abs(p.b / (2.0 * p.a));
    }
    case Structural::NoDamping:
      return id.regime == Regime::Hyperbolic ? std::sqrt(-(p.c / p.a)) : 0.0;
    case Structural::NoStiffness:
      return std::abs(p.b / p.a);
    case Structural::NoMass:
      return std::abs(p.c / p.b);
    default:
      return 0.0;
  }
}

KernelEvalFn default_eval() {
  return [](const DeuParams& p, const SubspaceId& id, double t, const KernelConfig& cfg) {
    return eval(p, id, t, cfg);
  };
}

}  // namespace

const char* to_string(RegimeClass cls) { return class_name(cls); }

Draw make_draw(RegimeClass cls, Rng& rng, const KernelConfig& cfg, bool for_gradients) {
  const double margin = 10.0 * cfg.epsilon;
  for (int attempt = 0; attempt < 200000; ++attempt) {
    DeuParams seed;
    switch (cls) {
      case RegimeClass::FullOverdamped: {
        seed.a = nonzero_coeff(rng, cfg);
        seed.b = nonzero_coeff(rng, cfg);
        seed.c = nonzero_coeff(rng, cfg);
        if (seed.b * seed.b - 4.0 * seed.a * seed.c < margin) continue;
        break;
      }
      case RegimeClass::FullUnderdamped: {
        seed.a = nonzero_coeff(rng, cfg);
        seed.b = nonzero_coeff(rng, cfg);
        seed.c = nonzero_coeff(rng, cfg);
        if (seed.b * seed.b - 4.0 * seed.a * seed.c > -margin) continue;
        break;
      }
      case RegimeClass::FullCritical: {
        seed.a = nonzero_coeff(rng, cfg);
        seed.c = std::copysign(rng.uniform(coeff_floor(cfg), std::max(2.0, 4.0 * coeff_floor(cfg))), seed.a);
        const double b_exact = rng.pick_sign() * std::sqrt(4.0 * seed.a * seed.c);
        seed.b = b_exact * (1.0 + rng.uniform(-1e-5, 1e-5));
        break;
      }
      case RegimeClass::Oscillatory: {
        seed.a = nonzero_coeff(rng, cfg);
        seed.c = std::copysign(rng.uniform(coeff_floor(cfg), std::max(2.0, 4.0 * coeff_floor(cfg))), seed.a);
        break;
      }
      case RegimeClass::Hyperbolic: {
        seed.a = nonzero_coeff(rng, cfg);
        seed.c = -std::copysign(rng.uniform(coeff_floor(cfg), std::max(2.0, 4.0 * coeff_floor(cfg))), seed.a);
        break;
      }
      case RegimeClass::NoStiffness: {
        seed.a = nonzero_coeff(rng, cfg);
        seed.b = nonzero_coeff(rng, cfg);
        break;
      }
      case RegimeClass::NoMass: {
        seed.b = nonzero_coeff(rng, cfg);
        seed.c = nonzero_coeff(rng, cfg);
        break;
      }
      case RegimeClass::MassOnly: {
        seed.a = nonzero_coeff(rng, cfg);
        break;
      }
      case RegimeClass::DampingOnly: {
        seed.b = nonzero_coeff(rng, cfg);
        break;
      }
      case RegimeClass::StiffnessOnly: {
        seed.c = nonzero_coeff(rng, cfg);
        break;
      }
    }
    seed.c1 = rng.uniform(-2.0, 2.0);
    seed.c2 = rng.uniform(-2.0, 2.0);

    auto [p, id] = resolve_subspace(seed, cfg);
    if (class_of(id) != cls) continue;

    const double rate = max_rate(p, id);
    if (for_gradients) {
      const double t = rng.pick_sign() * rng.uniform(0.05, 3.0);
      if (rate * (std::abs(t) + 0.01) > 0.5 * cfg.exp_arg_clamp) continue;
      const EvalResult e = eval(p, id, t, cfg);
      if (std::abs(e.y) > 100.0) continue;
      const double pmax = std::max({std::abs(e.dy_dt), std::abs(e.dy_da), std::abs(e.dy_db),
                                    std::abs(e.dy_dc), std::abs(e.dy_dc1), std::abs(e.dy_dc2)});
      if (pmax > 0.1 * cfg.output_clamp) continue;
      return Draw{p, id, t};
    }

    if (rate * 3.0 > 0.8 * cfg.exp_arg_clamp) continue;
    bool bounded = true;
    for (int k = 0; k <= 60 && bounded; ++k) {
      const double t = -3.0 + 0.1 * k;
      if (t == 0.0) continue;
      if (std::abs(eval_value(p, id, t, cfg)) > 0.08 * cfg.output_clamp) bounded = false;
    }
    if (!bounded) continue;
    return Draw{p, id, 0.0};
  }
  throw std::runtime_error(std::string("draw-generation: rejection sampling exhausted for ") +
                           class_name(cls));
}

std::pair<double, std::string> gradient_check(const KernelEvalFn& eval_fn, const Draw& draw,
                                              const KernelConfig& cfg, double h) {
  const EvalResult base = eval_fn(draw.params, draw.id, draw.t, cfg);

  auto five_point = [&](auto&& value_at) {
    return (value_at(-2.0 * h) - 8.0 * value_at(-h) + 8.0 * value_at(h) -
            value_at(2.0 * h)) /
           (12.0 * h);
  };
  auto rel_err = [](double fd, double an) {
    return std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1.0});
  };

  double worst = 0.0;
  std::string worst_field = "none";
  auto consider = [&](double fd, double an, const char* field) {
    const double e = rel_err(fd, an);
    if (e > worst) {
      worst = e;
      worst_field = field;
    }
  };

  consider(five_point([&](double d) {
             return eval_fn(draw.params, draw.id, draw.t + d, cfg).y;
           }),
           base.dy_dt, "dy_dt");

  enum Field { A, B, C, C1, C2 };
  auto perturbed = [&](Field f, double d) {
    DeuParams q = draw.params;
    switch (f) {
      case A: q.a += d; break;
      case B: q.b += d; break;
      case C: q.c += d; break;
      case C1: q.c1 += d; break;
      case C2: q.c2 += d; break;
    }
    return eval_fn(q, draw.id, draw.t, cfg).y;
  };

  if (!draw.params.frozen_a) {
    consider(five_point([&](double d) { return perturbed(A, d); }), base.dy_da, "dy_da");
  }
  if (!draw.params.frozen_b) {
    consider(five_point([&](double d) { return perturbed(B, d); }), base.dy_db, "dy_db");
  }
  if (!draw.params.frozen_c) {
    consider(five_point([&](double d) { return perturbed(C, d); }), base.dy_dc, "dy_dc");
  }
  consider(five_point([&](double d) { return perturbed(C1, d); }), base.dy_dc1, "dy_dc1");
  consider(five_point([&](double d) { return perturbed(C2, d); }), base.dy_dc2, "dy_dc2");
  return {worst, worst_field};
}

Report run_verification(const VerifyOptions& opts) {
  const auto started = std::chrono::steady_clock::now();
  opts.kernel.validate();
  if (opts.draws < 1) throw std::invalid_argument("verify: draws must be >= 1");
  const KernelEvalFn fn = opts.eval_fn ? opts.eval_fn : default_eval();

  Report report;
  report.seed = opts.seed;

  // Residual grid: [-3, 3] in steps of 0.05, excluding the forcing jump.
  std::vector<double> grid;
  for (int k = 0; k <= 120; ++k) {
    const double t = (k - 60) * 0.05;
    if (t != 0.0) grid.push_back(t);
  }

  const int n_classes = static_cast<int>(kAllRegimeClasses.size());
  for (int ci = 0; ci < n_classes; ++ci) {
    const RegimeClass cls = kAllRegimeClasses[ci];
    ClassReport cr;
    cr.cls = cls;
    cr.oracle_draws = opts.draws / n_classes + (ci < opts.draws % n_classes ? 1 : 0);

    const bool on_discriminant = cls == RegimeClass::FullCritical;
    if (!on_discriminant && opts.grad_draws > 0) {
      const int g_classes = n_classes - 1;
      const int gi = ci < 3 ? ci : ci - 1;  // skip FullCritical slot
      cr.grad_draws = opts.grad_draws / g_classes + (gi < opts.grad_draws % g_classes ? 1 : 0);
    }

    Rng rng(opts.seed, 1000 + static_cast<std::uint64_t>(ci));

    std::vector<Draw> oracle_draws;
    oracle_draws.reserve(cr.oracle_draws);
    for (int i = 0; i < cr.oracle_draws; ++i) {
      oracle_draws.push_back(make_draw(cls, rng, opts.kernel, false));
    }
    std::vector<Draw> grad_draws;
    grad_draws.reserve(cr.grad_draws);
    for (int i = 0; i < cr.grad_draws; ++i) {
      grad_draws.push_back(make_draw(cls, rng, opts.kernel, true));
    }

    std::vector<double> res_err(oracle_draws.size(), 0.0);
    std::vector<double> rk4_err(oracle_draws.size(), 0.0);
    parallel_for(static_cast<int>(oracle_draws.size()), [&](int begin, int end) {
      for (int i = begin; i < end; ++i) {
        const Draw& d = oracle_draws[i];
        res_err[i] = residual_scan_stats(fn, d.params, d.id, grid, opts.kernel,
                                         opts.residual_fd_step)
                         .max_normalized;

        const EvalResult at_start = fn(d.params, d.id, -3.0, opts.kernel);
        IvpSpec spec;
        spec.a = d.params.a;
        spec.b = d.params.b;
        spec.c = d.params.c;
        spec.t0 = -3.0;
        spec.y0 = at_start.y;
        spec.yprime0 = at_start.dy_dt;
        spec.t_end = 3.0;
        spec.step = opts.rk4_step;
        const auto traj = integrate(spec);
        const long stride = std::max(1L, std::lround(0.05 / opts.rk4_step));
        double worst = 0.0;
        for (std::size_t k = 0; k < traj.size(); k += stride) {
          const auto [t, y_rk4] = traj[k];
          const double y_closed = fn(d.params, d.id, t, opts.kernel).y;
          worst = std::max(worst, std::abs(y_rk4 - y_closed) /
                                      std::max(1.0, std::abs(y_closed)));
        }
        rk4_err[i] = worst;
      }
    });
    for (double e : res_err) cr.max_residual = std::max(cr.max_residual, e);
    for (double e : rk4_err) cr.max_rk4_err = std::max(cr.max_rk4_err, e);

    std::vector<double> g_err(grad_draws.size(), 0.0);
    std::vector<std::string> g_field(grad_draws.size());
    parallel_for(static_cast<int>(grad_draws.size()), [&](int begin, int end) {
      for (int i = begin; i < end; ++i) {
        auto [err, field] = gradient_check(fn, grad_draws[i], opts.kernel, opts.grad_fd_step);
        g_err[i] = err;
        g_field[i] = field;
      }
    });
    for (std::size_t i = 0; i < g_err.size(); ++i) {
      if (g_err[i] > cr.max_grad_err) {
        cr.max_grad_err = g_err[i];
        cr.worst_grad_field = g_field[i];
      }
    }

    cr.pass = cr.max_residual < report.residual_tol && cr.max_rk4_err < report.rk4_tol &&
              cr.max_grad_err < report.grad_tol;
    report.pass = report.pass && cr.pass;
    report.total_oracle_draws += cr.oracle_draws;
    report.total_grad_draws += cr.grad_draws;
    report.classes.push_back(std::move(cr));
  }

  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

std::string format_report(const Report& report) {
  std::ostringstream os;
  os.setf(std::ios::scientific);
  os.precision(2);
  for (const auto& cr : report.classes) {
    os << "class=" << class_name(cr.cls);
    for (std::size_t pad = std::string(class_name(cr.cls)).size(); pad < 22; ++pad) os << ' ';
    os << " oracle_draws=" << cr.oracle_draws << " residual=" << cr.max_residual
       << " rk4=" << cr.max_rk4_err << " grad_draws=" << cr.grad_draws
       << " grad=" << cr.max_grad_err;
    if (!cr.worst_grad_field.empty()) os << " (" << cr.worst_grad_field << ")";
    os << (cr.pass ? "  PASS" : "  FAIL") << "\n";
  }
  os.unsetf(std::ios::scientific);
  os << "overall " << (report.pass ? "PASS" : "FAIL") << ": residual<" << report.residual_tol
     << " rk4<" << report.rk4_tol << " grad<" << report.grad_tol << "  draws="
     << report.total_oracle_draws << "+" << report.total_grad_draws
     << " seed=" << report.seed << "\n";
  return os.str();
}

}  // namespace deunet::verify
