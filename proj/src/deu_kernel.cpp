#include "deunet/deu_kernel.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "deunet/dual.hpp"
#include "deunet/parallel.hpp"

namespace deunet {

namespace {

struct ZeroPattern {
  bool a, b, c;
};

constexpr ZeroPattern zero_pattern(Structural s) {
  switch (s) {
    case Structural::Full:          return {false, false, false};
    case Structural::NoDamping:     return {false, true, false};
    case Structural::NoStiffness:   return {false, false, true};
    case Structural::NoMass:        return {true, false, false};
    case Structural::MassOnly:      return {false, true, true};
    case Structural::DampingOnly:   return {true, false, true};
    case Structural::StiffnessOnly: return {true, true, false};
  }
  return {false, false, false};
}

void check_resolved(const DeuParams& p, const KernelConfig& cfg) {
  const std::array<double, 5> vals{p.a, p.b, p.c, p.c1, p.c2};
  for (double v : vals) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("invalid-parameter: non-finite coefficient");
    }
  }
  const std::array<double, 3> abc{p.a, p.b, p.c};
  for (double v : abc) {
    if (v != 0.0 && std::abs(v) < cfg.epsilon) {
      throw std::logic_error("contract-violation: coefficient magnitude in (0, epsilon); "
                             "params must be resolved before eval");
    }
  }
  if (p.a == 0.0 && p.b == 0.0 && p.c == 0.0) {
    throw std::logic_error("contract-violation: a=b=c=0 is never a resolved state");
  }
  if ((p.frozen_a && p.a != 0.0) || (p.frozen_b && p.b != 0.0) ||
      (p.frozen_c && p.c != 0.0)) {
    throw std::logic_error("contract-violation: frozen coefficient is nonzero");
  }
}

Structural structural_of(const DeuParams& p) {
  const bool za = p.a == 0.0, zb = p.b == 0.0, zc = p.c == 0.0;
  if (!za && !zb && !zc) return Structural::Full;
  if (!za && zb && !zc) return Structural::NoDamping;
  if (!za && !zb && zc) return Structural::NoStiffness;
  if (za && !zb && !zc) return Structural::NoMass;
  if (!za && zb && zc) return Structural::MassOnly;
  if (za && !zb && zc) return Structural::DampingOnly;
  return Structural::StiffnessOnly;  // za && zb && !zc
}

Regime regime_of(const DeuParams& p, Structural s, const KernelConfig& cfg) {
  if (s == Structural::Full) {
    const double disc = p.b * p.b - 4.0 * p.a * p.c;
    if (disc >= cfg.epsilon) return Regime::Overdamped;
    if (disc <= -cfg.epsilon) return Regime::Underdamped;
    return Regime::Critical;
  }
  if (s == Structural::NoDamping) {
    return p.a * p.c > 0.0 ? Regime::Oscillatory : Regime::Hyperbolic;
  }
  return Regime::NotApplicable;
}

template <class T>
struct Forms {
  T f{0.0};   // step response, identically 0 for t <= 0
  T f1{0.0};  // homogeneous basis
  T f2{0.0};
};

template <class T>
T cexp(const T& x, double limit) {
  using std::exp;
  return exp(clamp_mag(x, limit));
}

template <class T>
Forms<T> subspace_forms(const T& a, const T& b, const T& c, const T& t,
                        Structural s, Regime regime, double xc) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  const bool forced = value_of(t) > 0.0;  // u(t) = 1 for t > 0, 0 otherwise
  Forms<T> F;
  switch (s) {
    case Structural::Full: {
      if (regime == Regime::Overdamped) {
        const T disc = sqrt(b * b - 4.0 * a * c);
        T r1 = (-b + disc) / (2.0 * a);
        T r2 = (-b - disc) / (2.0 * a);
        if (value_of(r1) < value_of(r2)) std::swap(r1, r2);
        F.f1 = cexp(r1 * t, xc);
        F.f2 = cexp(r2 * t, xc);
        if (forced) F.f = 1.0 / c + (r2 * F.f1 - r1 * F.f2) / (c * (r1 - r2));
      } else if (regime == Regime::Underdamped) {
        const T sg = -b / (2.0 * a);
        const T wd = sqrt(4.0 * a * c - b * b) / (2.0 * a);
        const T env = cexp(sg * t, xc);
        const T co = cos(wd * t);
        const T si = sin(wd * t);
        F.f1 = env * co;
        F.f2 = env * si;
        if (forced) F.f = 1.0 / c - (env / c) * (co - (sg / wd) * si);
      } else {  // Critical: repeated root at -b/(2a)
        const T r = -b / (2.0 * a);
        const T env = cexp(r * t, xc);
        F.f1 = env;
        F.f2 = t * env;
        if (forced) F.f = 1.0 / c - (env / c) * (1.0 - r * t);
      }
      break;
    }
    case Structural::NoDamping: {
      if (regime == Regime::Oscillatory) {
        const T w = sqrt(c / a);
        F.f1 = cos(w * t);
        F.f2 = sin(w * t);
        if (forced) F.f = (1.0 - F.f1) / c;
      } else {  // Hyperbolic: a*c < 0
        const T k = sqrt(-(c / a));
        const T ep = cexp(k * t, xc);
        const T en = cexp(-(k * t), xc);
        F.f1 = (ep + en) * 0.5;
        F.f2 = (ep - en) * 0.5;
        if (forced) F.f = (1.0 - F.f1) / c;
      }
      break;
    }
    case Structural::NoStiffness: {
      const T q = cexp(-(b * t) / a, xc);
      F.f1 = 1.0;
      F.f2 = q;
      if (forced) F.f = t / b - a / (b * b) + (a / (b * b)) * q;
      break;
    }
    case Structural::NoMass: {
      const T q = cexp(-(c * t) / b, xc);
      F.f1 = q;
      F.f2 = 0.0;
      if (forced) F.f = (1.0 - q) / c;
      break;
    }
    case Structural::MassOnly: {
      F.f1 = t;
      F.f2 = 1.0;
      if (forced) F.f = (t * t) / (2.0 * a);
      break;
    }
    case Structural::DampingOnly: {
      F.f1 = 1.0;
      F.f2 = 0.0;
      if (forced) F.f = t / b;
      break;
    }
    case Structural::StiffnessOnly: {
      // Zero-dimensional homogeneous space: both basis functions vanish.
      if (forced) F.f = 1.0 / c;
      break;
    }
  }
  return F;
}

template <class T>
T combine(const Forms<T>& F, double c1, double c2) {
  return F.f + c1 * F.f1 + c2 * F.f2;
}

EvalResult eval_unchecked(const DeuParams& p, Structural s, Regime regime, double t,
                          const KernelConfig& cfg) {
  using D4 = Dual<4>;  // lanes: t, a, b, c
  const D4 td = D4::seeded(t, 0);
  const D4 ad = D4::seeded(p.a, 1);
  const D4 bd = D4::seeded(p.b, 2);
  const D4 cd = D4::seeded(p.c, 3);
  const Forms<D4> F = subspace_forms(ad, bd, cd, td, s, regime, cfg.exp_arg_clamp);
  const D4 y = combine(F, p.c1, p.c2);

  double yv = y.v;
  std::array<double, 4> g = y.d;
  if (std::isnan(yv)) {  // reachable only for astronomically large t/c1/c2
    yv = 0.0;
    g = {};
  } else if (yv > cfg.output_clamp) {
    yv = cfg.output_clamp;
    g = {};
  } else if (yv < -cfg.output_clamp) {
    yv = -cfg.output_clamp;
    g = {};
  }

  EvalResult r;
  r.y = yv;
  r.dy_dt = clamp_mag(g[0], cfg.output_clamp);
  r.dy_da = p.frozen_a ? 0.0 : clamp_mag(g[1], cfg.output_clamp);
  r.dy_db = p.frozen_b ? 0.0 : clamp_mag(g[2], cfg.output_clamp);
  r.dy_dc = p.frozen_c ? 0.0 : clamp_mag(g[3], cfg.output_clamp);
  r.dy_dc1 = clamp_mag(F.f1.v, cfg.output_clamp);
  r.dy_dc2 = clamp_mag(F.f2.v, cfg.output_clamp);
  return r;
}

double eval_value_unchecked(const DeuParams& p, Structural s, Regime regime, double t,
                            const KernelConfig& cfg) {
  const Forms<double> F =
      subspace_forms(p.a, p.b, p.c, t, s, regime, cfg.exp_arg_clamp);
  const double y = combine(F, p.c1, p.c2);
  if (std::isnan(y)) return 0.0;
  return clamp_mag(y, cfg.output_clamp);
}

void check_matches(const DeuParams& p, const SubspaceId& id) {
  const Structural actual = structural_of(p);
  if (actual != id.structural) {
    throw std::logic_error(std::string("contract-violation: subspace id ") +
                           to_string(id.structural) +
                           " does not match coefficient zero pattern " +
                           to_string(actual));
  }
}

}  // namespace

void KernelConfig::validate() const {
  if (!(epsilon > 0.0) || !(epsilon < 1.0) || !std::isfinite(epsilon)) {
    throw std::invalid_argument("kernel-config: epsilon must be in (0, 1)");
  }
  if (!(exp_arg_clamp > 0.0) || !std::isfinite(exp_arg_clamp)) {
    throw std::invalid_argument("kernel-config: exp_arg_clamp must be positive and finite");
  }
  if (!(output_clamp > 0.0) || !std::isfinite(output_clamp)) {
    throw std::invalid_argument("kernel-config: output_clamp must be positive and finite");
  }
}

const char* to_string(Structural s) {
  switch (s) {
    case Structural::Full:          return "Full";
    case Structural::NoDamping:     return "NoDamping";
    case Structural::NoStiffness:   return "NoStiffness";
    case Structural::NoMass:        return "NoMass";
    case Structural::MassOnly:      return "MassOnly";
    case Structural::DampingOnly:   return "DampingOnly";
    case Structural::StiffnessOnly: return "StiffnessOnly";
  }
  return "?";
}

const char* to_string(Regime r) {
  switch (r) {
    case Regime::Overdamped:    return "Overdamped";
    case Regime::Underdamped:   return "Underdamped";
    case Regime::Critical:      return "Critical";
    case Regime::Oscillatory:   return "Oscillatory";
    case Regime::Hyperbolic:    return "Hyperbolic";
    case Regime::NotApplicable: return "NotApplicable";
  }
  return "?";
}

std::string to_string(const SubspaceId& id) {
  if (id.regime == Regime::NotApplicable) return to_string(id.structural);
  return std::string(to_string(id.structural)) + "/" + to_string(id.regime);
}

SubspaceId classify_subspace(const DeuParams& p, const KernelConfig& cfg) {
  const Structural s = structural_of(p);
  return SubspaceId{s, regime_of(p, s, cfg)};
}

std::pair<DeuParams, SubspaceId> resolve_subspace(DeuParams p, const KernelConfig& cfg) {
  cfg.validate();
  const std::array<double, 5> vals{p.a, p.b, p.c, p.c1, p.c2};
  for (double v : vals) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("invalid-parameter: non-finite coefficient");
    }
  }

  auto project = [&cfg](double& x, bool& frozen) {
    if (frozen) {
      x = 0.0;
    } else if (std::abs(x) < cfg.epsilon) {
      x = 0.0;
      frozen = true;
    }
  };
  project(p.a, p.frozen_a);
  project(p.b, p.frozen_b);
  project(p.c, p.frozen_c);

  if (p.a == 0.0 && p.b == 0.0 && p.c == 0.0) {
    p.c = cfg.epsilon;
    p.frozen_c = false;
  }

  if (p.a != 0.0 && p.b != 0.0 && p.c != 0.0) {
    const double disc = p.b * p.b - 4.0 * p.a * p.c;
    if (std::abs(disc) < cfg.epsilon && p.a * p.c > 0.0) {
      p.b = std::copysign(std::sqrt(4.0 * p.a * p.c), p.b);
    }
  }

  return {p, classify_subspace(p, cfg)};
}

EvalResult eval(const DeuParams& p, const SubspaceId& id, double t,
                const KernelConfig& cfg) {
  cfg.validate();
  if (!std::isfinite(t)) throw std::invalid_argument("invalid-input: non-finite t");
  check_resolved(p, cfg);
  check_matches(p, id);
  const Structural s = id.structural;
  return eval_unchecked(p, s, regime_of(p, s, cfg), t, cfg);
}

double eval_value(const DeuParams& p, const SubspaceId& id, double t,
                  const KernelConfig& cfg) {
  cfg.validate();
  if (!std::isfinite(t)) throw std::invalid_argument("invalid-input: non-finite t");
  check_resolved(p, cfg);
  check_matches(p, id);
  const Structural s = id.structural;
  return eval_value_unchecked(p, s, regime_of(p, s, cfg), t, cfg);
}

std::pair<double, double> homogeneous_basis(const DeuParams& p, const SubspaceId& id,
                                            double t, const KernelConfig& cfg) {
  cfg.validate();
  if (!std::isfinite(t)) throw std::invalid_argument("invalid-input: non-finite t");
  check_resolved(p, cfg);
  check_matches(p, id);
  const Structural s = id.structural;
  const Forms<double> F =
      subspace_forms(p.a, p.b, p.c, t, s, regime_of(p, s, cfg), cfg.exp_arg_clamp);
  return {clamp_mag(F.f1, cfg.output_clamp), clamp_mag(F.f2, cfg.output_clamp)};
}

EvalGrid eval_batch(std::span<const DeuNeuron> units, const Tensor2D& ts,
                    const KernelConfig& cfg) {
  cfg.validate();
  if (static_cast<int>(units.size()) != ts.cols) {
    throw std::invalid_argument("shape-mismatch: eval_batch needs one unit per column, got " +
                                std::to_string(units.size()) + " units for " +
                                std::to_string(ts.cols) + " columns");
  }
  std::vector<std::pair<Structural, Regime>> kinds(units.size());
  for (std::size_t j = 0; j < units.size(); ++j) {
    check_resolved(units[j].params, cfg);
    check_matches(units[j].params, units[j].id);
    const Structural s = units[j].id.structural;
    kinds[j] = {s, regime_of(units[j].params, s, cfg)};
  }

  EvalGrid g{Tensor2D(ts.rows, ts.cols), Tensor2D(ts.rows, ts.cols),
             Tensor2D(ts.rows, ts.cols), Tensor2D(ts.rows, ts.cols),
             Tensor2D(ts.rows, ts.cols), Tensor2D(ts.rows, ts.cols),
             Tensor2D(ts.rows, ts.cols)};

  parallel_for(ts.rows, [&](int begin, int end) {
    for (int r = begin; r < end; ++r) {
      for (int j = 0; j < ts.cols; ++j) {
        const double t = ts(r, j);
        if (!std::isfinite(t)) {
          throw std::invalid_argument("invalid-input: non-finite activation input");
        }
        const EvalResult e =
            eval_unchecked(units[j].params, kinds[j].first, kinds[j].second, t, cfg);
        g.y(r, j) = e.y;
        g.dy_dt(r, j) = e.dy_dt;
        g.dy_da(r, j) = e.dy_da;
        g.dy_db(r, j) = e.dy_db;
        g.dy_dc(r, j) = e.dy_dc;
        g.dy_dc1(r, j) = e.dy_dc1;
        g.dy_dc2(r, j) = e.dy_dc2;
      }
    }
  });
  return g;
}

void eval_batch_values(std::span<const DeuNeuron> units, const Tensor2D& ts,
                       const KernelConfig& cfg, Tensor2D& out) {
  cfg.validate();
  if (static_cast<int>(units.size()) != ts.cols) {
    throw std::invalid_argument("shape-mismatch: eval_batch needs one unit per column");
  }
  require_shape(out, ts.rows, ts.cols, "eval_batch_values output");
  std::vector<std::pair<Structural, Regime>> kinds(units.size());
  for (std::size_t j = 0; j < units.size(); ++j) {
    check_resolved(units[j].params, cfg);
    check_matches(units[j].params, units[j].id);
    const Structural s = units[j].id.structural;
    kinds[j] = {s, regime_of(units[j].params, s, cfg)};
  }
  parallel_for(ts.rows, [&](int begin, int end) {
    for (int r = begin; r < end; ++r) {
      for (int j = 0; j < ts.cols; ++j) {
        const double t = ts(r, j);
        if (!std::isfinite(t)) {
          throw std::invalid_argument("invalid-input: non-finite activation input");
        }
        out(r, j) =
            eval_value_unchecked(units[j].params, kinds[j].first, kinds[j].second, t, cfg);
      }
    }
  });
}

}  // namespace deunet
