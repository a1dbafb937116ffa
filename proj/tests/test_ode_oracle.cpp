#include <cmath>
#include <vector>

#include "deunet/deu_kernel.hpp"
#include "deunet/ode_oracle.hpp"
#include "doctest.h"

using namespace deunet;

namespace {

const KernelConfig kCfg{};

std::vector<double> grid_range(double lo, double hi, double step) {
  std::vector<double> g;
  for (double t = lo; t <= hi + 1e-12; t += step) g.push_back(t);
  return g;
}

double rk4_error_at(double step, double a, double b, double c, double t_end,
                    double expected) {
  IvpSpec s;
  s.a = a;
  s.b = b;
  s.c = c;
  s.t_end = t_end;
  s.step = step;
  const auto traj = integrate(s);
  return std::abs(traj.back().second - expected);
}

}  // namespace

TEST_CASE("oscillatory step response integrates to 2 at pi") {
  CHECK(rk4_error_at(1e-4, 1.0, 0.0, 1.0, 3.141592653589793, 2.0) < 1e-6);
}

TEST_CASE("mass-only step response integrates to 1 at t=2") {
  CHECK(rk4_error_at(1e-4, 2.0, 0.0, 0.0, 2.0, 1.0) < 1e-6);
}

TEST_CASE("integrator shows fourth-order convergence on the oscillatory case") {
  const double e1 = rk4_error_at(0.02, 1.0, 0.0, 1.0, 3.141592653589793, 2.0);
  const double e2 = rk4_error_at(0.01, 1.0, 0.0, 1.0, 3.141592653589793, 2.0);
  const double e3 = rk4_error_at(0.005, 1.0, 0.0, 1.0, 3.141592653589793, 2.0);
  CHECK(e1 / e2 >= 8.0);
  CHECK(e2 / e3 >= 8.0);
  // The quadratic case is integrated exactly by RK4, so its error sits at the
  // roundoff floor for every step size instead of contracting further.
  CHECK(rk4_error_at(0.02, 2.0, 0.0, 0.0, 2.0, 1.0) < 1e-12);
  CHECK(rk4_error_at(0.01, 2.0, 0.0, 0.0, 2.0, 1.0) < 1e-12);
}

TEST_CASE("integration across the forcing jump keeps full accuracy") {
  // Start left of the jump with homogeneous initial conditions from eval.
  auto [p, id] = resolve_subspace([] {
    DeuParams q;
    q.a = 1.0;
    q.b = 0.0;
    q.c = 1.0;
    q.c1 = 0.7;
    q.c2 = -0.2;
    return q;
  }(), kCfg);
  const EvalResult start = eval(p, id, -2.0, kCfg);
  IvpSpec s;
  s.a = 1.0;
  s.b = 0.0;
  s.c = 1.0;
  s.t0 = -2.0;
  s.y0 = start.y;
  s.yprime0 = start.dy_dt;
  s.t_end = 2.0;
  s.step = 1e-4;
  const auto traj = integrate(s);
  for (std::size_t i = 0; i < traj.size(); i += 500) {
    const auto [t, y] = traj[i];
    REQUIRE(std::abs(y - eval(p, id, t, kCfg).y) < 1e-8);
  }
}

TEST_CASE("first-order integration matches the closed form") {
  auto [p, id] = resolve_subspace([] {
    DeuParams q;
    q.b = 0.8;
    q.c = 1.3;
    q.c1 = 0.4;
    return q;
  }(), kCfg);
  CHECK(id.structural == Structural::NoMass);
  const EvalResult start = eval(p, id, -1.0, kCfg);
  IvpSpec s;
  s.b = 0.8;
  s.c = 1.3;
  s.t0 = -1.0;
  s.y0 = start.y;
  s.t_end = 3.0;
  s.step = 1e-4;
  const auto traj = integrate(s);
  for (std::size_t i = 0; i < traj.size(); i += 1000) {
    const auto [t, y] = traj[i];
    REQUIRE(std::abs(y - eval(p, id, t, kCfg).y) < 1e-8);
  }
}

TEST_CASE("algebraic route when only stiffness remains") {
  IvpSpec s;
  s.c = 2.0;
  s.t0 = -1.0;
  s.t_end = 1.0;
  s.step = 0.25;
  const auto traj = integrate(s);
  for (const auto& [t, y] : traj) {
    REQUIRE(y == (t > 0.0 ? 0.5 : 0.0));
  }
}

TEST_CASE("invalid specs are rejected") {
  IvpSpec s;
  s.a = 1.0;
  s.t_end = 1.0;
  s.step = -1e-3;
  CHECK_THROWS_AS(integrate(s), std::invalid_argument);  // bad step
  s.step = 1e-3;
  s.t_end = 0.0;
  s.t0 = 0.0;
  CHECK_THROWS_AS(integrate(s), std::invalid_argument);  // empty span
  IvpSpec zeros;
  zeros.t_end = 1.0;
  CHECK_THROWS_AS(integrate(zeros), std::invalid_argument);  // a = b = c = 0
  IvpSpec misaligned;
  misaligned.a = 1.0;
  misaligned.c = 1.0;
  misaligned.t0 = -1e-6;  // leg shorter than half a step
  misaligned.t_end = 1.0;
  misaligned.step = 0.5;
  CHECK_THROWS_AS(integrate(misaligned), std::invalid_argument);
}

TEST_CASE("divergent integration reports the failure point") {
  IvpSpec s;
  s.a = 1.0;
  s.c = -100.0;  // y'' = 100 y: doubles every ~0.07 time units
  s.y0 = 1.0;
  s.yprime0 = 10.0;
  s.t0 = 0.0;
  s.t_end = 40.0;
  s.step = 1e-3;
  CHECK_THROWS_WITH_AS(integrate(s), doctest::Contains("divergence"), std::runtime_error);
}

TEST_CASE("residual scan accepts the true solution and flags a scaled one") {
  auto [p, id] = resolve_subspace([] {
    DeuParams q;
    q.a = 1.0;
    q.b = 0.0;
    q.c = 1.0;
    return q;
  }(), kCfg);
  const auto grid = grid_range(0.1, 3.0, 0.05);

  CHECK(residual_scan(p, id, grid, kCfg) < 1e-6);

  const KernelEvalFn scaled = [](const DeuParams& q, const SubspaceId& qid, double t,
                                 const KernelConfig& cfg) {
    EvalResult e = eval(q, qid, t, cfg);
    e.y *= 1.1;
    e.dy_dt *= 1.1;
    return e;
  };
  const ResidualStats stats = residual_scan_stats(scaled, p, id, grid, kCfg);
  CHECK(stats.max_raw >= 0.05);
}

TEST_CASE("residual scan validates its grid") {
  auto [p, id] = resolve_subspace([] {
    DeuParams q;
    q.a = 1.0;
    q.b = 0.0;
    q.c = 1.0;
    return q;
  }(), kCfg);
  CHECK_THROWS_AS(residual_scan(p, id, std::vector<double>{}, kCfg), std::invalid_argument);
  CHECK_THROWS_AS(residual_scan(p, id, std::vector<double>{1e-5}, kCfg),
                  std::invalid_argument);
}
