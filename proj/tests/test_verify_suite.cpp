#include <algorithm>

#include "deunet/verify.hpp"
#include "doctest.h"

using namespace deunet;

TEST_CASE("reduced verification suite passes across all regime classes") {
  verify::VerifyOptions opts;
  opts.draws = 100;
  opts.grad_draws = 54;
  const verify::Report report = verify::run_verification(opts);
  CHECK(report.pass);
  CHECK(report.classes.size() == 10);
  CHECK(report.total_oracle_draws == 100);
  CHECK(report.total_grad_draws == 54);
  for (const auto& cr : report.classes) {
    REQUIRE(cr.oracle_draws > 0);
    REQUIRE(cr.max_residual < report.residual_tol);
    REQUIRE(cr.max_rk4_err < report.rk4_tol);
    REQUIRE(cr.max_grad_err < report.grad_tol);
  }
}

TEST_CASE("identically seeded runs produce identical reports") {
  verify::VerifyOptions opts;
  opts.draws = 60;
  opts.grad_draws = 27;
  opts.seed = 1234;
  const std::string r1 = verify::format_report(verify::run_verification(opts));
  const std::string r2 = verify::format_report(verify::run_verification(opts));
  CHECK(r1 == r2);
}

TEST_CASE("a kernel with a negated partial is flagged by the gradient check") {
  verify::VerifyOptions opts;
  opts.draws = 20;
  opts.grad_draws = 90;
  opts.eval_fn = [](const DeuParams& p, const SubspaceId& id, double t,
                    const KernelConfig& cfg) {
    EvalResult e = eval(p, id, t, cfg);
    e.dy_da = -e.dy_da;
    return e;
  };
  const verify::Report report = verify::run_verification(opts);
  CHECK_FALSE(report.pass);
  const auto full_over =
      std::find_if(report.classes.begin(), report.classes.end(), [](const auto& cr) {
        return cr.cls == verify::RegimeClass::FullOverdamped;
      });
  REQUIRE(full_over != report.classes.end());
  CHECK_FALSE(full_over->pass);
  CHECK(full_over->worst_grad_field == "dy_da");
  CHECK(full_over->max_grad_err >= 1e-4);
}
