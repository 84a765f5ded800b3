#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sontagdde/experiments.hpp"

using namespace sontagdde;
using Catch::Approx;
using Catch::Matchers::ContainsSubstring;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string demo_path(const char* name) { return std::string(SONTAGDDE_DEMO_DIR) + "/" + name; }

constexpr const char* kShortDemo = R"(
system { n=1 m=1 delta=1.0 f = -x[0](0) + 0.5*x[0](-1.0) g = 1.0 }
clkf {
  P = [1.0]
  term(tau=1.0, mu=0.25, Q=[1.0])
  alpha1 = pow(0.4, 2)
  alpha2 = pow(1.5, 2)
  alpha3 = pow(0.1, 2)
  r = 0.5
  p = 1.0
}
experiment {
  mode = kr-plus-iss
  q = 10
  step = 0.01
  horizon = 8
  disturbance = sin(amp=[0.5], freq=1.0, phase=0.0)
  sweep = [1, 10, 100]
}
)";

std::string config_error(const std::string& text) {
  try {
    (void)read_config(text);
  } catch (const ParseError& e) {
    return e.what();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("theoretical bound", "[experiments]") {
  ClkfSpec c;
  c.P = Matrix::Identity(1, 1);
  c.alpha1 = c.alpha2 = c.alpha3 = {1.0, 1.0};  // gamma(s) = s^2
  c.r = 0.5;
  c.p = 1.0;
  // gamma(sqrt(2/q) d) + gamma(sqrt(2/q) (2p + r)) = (2/q) (d^2 + 2.5^2)
  CHECK(theoretical_bound(c, 1.0, 0.5) == Approx(2.0 * (0.25 + 6.25)));
  CHECK(theoretical_bound(c, 100.0, 0.5) / theoretical_bound(c, 1.0, 0.5) == Approx(0.01));
  CHECK(theoretical_bound(c, 10.0, 0.0) == Approx(0.2 * 6.25));
}

TEST_CASE("demo files parse", "[experiments][config]") {
  for (const char* name : {"linear_delay.sdde", "unstable_open_loop.sdde", "no_actuation.sdde", "distributed_delay.sdde"}) {
    INFO(name);
    const ExperimentConfig cfg = read_config(slurp(demo_path(name)));
    CHECK(read_config(to_text(cfg)) == cfg);
  }
  const ExperimentConfig lin = read_config(slurp(demo_path("linear_delay.sdde")));
  CHECK(lin.experiment.mode == ControlMode::KrPlusIss);
  CHECK(lin.experiment.sweep == std::vector<double>{1.0, 10.0, 100.0});
  CHECK(lin.clkf->terms.size() == 1);
  const ExperimentConfig dist = read_config(slurp(demo_path("distributed_delay.sdde")));
  CHECK(dist.experiment.disturbance.m == 1);
  CHECK(dist.experiment.initial.size() == 2);
}

TEST_CASE("config defaults and round trip", "[experiments][config]") {
  const ExperimentConfig cfg = read_config("system { n=2 m=1 delta=1.0 f = [x[1](0), -x[0](-1.0)] g = [0.0, 1.0] }");
  CHECK_FALSE(cfg.clkf.has_value());
  CHECK(cfg.experiment.disturbance.m == 1);
  CHECK(cfg.experiment.initial.size() == 2);
  CHECK(cfg.experiment.settle == 0.5);
  const HistorySegment h = initial_history(cfg, 0.25);
  CHECK(h.head() == Vector::Ones(2));
  CHECK(read_config(to_text(cfg)) == cfg);

  const ExperimentConfig full = read_config(kShortDemo);
  CHECK(read_config(to_text(full)) == full);
  CHECK(to_text(read_config(to_text(full))) == to_text(full));
}

TEST_CASE("config diagnostics", "[experiments][config][errors]") {
  const std::string sys = "system { n=1 m=1 delta=1.0 f = -x[0](0) g = 1.0 }\n";
  CHECK_THAT(config_error(""), ContainsSubstring("system"));
  CHECK_THAT(config_error(sys + "experiment { mode = fast }"), ContainsSubstring("mode"));
  CHECK_THAT(config_error(sys + "experiment { sweep = [10, 1] }"), ContainsSubstring("increasing"));
  CHECK_THAT(config_error(sys + "experiment { settle = 1.5 }"), ContainsSubstring("settle"));
  CHECK_THAT(config_error(sys + "experiment { disturbance = const([1.0, 2.0]) }"), ContainsSubstring("m=1"));
  CHECK_THAT(config_error(sys + "experiment { initial = [1.0, 2.0] }"), ContainsSubstring("n=1"));
  CHECK_THAT(config_error(sys + "experiment { bogus = 1 }"), ContainsSubstring("bogus"));
  CHECK_THAT(config_error(sys + "clkf { P = [1.0] }"), ContainsSubstring("alpha1"));
  CHECK_THAT(config_error(sys + "clkf { P = [-1.0] alpha1 = pow(1, 2) alpha2 = pow(1, 2) alpha3 = pow(1, 2) r = 0.5 p = 1 }"),
             ContainsSubstring("positive definite"));
  CHECK_THAT(config_error(sys + sys), ContainsSubstring("duplicate"));
  CHECK_THAT(config_error(sys + "extra { }"), ContainsSubstring("expected"));
}

TEST_CASE("run_experiment reports the bound", "[experiments]") {
  const ExperimentConfig cfg = read_config(kShortDemo);
  const RunOutcome r = run_experiment(cfg);
  REQUIRE_FALSE(r.diverged);
  REQUIRE(r.bound.has_value());
  CHECK(*r.bound == Approx(theoretical_bound(*cfg.clkf, 10.0, 0.5)));
  CHECK(r.residual_radius <= *r.bound);
  CHECK(r.bound_ok());
  CHECK_THAT(summary_line(r), ContainsSubstring("bound_satisfied=yes"));

  ExperimentConfig open = cfg;
  open.experiment.mode = ControlMode::OpenLoop;
  const RunOutcome o = run_experiment(open);
  CHECK_FALSE(o.bound.has_value());
  CHECK_THAT(summary_line(o), ContainsSubstring("bound=n/a"));
}

TEST_CASE("an unstable open loop reports divergence", "[experiments]") {
  const ExperimentConfig cfg = read_config(slurp(demo_path("unstable_open_loop.sdde")));
  const RunOutcome r = run_experiment(cfg);
  CHECK(r.diverged);
  CHECK(r.divergence_time > 0.0);
  CHECK_FALSE(r.bound_ok());
  CHECK_THAT(summary_line(r), ContainsSubstring("diverged at t="));
}

TEST_CASE("zero initial history gives an all-zero trajectory", "[experiments]") {
  ExperimentConfig cfg = read_config(kShortDemo);
  cfg.experiment.initial = {Expr::constant(0.0)};
  cfg.experiment.disturbance = DisturbanceSpec::zero(1);
  const RunOutcome r = run_experiment(cfg);
  for (const auto& x : r.trajectory.states) CHECK(x[0] == 0.0);
}

TEST_CASE("sweep_q", "[experiments][sweep]") {
  const ExperimentConfig cfg = read_config(kShortDemo);
  const auto rows = sweep_q(cfg);
  REQUIRE(rows.size() == 3);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    CHECK(rows[k].q == cfg.experiment.sweep[k]);
    CHECK_FALSE(rows[k].diverged);
    CHECK(rows[k].residual_radius <= rows[k].bound);
  }
  CHECK(rows[2].residual_radius <= rows[0].residual_radius);
  const std::string table = sweep_csv(rows);
  CHECK(table.rfind("q,residual_radius,theoretical_bound,status\n", 0) == 0);
  CHECK(std::count(table.begin(), table.end(), '\n') == 4);

  ExperimentConfig single = cfg;
  single.experiment.sweep = {10.0};
  CHECK_THROWS_WITH(sweep_q(single), ContainsSubstring("sweep needs >= 2 values"));
  ExperimentConfig bare = cfg;
  bare.clkf.reset();
  CHECK_THROWS_AS(sweep_q(bare), ConfigError);
}

TEST_CASE("falsify and render", "[experiments][falsify]") {
  const ExperimentConfig cfg = read_config(slurp(demo_path("no_actuation.sdde")));
  const HypothesisReport rep = falsify(cfg);
  CHECK(rep[Condition::ZeroB].falsified);
  const std::string text = render_report(rep, *cfg.clkf);
  CHECK_THAT(text, ContainsSubstring("(ii) b = 0 => a <= 0: FALSIFIED"));
  CHECK_THAT(text, ContainsSubstring("not a proof"));
  const std::string csv = witnesses_csv(rep);
  CHECK(csv.rfind("condition,sample,family,lhs,rhs,head_norm,sup_norm,m2_norm\n", 0) == 0);
  CHECK_THAT(csv, ContainsSubstring("\nii,0,constant,"));
}

TEST_CASE("identical configs give byte-identical CSVs", "[experiments][determinism]") {
  ExperimentConfig cfg = read_config(kShortDemo);
  cfg.experiment.disturbance = DisturbanceSpec::uniform(1, 0.4, 77);
  const std::string a = to_csv(run_experiment(cfg).trajectory);
  const std::string b = to_csv(run_experiment(read_config(to_text(cfg))).trajectory);
  CHECK(a == b);
  CHECK(static_cast<std::size_t>(std::count(a.begin(), a.end(), '\n')) == 802);
}
