#include <cmath>
#include <numbers>

#include "doctest.h"
#include "fixtures.hpp"
#include "singarc/arm2dof.hpp"
#include "singarc/errors.hpp"
#include "singarc/regularize.hpp"

using namespace singarc;

namespace {

const Trajectory& extremal() {
  static const Trajectory traj = fixtures::reference_extremal();
  return traj;
}

const fixtures::SatSingSat& sat_sing_sat() {
  static const fixtures::SatSingSat data = fixtures::sat_singular_sat();
  return data;
}

bool has_flag(const Trajectory& t, const std::string& flag) {
  return std::find(t.meta.flags.begin(), t.meta.flags.end(), flag) != t.meta.flags.end();
}

}  // namespace

TEST_CASE("tolerance validation") {
  DetectionTolerances tol;
  CHECK_NOTHROW(tol.validate());
  tol.phi_rel = 0.0;
  CHECK_THROWS_AS(tol.validate(), InvalidConfig);
  tol = {};
  tol.min_samples = 0;
  CHECK_THROWS_AS(tol.validate(), InvalidConfig);
  tol = {};
  tol.gap_samples = -1;
  CHECK_THROWS_AS(tol.validate(), InvalidConfig);
}

TEST_CASE("a fully singular extremal is one interval") {
  const Arm2Dof arm;
  const auto intervals = detect_singular_arcs(arm, extremal(), arm_default_bounds(), {});
  REQUIRE(intervals.size() == 1);
  CHECK(intervals[0].first == 0);
  CHECK(intervals[0].last == extremal().size() - 1);
  CHECK(intervals[0].t_start == 0.0);
  CHECK(intervals[0].t_end == doctest::Approx(0.7));
  CHECK(intervals[0].u2_bang_value == -10.0);
  CHECK(intervals[0].channel == 0);
}

TEST_CASE("bang-bang data has no singular interval") {
  const Arm2Dof arm;
  const Trajectory traj = fixtures::bang_bang_synthetic();
  CHECK(detect_singular_arcs(arm, traj, arm_default_bounds(), {}).empty());
}

TEST_CASE("saturated, singular, saturated") {
  const Arm2Dof arm;
  const auto& data = sat_sing_sat();
  const Trajectory& traj = data.traj;

  // φ1 > 0 on both saturated pieces, consistent with u1 = M1 there.
  for (std::size_t i = 0; i + 5 < data.first_singular; ++i)
    CHECK(switching(arm, traj.samples[i].x, *traj.samples[i].lambda).phi[0] > 0.0);
  for (std::size_t i = data.last_singular + 5; i < traj.size(); ++i)
    CHECK(switching(arm, traj.samples[i].x, *traj.samples[i].lambda).phi[0] > 0.0);

  const auto intervals = detect_singular_arcs(arm, traj, arm_default_bounds(), {});
  REQUIRE(intervals.size() == 1);
  const SingularInterval& iv = intervals[0];
  // The band catches a few samples either side of the junctions, where φ1
  // grows quadratically.
  const auto slack = [](std::size_t a, std::size_t b) { return a > b ? a - b : b - a; };
  CHECK(slack(iv.first, data.first_singular) <= 15);
  CHECK(slack(iv.last, data.last_singular) <= 15);
  CHECK(iv.first > 0);
  CHECK(iv.last < traj.size() - 1);

  const RegularizationResult res = regularize_u1(arm, traj, intervals, arm_default_bounds());
  const auto& out = res.trajectory.samples;
  for (std::size_t i = 0; i < iv.first; ++i) CHECK(out[i].u[0] == 20.0);
  for (std::size_t i = iv.last + 1; i < out.size(); ++i) CHECK(out[i].u[0] == 20.0);
  for (std::size_t i = data.first_singular; i <= data.last_singular; ++i)
    CHECK(out[i].u[0] == doctest::Approx(traj.samples[i].u[0]).epsilon(1e-9));
  CHECK_FALSE(res.report.partial());
  // φ1 leaves zero slowly on the flanks (α1·φ2 is about 1e-3), so much of
  // each flank sits inside the φ band; those samples are reported and kept.
  for (const SampleIssue& issue : res.report.unresolved) {
    CHECK((issue.index < iv.first || issue.index > iv.last));
    CHECK(out[issue.index].u[0] == traj.samples[issue.index].u[0]);
  }
  CHECK(res.report.audit_violations == 0);
}

TEST_CASE("spiked controls are restored") {
  const Arm2Dof arm;
  const Trajectory& clean = extremal();
  const fixtures::Corruption bad = fixtures::spike_u1(clean, 0.01, 5.0, 7);
  REQUIRE(bad.indices.size() == 70);

  const auto intervals = detect_singular_arcs(arm, bad.traj, arm_default_bounds(), {});
  REQUIRE(intervals.size() == 1);
  const RegularizationResult res = regularize_u1(arm, bad.traj, intervals, arm_default_bounds());
  double worst = 0.0;
  for (std::size_t i = 0; i < clean.size(); ++i)
    worst = std::max(worst, std::abs(res.trajectory.samples[i].u[0] - clean.samples[i].u[0]));
  CHECK(worst <= 1e-6);
  CHECK(res.report.endpoint_error_relative <= 1e-3);
  CHECK(res.report.modified_inside == 70);
  CHECK(res.report.modified_outside == 0);
  CHECK(res.report.intervals.front().max_deviation == doctest::Approx(5.0).epsilon(1e-6));
  CHECK(res.report.audit_violations == 0);
  CHECK(res.trajectory.meta.source == TrajectorySource::kRegularized);
  CHECK(has_flag(res.trajectory, "regularized"));
  CHECK_FALSE(has_flag(res.trajectory, "partial_regularization"));

  SUBCASE("linear interpolation tightens the endpoint") {
    RegularizeOptions opt;
    opt.interpolation = Interpolation::kLinear;
    const RegularizationResult lin = regularize_u1(arm, bad.traj, intervals, arm_default_bounds(), opt);
    CHECK(lin.report.endpoint_error_relative <= 1e-6);
  }
}

TEST_CASE("regularization is idempotent") {
  const Arm2Dof arm;
  const fixtures::Corruption bad = fixtures::spike_u1(extremal(), 0.01, 5.0, 3);
  const RegularizationResult once =
      regularize_u1(arm, bad.traj, detect_singular_arcs(arm, bad.traj, arm_default_bounds(), {}), arm_default_bounds());
  const RegularizationResult twice = regularize_u1(
      arm, once.trajectory, detect_singular_arcs(arm, once.trajectory, arm_default_bounds(), {}), arm_default_bounds());
  for (std::size_t i = 0; i < once.trajectory.size(); ++i)
    CHECK(std::abs(twice.trajectory.samples[i].u[0] - once.trajectory.samples[i].u[0]) <= 1e-12);
  CHECK(twice.report.modified_inside == 0);
}

TEST_CASE("clean bang-bang input passes through") {
  const Arm2Dof arm;
  const Trajectory traj = fixtures::bang_bang_synthetic();
  const RegularizationResult res = regularize_u1(arm, traj, {}, arm_default_bounds());
  for (std::size_t i = 0; i < traj.size(); ++i) CHECK(res.trajectory.samples[i].u == traj.samples[i].u);
  CHECK(res.report.modified_outside == 0);
  CHECK(res.report.audit_violations == 0);
  // Samples within the band around the switch at t = 0.35 are left alone.
  CHECK_FALSE(res.report.unresolved.empty());
  for (const SampleIssue& issue : res.report.unresolved) CHECK(std::abs(issue.t - 0.35) <= 0.01);
}

TEST_CASE("wrong bangs outside intervals are corrected") {
  const Arm2Dof arm;
  Trajectory traj = fixtures::bang_bang_synthetic();
  traj.samples[100].u[0] = 20.0;  // φ1 < 0 here
  traj.samples[600].u[0] = 3.0;   // φ1 > 0 here
  const RegularizationResult res = regularize_u1(arm, traj, {}, arm_default_bounds());
  CHECK(res.trajectory.samples[100].u[0] == -20.0);
  CHECK(res.trajectory.samples[600].u[0] == 20.0);
  CHECK(res.report.modified_outside == 2);
  CHECK(res.report.modified_outside_indices == std::vector<std::size_t>{100, 600});
}

TEST_CASE("law failures split the interval and mark the result partial") {
  const Arm2Dof arm;
  auto intervals = detect_singular_arcs(arm, extremal(), arm_default_bounds(), {});
  REQUIRE(intervals.size() == 1);
  ControlBounds tight = arm_default_bounds();
  tight.lower[0] = -15.0;
  tight.upper[0] = 15.0;
  const RegularizationResult res = regularize_u1(arm, extremal(), intervals, tight);
  CHECK(res.report.partial());
  CHECK_FALSE(res.report.rejected.empty());
  CHECK(res.report.intervals.size() >= 2);
  for (const auto& r : res.report.intervals) CHECK(r.interval.split);
  for (const auto& issue : res.report.rejected) {
    CHECK(res.trajectory.samples[issue.index].u[0] == extremal().samples[issue.index].u[0]);
    CHECK_FALSE(issue.reason.empty());
  }
  CHECK(has_flag(res.trajectory, "partial_regularization"));
}

TEST_CASE("costate ratio trace") {
  const Trajectory& traj = extremal();
  const std::vector<double> ratio = costate_ratio_trace(traj);
  REQUIRE(ratio.size() == traj.size());
  CHECK(ratio.front() == doctest::Approx(0.5).epsilon(1e-12));

  SUBCASE("invariant under scaling the costate") {
    Trajectory scaled = traj;
    for (Sample& s : scaled.samples) *s.lambda *= -3.7;
    const std::vector<double> r2 = costate_ratio_trace(scaled);
    for (std::size_t i = 0; i < ratio.size(); ++i) CHECK(r2[i] == doctest::Approx(ratio[i]).epsilon(1e-14));
  }
  SUBCASE("converges under step halving") {
    const std::vector<double> coarse = costate_ratio_trace(fixtures::reference_extremal(2e-4));
    for (std::size_t i = 0; i < coarse.size(); ++i)
      CHECK(std::abs(coarse[i] - ratio[2 * i]) <= 1e-3 * std::max(1.0, std::abs(ratio[2 * i])));
  }
  SUBCASE("degenerate and missing costates") {
    Trajectory bad = traj;
    (*bad.samples[5].lambda)[3] = 0.0;
    CHECK_THROWS_AS(costate_ratio_trace(bad), CostateDegenerate);
    bad.samples[5].lambda.reset();
    CHECK_THROWS_AS(costate_ratio_trace(bad), MissingCostates);
  }
}

TEST_CASE("audit classifies the constructed extremal as singular on u1") {
  const Arm2Dof arm;
  const PmpAudit audit = pmp_audit(arm, extremal(), arm_default_bounds());
  CHECK(audit.violations() == 0);
  CHECK(audit.count(0, AuditClass::kSingular) == extremal().size());
  CHECK(audit.count(1, AuditClass::kLowerBang) == extremal().size());
}

TEST_CASE("audit flags corrupted samples") {
  const Arm2Dof arm;
  const fixtures::Corruption bad = fixtures::spike_u1(extremal(), 0.01, 5.0, 11);
  const PmpAudit audit = pmp_audit(arm, bad.traj, arm_default_bounds());
  CHECK(audit.violations() == bad.indices.size());
  for (const std::size_t i : bad.indices) CHECK(audit.classes[0][i] == AuditClass::kViolation);

  SUBCASE("zero costate rows") {
    Trajectory z = extremal();
    z.samples[42].lambda = Eigen::VectorXd::Zero(4);
    const PmpAudit a = pmp_audit(arm, z, arm_default_bounds());
    CHECK(a.lambda_degenerate[42]);
    CHECK(a.classes[0][42] == AuditClass::kViolation);
    CHECK(a.classes[1][42] == AuditClass::kViolation);
    CHECK(a.violations() == 2);
  }
  SUBCASE("wrong bang side") {
    Trajectory t = fixtures::bang_bang_synthetic();
    t.samples[10].u[1] = 10.0;
    const PmpAudit a = pmp_audit(arm, t, arm_default_bounds());
    CHECK(a.classes[1][10] == AuditClass::kViolation);
    CHECK(a.count(0, AuditClass::kLowerBang) + a.count(0, AuditClass::kUpperBang) == t.size());
  }
  SUBCASE("out of bounds") {
    Trajectory t = fixtures::bang_bang_synthetic();
    t.samples[10].u[0] = -20.5;
    CHECK(pmp_audit(arm, t, arm_default_bounds()).classes[0][10] == AuditClass::kViolation);
  }
  SUBCASE("missing costates") {
    Trajectory t = extremal();
    t.samples[0].lambda.reset();
    CHECK_THROWS_AS(pmp_audit(arm, t, arm_default_bounds()), MissingCostates);
    CHECK_THROWS_AS(detect_singular_arcs(arm, t, arm_default_bounds(), {}), MissingCostates);
    CHECK_THROWS_AS(regularize_u1(arm, t, {}, arm_default_bounds()), MissingCostates);
  }
}

TEST_CASE("report serialization") {
  const Arm2Dof arm;
  const fixtures::Corruption bad = fixtures::spike_u1(extremal(), 0.01, 5.0, 7);
  const RegularizationResult res =
      regularize_u1(arm, bad.traj, detect_singular_arcs(arm, bad.traj, arm_default_bounds(), {}), arm_default_bounds());
  const nlohmann::json j = to_json(res.report);
  for (const char* key : {"intervals", "rejected_samples", "unresolved_samples", "modified_inside", "modified_outside",
                          "endpoint_error", "endpoint_error_relative", "pmp_consistency", "partial"}) {
    CHECK(j.contains(key));
  }
  CHECK(j["intervals"].size() == 1);
  CHECK(j["modified_inside"].get<int>() == 70);
  CHECK(j["partial"].get<bool>() == false);
  CHECK(to_string(AuditClass::kSingular) == "singular");
}
