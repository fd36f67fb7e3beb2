#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "singarc/integrate.hpp"

namespace singarc {

/// Bands are relative: ε_φ = phi_rel·max‖λ‖·max‖g_k‖ and
/// ε_φ' = phi_dot_rel·max‖λ‖·max‖fg_k‖, maxima over the whole trajectory.
struct DetectionTolerances {
  double phi_rel = 1e-3;
  double phi_dot_rel = 1e-3;
  int min_samples = 10;
  int gap_samples = 3;
  int channel = 0;  // zero-based

  void validate() const;
};

struct SingularInterval {
  int channel = 0;
  double t_start = 0.0;
  double t_end = 0.0;
  std::size_t first = 0;  // sample indices, inclusive
  std::size_t last = 0;
  double max_abs_phi = 0.0;
  double max_abs_phi_dot = 0.0;
  double u2_bang_value = 0.0;
  /// Set on pieces produced by splitting an interval where the law left the
  /// bounds or was undefined.
  bool split = false;
};

struct DetectionBands {
  double phi = 0.0;
  double phi_dot = 0.0;
};

DetectionBands detection_bands(const MechanicalSystem& sys, const Trajectory& traj, const DetectionTolerances& tol);

/// Maximal runs where |φ_k| ≤ ε_φ and |φ_k'| ≤ ε_φ', merged across gaps of at
/// most `gap_samples` and kept when at least `min_samples` long. Throws
/// MissingCostates.
std::vector<SingularInterval> detect_singular_arcs(const MechanicalSystem& sys, const Trajectory& traj,
                                                   const ControlBounds& bounds, const DetectionTolerances& tol);

struct IntervalReport {
  SingularInterval interval;
  double max_deviation = 0.0;  // max |u1_in − u1_law|
  std::size_t replaced = 0;
};

struct SampleIssue {
  std::size_t index = 0;
  double t = 0.0;
  std::string reason;
};

struct RegularizationReport {
  std::vector<IntervalReport> intervals;
  /// Samples inside detected intervals where the law was undefined or out of
  /// bounds; they keep their input value and cause the interval to split.
  std::vector<SampleIssue> rejected;
  /// Samples outside every interval whose |φ_k| sits inside the band, so the
  /// sign rule cannot pick a bound; left untouched.
  std::vector<SampleIssue> unresolved;
  std::size_t modified_inside = 0;
  std::size_t modified_outside = 0;
  std::vector<std::size_t> modified_outside_indices;
  std::size_t rk_band_samples = 0;
  double endpoint_error = 0.0;
  double endpoint_error_relative = 0.0;
  std::size_t audit_violations = 0;
  std::size_t audit_degenerate = 0;

  bool partial() const { return !rejected.empty(); }
};

nlohmann::json to_json(const SingularInterval& interval);
nlohmann::json to_json(const RegularizationReport& report);

struct RegularizeOptions {
  DetectionTolerances tolerances;
  Interpolation interpolation = Interpolation::kZeroOrderHold;
  RkBand rk_band;
};

struct RegularizationResult {
  Trajectory trajectory;
  RegularizationReport report;
};

/// Replaces u1 on each interval by the closed-form law and, elsewhere, by the
/// bound selected by sign(φ1). The endpoint error comes from resimulating the
/// new control from the input's x(0) against the input's final state.
/// Throws MissingCostates or CostateDegenerate.
RegularizationResult regularize_u1(const MechanicalSystem& sys, const Trajectory& traj,
                                   const std::vector<SingularInterval>& intervals, const ControlBounds& bounds,
                                   const RegularizeOptions& options = {});

/// λ2/λ4 at every sample. Throws MissingCostates or CostateDegenerate.
std::vector<double> costate_ratio_trace(const Trajectory& traj);

enum class AuditClass { kUpperBang, kLowerBang, kSingular, kViolation };

std::string to_string(AuditClass c);

struct PmpAudit {
  /// classes[channel][sample]
  std::vector<std::vector<AuditClass>> classes;
  /// λ = 0 at this sample; every channel is then a violation.
  std::vector<bool> lambda_degenerate;

  std::size_t count(int channel, AuditClass c) const;
  std::size_t violations() const;
};

struct AuditTolerances {
  DetectionTolerances detection;
  /// Relative to the bound width M_i − L_i.
  double u_rel = 1e-6;
};

/// Classifies every sample and channel. Bang samples must sit on the bound
/// chosen by sign(φ_i); in-band interior samples of a channel with a
/// closed-form law must match it. Throws MissingCostates.
PmpAudit pmp_audit(const MechanicalSystem& sys, const Trajectory& traj, const ControlBounds& bounds,
                   const AuditTolerances& tol = {});

}  // namespace singarc
