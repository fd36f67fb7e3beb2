#include "singarc/regularize.hpp"

#include <algorithm>
#include <cmath>

#include "singarc/pmp.hpp"
#include "singarc/trajectory_io.hpp"

namespace singarc {
namespace {

VectorField fg(int i) { return VectorField::bracket(VectorField::drift(), VectorField::input(i)); }

void require_costates(const Trajectory& traj) {
  if (!traj.has_costates()) throw MissingCostates("trajectory has no costate columns");
}

int bang_channel_for(int singular_channel) { return singular_channel == 0 ? 1 : 0; }

double median(std::vector<double> v) {
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

}  // namespace

void DetectionTolerances::validate() const {
  if (!(phi_rel > 0.0) || !(phi_dot_rel > 0.0)) throw InvalidConfig("detection bands must be positive");
  if (min_samples < 1 || gap_samples < 0) throw InvalidConfig("min_samples >= 1 and gap_samples >= 0 required");
  if (channel < 0) throw InvalidConfig("channel must be non-negative");
}

DetectionBands detection_bands(const MechanicalSystem& sys, const Trajectory& traj, const DetectionTolerances& tol) {
  require_costates(traj);
  const VectorField fgk = fg(tol.channel);
  double lambda_max = 0.0;
  double g_max = 0.0;
  double fg_max = 0.0;
  for (const Sample& s : traj.samples) {
    lambda_max = std::max(lambda_max, s.lambda->norm());
    g_max = std::max(g_max, input_columns(sys, s.x).col(tol.channel).norm());
    fg_max = std::max(fg_max, evaluate(sys, fgk, s.x).norm());
  }
  return {tol.phi_rel * lambda_max * g_max, tol.phi_dot_rel * lambda_max * fg_max};
}

std::vector<SingularInterval> detect_singular_arcs(const MechanicalSystem& sys, const Trajectory& traj,
                                                   const ControlBounds& bounds, const DetectionTolerances& tol) {
  tol.validate();
  require_costates(traj);
  if (tol.channel >= sys.dof()) throw InvalidConfig("detection channel out of range");
  const DetectionBands band = detection_bands(sys, traj, tol);
  const std::size_t n = traj.size();

  std::vector<double> phi(n);
  std::vector<double> phi_dot(n);
  std::vector<bool> inside(n);
  for (std::size_t i = 0; i < n; ++i) {
    const SwitchingRecord rec = switching(sys, traj.samples[i].x, *traj.samples[i].lambda);
    phi[i] = rec.phi[tol.channel];
    phi_dot[i] = rec.phi_dot[tol.channel];
    inside[i] = std::abs(phi[i]) <= band.phi && std::abs(phi_dot[i]) <= band.phi_dot;
  }

  // Raw runs, then merge across short gaps.
  std::vector<std::pair<std::size_t, std::size_t>> runs;
  for (std::size_t i = 0; i < n;) {
    if (!inside[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < n && inside[j + 1]) ++j;
    if (!runs.empty() && i - runs.back().second - 1 <= static_cast<std::size_t>(tol.gap_samples)) {
      runs.back().second = j;
    } else {
      runs.emplace_back(i, j);
    }
    i = j + 1;
  }

  const int other = sys.dof() > 1 ? bang_channel_for(tol.channel) : tol.channel;
  std::vector<SingularInterval> out;
  for (const auto& [first, last] : runs) {
    if (last - first + 1 < static_cast<std::size_t>(tol.min_samples)) continue;
    if (!(traj.samples[last].t > traj.samples[first].t)) continue;
    SingularInterval iv;
    iv.channel = tol.channel;
    iv.first = first;
    iv.last = last;
    iv.t_start = traj.samples[first].t;
    iv.t_end = traj.samples[last].t;
    std::vector<double> u_other;
    for (std::size_t i = first; i <= last; ++i) {
      iv.max_abs_phi = std::max(iv.max_abs_phi, std::abs(phi[i]));
      iv.max_abs_phi_dot = std::max(iv.max_abs_phi_dot, std::abs(phi_dot[i]));
      u_other.push_back(traj.samples[i].u[other]);
    }
    iv.u2_bang_value = bounds.nearest_bound(other, median(std::move(u_other)));
    out.push_back(iv);
  }
  return out;
}

RegularizationResult regularize_u1(const MechanicalSystem& sys, const Trajectory& traj,
                                   const std::vector<SingularInterval>& intervals, const ControlBounds& bounds,
                                   const RegularizeOptions& options) {
  require_costates(traj);
  traj.validate();
  bounds.validate();
  constexpr int kChannel = 0;
  for (const SingularInterval& iv : intervals) {
    if (iv.channel != kChannel) throw InvalidConfig("regularize_u1 needs intervals on channel 1");
    if (iv.last >= traj.size() || iv.first > iv.last) throw InvalidConfig("interval indices out of range");
  }

  RegularizationResult result;
  result.trajectory = traj;
  result.trajectory.meta.source = TrajectorySource::kRegularized;
  RegularizationReport& report = result.report;
  std::vector<Sample>& out = result.trajectory.samples;
  std::vector<bool> covered(traj.size(), false);

  for (const SingularInterval& iv : intervals) {
    std::vector<bool> ok(iv.last - iv.first + 1, true);
    std::vector<double> law(ok.size(), 0.0);
    for (std::size_t i = iv.first; i <= iv.last; ++i) {
      covered[i] = true;
      const Sample& s = traj.samples[i];
      if (!in_Rk(s.x, options.rk_band)) ++report.rk_band_samples;
      try {
        const SingularControl u = singular_u1(sys, s.x, *s.lambda, iv.u2_bang_value, bounds);
        law[i - iv.first] = u.value;
        if (u.out_of_bounds) {
          ok[i - iv.first] = false;
          report.rejected.push_back({i, s.t, "closed-form u1 = " + format_double(u.value) + " outside bounds"});
        }
      } catch (const RkViolation& e) {
        ok[i - iv.first] = false;
        report.rejected.push_back({i, s.t, e.what()});
      }
    }
    const bool split = std::find(ok.begin(), ok.end(), false) != ok.end();

    // One report entry per maximal run of samples where the law applies.
    for (std::size_t a = 0; a < ok.size();) {
      if (!ok[a]) {
        ++a;
        continue;
      }
      std::size_t b = a;
      while (b + 1 < ok.size() && ok[b + 1]) ++b;
      IntervalReport piece;
      piece.interval = iv;
      piece.interval.first = iv.first + a;
      piece.interval.last = iv.first + b;
      piece.interval.t_start = traj.samples[piece.interval.first].t;
      piece.interval.t_end = traj.samples[piece.interval.last].t;
      piece.interval.split = split;
      for (std::size_t k = a; k <= b; ++k) {
        const std::size_t i = iv.first + k;
        const double before = traj.samples[i].u[kChannel];
        piece.max_deviation = std::max(piece.max_deviation, std::abs(before - law[k]));
        if (before != law[k]) ++report.modified_inside;
        out[i].u[kChannel] = law[k];
        ++piece.replaced;
      }
      report.intervals.push_back(piece);
      a = b + 1;
    }
  }

  DetectionTolerances tol = options.tolerances;
  tol.channel = kChannel;
  const DetectionBands band = detection_bands(sys, traj, tol);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (covered[i]) continue;
    const Sample& s = traj.samples[i];
    const double phi = input_columns(sys, s.x).col(kChannel).dot(*s.lambda);
    if (std::abs(phi) <= band.phi) {
      report.unresolved.push_back({i, s.t, "phi inside the singular band outside every interval"});
      continue;
    }
    const double bang = phi > 0.0 ? bounds.upper[kChannel] : bounds.lower[kChannel];
    if (s.u[kChannel] != bang) {
      ++report.modified_outside;
      report.modified_outside_indices.push_back(i);
      out[i].u[kChannel] = bang;
    }
  }

  // Endpoint fidelity, always from a fresh resimulation.
  IntegratorConfig cfg;
  cfg.horizon = traj.samples.back().t;
  cfg.step = traj.size() > 1 ? cfg.horizon / static_cast<double>(traj.size() - 1) : 1.0;
  cfg.interpolation = options.interpolation;
  const Trajectory resim = resimulate(sys, traj.samples.front().x,
                                      ControlSignal::from_trajectory(result.trajectory, options.interpolation), cfg);
  const Eigen::VectorXd& target = traj.samples.back().x;
  report.endpoint_error = (resim.samples.back().x - target).norm();
  report.endpoint_error_relative = report.endpoint_error / std::max(target.norm(), 1e-300);

  AuditTolerances audit_tol;
  audit_tol.detection = options.tolerances;
  const PmpAudit audit = pmp_audit(sys, result.trajectory, bounds, audit_tol);
  report.audit_violations = audit.violations();
  report.audit_degenerate =
      static_cast<std::size_t>(std::count(audit.lambda_degenerate.begin(), audit.lambda_degenerate.end(), true));

  result.trajectory.meta.flags.push_back("regularized");
  if (report.partial()) result.trajectory.meta.flags.push_back("partial_regularization");
  return result;
}

std::vector<double> costate_ratio_trace(const Trajectory& traj) {
  require_costates(traj);
  std::vector<double> out;
  out.reserve(traj.size());
  for (const Sample& s : traj.samples) {
    const Eigen::VectorXd& l = *s.lambda;
    if (l.size() != 4) throw InvalidConfig("costate ratio is defined for the two-DOF arm");
    if (!(std::abs(l[3]) > kCostateDegeneracy * l.norm())) {
      throw CostateDegenerate("lambda4 vanishes at t = " + format_double(s.t));
    }
    out.push_back(l[1] / l[3]);
  }
  return out;
}

std::string to_string(AuditClass c) {
  switch (c) {
    case AuditClass::kUpperBang: return "upper-bang";
    case AuditClass::kLowerBang: return "lower-bang";
    case AuditClass::kSingular: return "singular";
    case AuditClass::kViolation: return "violation";
  }
  return "unknown";
}

std::size_t PmpAudit::count(int channel, AuditClass c) const {
  const auto& v = classes.at(static_cast<std::size_t>(channel));
  return static_cast<std::size_t>(std::count(v.begin(), v.end(), c));
}

std::size_t PmpAudit::violations() const {
  std::size_t total = 0;
  for (std::size_t ch = 0; ch < classes.size(); ++ch) total += count(static_cast<int>(ch), AuditClass::kViolation);
  return total;
}

PmpAudit pmp_audit(const MechanicalSystem& sys, const Trajectory& traj, const ControlBounds& bounds,
                   const AuditTolerances& tol) {
  require_costates(traj);
  const int n = sys.dof();
  PmpAudit audit;
  audit.classes.assign(static_cast<std::size_t>(n), std::vector<AuditClass>(traj.size(), AuditClass::kViolation));
  audit.lambda_degenerate.assign(traj.size(), false);

  std::vector<double> band(static_cast<std::size_t>(n));
  for (int ch = 0; ch < n; ++ch) {
    DetectionTolerances d = tol.detection;
    d.channel = ch;
    band[static_cast<std::size_t>(ch)] = detection_bands(sys, traj, d).phi;
  }

  for (std::size_t i = 0; i < traj.size(); ++i) {
    const Sample& s = traj.samples[i];
    const Eigen::VectorXd& lambda = *s.lambda;
    if (!(lambda.norm() > 0.0)) {
      audit.lambda_degenerate[i] = true;
      continue;
    }
    const Eigen::VectorXd phi = input_columns(sys, s.x).transpose() * lambda;
    for (int ch = 0; ch < n; ++ch) {
      AuditClass& cls = audit.classes[static_cast<std::size_t>(ch)][i];
      const double lo = bounds.lower[ch];
      const double hi = bounds.upper[ch];
      const double u_tol = tol.u_rel * (hi - lo);
      const double u = s.u[ch];
      const bool at_upper = std::abs(u - hi) <= u_tol;
      const bool at_lower = std::abs(u - lo) <= u_tol;
      if (u > hi + u_tol || u < lo - u_tol) {
        cls = AuditClass::kViolation;
      } else if (std::abs(phi[ch]) > band[static_cast<std::size_t>(ch)]) {
        if (phi[ch] > 0.0) {
          cls = at_upper ? AuditClass::kUpperBang : AuditClass::kViolation;
        } else {
          cls = at_lower ? AuditClass::kLowerBang : AuditClass::kViolation;
        }
      } else if (at_upper) {
        cls = AuditClass::kUpperBang;
      } else if (at_lower) {
        cls = AuditClass::kLowerBang;
      } else if (n == 2 && ch == 0) {
        try {
          const double law = singular_u1(sys, s.x, lambda, s.u[1]);
          cls = std::abs(u - law) <= u_tol ? AuditClass::kSingular : AuditClass::kViolation;
        } catch (const Error&) {
          cls = AuditClass::kSingular;  // law undefined here; nothing to compare against
        }
      } else {
        cls = AuditClass::kSingular;
      }
    }
  }
  return audit;
}

nlohmann::json to_json(const SingularInterval& iv) {
  return {{"channel", iv.channel + 1},
          {"t_start", iv.t_start},
          {"t_end", iv.t_end},
          {"first_sample", iv.first},
          {"last_sample", iv.last},
          {"max_abs_phi", iv.max_abs_phi},
          {"max_abs_phi_dot", iv.max_abs_phi_dot},
          {"u2_bang_value", iv.u2_bang_value},
          {"split", iv.split}};
}

nlohmann::json to_json(const RegularizationReport& report) {
  nlohmann::json intervals = nlohmann::json::array();
  for (const IntervalReport& r : report.intervals) {
    nlohmann::json j = to_json(r.interval);
    j["max_control_deviation"] = r.max_deviation;
    j["replaced_samples"] = r.replaced;
    intervals.push_back(std::move(j));
  }
  const auto issues = [](const std::vector<SampleIssue>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (const SampleIssue& s : v) a.push_back({{"sample", s.index}, {"t", s.t}, {"reason", s.reason}});
    return a;
  };
  return {{"intervals", intervals},
          {"rejected_samples", issues(report.rejected)},
          {"unresolved_samples", issues(report.unresolved)},
          {"modified_inside", report.modified_inside},
          {"modified_outside", report.modified_outside},
          {"modified_outside_indices", report.modified_outside_indices},
          {"rk_band_samples", report.rk_band_samples},
          {"endpoint_error", report.endpoint_error},
          {"endpoint_error_relative", report.endpoint_error_relative},
          {"pmp_consistency", {{"violations", report.audit_violations}, {"lambda_degenerate", report.audit_degenerate}}},
          {"partial", report.partial()}};
}

}  // namespace singarc
