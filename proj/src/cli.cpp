#include "singarc/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <ostream>
#include <random>
#include <thread>

#include "CLI11.hpp"

#include "singarc/pmp.hpp"
#include "singarc/trajectory_io.hpp"

namespace singarc {
namespace {

namespace fs = std::filesystem;

fs::path with_suffix(const fs::path& p, const std::string& suffix) {
  fs::path stem = p;
  stem.replace_extension();
  return stem.string() + suffix;
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const Error& e) {
    err << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::invalid_argument& e) {
    err << "invalid argument: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

struct SampleResult {
  double frame_raw = 0.0;
  double frame_normalized = 0.0;
  double alpha_ij1 = 0.0;
  double alpha_residual = 0.0;
  double g1_g2 = 0.0;
  double gfg_top = 0.0;
  double sk = 0.0;
  bool lemma1 = false;
  bool b_lower = false;
  bool b_upper = false;
  double b_sv = 0.0;
};

SampleResult certify_sample(const MechanicalSystem& sys, const Eigen::VectorXd& x, const Eigen::VectorXd& lambda,
                            const ControlBounds& bounds) {
  const int n = sys.dof();
  SampleResult r;
  r.frame_raw = frame_rank(sys, x);
  r.frame_normalized = normalized_min_singular_value(frame_matrix(sys, x));

  const AlphaTensor alpha = alpha_coefficients(sys, x, std::numeric_limits<double>::infinity());
  r.alpha_residual = alpha.max_residual;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) r.alpha_ij1 = std::max(r.alpha_ij1, std::abs(alpha(i, j, 0)));

  r.g1_g2 = lie_bracket(sys, VectorField::input(0), VectorField::input(1), x).norm();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const VectorField gfg =
          VectorField::bracket(VectorField::input(i), VectorField::bracket(VectorField::drift(), VectorField::input(j)));
      r.gfg_top = std::max(r.gfg_top, evaluate(sys, gfg, x).head(n).cwiseAbs().maxCoeff());
    }
  }
  r.sk = sk_rank(sys, x, 1);
  r.lemma1 = lemma1_certificate(sys, x, lambda);
  const BSetCertificate lo = b_set_certificate(sys, x, bounds.lower[0]);
  const BSetCertificate hi = b_set_certificate(sys, x, bounds.upper[0]);
  r.b_lower = lo.independent;
  r.b_upper = hi.independent;
  r.b_sv = std::max(lo.smallest_singular_value, hi.smallest_singular_value);
  return r;
}

std::string join(const std::vector<std::string>& cells) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ',';
    line += cells[i];
  }
  return line;
}

}  // namespace

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kSchemaError:
    case ErrorCode::kMonotonicityError:
    case ErrorCode::kNaNError: return kExitSchema;
    case ErrorCode::kRkViolation: return kExitRkViolation;
    case ErrorCode::kCostateDegenerate: return kExitCostateDegenerate;
    case ErrorCode::kOutOfBounds: return kExitOutOfBounds;
    case ErrorCode::kMissingCostates: return kExitMissingCostates;
    case ErrorCode::kInvalidConfig: return kExitUsage;
    default: return kExitFailure;
  }
}

nlohmann::json CertifyReport::to_json() const {
  return {{"samples", samples},
          {"seed", seed},
          {"workers", workers},
          {"min_frame_rank", min_frame_rank},
          {"min_frame_rank_normalized", min_frame_rank_normalized},
          {"max_abs_alpha_ij1", max_abs_alpha_ij1},
          {"max_alpha_residual", max_alpha_residual},
          {"max_g1_g2_bracket", max_g1_g2_bracket},
          {"max_gfg_top_block", max_gfg_top_block},
          {"lemma1_passes", lemma1_passes},
          {"b_set_pass_rate", {{"c_lower", b_set_pass_rate_lower}, {"c_upper", b_set_pass_rate_upper}}},
          {"b_set_max_singular_value", b_set_max_singular_value},
          {"min_sk_rank", min_sk_rank}};
}

CertifyReport certify(const MechanicalSystem& sys, const RunConfig& cfg) {
  const CertifyBox& box = cfg.certify;
  const auto count = static_cast<std::size_t>(box.samples);
  const int dim = sys.state_dim();
  const int n = sys.dof();

  // Draw everything up front so the result is independent of the split.
  std::mt19937_64 rng(box.seed);
  std::uniform_real_distribution<double> angle(-box.angle_half_width, box.angle_half_width);
  std::uniform_real_distribution<double> rate(-box.rate_half_width, box.rate_half_width);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Eigen::VectorXd> xs(count, Eigen::VectorXd(dim));
  std::vector<Eigen::VectorXd> lambdas(count, Eigen::VectorXd(dim));
  for (std::size_t s = 0; s < count; ++s) {
    for (int i = 0; i < n; ++i) xs[s][i] = angle(rng);
    for (int i = n; i < dim; ++i) xs[s][i] = rate(rng);
    for (int i = 0; i < dim; ++i) lambdas[s][i] = normal(rng);
  }

  std::vector<SampleResult> results(count);
  const auto workers = static_cast<std::size_t>(std::max(1, box.workers));
  const std::size_t chunk = (count + workers - 1) / workers;
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> failures(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t s = w * chunk; s < std::min(count, (w + 1) * chunk); ++s) {
          results[s] = certify_sample(sys, xs[s], lambdas[s], cfg.bounds);
        }
      } catch (...) {
        failures[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);

  CertifyReport rep;
  rep.samples = box.samples;
  rep.seed = box.seed;
  rep.workers = box.workers;
  rep.min_frame_rank = std::numeric_limits<double>::infinity();
  rep.min_frame_rank_normalized = std::numeric_limits<double>::infinity();
  rep.min_sk_rank = std::numeric_limits<double>::infinity();
  int b_lower = 0;
  int b_upper = 0;
  for (const SampleResult& r : results) {
    rep.min_frame_rank = std::min(rep.min_frame_rank, r.frame_raw);
    rep.min_frame_rank_normalized = std::min(rep.min_frame_rank_normalized, r.frame_normalized);
    rep.max_abs_alpha_ij1 = std::max(rep.max_abs_alpha_ij1, r.alpha_ij1);
    rep.max_alpha_residual = std::max(rep.max_alpha_residual, r.alpha_residual);
    rep.max_g1_g2_bracket = std::max(rep.max_g1_g2_bracket, r.g1_g2);
    rep.max_gfg_top_block = std::max(rep.max_gfg_top_block, r.gfg_top);
    rep.min_sk_rank = std::min(rep.min_sk_rank, r.sk);
    rep.b_set_max_singular_value = std::max(rep.b_set_max_singular_value, r.b_sv);
    rep.lemma1_passes += r.lemma1 ? 1 : 0;
    b_lower += r.b_lower ? 1 : 0;
    b_upper += r.b_upper ? 1 : 0;
  }
  rep.b_set_pass_rate_lower = static_cast<double>(b_lower) / static_cast<double>(count);
  rep.b_set_pass_rate_upper = static_cast<double>(b_upper) / static_cast<double>(count);
  return rep;
}

int cmd_construct(const RunConfig& cfg, const fs::path& out_csv, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    cfg.validate();
    const Arm2Dof arm(cfg.model);
    const Eigen::VectorXd x0 = cfg.initial.x0;
    const Eigen::VectorXd lambda0 = prepared_costate(arm, cfg);
    Trajectory traj = integrate_extremal(arm, x0, lambda0, cfg.integrator, cfg.initial.u2, cfg.bounds);
    traj.meta.config["run"] = cfg.to_json();
    ensure_parent(out_csv);
    write_trajectory(out_csv, traj);

    double max_phi = 0.0;
    double max_phi_dot = 0.0;
    double max_lambda = 0.0;
    for (const Sample& s : traj.samples) {
      const SwitchingRecord rec = switching(arm, s.x, *s.lambda);
      max_phi = std::max(max_phi, std::abs(rec.phi[0]));
      max_phi_dot = std::max(max_phi_dot, std::abs(rec.phi_dot[0]));
      max_lambda = std::max(max_lambda, s.lambda->norm());
    }
    const std::vector<double> h = hamiltonian_trace(arm, traj);
    double h_var = 0.0;
    for (const double v : h) h_var = std::max(h_var, std::abs(v - h.front()));
    const Sample& last = traj.samples.back();
    nlohmann::json summary{{"trajectory", out_csv.string()},
                           {"samples", traj.size()},
                           {"t_end", last.t},
                           {"lambda0", std::vector<double>(lambda0.data(), lambda0.data() + lambda0.size())},
                           {"max_abs_phi1", max_phi},
                           {"max_abs_phi1_dot", max_phi_dot},
                           {"max_lambda_norm", max_lambda},
                           {"hamiltonian_variation", h_var},
                           {"x_end", std::vector<double>(last.x.data(), last.x.data() + last.x.size())},
                           {"rk_exit_samples", traj.meta.config["rk_exit_samples"]}};
    if (traj.meta.abort_reason) {
      summary["aborted"] = std::string(to_string(*traj.meta.abort_reason));
      summary["abort_message"] = traj.meta.abort_message;
    }
    out << summary.dump(2) << '\n';
    if (traj.meta.abort_reason) {
      err << "run aborted: " << traj.meta.abort_message << '\n';
      return exit_code_for(*traj.meta.abort_reason);
    }
    return static_cast<int>(kExitOk);
  });
}

int cmd_diagnose(const fs::path& traj_csv, const RunConfig& cfg, const fs::path& out_csv, std::ostream& out,
                 std::ostream& err) {
  return guarded(err, [&] {
    cfg.validate();
    const Arm2Dof arm(cfg.model);
    const Trajectory traj = ingest(traj_csv);
    ensure_parent(out_csv);
    std::ofstream csv(out_csv);
    if (!csv) throw std::runtime_error("cannot open " + out_csv.string());

    if (!traj.has_costates()) {
      err << "notice: " << to_string(ErrorCode::kMissingCostates)
          << ": no costate columns; switching diagnostics skipped, resimulation only\n";
      IntegratorConfig ic = cfg.integrator;
      ic.horizon = traj.samples.back().t;
      ic.step = traj.size() > 1 ? ic.horizon / static_cast<double>(traj.size() - 1) : 1.0;
      const Trajectory resim =
          resimulate(arm, traj.samples.front().x, ControlSignal::from_trajectory(traj, ic.interpolation), ic);
      csv << "t,in_rk,state_deviation\n";
      double worst = 0.0;
      for (std::size_t i = 0; i < traj.size(); ++i) {
        const double dev = (resim.samples[i].x - traj.samples[i].x).norm();
        worst = std::max(worst, dev);
        csv << format_double(traj.samples[i].t) << ',' << (in_Rk(traj.samples[i].x, ic.rk_band) ? 1 : 0) << ','
            << format_double(dev) << '\n';
      }
      out << nlohmann::json{{"diagnostics", out_csv.string()},
                            {"samples", traj.size()},
                            {"costates", false},
                            {"max_state_deviation", worst}}
                 .dump(2)
          << '\n';
      return static_cast<int>(kExitOk);
    }

    AuditTolerances at;
    at.detection = cfg.detection;
    at.u_rel = cfg.audit_u_rel;
    const PmpAudit audit = pmp_audit(arm, traj, cfg.bounds, at);
    const std::vector<double> h = hamiltonian_trace(arm, traj);
    csv << "t,phi1,phi2,phi1_dot,phi2_dot,H,in_rk,lambda2_over_lambda4,class_u1,class_u2\n";
    double max_phi = 0.0;
    std::size_t rk_out = 0;
    for (std::size_t i = 0; i < traj.size(); ++i) {
      const Sample& s = traj.samples[i];
      const SwitchingRecord rec = switching(arm, s.x, *s.lambda);
      const bool rk = in_Rk(s.x, cfg.integrator.rk_band);
      rk_out += rk ? 0 : 1;
      max_phi = std::max(max_phi, std::abs(rec.phi[0]));
      const Eigen::VectorXd& l = *s.lambda;
      const double ratio = std::abs(l[3]) > kCostateDegeneracy * l.norm() ? l[1] / l[3]
                                                                         : std::numeric_limits<double>::quiet_NaN();
      csv << join({format_double(s.t), format_double(rec.phi[0]), format_double(rec.phi[1]),
                   format_double(rec.phi_dot[0]), format_double(rec.phi_dot[1]), format_double(h[i]),
                   rk ? "1" : "0", format_double(ratio), to_string(audit.classes[0][i]),
                   to_string(audit.classes[1][i])})
          << '\n';
    }
    double h_var = 0.0;
    for (const double v : h) h_var = std::max(h_var, std::abs(v - h.front()));
    nlohmann::json counts;
    for (int ch = 0; ch < 2; ++ch) {
      for (const AuditClass c :
           {AuditClass::kUpperBang, AuditClass::kLowerBang, AuditClass::kSingular, AuditClass::kViolation}) {
        counts["u" + std::to_string(ch + 1)][to_string(c)] = audit.count(ch, c);
      }
    }
    out << nlohmann::json{{"diagnostics", out_csv.string()},
                          {"samples", traj.size()},
                          {"costates", true},
                          {"max_abs_phi1", max_phi},
                          {"hamiltonian_variation", h_var},
                          {"outside_rk_band", rk_out},
                          {"classification", counts}}
               .dump(2)
        << '\n';
    return static_cast<int>(kExitOk);
  });
}

int cmd_regularize(const fs::path& traj_csv, const RunConfig& cfg, const fs::path& out_csv, std::ostream& out,
                   std::ostream& err) {
  return guarded(err, [&] {
    cfg.validate();
    const Arm2Dof arm(cfg.model);
    const Trajectory traj = ingest(traj_csv);
    if (!traj.has_costates()) throw MissingCostates("regularization needs costate columns");

    const std::vector<SingularInterval> intervals = detect_singular_arcs(arm, traj, cfg.bounds, cfg.detection);
    RegularizeOptions opts;
    opts.tolerances = cfg.detection;
    opts.interpolation = cfg.integrator.interpolation;
    opts.rk_band = cfg.integrator.rk_band;
    RegularizationResult result = regularize_u1(arm, traj, intervals, cfg.bounds, opts);
    result.trajectory.meta.config["regularize"] = cfg.to_json()["tolerances"];

    ensure_parent(out_csv);
    write_trajectory(out_csv, result.trajectory);
    const fs::path report_path = with_suffix(out_csv, ".report.json");
    nlohmann::json report = to_json(result.report);
    report["input"] = traj_csv.string();
    std::ofstream(report_path) << report.dump(2) << '\n';

    AuditTolerances at;
    at.detection = cfg.detection;
    at.u_rel = cfg.audit_u_rel;
    const PmpAudit audit = pmp_audit(arm, result.trajectory, cfg.bounds, at);
    std::ofstream audit_csv(with_suffix(out_csv, ".audit.csv"));
    audit_csv << "t,class_u1,class_u2,lambda_degenerate\n";
    for (std::size_t i = 0; i < result.trajectory.size(); ++i) {
      audit_csv << format_double(result.trajectory.samples[i].t) << ',' << to_string(audit.classes[0][i]) << ','
                << to_string(audit.classes[1][i]) << ',' << (audit.lambda_degenerate[i] ? 1 : 0) << '\n';
    }

    out << nlohmann::json{{"regularized", out_csv.string()},
                          {"report", report_path.string()},
                          {"intervals", result.report.intervals.size()},
                          {"modified_samples", result.report.modified_inside + result.report.modified_outside},
                          {"endpoint_error", result.report.endpoint_error},
                          {"endpoint_error_relative", result.report.endpoint_error_relative},
                          {"violations", result.report.audit_violations},
                          {"partial", result.report.partial()}}
               .dump(2)
        << '\n';
    if (result.report.partial()) return static_cast<int>(kExitPartialRegularization);
    if (result.report.audit_violations > 0) return static_cast<int>(kExitViolationRemaining);
    return static_cast<int>(kExitOk);
  });
}

int cmd_certify(const RunConfig& cfg, const fs::path& out_json, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    cfg.validate();
    const Arm2Dof arm(cfg.model);
    const CertifyReport rep = certify(arm, cfg);
    const std::string text = rep.to_json().dump(2);
    ensure_parent(out_json);
    std::ofstream(out_json) << text << '\n';
    out << text << '\n';
    return static_cast<int>(kExitOk);
  });
}

int cmd_bracket(const RunConfig& cfg, const std::string& word, const std::vector<double>& state, std::ostream& out,
                std::ostream& err) {
  return guarded(err, [&] {
    const Arm2Dof arm(cfg.model);
    if (state.size() != 4) throw std::invalid_argument("--state needs four comma-separated values");
    const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(state.data(), 4);
    const Eigen::VectorXd v = iterated_bracket(arm, word, x);
    std::vector<std::string> cells;
    for (Eigen::Index i = 0; i < v.size(); ++i) cells.push_back(format_double(v[i]));
    out << word << " = [" << join(cells) << "]\n";
    return static_cast<int>(kExitOk);
  });
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Singular-arc construction, diagnosis and regularization for the two-link arm", "singular-arc"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::optional<int> samples;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<double> step;
  std::optional<double> tol_phi;
  app.add_option("--config", config_path, "YAML run configuration")->check(CLI::ExistingFile);
  app.add_option("--out", out_path, "primary output file");
  app.add_option("--samples", samples, "certify: number of sampled states");
  app.add_option("--seed", seed, "certify: RNG seed");
  app.add_option("--workers", workers, "certify: worker threads");
  app.add_option("--step", step, "integration step in seconds");
  app.add_option("--tol-phi", tol_phi, "relative singular band for phi");

  auto* construct = app.add_subcommand("construct", "integrate the u1-singular extremal")->fallthrough();
  std::string traj_path;
  auto* diagnose = app.add_subcommand("diagnose", "switching-function diagnostics of a trajectory")->fallthrough();
  diagnose->add_option("trajectory", traj_path, "trajectory CSV")->required();
  auto* regularize = app.add_subcommand("regularize", "detect singular arcs and apply the closed-form law")->fallthrough();
  regularize->add_option("trajectory", traj_path, "trajectory CSV")->required();
  auto* certify_cmd = app.add_subcommand("certify", "sampled structural certificates")->fallthrough();
  std::string word;
  std::vector<double> state;
  auto* bracket = app.add_subcommand("bracket", "evaluate a right-nested bracket word")->fallthrough();
  bracket->add_option("--word", word, "e.g. g1fg2")->required();
  bracket->add_option("--state", state, "θ1,θ2,θ̇1,θ̇2")->required()->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? static_cast<int>(kExitOk) : static_cast<int>(kExitUsage);
  }

  RunConfig cfg;
  const int loaded = guarded(err, [&] {
    if (!config_path.empty()) cfg = load_config(config_path);
    if (samples) cfg.certify.samples = *samples;
    if (seed) cfg.certify.seed = *seed;
    if (workers) cfg.certify.workers = *workers;
    if (step) cfg.integrator.step = *step;
    if (tol_phi) cfg.detection.phi_rel = *tol_phi;
    cfg.validate();
    return static_cast<int>(kExitOk);
  });
  if (loaded != kExitOk) return loaded;

  const auto output = [&](const fs::path& fallback) { return out_path.empty() ? cfg.out / fallback : fs::path(out_path); };
  const fs::path traj = traj_path;
  if (*construct) return cmd_construct(cfg, output("extremal.csv"), out, err);
  if (*diagnose) {
    return cmd_diagnose(traj, cfg, output(with_suffix(traj.filename(), ".diagnose.csv")), out, err);
  }
  if (*regularize) {
    return cmd_regularize(traj, cfg, output(with_suffix(traj.filename(), ".regularized.csv")), out, err);
  }
  if (*certify_cmd) return cmd_certify(cfg, output("certificate.json"), out, err);
  if (*bracket) return cmd_bracket(cfg, word, state, out, err);
  return static_cast<int>(kExitUsage);
}

}  // namespace singarc
