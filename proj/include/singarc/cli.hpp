#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "singarc/config.hpp"
#include "singarc/errors.hpp"

namespace singarc {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitUsage = 2,
  kExitSchema = 3,  // SchemaError, MonotonicityError, NaNError
  kExitRkViolation = 4,
  kExitCostateDegenerate = 5,
  kExitPartialRegularization = 6,
  kExitViolationRemaining = 7,
  kExitOutOfBounds = 8,
  kExitMissingCostates = 9,
};

int exit_code_for(ErrorCode code);

/// Summary statistics over a sampled state box. Every field is a reduction
/// in sample order, so the result does not depend on the worker count.
struct CertifyReport {
  int samples = 0;
  std::uint64_t seed = 0;
  int workers = 1;
  double min_frame_rank = 0.0;             // raw smallest singular value
  double min_frame_rank_normalized = 0.0;  // columns scaled to unit norm
  double max_abs_alpha_ij1 = 0.0;
  double max_alpha_residual = 0.0;
  double max_g1_g2_bracket = 0.0;
  double max_gfg_top_block = 0.0;
  int lemma1_passes = 0;
  double b_set_pass_rate_lower = 0.0;  // u1 held at L1
  double b_set_pass_rate_upper = 0.0;  // u1 held at M1
  double b_set_max_singular_value = 0.0;
  double min_sk_rank = 0.0;

  nlohmann::json to_json() const;
};

CertifyReport certify(const MechanicalSystem& sys, const RunConfig& cfg);

// Each command reports on `out`/`err` and returns a process exit status.
int cmd_construct(const RunConfig& cfg, const std::filesystem::path& out_csv, std::ostream& out, std::ostream& err);
int cmd_diagnose(const std::filesystem::path& traj_csv, const RunConfig& cfg, const std::filesystem::path& out_csv,
                 std::ostream& out, std::ostream& err);
int cmd_regularize(const std::filesystem::path& traj_csv, const RunConfig& cfg, const std::filesystem::path& out_csv,
                   std::ostream& out, std::ostream& err);
int cmd_certify(const RunConfig& cfg, const std::filesystem::path& out_json, std::ostream& out, std::ostream& err);
/// Debug helper: prints the bracket named by `word` at `state`.
int cmd_bracket(const RunConfig& cfg, const std::string& word, const std::vector<double>& state, std::ostream& out,
                std::ostream& err);

/// Full command-line front end.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace singarc
