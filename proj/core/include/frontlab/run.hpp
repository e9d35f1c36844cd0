#pragma once

#include <optional>
#include <string>
#include <vector>

#include "frontlab/coeff.hpp"
#include "frontlab/decay.hpp"
#include "frontlab/eigen.hpp"
#include "frontlab/frontsim.hpp"
#include "frontlab/speed.hpp"

namespace frontlab {

enum class Task { eigen, mu_curve, speed, front, profile, validate };

Task task_from_string(const std::string& s);
const char* to_string(Task t);

struct FrontTaskConfig {
  double w = 0.0;         // prescribed speed; 0 means w_factor * w_star
  double w_factor = 1.1;
  double t_start = -20.0;
  double t_end = 25.0;
  double h = 0.02;
  MarchOptions march;
};

/// One reproducible experiment: a field, a task and the numeric parameters.
/// Serialization is lossless; the manifest echoes every resolved value.
struct RunConfig {
  Task task = Task::validate;
  std::string field_json;  // the field object, as given
  std::string output_dir = "out";
  int threads = 1;

  Lambda1Options lambda1;
  DecayOptions decay;
  SpeedOptions speed;
  KpOptions kp;
  Hyp1Options hyp1;
  double hyp1_L = 200.0;
  std::vector<double> mu_gammas;  // empty = default refinement grid
  std::vector<double> kp_values;  // optional k_p trace export for task=eigen
  FrontTaskConfig front;
  ProfileOptions profile;

  static RunConfig from_json_text(const std::string& text);
  std::string manifest_json() const;
  CoefficientField field() const;
  /// Options with the cross-references resolved (decay/kp inside speed, threads).
  SpeedOptions resolved_speed_options() const;
};

/// Executes the task and writes the artifacts plus manifest.json into
/// output_dir. Returns 0 on success, 1 on computation error (error.json is
/// written), 2 on config error. Identical configs produce identical bytes.
int run(const RunConfig& config);

/// argv interface used by the CLI binary.
int run_cli(int argc, char** argv);

}  // namespace frontlab
