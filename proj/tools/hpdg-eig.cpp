// SPDX-License-Identifier: MIT

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "hpdg/study.hpp"

namespace {

// Raw flag values; parsing stays in apply_key_value so the command line and
// the config file accept identical spellings, with flags taking precedence.
struct StudyFlags {
  std::string dim, alpha, slope, p0, theta, penalty, quad_extra, shells,
      levels, k, tol, ref_levels, seed, out, config;
  bool uniform = false;
};

void add_study_flags(CLI::App* cmd, StudyFlags& f) {
  cmd->add_option("--dim", f.dim, "Spatial dimension, 2 or 3");
  cmd->add_option("--alpha", f.alpha,
                  "Potential exponent (rational); 0 disables the potential");
  cmd->add_option("--slope", f.slope,
                  "Degree growth per refinement layer (rational)");
  cmd->add_option("--p0", f.p0, "Base polynomial degree");
  cmd->add_option("--theta", f.theta, "Scheme: 1 SIP, -1 NIP, 0 IIP");
  cmd->add_option("--penalty", f.penalty, "Interior penalty strength");
  cmd->add_option("--quad-extra", f.quad_extra,
                  "Extra quadrature points per axis");
  cmd->add_option("--shells", f.shells, "Singular-rule shell count");
  cmd->add_option("--levels", f.levels, "Level or inclusive range A..B");
  cmd->add_option("--k", f.k, "Number of eigenpairs");
  cmd->add_option("--tol", f.tol, "Eigensolver residual tolerance");
  cmd->add_option("--ref-levels", f.ref_levels,
                  "Reference mesh level (default: max level + 2)");
  cmd->add_option("--seed", f.seed, "Eigensolver start-vector seed");
  cmd->add_option("--out", f.out, "Output CSV path");
  cmd->add_option("--config", f.config, "Flat key = value config file");
  cmd->add_flag("--uniform", f.uniform,
                "Uniform mesh instead of geometric grading");
}

hpdg::StudyConfig build_config(const CLI::App* cmd, const StudyFlags& f) {
  hpdg::StudyConfig cfg;
  if (cmd->count("--config")) hpdg::apply_config_file(cfg, f.config);
  const struct {
    const char* flag;
    const char* key;
    const std::string* value;
  } knobs[] = {{"--dim", "dim", &f.dim},
               {"--alpha", "alpha", &f.alpha},
               {"--slope", "slope", &f.slope},
               {"--p0", "p0", &f.p0},
               {"--theta", "theta", &f.theta},
               {"--penalty", "penalty", &f.penalty},
               {"--quad-extra", "quad_extra", &f.quad_extra},
               {"--shells", "shells", &f.shells},
               {"--levels", "levels", &f.levels},
               {"--k", "k", &f.k},
               {"--tol", "tol", &f.tol},
               {"--ref-levels", "ref_levels", &f.ref_levels},
               {"--seed", "seed", &f.seed},
               {"--out", "out", &f.out}};
  for (const auto& knob : knobs) {
    if (cmd->count(knob.flag))
      hpdg::apply_key_value(cfg, knob.key, *knob.value);
  }
  if (cmd->count("--uniform")) cfg.uniform = true;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hp-DG eigenvalue solver and convergence studies"};
  app.require_subcommand(1);

  StudyFlags study_flags;
  CLI::App* study =
      app.add_subcommand("study", "Convergence study over a range of levels");
  add_study_flags(study, study_flags);

  std::string fit_csv;
  int fit_dim = 2;
  double fit_plateau = 1e-11;
  bool fit_footer = false;
  CLI::App* fit = app.add_subcommand("fit", "Fit rates from a study CSV");
  fit->add_option("csv", fit_csv, "Study CSV path")->required();
  fit->add_option("--dim", fit_dim, "Spatial dimension used for N^(1/(dim+1))");
  fit->add_option("--plateau-threshold", fit_plateau,
                  "Errors at or below this are excluded");
  fit->add_flag("--footer", fit_footer,
                "Append the table to the CSV as '# fit:' comment lines");

  StudyFlags solve_flags;
  int solve_grid = 0;
  CLI::App* solve =
      app.add_subcommand("solve", "Single solve with optional field dump");
  add_study_flags(solve, solve_flags);
  solve->add_option("--grid", solve_grid,
                    "Field sample points per axis (default 65 in 2D, 21 in 3D)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (study->parsed()) {
      const hpdg::StudyConfig cfg = build_config(study, study_flags);
      hpdg::run_study(cfg, std::cout);
    } else if (fit->parsed()) {
      hpdg::fit_command(fit_csv, fit_dim, fit_plateau, fit_footer, std::cout);
    } else {
      const hpdg::StudyConfig cfg = build_config(solve, solve_flags);
      hpdg::solve_once(cfg, solve_grid, std::cout);
    }
  } catch (const hpdg::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
