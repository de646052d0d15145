// SPDX-License-Identifier: MIT

#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "hpdg/analysis.hpp"
#include "hpdg/rational.hpp"

namespace hpdg {

// Bad user input (flags, config file, malformed CSV). The tool maps this to
// exit code 2; every other exception means a failed computation and maps to 3.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Every experiment knob. alpha = 0 disables the potential entirely, so the
// operator degenerates to the Dirichlet Laplacian.
struct StudyConfig {
  int dim = 2;
  Rational alpha{0};
  Rational slope{0};
  int p0 = 1;
  Rational sigma{1, 2};
  int theta = 1;
  double penalty = 10.0;
  int quad_extra = 2;
  int shells = 10;
  int level_lo = 1;
  int level_hi = 1;
  bool uniform = false;
  int k = 1;
  double tol = 1e-10;
  int ref_levels = -1;  // -1 resolves to level_hi + 2
  std::uint64_t seed = 1;
  std::string out;
};

// Applies one `key = value` pair; flag handling funnels through the same
// routine so file and command line cannot drift apart.
void apply_key_value(StudyConfig& config, const std::string& key,
                     const std::string& value);

// Flat key = value file, one pair per line, # starts a comment.
void apply_config_file(StudyConfig& config, const std::string& path);

// Throws ConfigError on any out-of-range knob; resolves ref_levels.
void validate(StudyConfig& config);

extern const char kCsvHeader[];

void write_records_csv(std::ostream& out, const std::vector<StudyRecord>& records);
std::vector<StudyRecord> read_records_csv(const std::string& path);

// Fit table shared by the study summary and the fit subcommand; byte-for-byte
// identical output is part of the contract.
struct FitTable {
  std::string text;
  int fitted = 0;  // fields with enough pre-plateau points
};
FitTable render_fit_table(const std::vector<StudyRecord>& records, int dim,
                          double plateau_threshold);

// Reference solve, then one row per level in [level_lo, level_hi]. The CSV at
// config.out grows row by row so a late failure keeps the finished part.
std::vector<StudyRecord> run_study(const StudyConfig& config, std::ostream& log);

// Reads a study CSV and prints the coefficient table; with footer = true the
// table is also appended to the file as `# fit: ...` comment lines.
void fit_command(const std::string& csv_path, int dim, double plateau_threshold,
                 bool footer, std::ostream& log);

// Uniform lattice of sample points including the boundary, grid_per_axis per
// axis; each row is x y [z] value.
std::vector<std::array<double, 4>> sample_field(const DiscreteSolution& sol,
                                                int grid_per_axis);
void write_field_csv(std::ostream& out, int dim,
                     const std::vector<std::array<double, 4>>& rows);

// Single solve at level_lo (= level_hi); prints the eigenvalues and, when
// config.out is set, writes the sampled ground-state field there.
void solve_once(const StudyConfig& config, int grid_per_axis, std::ostream& log);

}  // namespace hpdg
