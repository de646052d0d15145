// SPDX-License-Identifier: MIT

#include "hpdg/study.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "hpdg/assembly.hpp"
#include "hpdg/eigensolve.hpp"
#include "hpdg/mesh.hpp"

namespace hpdg {

const char kCsvHeader[] = "N,levels,lambda,err_dg,err_l2,err_linf,err_lambda";

namespace {

int to_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer for '" + key + "': '" + value + "'");
  }
}

double to_real(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: bad number for '" + key + "': '" + value + "'");
  }
}

std::uint64_t to_seed(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const std::uint64_t v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer for '" + key + "': '" + value + "'");
  }
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "yes" || value == "on") return true;
  if (value == "0" || value == "false" || value == "no" || value == "off") return false;
  throw ConfigError("config: bad boolean for '" + key + "': '" + value + "'");
}

Rational to_rational(const std::string& key, const std::string& value) {
  try {
    return parse_rational(value);
  } catch (const std::exception&) {
    throw ConfigError("config: bad rational for '" + key + "': '" + value + "'");
  }
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

void write_record(std::ostream& out, const StudyRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.n,
                r.levels, r.lambda, r.err_dg, r.err_l2, r.err_linf,
                r.err_lambda);
  out << buf;
}

struct LevelSolve {
  DiscreteSolution sol;
  std::vector<EigenPair> pairs;
};

// One assemble-and-solve pass. The reference variant pins the knobs that make
// it trustworthy as a yardstick: symmetric scheme, widened quadrature, and a
// degree slope of at least 1/2 on graded meshes.
LevelSolve solve_level(const StudyConfig& cfg, int levels, bool reference) {
  LevelSolve ls;
  DiscreteSolution& s = ls.sol;
  s.mesh = cfg.uniform ? build_uniform_mesh(cfg.dim, levels)
                       : build_graded_mesh(cfg.dim, levels, cfg.sigma);

  Rational slope = cfg.slope;
  if (reference && !cfg.uniform && slope < Rational(1, 2)) slope = Rational(1, 2);
  assign_degrees(s.mesh, cfg.p0, slope);
  s.dofs = DofMap::build(s.mesh);

  QuadratureConfig quad;
  quad.extra = reference ? std::max(cfg.quad_extra, 10) : cfg.quad_extra;
  quad.shells = cfg.shells;
  const Potential potential{cfg.alpha.to_double(),
                            cfg.alpha.num == 0 ? 0.0 : 1.0, 0.0};
  const double theta = reference ? 1.0 : static_cast<double>(cfg.theta);
  const FaceSet faces = enumerate_faces(s.mesh);
  const OperatorPair op = assemble_operator(s.mesh, faces, s.dofs, potential,
                                            theta, cfg.penalty, quad);

  SolveOptions options;
  options.k = reference ? 1 : cfg.k;
  options.tol = cfg.tol;
  options.seed = cfg.seed;
  ls.pairs = solve_smallest(op, options);
  s.coefficients = ls.pairs[0].coefficients;
  s.lambda = ls.pairs[0].lambda;

  s.meta.dim = cfg.dim;
  s.meta.levels = levels;
  s.meta.uniform = cfg.uniform;
  s.meta.p0 = cfg.p0;
  s.meta.slope = slope;
  s.meta.potential = potential;
  s.meta.theta = theta;
  s.meta.penalty = cfg.penalty;
  s.meta.quadrature = quad;
  return ls;
}

}  // namespace

void apply_key_value(StudyConfig& config, const std::string& key,
                     const std::string& value) {
  if (key == "dim") {
    config.dim = to_int(key, value);
  } else if (key == "alpha") {
    config.alpha = to_rational(key, value);
  } else if (key == "slope") {
    config.slope = to_rational(key, value);
  } else if (key == "p0") {
    config.p0 = to_int(key, value);
  } else if (key == "sigma") {
    config.sigma = to_rational(key, value);
  } else if (key == "theta") {
    config.theta = to_int(key, value);
  } else if (key == "penalty") {
    config.penalty = to_real(key, value);
  } else if (key == "quad_extra") {
    config.quad_extra = to_int(key, value);
  } else if (key == "shells") {
    config.shells = to_int(key, value);
  } else if (key == "levels") {
    const auto dots = value.find("..");
    if (dots == std::string::npos) {
      config.level_lo = config.level_hi = to_int(key, value);
    } else {
      config.level_lo = to_int(key, trim(value.substr(0, dots)));
      config.level_hi = to_int(key, trim(value.substr(dots + 2)));
    }
  } else if (key == "uniform") {
    config.uniform = to_bool(key, value);
  } else if (key == "k") {
    config.k = to_int(key, value);
  } else if (key == "tol") {
    config.tol = to_real(key, value);
  } else if (key == "ref_levels") {
    config.ref_levels = to_int(key, value);
  } else if (key == "seed") {
    config.seed = to_seed(key, value);
  } else if (key == "out") {
    config.out = value;
  } else {
    throw ConfigError("config: unknown key '" + key + "'");
  }
}

void apply_config_file(StudyConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: " + path + ":" + std::to_string(line_no) +
                        ": expected key = value");
    }
    apply_key_value(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void validate(StudyConfig& config) {
  if (config.dim != 2 && config.dim != 3)
    throw ConfigError("config: dim must be 2 or 3");
  if (config.alpha.num < 0)
    throw ConfigError("config: alpha must be nonnegative");
  if (!(config.alpha < Rational(config.dim)))
    throw ConfigError("config: alpha must be smaller than dim");
  if (config.slope.num < 0)
    throw ConfigError("config: slope must be nonnegative");
  if (config.p0 < 1) throw ConfigError("config: p0 must be at least 1");
  if (!(config.sigma == Rational(1, 2)))
    throw ConfigError("config: sigma must be 1/2");
  if (config.theta != -1 && config.theta != 0 && config.theta != 1)
    throw ConfigError("config: theta must be -1, 0, or 1");
  if (!(config.penalty >= 0.0))
    throw ConfigError("config: penalty must be nonnegative");
  if (config.quad_extra < 0)
    throw ConfigError("config: quad_extra must be nonnegative");
  if (config.shells < 1) throw ConfigError("config: shells must be at least 1");
  if (config.level_lo < 1 || config.level_hi < config.level_lo ||
      config.level_hi > 16)
    throw ConfigError("config: levels must satisfy 1 <= A <= B <= 16");
  if (config.k < 1) throw ConfigError("config: k must be at least 1");
  if (!(config.tol > 0.0)) throw ConfigError("config: tol must be positive");
  if (config.ref_levels == -1) config.ref_levels = config.level_hi + 2;
  if (config.ref_levels < config.level_hi || config.ref_levels > 16)
    throw ConfigError("config: ref_levels must lie in [max level, 16]");
}

void write_records_csv(std::ostream& out,
                       const std::vector<StudyRecord>& records) {
  out << kCsvHeader << "\n";
  for (const StudyRecord& r : records) write_record(out, r);
}

std::vector<StudyRecord> read_records_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("fit: cannot open '" + path + "'");
  std::vector<StudyRecord> records;
  std::string line;
  int line_no = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!saw_header) {
      if (line != kCsvHeader)
        throw ConfigError("fit: " + path + ":" + std::to_string(line_no) +
                          ": unexpected CSV header");
      saw_header = true;
      continue;
    }
    StudyRecord r;
    int consumed = 0;
    const int got =
        std::sscanf(line.c_str(), "%d,%d,%lf,%lf,%lf,%lf,%lf%n", &r.n,
                    &r.levels, &r.lambda, &r.err_dg, &r.err_l2, &r.err_linf,
                    &r.err_lambda, &consumed);
    if (got != 7 || consumed != static_cast<int>(line.size()))
      throw ConfigError("fit: " + path + ":" + std::to_string(line_no) +
                        ": malformed CSV row");
    records.push_back(r);
  }
  if (!saw_header) throw ConfigError("fit: " + path + ": missing CSV header");
  if (records.empty()) throw ConfigError("fit: " + path + ": no data rows");
  return records;
}

FitTable render_fit_table(const std::vector<StudyRecord>& records, int dim,
                          double plateau_threshold) {
  FitTable table;
  char buf[192];
  std::snprintf(buf, sizeof buf,
                "model: err = C * exp(-b * N^(1/%d)), plateau = %.3g\n",
                dim + 1, plateau_threshold);
  table.text += buf;
  std::snprintf(buf, sizeof buf, "%-8s %15s %15s %10s %7s\n", "field", "b", "C",
                "R^2", "points");
  table.text += buf;
  const struct {
    const char* name;
    StudyField field;
  } fields[] = {{"dg", StudyField::dg},
                {"l2", StudyField::l2},
                {"linf", StudyField::linf},
                {"lambda", StudyField::lambda}};
  for (const auto& f : fields) {
    try {
      const RateFit fit = fit_rate(records, f.field, dim, plateau_threshold);
      std::snprintf(buf, sizeof buf, "%-8s %15.9g %15.9g %10.6f %7d\n", f.name,
                    fit.b, fit.c, fit.r_squared, fit.points_used);
      ++table.fitted;
    } catch (const std::exception& e) {
      std::snprintf(buf, sizeof buf, "%-8s unavailable (%s)\n", f.name,
                    e.what());
    }
    table.text += buf;
  }
  return table;
}

std::vector<StudyRecord> run_study(const StudyConfig& config,
                                   std::ostream& log) {
  StudyConfig cfg = config;
  validate(cfg);
  const std::string path = cfg.out.empty() ? "study.csv" : cfg.out;

  LevelSolve reference;
  try {
    reference = solve_level(cfg, cfg.ref_levels, true);
  } catch (const std::exception& e) {
    throw std::runtime_error("study: reference at level " +
                             std::to_string(cfg.ref_levels) + " failed: " +
                             e.what());
  }
  log << "reference: level " << cfg.ref_levels << ", N = "
      << reference.sol.dofs.total << ", lambda = ";
  char buf[160];
  std::snprintf(buf, sizeof buf, "%.17g\n", reference.sol.lambda);
  log << buf;

  std::ofstream csv(path);
  if (!csv) throw ConfigError("study: cannot open '" + path + "' for writing");
  csv << kCsvHeader << "\n";
  csv.flush();

  std::vector<StudyRecord> records;
  for (int level = cfg.level_lo; level <= cfg.level_hi; ++level) {
    const char* stage = "mesh";
    try {
      LevelSolve ls;
      stage = "solve";
      ls = solve_level(cfg, level, false);
      stage = "errors";
      const ErrorNorms norms = error_norms(ls.sol, reference.sol);
      StudyRecord r;
      r.n = ls.sol.dofs.total;
      r.levels = level;
      r.lambda = ls.sol.lambda;
      r.err_dg = norms.dg;
      r.err_l2 = norms.l2;
      r.err_linf = norms.linf;
      r.err_lambda = eigenvalue_error(ls.sol, reference.sol);
      records.push_back(r);
      write_record(csv, r);
      csv.flush();
      std::snprintf(buf, sizeof buf,
                    "level %d: N=%d lambda=%.12g dg=%.3e l2=%.3e linf=%.3e "
                    "lambda_err=%.3e\n",
                    level, r.n, r.lambda, r.err_dg, r.err_l2, r.err_linf,
                    r.err_lambda);
      log << buf;
    } catch (const std::exception& e) {
      throw std::runtime_error("study: level " + std::to_string(level) +
                               " failed during " + stage + ": " + e.what() +
                               " (partial CSV kept at " + path + ")");
    }
  }

  const FitTable table = render_fit_table(records, cfg.dim, 1e-11);
  log << "\n" << table.text;
  return records;
}

void fit_command(const std::string& csv_path, int dim, double plateau_threshold,
                 bool footer, std::ostream& log) {
  if (dim != 2 && dim != 3) throw ConfigError("fit: dim must be 2 or 3");
  if (!(plateau_threshold >= 0.0))
    throw ConfigError("fit: plateau threshold must be nonnegative");
  const std::vector<StudyRecord> records = read_records_csv(csv_path);
  const FitTable table = render_fit_table(records, dim, plateau_threshold);
  log << table.text;
  if (table.fitted == 0)
    throw ConfigError("fit: too few pre-plateau points in every column");
  if (footer) {
    std::ofstream out(csv_path, std::ios::app);
    if (!out) throw ConfigError("fit: cannot append to '" + csv_path + "'");
    std::istringstream lines(table.text);
    std::string line;
    while (std::getline(lines, line)) out << "# fit: " << line << "\n";
  }
}

std::vector<std::array<double, 4>> sample_field(const DiscreteSolution& sol,
                                                int grid_per_axis) {
  if (grid_per_axis < 2)
    throw ConfigError("field sampling needs at least 2 points per axis");
  const int dim = sol.meta.dim;
  const double step = 1.0 / static_cast<double>(grid_per_axis - 1);
  std::vector<std::array<double, 3>> points;
  std::array<int, 3> idx{0, 0, 0};
  const int last = dim - 1;
  while (true) {
    std::array<double, 3> x{0.0, 0.0, 0.0};
    for (int a = 0; a < dim; ++a)
      x[static_cast<std::size_t>(a)] =
          -0.5 + static_cast<double>(idx[static_cast<std::size_t>(a)]) * step;
    points.push_back(x);
    int a = last;
    while (a >= 0 && ++idx[static_cast<std::size_t>(a)] == grid_per_axis) {
      idx[static_cast<std::size_t>(a)] = 0;
      --a;
    }
    if (a < 0) break;
  }
  const EvalResult result = evaluate(sol, points, false);
  std::vector<std::array<double, 4>> rows(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (int a = 0; a < dim; ++a)
      rows[i][static_cast<std::size_t>(a)] = points[i][static_cast<std::size_t>(a)];
    rows[i][static_cast<std::size_t>(dim)] =
        result.values[static_cast<Eigen::Index>(i)];
  }
  return rows;
}

void write_field_csv(std::ostream& out, int dim,
                     const std::vector<std::array<double, 4>>& rows) {
  out << (dim == 2 ? "x,y,value" : "x,y,z,value") << "\n";
  char buf[192];
  for (const auto& row : rows) {
    if (dim == 2) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", row[0], row[1],
                    row[2]);
    } else {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", row[0],
                    row[1], row[2], row[3]);
    }
    out << buf;
  }
}

void solve_once(const StudyConfig& config, int grid_per_axis,
                std::ostream& log) {
  StudyConfig cfg = config;
  validate(cfg);
  if (cfg.level_lo != cfg.level_hi)
    throw ConfigError("solve: needs a single level (pass --levels L)");

  LevelSolve ls = solve_level(cfg, cfg.level_lo, false);

  // Eigenvectors carry an arbitrary sign. Fix the dumped one so its mean is
  // nonnegative; the ground state then samples positive.
  double integral = 0.0;
  for (const Element& e : ls.sol.mesh.elements) {
    // Constant-mode coefficient times element volume, up to one common
    // positive factor: the basis is orthonormal on the reference cell.
    integral += ls.sol.coefficients[ls.sol.dofs.block_start(e.id)] *
                std::pow(static_cast<double>(e.size), cfg.dim);
  }
  if (integral < 0.0) ls.sol.coefficients = -ls.sol.coefficients;

  log << "N = " << ls.sol.dofs.total << "\n";
  char buf[96];
  for (std::size_t i = 0; i < ls.pairs.size(); ++i) {
    std::snprintf(buf, sizeof buf, "lambda[%zu] = %.17g\n", i + 1,
                  ls.pairs[i].lambda);
    log << buf;
  }
  if (cfg.out.empty()) return;

  const int grid =
      grid_per_axis > 0 ? grid_per_axis : (cfg.dim == 2 ? 65 : 21);
  const auto rows = sample_field(ls.sol, grid);
  std::ofstream out(cfg.out);
  if (!out) throw ConfigError("solve: cannot open '" + cfg.out + "' for writing");
  write_field_csv(out, cfg.dim, rows);
  log << "field: " << rows.size() << " samples on a " << grid
      << "-point grid written to " << cfg.out << "\n";
}

}  // namespace hpdg
