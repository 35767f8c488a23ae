#include "nlsc/experiment.hpp"

#include "nlsc/dynamics.hpp"
#include "nlsc/linear_control.hpp"
#include "nlsc/nonlinear_control.hpp"
#include "nlsc/steering.hpp"
#include "nlsc/xsb.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace nlsc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json config_to_json(const ExperimentConfig& c) {
  return json{{"experiment", c.experiment},
              {"n", c.n},
              {"dt", c.dt},
              {"t_end", c.t_end},
              {"lambda", c.lambda},
              {"omega_lo", c.omega_lo},
              {"omega_hi", c.omega_hi},
              {"transition", c.transition},
              {"amplitude", c.amplitude},
              {"threshold", c.threshold},
              {"tol", c.tol},
              {"cg_tol", c.cg_tol},
              {"ensemble", c.ensemble},
              {"n_obs", c.n_obs},
              {"samples", c.samples},
              {"k_mode", c.k_mode},
              {"s", c.s},
              {"b", c.b},
              {"bprime", c.bprime},
              {"seed", c.seed},
              {"out_dir", c.out_dir}};
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  try {
    j.at("experiment").get_to(c.experiment);
    c.n = j.value("n", c.n);
    c.dt = j.value("dt", c.dt);
    c.t_end = j.value("t_end", c.t_end);
    c.lambda = j.value("lambda", c.lambda);
    c.omega_lo = j.value("omega_lo", c.omega_lo);
    c.omega_hi = j.value("omega_hi", c.omega_hi);
    c.transition = j.value("transition", c.transition);
    c.amplitude = j.value("amplitude", c.amplitude);
    c.threshold = j.value("threshold", c.threshold);
    c.tol = j.value("tol", c.tol);
    c.cg_tol = j.value("cg_tol", c.cg_tol);
    c.ensemble = j.value("ensemble", c.ensemble);
    c.n_obs = j.value("n_obs", c.n_obs);
    c.samples = j.value("samples", c.samples);
    c.k_mode = j.value("k_mode", c.k_mode);
    c.s = j.value("s", c.s);
    c.b = j.value("b", c.b);
    c.bprime = j.value("bprime", c.bprime);
    c.seed = j.value("seed", c.seed);
    c.out_dir = j.value("out_dir", c.out_dir);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  return c;
}

BumpSpec spatial_spec(const ExperimentConfig& c) {
  double width = c.omega_hi - c.omega_lo;
  return BumpSpec{c.omega_lo, c.omega_hi, c.omega_lo + c.transition * width,
                  c.omega_hi - c.transition * width};
}

ControlGeometry make_geometry(const ExperimentConfig& c) {
  return ControlGeometry::standard(TorusGrid(c.n), c.t_end, spatial_spec(c), c.dt);
}

BumpProfile make_damping_profile(const ExperimentConfig& c) {
  return BumpProfile::make(TorusGrid(c.n), spatial_spec(c), TemporalProfile::one());
}

// --- per-experiment drivers (return diagnostics, write CSVs) -------------

json run_simulate(const ExperimentConfig& c) {
  TorusGrid grid(c.n);
  SpectralField u0(grid);
  u0.mode(c.k_mode) = c.amplitude;
  EvolutionParams params;
  params.lambda = c.lambda;
  params.dt = c.dt;
  TrajectoryTrace trace = evolve(u0, 0.0, c.t_end, params, SourceTerm::zero());

  // exact plane wave A e^{i(kx - omega t)}, omega = k^2 + lambda A^2
  const double omega = c.k_mode * c.k_mode + c.lambda * c.amplitude * c.amplitude;
  std::ostringstream csv;
  csv << "t,l2,h1,linf_error\n";
  double final_err = 0;
  for (size_t j = 0; j < trace.snapshots.size(); ++j) {
    double t = trace.time_of(static_cast<int>(j));
    const SpectralField& u = trace.snapshots[j];
    Vec vals = to_physical(u);
    double err = 0;
    for (int i = 0; i < c.n; ++i) {
      Complex exact = c.amplitude * std::polar(1.0, c.k_mode * grid.point(i) - omega * t);
      err = std::max(err, std::abs(vals[i] - exact));
    }
    final_err = err;
    csv << fmt17(t) << ',' << fmt17(l2_norm(u)) << ',' << fmt17(hs_norm(u, 1.0)) << ','
        << fmt17(err) << '\n';
  }
  write_file_atomic(c.out_dir + "/trace.csv", csv.str());
  return json{{"final_linf_error", final_err},
              {"under_resolved", trace.under_resolved},
              {"steps", trace.steps()}};
}

json run_stabilize(const ExperimentConfig& c) {
  TorusGrid grid(c.n);
  std::mt19937_64 rng(c.seed);
  SpectralField u0 = random_field(grid, rng, c.amplitude);
  BumpProfile a = make_damping_profile(c);
  StabilizeResult res = stabilize_until(u0, a, c.lambda, c.threshold, c.t_end, c.dt);

  std::ostringstream csv;
  csv << "t,l2\n";
  for (size_t j = 0; j < res.trace.snapshots.size(); ++j)
    csv << fmt17(res.trace.time_of(static_cast<int>(j))) << ','
        << fmt17(l2_norm(res.trace.snapshots[j])) << '\n';
  write_file_atomic(c.out_dir + "/norms.csv", csv.str());
  EvolutionParams params;
  params.lambda = c.lambda;
  params.dt = res.trace.dt;
  params.damping = Damping{a.a_sq_phys, res.phi};
  double mass_residual = mass_identity_residual(res.trace, params, SourceTerm::zero());
  return json{{"reached", res.reached},
              {"t_star", res.t_star},
              {"t_end", res.t_end},
              {"gamma", res.fit.gamma},
              {"r2", res.fit.r2},
              {"mass_identity_residual", mass_residual}};
}

json run_linear_control(const ExperimentConfig& c) {
  ControlGeometry geom = make_geometry(c);
  std::mt19937_64 rng(c.seed);
  SpectralField psi0 = random_field(geom.grid, rng, c.amplitude);
  LinearControlResult res = solve_linear_hum(psi0, geom, c.cg_tol);
  std::string tmp = c.out_dir + "/control.csv.tmp";
  export_control_csv(res.control, tmp);
  fs::rename(tmp, c.out_dir + "/control.csv");
  return json{{"replay_residual", res.replay_residual}, {"cg_iterations", res.iterations}};
}

json run_null_control(const ExperimentConfig& c) {
  ControlGeometry geom = make_geometry(c);
  SpectralField u0(geom.grid);
  u0.mode(1) = c.amplitude / std::sqrt(2.0);
  u0.mode(-2) = c.amplitude / std::sqrt(2.0);
  NullControlOptions opts;
  opts.cg_tol = c.cg_tol;
  ControlSolution sol = local_null_control(u0, geom, c.lambda, opts);
  std::string tmp = c.out_dir + "/control.csv.tmp";
  export_control_csv(sol.control, tmp);
  fs::rename(tmp, c.out_dir + "/control.csv");
  json hs = json::array();
  for (const HsRow& row : hs_regularity_report(sol, {1.0, 2.0}))
    hs.push_back({{"s", row.s}, {"phi0", row.phi0_norm}, {"g_max", row.g_max_norm}});
  return json{{"verification_error", sol.verification_error},
              {"iterations", sol.iterations},
              {"ratios", sol.ratios},
              {"hs_table", hs}};
}

json run_steer(const ExperimentConfig& c) {
  ControlGeometry geom = make_geometry(c);
  std::mt19937_64 rng(c.seed);
  SpectralField u0 = random_field(geom.grid, rng, c.amplitude);
  SpectralField u1 = random_field(geom.grid, rng, c.amplitude);
  SteeringOptions opts;
  opts.smallness_gate = c.threshold;
  opts.null_opts.cg_tol = c.cg_tol;
  SteeringPlan plan = steer(u0, u1, geom, c.lambda, opts);

  std::ostringstream csv;
  csv << "t,l2,h1\n";
  for (size_t j = 0; j < plan.verification.snapshots.size(); ++j) {
    const SpectralField& u = plan.verification.snapshots[j];
    csv << fmt17(plan.verification.time_of(static_cast<int>(j))) << ',' << fmt17(l2_norm(u))
        << ',' << fmt17(hs_norm(u, 1.0)) << '\n';
  }
  write_file_atomic(c.out_dir + "/verification.csv", csv.str());
  json phases = json::array();
  for (const SteeringPhase& p : plan.phases)
    phases.push_back({{"name", p.name}, {"start", p.start}, {"duration", p.duration}});
  double gmax = 0;
  for (int j = 0; j <= plan.verification.steps(); ++j)
    gmax = std::max(
        gmax, l2_norm(plan.control.eval(plan.verification.time_of(j), geom.grid)));
  return json{{"end_error", plan.end_error},
              {"t_total", plan.t_total},
              {"control_sup_l2", gmax},
              {"phases", phases}};
}

json run_xsb_probe(const ExperimentConfig& c) {
  MultiplicationLossResult mult = multiplication_loss_probe({4, 8, 16, 32}, c.b);
  std::ostringstream m;
  m << "n,base_norm,shifted_norm\n";
  const int nvals[4] = {4, 8, 16, 32};
  for (int i = 0; i < 4; ++i)
    m << nvals[i] << ',' << fmt17(mult.base_norms[i]) << ',' << fmt17(mult.shifted_norms[i])
      << '\n';
  write_file_atomic(c.out_dir + "/multloss.csv", m.str());

  std::vector<double> t_list{0.04, 0.06, 0.09, 0.14, 0.2};
  DuhamelGainResult duh = duhamel_gain_probe(t_list, std::max(c.b, 0.51), c.bprime);
  std::ostringstream d;
  d << "T,ratio\n";
  for (size_t i = 0; i < t_list.size(); ++i)
    d << fmt17(t_list[i]) << ',' << fmt17(duh.ratios[i]) << '\n';
  write_file_atomic(c.out_dir + "/duhamel.csv", d.str());
  return json{{"multiplication_slope", mult.fit.slope},
              {"duhamel_slope", duh.fit.slope},
              {"duhamel_expected", 1.0 - std::max(c.b, 0.51) - c.bprime}};
}

TrajectoryTrace free_trace(const SpectralField& u0, double t_end, int steps) {
  TrajectoryTrace tr;
  tr.t0 = 0;
  tr.dt = t_end / steps;
  tr.snapshots.reserve(steps + 1);
  for (int j = 0; j <= steps; ++j) tr.snapshots.push_back(free_propagate(u0, j * tr.dt));
  return tr;
}

json run_estimate_scan(const ExperimentConfig& c) {
  TorusGrid grid(c.n);
  const int steps = 128;

  // single-mode L4 scan
  std::ostringstream l4;
  l4 << "k,l4_ratio\n";
  double l4_min = 1e300, l4_max = 0;
  for (int k = 1; k <= 16; ++k) {
    SpectralField u0(grid);
    u0.mode(k) = 1.0;
    TrajectoryTrace tr = free_trace(u0, 1.0, steps);
    TimeWindow w = TimeWindow::spanning(tr);
    double r = l4_ratio(tr, w);
    l4_min = std::min(l4_min, r);
    l4_max = std::max(l4_max, r);
    l4 << k << ',' << fmt17(r) << '\n';
  }
  write_file_atomic(c.out_dir + "/l4_scan.csv", l4.str());

  // trilinear ensemble at s = c.s against s = 0
  std::mt19937_64 rng(c.seed);
  std::ostringstream tri;
  tri << "sample,ratio_s0,ratio_s\n";
  double worst_quotient = 0, max_s0 = 0, max_s = 0;
  for (int i = 0; i < c.samples; ++i) {
    SpectralField f1 = random_field(grid, rng, 1.0);
    SpectralField f2 = random_field(grid, rng, 1.0);
    SpectralField f3 = random_field(grid, rng, 1.0);
    TrajectoryTrace t1 = free_trace(f1, 1.0, steps);
    TrajectoryTrace t2 = free_trace(f2, 1.0, steps);
    TrajectoryTrace t3 = free_trace(f3, 1.0, steps);
    TimeWindow w = TimeWindow::spanning(t1);
    double r0 = trilinear_ratio(t1, t2, t3, 0.0, w);
    double rs = trilinear_ratio(t1, t2, t3, c.s, w);
    worst_quotient = std::max(worst_quotient, rs / r0);
    max_s0 = std::max(max_s0, r0);
    max_s = std::max(max_s, rs);
    tri << i << ',' << fmt17(r0) << ',' << fmt17(rs) << '\n';
  }
  write_file_atomic(c.out_dir + "/trilinear.csv", tri.str());
  return json{{"l4_min", l4_min},
              {"l4_max", l4_max},
              {"trilinear_max_s0", max_s0},
              {"trilinear_max_s", max_s},
              {"trilinear_worst_quotient", worst_quotient}};
}

json run_observability(const ExperimentConfig& c) {
  ControlGeometry geom = make_geometry(c);
  GramianOperator gram(geom);
  std::ostringstream csv;
  csv << "n_obs,constant\n";
  double last = 0;
  for (int m = 1; m <= c.n_obs; ++m) {
    last = observability_constant(gram, m);
    csv << m << ',' << fmt17(last) << '\n';
  }
  write_file_atomic(c.out_dir + "/observability.csv", csv.str());
  return json{{"constant", last}, {"hermiticity_defect", gram.hermiticity_defect()}};
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_string(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw std::invalid_argument("config: malformed JSON");
  return config_from_json(j);
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json_string(buf.str());
}

std::string ExperimentConfig::to_json_string() const { return config_to_json(*this).dump(2); }

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"simulate",     "stabilize", "linear-control",
                                              "null-control", "steer",     "xsb-probe",
                                              "estimate-scan", "observability"};
  return names;
}

std::vector<std::string> ExperimentConfig::validate() const {
  std::vector<std::string> errs;
  bool known = false;
  for (const std::string& name : experiment_names()) known |= (name == experiment);
  if (!known) errs.push_back("unknown experiment '" + experiment + "'");
  if (n < 8 || n % 2 != 0) errs.push_back("n must be even and >= 8");
  if (!(dt > 0)) errs.push_back("dt must be positive");
  if (!(t_end > 0)) errs.push_back("t_end must be positive");
  if (!(dt <= t_end)) errs.push_back("dt must not exceed t_end");
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  if (!(omega_lo >= 0 && omega_hi <= kTwoPi && omega_lo < omega_hi))
    errs.push_back("omega interval must satisfy 0 <= omega_lo < omega_hi <= 2*pi");
  if (!(transition > 0 && transition < 0.5))
    errs.push_back("transition must lie in (0, 1/2)");
  if (!(amplitude >= 0)) errs.push_back("amplitude must be nonnegative");
  if (!(threshold > 0)) errs.push_back("threshold must be positive");
  if (!(tol > 0) || !(cg_tol > 0)) errs.push_back("tolerances must be positive");
  if (ensemble < 1) errs.push_back("ensemble must be >= 1");
  if (samples < 1) errs.push_back("samples must be >= 1");
  if (n_obs < 1 || n_obs > n) errs.push_back("n_obs must lie in [1, n]");
  if (std::abs(k_mode) >= n / 2) errs.push_back("k_mode must be resolved by the grid");
  if (experiment == "xsb-probe") {
    if (!(b > 0 && b < 1)) errs.push_back("b must lie in (0, 1)");
    if (!(bprime > 0 && bprime < 0.5)) errs.push_back("bprime must lie in (0, 1/2)");
  }
  return errs;
}

SpectralField random_field(const TorusGrid& grid, std::mt19937_64& rng, double norm) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  SpectralField f(grid);
  for (int j = 0; j < grid.size(); ++j) {
    double k = std::abs(grid.mode_of_index(j));
    double w = 1.0 / ((1.0 + k) * (1.0 + k));  // smooth spectrum
    double re = gauss(rng), im = gauss(rng);
    f.coeffs[j] = w * Complex{re, im};
  }
  double n0 = l2_norm(f);
  if (norm > 0 && n0 > 0) f *= norm / n0;
  if (norm == 0) f.coeffs.setZero();
  return f;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp);
    out << content;
  }
  fs::rename(tmp, path);
}

int run_experiment(const ExperimentConfig& config) {
  std::vector<std::string> errs = config.validate();
  if (!errs.empty()) {
    for (const std::string& e : errs) std::fprintf(stderr, "config error: %s\n", e.c_str());
    return 2;
  }
  fs::create_directories(config.out_dir);

  json manifest;
  manifest["config"] = config_to_json(config);
  manifest["tool"] = "nlsc";
  auto start = std::chrono::steady_clock::now();
  int code = 0;
  try {
    json diag;
    if (config.experiment == "simulate") diag = run_simulate(config);
    else if (config.experiment == "stabilize") diag = run_stabilize(config);
    else if (config.experiment == "linear-control") diag = run_linear_control(config);
    else if (config.experiment == "null-control") diag = run_null_control(config);
    else if (config.experiment == "steer") diag = run_steer(config);
    else if (config.experiment == "xsb-probe") diag = run_xsb_probe(config);
    else if (config.experiment == "estimate-scan") diag = run_estimate_scan(config);
    else if (config.experiment == "observability") diag = run_observability(config);
    manifest["status"] = "ok";
    manifest["diagnostics"] = diag;
  } catch (const std::exception& e) {
    manifest["status"] = "error";
    manifest["error"] = e.what();
    manifest["failed_phase"] = config.experiment;
    code = 3;
  }
  auto stop = std::chrono::steady_clock::now();
  manifest["wall_seconds"] = std::chrono::duration<double>(stop - start).count();
  write_file_atomic(config.out_dir + "/manifest.json", manifest.dump(2) + "\n");
  return code;
}

}  // namespace nlsc
