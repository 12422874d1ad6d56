#include "spdelab/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "spdelab/csv.hpp"
#include "spdelab/energy.hpp"
#include "spdelab/errors.hpp"
#include "spdelab/version.hpp"

namespace fs = std::filesystem;

namespace spdelab {

Config resolve_config(const RunOptions& options) {
  RawConfig raw;
  if (!options.config_path.empty()) {
    std::ifstream is(options.config_path);
    if (!is) throw IoError("cannot open config file " + options.config_path);
    std::ostringstream buf;
    buf << is.rdbuf();
    raw = parse_ini(buf.str());
  }
  for (const auto& assignment : options.overrides) apply_override(raw, assignment);
  Config cfg = validate_config(raw);
  if (options.seed) cfg.seed = *options.seed;
  if (options.out_dir) cfg.output_dir = *options.out_dir;
  if (options.threads) cfg.run.threads = *options.threads;
  return cfg;
}

int resolve_threads(const RunOptions& options, const Config& cfg) {
  if (options.threads && *options.threads >= 1) return *options.threads;
  if (const char* env = std::getenv("SPDELAB_THREADS")) {
    long long v = 0;
    if (parse_int(env, v) && v >= 1) return static_cast<int>(v);
  }
  if (cfg.run.threads >= 1) return cfg.run.threads;
  return 1;
}

SpacePtr make_space(const Config& cfg) {
  return GalerkinSpace::build(cfg.space.m, cfg.space.alpha, cfg.space.length,
                              cfg.space.quad_points);
}

OperatorTriple make_operator(const Config& cfg, SpacePtr space) {
  NoiseSpec noise{cfg.op.noise, cfg.op.sigma, cfg.op.channels};
  OperatorTriple op;
  if (cfg.op.name == "heat") {
    op = make_heat(std::move(space), cfg.op.nu, noise);
  } else if (cfg.op.name == "convection_diffusion") {
    op = make_convection_diffusion(std::move(space), cfg.op.nu, cfg.op.b, noise);
  } else if (cfg.op.name == "p_laplace") {
    op = make_p_laplace(std::move(space), noise);
  } else if (cfg.op.name == "sign_flipped_heat") {
    op = make_sign_flipped_heat(std::move(space), cfg.op.nu, noise);
  } else if (cfg.op.name == "step_discontinuous") {
    if (cfg.op.noise != NoiseKind::none)
      throw ConfigError("operator step_discontinuous supports no noise");
    op = make_step_discontinuous(std::move(space));
  } else {
    throw ConfigError("unknown operator '" + cfg.op.name + "'");
  }
  if (cfg.op.beta != 0.0) op.params.beta = cfg.op.beta;
  return op;
}

Eigen::VectorXd make_state(const std::string& spec, double scale,
                           const GalerkinSpace& space) {
  const int m = space.dim();
  Eigen::VectorXd x;
  if (spec == "zero") {
    x = Eigen::VectorXd::Zero(m);
  } else if (spec == "e1") {
    x = Eigen::VectorXd::Zero(m);
    x[0] = 1.0;
  } else if (spec == "parabola") {
    const double L = space.length();
    x = space.project([L](double s) { return s * (L - s); }).coeffs();
  } else {
    std::vector<double> vals;
    std::string_view rest = spec;
    constexpr std::string_view ws = " \t";
    while (true) {
      const auto comma = rest.find(',');
      std::string_view piece = rest.substr(0, comma);
      if (const auto b = piece.find_first_not_of(ws); b == std::string_view::npos)
        piece = {};
      else
        piece = piece.substr(b, piece.find_last_not_of(ws) - b + 1);
      double v = 0.0;
      if (!parse_double(piece, v))
        throw ConfigError("invalid state spec '" + spec + "'");
      vals.push_back(v);
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    if (static_cast<int>(vals.size()) != m)
      throw ConfigError("state spec lists " + std::to_string(vals.size()) +
                        " coefficients but the space has dimension " +
                        std::to_string(m));
    x = Eigen::Map<Eigen::VectorXd>(vals.data(), m);
  }
  return scale * x;
}

SimConfig make_sim_config(const Config& cfg, const OperatorTriple& op) {
  SimConfig sim;
  sim.T = cfg.sim.horizon;
  sim.n_steps = cfg.sim.n_steps;
  sim.k_noise = cfg.sim.k_noise == 0 ? op.noise_dim : cfg.sim.k_noise;
  sim.scheme = cfg.sim.scheme;
  sim.seed = cfg.seed;
  sim.taming_power = cfg.sim.taming_power;
  sim.stop = StopThresholds{cfg.sim.stop_nh, cfg.sim.stop_nv};
  sim.hard_stop = cfg.sim.hard_stop;
  sim.store_noise = cfg.sim.store_noise;
  sim.divergence_cap = cfg.sim.divergence_cap;
  return sim;
}

ControlSetup make_control(const Config& cfg) {
  const int m = cfg.space.m;
  if (!cfg.control.load.empty()) {
    LoadedFeedback lf = load_feedback(cfg.control.load);
    if (lf.family.state_dim() != m)
      throw ConfigError("loaded feedback parameters are for dimension " +
                        std::to_string(lf.family.state_dim()) +
                        " but the space has dimension " + std::to_string(m));
    FeedbackMap map = lf.family.bind(lf.theta);
    ControlDecl decl = lf.family.declared_params(lf.theta);
    return {true, std::move(lf.family), std::move(lf.theta), std::move(map),
            std::move(decl)};
  }
  if (cfg.control.family == "affine") {
    FeedbackFamily family(m, cfg.control.n_knots, cfg.sim.horizon,
                          Parameterization::affine, cfg.control.kappa);
    ControlParams p;
    p.K = cfg.control.gain_scale * Eigen::MatrixXd::Identity(m, m);
    p.c_knots = Eigen::MatrixXd::Zero(cfg.control.n_knots, m);
    p.kappa = cfg.control.kappa;
    Eigen::VectorXd theta = family.pack(p);
    FeedbackMap map = family.bind(theta);
    ControlDecl decl = family.declared_params(theta);
    return {true, std::move(family), std::move(theta), std::move(map),
            std::move(decl)};
  }
  FeedbackFamily family(m, 1, cfg.sim.horizon, Parameterization::gain_only,
                        cfg.control.kappa);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(family.dim());
  FeedbackMap map = family.bind(theta);
  ControlDecl decl = family.declared_params(theta);
  return {false, std::move(family), std::move(theta), std::move(map),
          std::move(decl)};
}

CostSpec make_cost_spec(const Config& cfg, const GalerkinSpace& space) {
  CostSpec spec;
  spec.mode = cfg.cost.mode;
  spec.q = cfg.cost.q;
  spec.r = cfg.cost.r;
  spec.q_terminal = cfg.cost.q_terminal;
  spec.v_cap = cfg.cost.v_cap;
  spec.joint = cfg.cost.joint;
  spec.x_ref = make_state(cfg.cost.x_ref, 1.0, space);
  spec.x_term = make_state(cfg.cost.x_term, 1.0, space);
  spec.tau_m = cfg.cost.tau_m;
  return spec;
}

namespace {

std::ofstream open_output(const fs::path& dir, const char* name) {
  std::ofstream os(dir / name, std::ios::binary);
  if (!os) throw IoError("cannot open output file " + (dir / name).string());
  return os;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(const fs::path& dir, const std::string& command,
                    const Config& cfg, int threads, long long wall_ms) {
  std::ofstream os = open_output(dir, "manifest.txt");
  os << "tool = spdelab " << version_string << '\n';
  os << "command = " << command << '\n';
  os << "seed = " << cfg.seed << '\n';
  os << "threads = " << threads << '\n';
  os << "wall_ms = " << wall_ms << '\n';
  os << "timestamp = " << utc_timestamp() << '\n';
  os << "--- config ---\n";
  os << serialize_config(cfg);
  if (!os) throw IoError("write failed for manifest.txt");
}

bool cost_configured(const Config& cfg) {
  return cfg.cost.q > 0.0 || cfg.cost.r > 0.0 || cfg.cost.q_terminal > 0.0;
}

int cmd_check(const Config& cfg, const fs::path& dir, std::ostream& out) {
  const SpacePtr space = make_space(cfg);
  const OperatorTriple op = make_operator(cfg, space);
  const ControlSetup control = make_control(cfg);

  CheckConfig ccfg;
  ccfg.n_samples = cfg.run.check_samples;
  ccfg.r_max = cfg.run.r_max;
  ccfg.seed = cfg.seed;
  ccfg.horizon = cfg.sim.horizon;
  const std::vector<CheckReport> reports =
      run_all_checks(op, *space, ccfg, &control.map, &control.decl);

  std::ofstream os = open_output(dir, "report.csv");
  CsvWriter csv(os);
  csv.header({"id", "pass", "margin", "tolerance", "n_samples", "witness_t",
              "witness_u_h", "witness_v_h", "alpha_fit", "lambda_fit",
              "indeterminate"});
  bool all_pass = true;
  for (const auto& r : reports) {
    all_pass = all_pass && r.pass;
    csv.field(to_string(r.id))
        .field(r.pass)
        .field(r.margin)
        .field(r.tolerance)
        .field(r.n_samples);
    csv.field(r.witness.t);
    if (r.witness.u.size())
      csv.field(r.witness.u.norm());
    else
      csv.field("");
    if (r.witness.v.size())
      csv.field(r.witness.v.norm());
    else
      csv.field("");
    csv.field(r.alpha_fit).field(r.lambda_fit).field(r.indeterminate);
    csv.end_row();
    out << to_string(r.id) << (r.pass ? "  pass" : "  FAIL")
        << "  margin=" << format_double(r.margin)
        << "  tol=" << format_double(r.tolerance);
    if (r.indeterminate) out << "  indeterminate=" << r.indeterminate;
    out << '\n';
  }
  out << "operator " << op.label << ": " << (all_pass ? "all checks passed"
                                                      : "checks FAILED")
      << '\n';
  return all_pass ? exit_ok : exit_hypothesis_fail;
}

int cmd_simulate(const Config& cfg, const fs::path& dir, int threads,
                 std::ostream& out) {
  const SpacePtr space = make_space(cfg);
  const OperatorTriple op = make_operator(cfg, space);
  const ControlSetup control = make_control(cfg);
  const SimConfig sim = make_sim_config(cfg, op);
  const StateVec x0(make_state(cfg.sim.x0, cfg.sim.x0_scale, *space));

  const PathEnsemble ens = run_ensemble(*space, op, control.map, x0, sim,
                                        cfg.run.n_paths, cfg.sim.store, threads);

  std::ofstream os = open_output(dir, "paths.csv");
  CsvWriter csv(os);
  csv.header({"path", "step", "time", "h_norm", "v_norm", "v_beta_running",
              "stopped"});
  const int n = sim.n_steps;
  if (cfg.sim.store == Storage::full) {
    for (int p = 0; p < ens.n_paths(); ++p) {
      const SamplePath& path = ens.paths[p];
      for (int j = 0; j <= n; ++j) {
        const bool stopped =
            path.tau_exit < sim.T && path.times[j] >= path.tau_exit;
        csv.field(p)
            .field(j)
            .field(path.times[j])
            .field(path.states.row(j).norm())
            .field(space->v_norm(path.state_at(j)))
            .field(path.v_beta_running[j])
            .field(stopped);
        csv.end_row();
      }
    }
  } else {
    for (int p = 0; p < ens.n_paths(); ++p) {
      const PathSummary& s = ens.summaries[p];
      csv.field(p)
          .field(n)
          .field(sim.T)
          .field(s.terminal.norm())
          .field(space->v_norm(StateVec(s.terminal)))
          .field(s.int_v_beta)
          .field(s.tau_exit < sim.T);
      csv.end_row();
    }
  }

  double mean_sup = 0.0, mean_int = 0.0;
  for (const auto& s : ens.summaries) {
    mean_sup += s.sup_h;
    mean_int += s.int_v_beta;
  }
  mean_sup /= ens.n_paths();
  mean_int /= ens.n_paths();
  out << "simulated " << ens.n_paths() << " paths (" << ens.divergent_count()
      << " divergent), mean sup |Y|_H = " << format_double(mean_sup)
      << ", mean energy integral = " << format_double(mean_int) << '\n';

  if (cost_configured(cfg)) {
    const CostSpec spec = make_cost_spec(cfg, *space);
    const CostEstimate ce = estimate_cost(*space, op, control.family,
                                          control.theta, spec, x0, sim,
                                          cfg.run.n_paths);
    std::ofstream cos = open_output(dir, "cost.csv");
    CsvWriter ccsv(cos);
    ccsv.header({"J", "stderr", "n_paths", "run_f", "run_g", "terminal_h",
                 "exit_fraction", "divergent"});
    ccsv.field(ce.j_total)
        .field(ce.se)
        .field(ce.n_paths)
        .field(ce.run_f)
        .field(ce.run_g)
        .field(ce.terminal_h)
        .field(ce.exit_fraction)
        .field(ce.divergent);
    ccsv.end_row();
    out << "cost J = " << format_double(ce.j_total) << " +- "
        << format_double(ce.se) << '\n';
  }
  return exit_ok;
}

int cmd_energy(const Config& cfg, const fs::path& dir, int threads,
               std::ostream& out) {
  const SpacePtr space = make_space(cfg);
  const OperatorTriple op = make_operator(cfg, space);
  const ControlSetup control = make_control(cfg);
  const SimConfig sim = make_sim_config(cfg, op);
  const StateVec x0(make_state(cfg.sim.x0, cfg.sim.x0_scale, *space));
  const Storage storage =
      cfg.run.delta_list.empty() ? Storage::summary : Storage::full;

  const PathEnsemble ens = run_ensemble(*space, op, control.map, x0, sim,
                                        cfg.run.n_paths, storage, threads);

  std::ofstream os = open_output(dir, "energy.csv");
  CsvWriter csv(os);
  csv.header({"quantity", "m", "param", "estimate", "stderr", "bound",
              "satisfied"});
  const std::optional<double> c_p =
      cfg.run.c_p > 0.0 ? std::optional<double>(cfg.run.c_p) : std::nullopt;
  for (double p : cfg.run.p_list) {
    const EnergyStats st = energy_stats(ens, *space, p, op.params.beta, c_p);
    csv.field("sup_h").field(cfg.space.m).field(p).field(st.est_sup_h).field(
        st.se_sup_h);
    if (st.has_bound)
      csv.field(st.bound_rhs)
          .field(st.est_sup_h <= st.bound_rhs + 3.0 * st.se_sup_h);
    else
      csv.field("").field("");
    csv.end_row();
    csv.field("int_v").field(cfg.space.m).field(p).field(st.est_int_v).field(
        st.se_int_v);
    if (st.has_bound)
      csv.field(st.bound_rhs)
          .field(st.est_int_v <= st.bound_rhs + 3.0 * st.se_int_v);
    else
      csv.field("").field("");
    csv.end_row();
    out << "p=" << format_double(p)
        << "  E[(sup |Y|_H)^p] = " << format_double(st.est_sup_h)
        << "  E[(int |Y|_V^beta)^(p/2)] = " << format_double(st.est_int_v);
    if (st.has_bound)
      out << "  bound " << format_double(st.bound_rhs)
          << (st.satisfied ? " ok" : " EXCEEDED");
    out << '\n';
  }
  for (double delta : cfg.run.delta_list) {
    const AldousStat st = aldous_statistic(ens, *space, delta, op.params.beta);
    csv.field("aldous").field(cfg.space.m).field(delta).field(st.value).field(
        st.se);
    csv.field("").field("");
    csv.end_row();
    out << "delta=" << format_double(delta)
        << "  shift statistic = " << format_double(st.value) << " +- "
        << format_double(st.se) << '\n';
  }
  return exit_ok;
}

int cmd_optimize(const Config& cfg, const fs::path& dir, std::ostream& out) {
  if (cfg.control.family != "affine" && cfg.control.load.empty())
    throw ConfigError("optimize requires control.family = affine "
                      "(or a loaded parameter file)");
  const SpacePtr space = make_space(cfg);
  const OperatorTriple op = make_operator(cfg, space);
  const ControlSetup control = make_control(cfg);
  const SimConfig sim = make_sim_config(cfg, op);
  const StateVec x0(make_state(cfg.sim.x0, cfg.sim.x0_scale, *space));
  const CostSpec spec = make_cost_spec(cfg, *space);

  OptimizerConfig opt;
  opt.method = cfg.run.method;
  opt.budget = cfg.run.budget;
  opt.seed = cfg.seed;
  opt.n_paths = cfg.run.opt_n_paths;
  opt.init_step = cfg.run.opt_init_step;

  const MinimizeResult res =
      minimize(*space, op, control.family, control.theta, spec, x0, sim, opt);

  std::ofstream os = open_output(dir, "history.csv");
  CsvWriter csv(os);
  csv.header({"iteration", "J", "stderr", "accepted", "theta_norm"});
  for (const auto& rec : res.history) {
    csv.field(rec.iteration)
        .field(rec.j_value)
        .field(rec.se)
        .field(rec.accepted)
        .field(rec.theta_norm);
    csv.end_row();
  }
  save_feedback((dir / "theta_star.txt").string(), control.family,
                res.theta_star);
  out << "best J = " << format_double(res.j_star) << " +- "
      << format_double(res.se_star) << " after " << res.n_evals
      << " evaluations (" << res.restarts << " restarts)\n";
  return exit_ok;
}

int cmd_compare(const Config& cfg, const fs::path& dir, std::ostream& out) {
  if (cfg.control.family != "affine" && cfg.control.load.empty())
    throw ConfigError("compare requires control.family = affine "
                      "(or a loaded parameter file)");
  const SpacePtr space = make_space(cfg);
  const OperatorTriple op = make_operator(cfg, space);
  const ControlSetup control = make_control(cfg);
  const SimConfig sim = make_sim_config(cfg, op);
  const StateVec x0(make_state(cfg.sim.x0, cfg.sim.x0_scale, *space));

  std::vector<Eigen::VectorXd> seq;
  std::vector<double> scales;
  for (int n = 1; n <= cfg.run.n_seq; ++n) {
    const double scale = 1.0 - std::pow(2.0, -n);
    scales.push_back(scale);
    seq.push_back(scale * control.theta);
  }
  const std::vector<GapReport> reports =
      convergence_diag(*space, op, control.family, seq, control.theta, x0, sim,
                       cfg.run.n_paths, cfg.run.ctrl_points, cfg.run.r_max);

  std::ofstream os = open_output(dir, "gaps.csv");
  CsvWriter csv(os);
  csv.header({"n", "scale", "ctrl_gap", "aux_gap", "aux_stderr", "direct_gap",
              "direct_stderr"});
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const GapReport& g = reports[i];
    csv.field(g.index)
        .field(scales[i])
        .field(g.ctrl_gap)
        .field(g.aux_gap)
        .field(g.aux_se)
        .field(g.direct_gap)
        .field(g.direct_se);
    csv.end_row();
    out << "n=" << g.index << "  ctrl gap " << format_double(g.ctrl_gap)
        << "  frozen-input gap " << format_double(g.aux_gap) << "  direct gap "
        << format_double(g.direct_gap) << '\n';
  }
  return exit_ok;
}

} // namespace

int run_command(const std::string& command, const RunOptions& options,
                std::ostream& out, std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const Config cfg = resolve_config(options);
    const int threads = resolve_threads(options, cfg);
    const fs::path dir(cfg.output_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string());

    int code = exit_usage;
    if (command == "check")
      code = cmd_check(cfg, dir, out);
    else if (command == "simulate")
      code = cmd_simulate(cfg, dir, threads, out);
    else if (command == "energy")
      code = cmd_energy(cfg, dir, threads, out);
    else if (command == "optimize")
      code = cmd_optimize(cfg, dir, out);
    else if (command == "compare")
      code = cmd_compare(cfg, dir, out);
    else {
      err << "unknown command '" << command << "'\n";
      return exit_usage;
    }

    const auto wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - t0)
                             .count();
    write_manifest(dir, command, cfg, threads, wall_ms);
    return code;
  } catch (const ConfigError& e) {
    err << "config error";
    if (e.line > 0) err << " (line " << e.line << ", col " << e.col << ")";
    err << ": " << e.what() << '\n';
    return exit_usage;
  } catch (const IoError& e) {
    err << "io error: " << e.what() << '\n';
    return exit_io_error;
  } catch (const EnsembleError& e) {
    err << "divergence cap exceeded: " << e.what() << " (" << e.divergent << "/"
        << e.total << " paths)\n";
    return exit_divergence_cap;
  } catch (const DivergenceError& e) {
    err << "divergence: " << e.what() << '\n';
    return exit_divergence_cap;
  } catch (const OptimizationError& e) {
    err << "optimizer failure: " << e.what() << '\n';
    return exit_optimizer_fail;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_usage;
  }
}

} // namespace spdelab
