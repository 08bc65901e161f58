#include "ctrack_cli/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ctrack/bench.hpp"
#include "ctrack/errors.hpp"
#include "ctrack/io.hpp"
#include "ctrack/solver.hpp"
#include "ctrack/synthetic.hpp"

namespace ctrack::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct GlobalOptions {
  std::uint64_t seed = 42;
  int degree = 4;
  std::string config;
  std::string output = ".";
  CLI::Option* output_opt = nullptr;
};

std::vector<double> parse_number_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
    if (item.empty() || used != item.size() || !std::isfinite(v)) {
      throw ValidationError("invalid number '" + item + "' in " + what);
    }
    out.push_back(v);
  }
  if (out.empty()) throw ValidationError(what + " is empty");
  return out;
}

std::vector<int> parse_int_list(const std::string& text, const std::string& what) {
  std::vector<int> out;
  for (double v : parse_number_list(text, what)) {
    if (v != std::floor(v)) throw ValidationError(what + " must hold integers");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

std::vector<PoseForm> parse_forms(const std::string& text) {
  std::vector<PoseForm> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    if (item == "vectorized") {
      out.push_back(PoseForm::kVectorized);
    } else if (item == "lie") {
      out.push_back(PoseForm::kLie);
    } else {
      throw ValidationError("unknown Jacobian form '" + item + "' (expected vectorized or lie)");
    }
  }
  if (out.empty()) throw ValidationError("no Jacobian form given");
  return out;
}

PoseForm parse_form(const std::string& text) {
  const auto forms = parse_forms(text);
  if (forms.size() != 1) throw ValidationError("expected a single Jacobian form");
  return forms.front();
}

// Reads --config before the full parse so its values can act as defaults.
std::string find_config_path(int argc, const char* const* argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) return argv[i + 1];
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  return {};
}

std::string json_to_option_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string s;
    for (const auto& e : v) {
      if (!s.empty()) s += ",";
      s += json_to_option_text(e);
    }
    return s;
  }
  if (v.is_number_float()) return format_double(v.get<double>());
  return v.dump();
}

void apply_config_value(CLI::App& app, const std::string& key, const json& value) {
  CLI::Option* opt = app.get_option_no_throw("--" + key);
  if (!opt) throw ValidationError("config key '" + key + "' is not an option of '" +
                                  (app.get_name().empty() ? std::string("ctrack") : app.get_name()) + "'");
  opt->default_val(json_to_option_text(value));
}

// Top-level scalars go to the global options or, failing that, to every subcommand that
// has the option; objects named after a subcommand go to that subcommand.
void apply_config(CLI::App& app, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config '" + path + "'");
  json cfg;
  try {
    cfg = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("config '" + path + "': " + e.what());
  }
  if (!cfg.is_object()) throw ValidationError("config '" + path + "' must be a JSON object");
  for (const auto& [key, value] : cfg.items()) {
    if (key == "config") continue;
    if (value.is_object()) {
      CLI::App* sub = nullptr;
      try {
        sub = app.get_subcommand(key);
      } catch (const CLI::OptionNotFound&) {
        throw ValidationError("config section '" + key + "' is not a subcommand");
      }
      for (const auto& [k, v] : value.items()) apply_config_value(*sub, k, v);
      continue;
    }
    if (app.get_option_no_throw("--" + key)) {
      apply_config_value(app, key, value);
      continue;
    }
    bool used = false;
    for (CLI::App* sub : app.get_subcommands([](CLI::App*) { return true; })) {
      if (sub->get_option_no_throw("--" + key)) {
        apply_config_value(*sub, key, value);
        used = true;
      }
    }
    if (!used) throw ValidationError("config key '" + key + "' matches no option");
  }
}

fs::path output_dir(const GlobalOptions& g) {
  if (g.output_opt && g.output_opt->count() > 0) return g.output;
  if (const char* env = std::getenv("CTRACK_OUTPUT_DIR"); env && *env) return env;
  return g.output;
}

std::string join(const fs::path& dir, const std::string& name) { return (dir / name).string(); }

std::vector<double> sample_times(const SplineTrajectory& traj, const std::string& at, double rate) {
  if (!at.empty() && rate > 0.0) throw ValidationError("--at and --rate are mutually exclusive");
  if (!at.empty()) return parse_number_list(at, "--at");
  if (!(rate > 0.0)) throw ValidationError("one of --at or --rate is required");
  const auto [lo, hi] = traj.domain();
  const long count = static_cast<long>(std::ceil((hi - lo) * rate - 1e-9));
  std::vector<double> out;
  for (long i = 0; i < count; ++i) {
    const double t = lo + static_cast<double>(i) / rate;
    if (t < hi) out.push_back(t);
  }
  return out;
}

std::vector<StampedPose> interpolate_all(const SplineTrajectory& traj, const std::vector<double>& ts) {
  std::vector<StampedPose> out;
  out.reserve(ts.size());
  for (double t : ts) out.push_back({t, traj.interpolate_pose(t)});
  return out;
}

// ---- fit -----------------------------------------------------------------------------

struct FitOptions {
  std::string observations;
  std::string mode = "spline-ba";
  int window = 6;
  double huber_delta = 0.05;
  int max_iterations = 20;
  std::string form = "vectorized";
  std::string at;
  double rate = 0.0;
};

int cmd_fit(const GlobalOptions& g, const FitOptions& o, std::ostream& out) {
  BaMode mode;
  if (o.mode == "spline-ba") {
    mode = BaMode::kSplineBA;
  } else if (o.mode == "local-ba") {
    mode = BaMode::kLocalBA;
  } else {
    throw ValidationError("unknown --mode '" + o.mode + "' (expected spline-ba or local-ba)");
  }
  SolverConfig config;
  config.huber_delta = o.huber_delta;
  config.max_iterations = o.max_iterations;
  config.form = parse_form(o.form);
  if (!(config.huber_delta > 0.0) || config.max_iterations < 1) {
    throw ValidationError("--huber-delta and --max-iterations must be positive");
  }

  const std::vector<Frame> frames = group_frames(read_observations(o.observations));
  const TrackResult result = track_object(frames, g.degree, mode, o.window, config);

  // Report poses from the serialized control points so interpolate reproduces them exactly.
  const std::string cp_text = format_control_points(result.trajectory);
  std::istringstream cp_in(cp_text);
  const SplineTrajectory reloaded = parse_control_points(cp_in, "control_points.txt");

  std::vector<double> ts;
  if (o.at.empty() && !(o.rate > 0.0)) {
    for (const Frame& f : frames) {
      if (reloaded.contains(f.timestamp)) ts.push_back(f.timestamp);
    }
  } else {
    ts = sample_times(reloaded, o.at, o.rate);
  }
  const auto poses = interpolate_all(reloaded, ts);

  const fs::path dir = output_dir(g);
  write_file_atomic(join(dir, "control_points.txt"), cp_text);
  write_file_atomic(join(dir, "trajectory.txt"), format_trajectory(poses));
  if (mode == BaMode::kLocalBA) {
    write_file_atomic(join(dir, "object_points.csv"), format_object_points(result.object_points));
  }

  int iterations = 0;
  for (const auto& r : result.reports) iterations += r.iterations;
  json report = {
      {"mode", o.mode},
      {"order", g.degree},
      {"form", o.form},
      {"frames", frames.size()},
      {"optimized_windows", result.reports.size()},
      {"iterations", iterations},
      {"final_cost", result.reports.empty() ? 0.0 : result.reports.back().final_cost},
      {"residual_rms", result.reports.empty() ? 0.0 : result.reports.back().rms},
      {"stream_residual_rms", result.final_rms},
      {"control_points", result.trajectory.size()},
      {"interpolated_poses", poses.size()},
  };
  write_file_atomic(join(dir, "fit_report.json"), report.dump(2) + "\n");
  out << report.dump(2) << "\n";
  return kExitOk;
}

// ---- interpolate ---------------------------------------------------------------------

struct InterpolateOptions {
  std::string control_points;
  std::string at;
  double rate = 0.0;
};

int cmd_interpolate(const GlobalOptions& g, const InterpolateOptions& o, std::ostream& out) {
  const SplineTrajectory traj = read_control_points(o.control_points);
  const std::vector<double> ts = sample_times(traj, o.at, o.rate);
  std::vector<StampedPose> poses;
  std::string twists = "timestamp,vx,vy,vz,wx,wy,wz,dvx,dvy,dvz,dwx,dwy,dwz\n";
  for (double t : ts) {
    poses.push_back({t, traj.interpolate_pose(t)});
    const Twist v = traj.body_velocity(t);
    const Twist a = traj.body_acceleration(t);
    twists += format_double(t);
    for (int i = 0; i < 6; ++i) twists += "," + format_double(v(i));
    for (int i = 0; i < 6; ++i) twists += "," + format_double(a(i));
    twists += "\n";
  }
  const fs::path dir = output_dir(g);
  write_file_atomic(join(dir, "trajectory.txt"), format_trajectory(poses));
  write_file_atomic(join(dir, "twists.csv"), twists);
  out << "interpolated " << poses.size() << " poses\n";
  return kExitOk;
}

// ---- velocity-experiment -------------------------------------------------------------

struct VelocityOptions {
  std::string theta_transl = "0,0.05,0.1,0.15,0.2,0.25,0.3,0.35,0.4,0.45,0.5";
  std::string theta_rot = "0,0.05,0.1,0.15,0.2,0.25,0.3,0.35,0.4,0.45,0.5";
  double radius = 1.0;
  double frame_dt = 0.1;
  int frames = 30;
  int samples = 10;
};

int cmd_velocity(const GlobalOptions& g, const VelocityOptions& o, std::ostream& out) {
  VelocityExperimentConfig c;
  c.theta_transl = parse_number_list(o.theta_transl, "--theta-transl");
  c.theta_rot = parse_number_list(o.theta_rot, "--theta-rot");
  c.base.radius = o.radius;
  c.base.frame_dt = o.frame_dt;
  c.base.n_frames = o.frames;
  c.order = g.degree;
  c.samples_per_interval = o.samples;
  const auto cells = velocity_mse_experiment(c);

  std::string csv = "theta_transl,theta_rot,method,mse_v,mse_w\n";
  for (const auto& cell : cells) {
    const std::string key = format_double(cell.theta_transl) + "," + format_double(cell.theta_rot);
    csv += key + ",ct," + format_double(cell.ct_v) + "," + format_double(cell.ct_w) + "\n";
    csv += key + ",dt_coupled," + format_double(cell.coupled_v) + "," + format_double(cell.coupled_w) + "\n";
    csv += key + ",dt_decoupled," + format_double(cell.decoupled_v) + "," +
           format_double(cell.decoupled_w) + "\n";
  }
  const std::string path = join(output_dir(g), "velocity_mse.csv");
  write_file_atomic(path, csv);
  out << "wrote " << cells.size() * 3 << " rows to " << path << "\n";
  return kExitOk;
}

// ---- bench ---------------------------------------------------------------------------

struct BenchOptions {
  int repeats = 30;
  std::string observations = "1,10,100";
  std::string forms = "vectorized,lie";
};

int cmd_bench(const GlobalOptions& g, const BenchOptions& o, std::ostream& out) {
  BenchConfig c;
  c.repeats = o.repeats;
  c.order = g.degree;
  c.seed = g.seed;
  const auto forms = parse_forms(o.forms);
  auto reports = bench_pose_jacobian(forms, c);
  const auto chain = bench_error_chain(parse_int_list(o.observations, "--observations"), forms, c);
  reports.insert(reports.end(), chain.begin(), chain.end());

  std::string csv = "method,form,n_observations,mean_seconds,std_seconds\n";
  for (const auto& r : reports) {
    csv += r.method + "," + r.form + "," + std::to_string(r.n_observations) + "," +
           format_double(r.mean_seconds) + "," + format_double(r.std_seconds) + "\n";
  }
  const std::string path = join(output_dir(g), "bench.csv");
  write_file_atomic(path, csv);
  out << csv;
  return kExitOk;
}

// ---- ate -----------------------------------------------------------------------------

struct AteOptions {
  std::string estimate;
  std::string truth;
  int align_prefix = 0;
};

int cmd_ate(const GlobalOptions& g, const AteOptions& o, std::ostream& out) {
  const auto est = read_trajectory(o.estimate);
  const auto gt = read_trajectory(o.truth);
  if (est.size() != gt.size()) {
    throw ValidationError("length mismatch: estimate has " + std::to_string(est.size()) +
                          " poses, truth has " + std::to_string(gt.size()));
  }
  std::vector<Pose> a, b;
  for (std::size_t i = 0; i < est.size(); ++i) {
    if (std::abs(est[i].timestamp - gt[i].timestamp) > 1e-6) {
      throw ValidationError("timestamp mismatch at record " + std::to_string(i + 1) + ": " +
                            format_double(est[i].timestamp) + " vs " + format_double(gt[i].timestamp));
    }
    a.push_back(est[i].pose);
    b.push_back(gt[i].pose);
  }
  const double value = ate(a, b, o.align_prefix);
  const json report = {{"ate", value}, {"poses", a.size()}, {"align_prefix", o.align_prefix}};
  write_file_atomic(join(output_dir(g), "ate.json"), report.dump(2) + "\n");
  out << report.dump(2) << "\n";
  return kExitOk;
}

// ---- simulate ------------------------------------------------------------------------

struct SimulateOptions {
  double theta_transl = 0.1;
  double theta_rot = 0.1;
  double radius = 1.0;
  double frame_dt = 0.1;
  int frames = 30;
  int points = 20;
  double noise = 0.0;
};

int cmd_simulate(const GlobalOptions& g, const SimulateOptions& o, std::ostream& out) {
  CircularMotionSpec spec;
  spec.theta_transl = o.theta_transl;
  spec.theta_rot = o.theta_rot;
  spec.radius = o.radius;
  spec.frame_dt = o.frame_dt;
  spec.n_frames = o.frames;
  if (o.points < 3) throw ValidationError("--points must be at least 3");
  const SimulatedScene scene = simulate_circular_scene(spec, o.points, o.noise, g.seed);
  const fs::path dir = output_dir(g);
  write_file_atomic(join(dir, "observations.csv"), format_observations(scene.observations));
  write_file_atomic(join(dir, "ground_truth.txt"), format_trajectory(scene.ground_truth));
  out << "wrote " << scene.observations.size() << " observations over " << spec.n_frames
      << " frames to " << dir.string() << "\n";
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Continuous-time SE(3) trajectory estimation with cumulative B-splines", "ctrack"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--degree", g.degree, "Spline order k (4 = cubic)")->capture_default_str();
  app.add_option("--config", g.config, "JSON file with option defaults");
  g.output_opt = app.add_option("--output", g.output, "Output directory")->capture_default_str();
  // Options shared by every subcommand may be given after the subcommand name as well.
  app.fallthrough();

  FitOptions fit;
  CLI::App* fit_cmd = app.add_subcommand("fit", "Fit a spline trajectory to an observation file");
  fit_cmd->add_option("observations", fit.observations, "Observation CSV")->required();
  fit_cmd->add_option("--mode", fit.mode, "spline-ba or local-ba")->capture_default_str();
  fit_cmd->add_option("--window", fit.window, "Window size in frames")->capture_default_str();
  fit_cmd->add_option("--huber-delta", fit.huber_delta, "Huber threshold [m]")->capture_default_str();
  fit_cmd->add_option("--max-iterations", fit.max_iterations)->capture_default_str();
  fit_cmd->add_option("--form", fit.form, "vectorized or lie")->capture_default_str();
  fit_cmd->add_option("--at", fit.at, "Comma-separated output timestamps");
  fit_cmd->add_option("--rate", fit.rate, "Output sampling rate [Hz]");

  InterpolateOptions interp;
  CLI::App* interp_cmd = app.add_subcommand("interpolate", "Evaluate poses, velocities and accelerations");
  interp_cmd->add_option("control_points", interp.control_points, "Control-point file")->required();
  interp_cmd->add_option("--at", interp.at, "Comma-separated timestamps");
  interp_cmd->add_option("--rate", interp.rate, "Sampling rate [Hz]");

  VelocityOptions vel;
  CLI::App* vel_cmd = app.add_subcommand("velocity-experiment", "Continuous vs discrete velocity MSE grid");
  vel_cmd->add_option("--theta-transl", vel.theta_transl, "Comma-separated z-turn increments [rad/frame]");
  vel_cmd->add_option("--theta-rot", vel.theta_rot, "Comma-separated x-spin increments [rad/frame]");
  vel_cmd->add_option("--radius", vel.radius)->capture_default_str();
  vel_cmd->add_option("--frame-dt", vel.frame_dt)->capture_default_str();
  vel_cmd->add_option("--frames", vel.frames)->capture_default_str();
  vel_cmd->add_option("--samples", vel.samples, "Samples per frame interval")->capture_default_str();

  BenchOptions bench;
  CLI::App* bench_cmd = app.add_subcommand("bench", "Analytic vs numeric Jacobian timings");
  bench_cmd->add_option("--repeats", bench.repeats)->capture_default_str();
  bench_cmd->add_option("--observations", bench.observations, "Comma-separated observation counts")
      ->capture_default_str();
  bench_cmd->add_option("--forms", bench.forms)->capture_default_str();

  AteOptions ate_opts;
  CLI::App* ate_cmd = app.add_subcommand("ate", "Absolute trajectory error after rigid alignment");
  ate_cmd->add_option("estimate", ate_opts.estimate)->required();
  ate_cmd->add_option("truth", ate_opts.truth)->required();
  ate_cmd->add_option("--align-prefix", ate_opts.align_prefix, "Poses used for alignment (0 = all)")
      ->capture_default_str();

  SimulateOptions sim;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "Write a synthetic circular-motion scene");
  sim_cmd->add_option("--theta-transl", sim.theta_transl)->capture_default_str();
  sim_cmd->add_option("--theta-rot", sim.theta_rot)->capture_default_str();
  sim_cmd->add_option("--radius", sim.radius)->capture_default_str();
  sim_cmd->add_option("--frame-dt", sim.frame_dt)->capture_default_str();
  sim_cmd->add_option("--frames", sim.frames)->capture_default_str();
  sim_cmd->add_option("--points", sim.points)->capture_default_str();
  sim_cmd->add_option("--noise", sim.noise, "Observation noise sigma [m]")->capture_default_str();

  try {
    try {
      const std::string config_path = find_config_path(argc, argv);
      if (!config_path.empty()) apply_config(app, config_path);
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
      out << app.help("", CLI::AppFormatMode::All);
      return kExitOk;
    } catch (const CLI::ParseError& e) {
      throw ValidationError(e.what());
    }

    if (*fit_cmd) return cmd_fit(g, fit, out);
    if (*interp_cmd) return cmd_interpolate(g, interp, out);
    if (*vel_cmd) return cmd_velocity(g, vel, out);
    if (*bench_cmd) return cmd_bench(g, bench, out);
    if (*ate_cmd) return cmd_ate(g, ate_opts, out);
    if (*sim_cmd) return cmd_simulate(g, sim, out);
    throw ValidationError("no subcommand given");
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}

}  // namespace ctrack::cli
