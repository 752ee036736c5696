// Command-line front end: theta sweeps, time-marching simulations with
// online autotuning, tuning-cost sweeps, and synthetic controller
// experiments. All outputs are CSV with a version/config-hash comment line.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include <fstream>
#include <functional>
#include <map>

#include "CLI11.hpp"
#include "fmm/autotune.hpp"
#include "fmm/csv.hpp"
#include "fmm/engine.hpp"
#include "fmm/sims.hpp"

using namespace fmm;
using csvio::Csv;
using csvio::fmt;

namespace {

struct CommonOpts {
  long n = 10000;
  int steps = 100;
  double theta0 = 0.5;
  int nlevels0 = 4;
  double tol = 1e-6;
  std::string kernel = "harmonic";
  std::string backend = "serial";
  int threads = 1;
  std::string tuner = "none";
  double cap = 0.1;
  std::uint64_t seed = 1;
  std::string out = "out.csv";
};

std::uint64_t substream(std::uint64_t master, const std::string& name) {
  return master ^ csvio::fnv1a(name);
}

FmmConfig make_engine_config(const CommonOpts& o) {
  FmmConfig cfg;
  cfg.theta = o.theta0;
  cfg.n_levels = o.nlevels0;
  cfg.tol = o.tol;
  cfg.kernel = o.kernel == "log" ? Kernel::logarithmic : Kernel::harmonic;
  cfg.p_rule = PRule::formula;
  cfg.backend = backend_from_string(o.backend);
  cfg.worker_threads = o.threads;
  return cfg;
}

std::string config_summary(const CommonOpts& o, const std::string& cmd) {
  std::ostringstream s;
  s << cmd << " n=" << o.n << " steps=" << o.steps << " theta0=" << o.theta0
    << " nlevels0=" << o.nlevels0 << " tol=" << o.tol << " kernel=" << o.kernel
    << " backend=" << o.backend << " threads=" << o.threads << " tuner=" << o.tuner
    << " cap=" << o.cap << " seed=" << o.seed;
  return s.str();
}

SourceSet make_distribution(const std::string& dist, long n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  SourceSet s;
  s.z.resize(n);
  s.m.resize(n);
  for (long i = 0; i < n; ++i) {
    if (dist == "line") {
      // thin band: the line-like scenario of interface simulations
      s.z[i] = cplx(uni(rng), 0.005 * uni(rng));
    } else {
      s.z[i] = cplx(uni(rng), uni(rng));
    }
    s.m[i] = cplx(uni(rng), 0.0);
  }
  return s;
}

const char* move_name(MoveKind k, int dir) {
  switch (k) {
    case MoveKind::theta: return dir > 0 ? "theta+" : "theta-";
    case MoveKind::nlevels: return dir > 0 ? "nl+" : "nl-";
    default: return "none";
  }
}

// ---------------------------------------------------------------- sweep ----

int cmd_sweep(const CommonOpts& o, double theta_min, double theta_max, double theta_step,
              const std::string& dist) {
  if (!(theta_min > 0 && theta_max < 1 && theta_min <= theta_max && theta_step > 0)) {
    std::cerr << "sweep: invalid theta range\n";
    return 2;
  }
  SourceSet src = make_distribution(dist, o.n, substream(o.seed, "dist"));
  EvalSet evals = EvalSet::self_of(src);
  FmmConfig cfg = make_engine_config(o);
  FmmEngine engine(cfg);

  Csv csv(o.out, config_summary(o, "sweep dist=" + dist));
  csv.header({"theta", "p", "n_levels", "t_partition", "t_p2m", "t_upward", "t_m2l", "t_p2p",
              "t_q", "t_total", "cpu_wait"});

  double best_theta = theta_min, best_time = 1e300;
  const int grid = static_cast<int>(std::floor((theta_max - theta_min) / theta_step + 1e-9));
  for (int gi = 0; gi <= grid; ++gi) {
    cfg.theta = std::min(theta_min + gi * theta_step, theta_max);
    engine.set_config(cfg);
    EvalResult res = engine.evaluate(src, evals);
    const PhaseTimings& t = res.timings;
    csv.row({fmt(cfg.theta), fmt(res.p), fmt(cfg.n_levels), fmt(t.t_partition), fmt(t.t_p2m),
             fmt(t.t_upward), fmt(t.t_m2l), fmt(t.t_p2p), fmt(t.t_q), fmt(t.t_total),
             fmt(t.cpu_wait)});
    if (t.t_total < best_time) {
      best_time = t.t_total;
      best_theta = cfg.theta;
    }
  }
  std::printf("sweep: dist=%s argmin theta=%.4f t=%.6f s\n", dist.c_str(), best_theta,
              best_time);
  return 0;
}

// ------------------------------------------------------------- simulate ----

struct SimTrace {
  Csv csv;
  Csv* timings = nullptr;
  Controller* ctl = nullptr;
  std::string controller_id;
  int iter = 0;
  double total_time = 0.0;
  std::uint64_t nl_probes = 0;

  SimTrace(const std::string& path, const std::string& summary) : csv(path, summary) {
    csv.header({"iteration", "controller_id", "theta", "n_levels", "p", "proposed_move",
                "accepted", "time", "cpu_wait"});
  }

  void observe(FmmEngine& eng, const EvalResult& res) {
    ++iter;
    total_time += res.timings.t_total;
    const FmmConfig& cfg = eng.config();
    if (timings) {
      const PhaseTimings& t = res.timings;
      timings->row({fmt(iter), fmt(cfg.theta), fmt(cfg.n_levels), fmt(res.p),
                    fmt(t.t_partition), fmt(t.t_p2m), fmt(t.t_upward), fmt(t.t_m2l),
                    fmt(t.t_p2p), fmt(t.t_q), fmt(t.t_total), fmt(t.cpu_wait)});
    }
    if (!ctl) return;
    Measurement m{iter, res.timings.t_total, res.timings.cpu_wait, eng.backend_concurrent()};
    const Params at = ctl->params();
    const Params next = ctl->step(m);
    const StepEvent& e = ctl->last_event();
    if (e.proposed == MoveKind::nlevels) ++nl_probes;
    csv.row({fmt(iter), controller_id, fmt(at.theta), fmt(at.n_levels), fmt(res.p),
             move_name(e.proposed, e.move_dir), fmt(e.accepted), fmt(m.time),
             fmt(m.cpu_wait)});
    if (next.theta != cfg.theta || next.n_levels != cfg.n_levels) {
      FmmConfig nc = cfg;
      nc.theta = next.theta;
      nc.n_levels = next.n_levels;
      eng.set_config(nc);
    }
  }
};

struct SnapshotWriter {
  Csv csv;
  int every;
  SnapshotWriter(const std::string& path, const std::string& summary, int every_)
      : csv(path, summary), every(every_) {
    csv.header({"step", "id", "x", "y", "strength", "u", "v"});
  }
  template <class Val>
  void write(int step, const std::vector<cplx>& pos, const Val& val,
             const std::vector<cplx>& vel) {
    if (every <= 0 || step % every != 0) return;
    for (std::size_t i = 0; i < pos.size(); ++i) {
      const cplx v = i < vel.size() ? vel[i] : cplx(0, 0);
      csv.row({fmt(step), fmt(static_cast<std::uint64_t>(i)), fmt(pos[i].real()),
               fmt(pos[i].imag()), fmt(static_cast<double>(val[i])), fmt(v.real()),
               fmt(v.imag())});
    }
  }
};

ControllerConfig controller_config(const CommonOpts& o, int nl_max) {
  ControllerConfig cc;
  cc.cap = o.cap;
  cc.nl_max = nl_max;
  return cc;
}

double run_simulation(const CommonOpts& o, const std::string& sim, TunerKind tuner,
                      SimTrace& trace, SnapshotWriter* snaps, const std::string& timings_out) {
  FmmConfig cfg = make_engine_config(o);
  cfg.kernel = Kernel::harmonic;  // all three applications use the harmonic kernel
  FmmEngine engine(cfg);

  Controller ctl(tuner, controller_config(o, std::max(o.nlevels0 + 3, 8)),
                 {o.theta0, o.nlevels0}, substream(o.seed, "tuner"));
  trace.ctl = tuner == TunerKind::none ? nullptr : &ctl;
  trace.controller_id = to_string(tuner);
  trace.iter = 0;
  trace.total_time = 0.0;

  Csv timings_holder(timings_out.empty() ? "/dev/null" : timings_out,
                     config_summary(o, "simulate-timings"));
  if (!timings_out.empty()) {
    timings_holder.header({"iteration", "theta", "n_levels", "p", "t_partition", "t_p2m",
                           "t_upward", "t_m2l", "t_p2p", "t_q", "t_total", "cpu_wait"});
    trace.timings = &timings_holder;
  } else {
    trace.timings = nullptr;
  }
  engine.set_observer([&trace](FmmEngine& e, const EvalResult& r) { trace.observe(e, r); });

  if (sim == "vortex") {
    const double aspect = 8.0;
    sims::VortexSystem sys =
        sims::init_shear_layer(static_cast<int>(o.n), aspect, 2.0 * aspect / double(o.n));
    if (snaps) snaps->write(0, sys.pos, sys.gamma, {});
    for (int s = 1; s <= o.steps; ++s) {
      auto vel = sims::vortex_velocities(sys, engine);
      sims::euler_step(sys, vel);
      if (snaps) snaps->write(s, sys.pos, sys.gamma, vel);
    }
  } else if (sim == "galaxy") {
    sims::GravitySystem sys =
        sims::init_rotating_disc(static_cast<int>(o.n), 1.0, 0.6, substream(o.seed, "disc"));
    sys.dt = 5e-3;
    if (snaps) snaps->write(0, sys.pos, sys.mass, sys.vel);
    if (o.steps > 0) {
      auto acc = sims::gravity_forces(sys, engine);
      for (int s = 1; s <= o.steps; ++s) {
        acc = sims::stormer_verlet_step(sys, acc, engine);
        if (snaps) snaps->write(s, sys.pos, sys.mass, sys.vel);
      }
    }
  } else if (sim == "cylinder") {
    sims::CylinderFlow flow;
    flow.R = 1.0;
    flow.V_inf = 1.0;
    flow.omega_wall = 0.5 * flow.V_inf;  // peripheral speed half the stream
    flow.nu = 2.0 * flow.R * flow.V_inf / 10000.0;
    flow.n_colloc = std::max(8, static_cast<int>(o.n));
    flow.vortices.dt = 0.05;
    flow.vortices.delta = 0.25 * flow.emission_offset();
    if (snaps) snaps->write(0, flow.vortices.pos, flow.vortices.gamma, {});
    for (int s = 1; s <= o.steps; ++s) {
      sims::emit_boundary_vortices(flow);
      sims::rk4_convect(flow, engine);
      if (snaps) snaps->write(s, flow.vortices.pos, flow.vortices.gamma, {});
    }
  } else {
    throw InvalidParameter("unknown simulation: " + sim);
  }
  return trace.total_time;
}

int cmd_simulate(const CommonOpts& o, const std::string& sim, int snap_every,
                 const std::string& snap_out, const std::string& timings_out, bool paired) {
  const TunerKind tuner = tuner_from_string(o.tuner);
  SimTrace trace(o.out, config_summary(o, "simulate sim=" + sim));
  SnapshotWriter snaps_holder(snap_out.empty() ? "/dev/null" : snap_out,
                              config_summary(o, "snapshots sim=" + sim), snap_every);
  SnapshotWriter* snaps = snap_out.empty() ? nullptr : &snaps_holder;

  double baseline = 0.0;
  if (paired && tuner != TunerKind::none) {
    baseline = run_simulation(o, sim, TunerKind::none, trace, nullptr, "");
  }
  const double total = run_simulation(o, sim, tuner, trace, snaps, timings_out);
  std::printf("simulate: sim=%s tuner=%s fmm_calls=%d total_fmm_time=%.6f s\n", sim.c_str(),
              o.tuner.c_str(), trace.iter, total);
  if (paired && tuner != TunerKind::none && total > 0.0)
    std::printf("simulate: paired baseline=%.6f s speedup=%.4f\n", baseline, baseline / total);
  return 0;
}

// ------------------------------------------------------------- capsweep ----

int cmd_capsweep(const CommonOpts& o, const std::string& caps_arg, int reps) {
  std::vector<double> caps;
  std::stringstream ss(caps_arg);
  std::string tok;
  while (std::getline(ss, tok, ',')) caps.push_back(std::stod(tok));
  if (caps.empty() || reps < 1) {
    std::cerr << "capsweep: need a cap list and reps >= 1\n";
    return 2;
  }

  Csv csv(o.out, config_summary(o, "capsweep"));
  csv.header({"cap", "reps", "mean_runtime", "std_runtime", "nl_probes",
              "rejected_probe_cost", "basetime", "probe_cost_fraction",
              "one_probe_allowance"});

  for (double cap : caps) {
    std::vector<double> runtimes;
    std::uint64_t nl_probes = 0;
    double spent = 0, basetime = 0, allowance = 0;
    for (int r = 0; r < reps; ++r) {
      CommonOpts ro = o;
      ro.cap = cap;
      ro.seed = o.seed + 1000 * static_cast<std::uint64_t>(r);

      FmmConfig cfg = make_engine_config(ro);
      FmmEngine engine(cfg);
      SimTrace trace("/dev/null", "capsweep-inner");
      Controller ctl(TunerKind::at3b, controller_config(ro, std::max(ro.nlevels0 + 3, 8)),
                     {ro.theta0, ro.nlevels0}, substream(ro.seed, "tuner"));
      trace.ctl = &ctl;
      trace.controller_id = "at3b";
      engine.set_observer(
          [&trace](FmmEngine& e, const EvalResult& res) { trace.observe(e, res); });

      sims::VortexSystem sys =
          sims::init_shear_layer(static_cast<int>(ro.n), 8.0, 16.0 / double(ro.n));
      for (int s = 1; s <= ro.steps; ++s)
        sims::euler_step(sys, sims::vortex_velocities(sys, engine));

      runtimes.push_back(trace.total_time);
      nl_probes += trace.nl_probes;
      spent += ctl.upcost() + ctl.downcost();
      basetime += ctl.basetime();
      allowance = std::max(allowance, ctl.max_probe_cost());
    }
    double mean = std::accumulate(runtimes.begin(), runtimes.end(), 0.0) / reps;
    double var = 0;
    for (double t : runtimes) var += (t - mean) * (t - mean);
    const double sd = reps > 1 ? std::sqrt(var / (reps - 1)) : 0.0;
    const double fraction = basetime > 0 ? spent / basetime : 0.0;
    csv.row({fmt(cap), fmt(reps), fmt(mean), fmt(sd), fmt(nl_probes), fmt(spent),
             fmt(basetime), fmt(fraction), fmt(basetime > 0 ? allowance / basetime : 0.0)});
    std::printf("capsweep: cap=%.3f mean=%.4f sd=%.4f probe_fraction=%.4f\n", cap, mean, sd,
                fraction);
  }
  return 0;
}

// ------------------------------------------------------------------ lab ----

WorkloadOracle make_oracle(const std::string& name, int iters) {
  WorkloadOracle o;
  o.nl_optimum = 5;
  o.noise_amp = 0.005;
  if (name == "basin") {
    o.basins = {Basin{0.47, 80.0, 0.0, 0.0}};
  } else if (name == "two-basin") {
    o.basins = {Basin{0.4, 90.0, 0.0, 0.0}, Basin{0.62, 90.0, 0.3, 0.3}};
  } else if (name == "switching") {
    o.basins = {Basin{0.4, 90.0, 0.0, 0.35}, Basin{0.62, 90.0, 0.35, 0.0}};
    o.switch_iteration = iters / 2;
  } else if (name == "drift") {
    o.basins = {Basin{0.35, 60.0, 0.0, 0.0}};
    o.drift_rate = 0.0004;
  } else if (name == "saw-drift") {
    o.basins = {Basin{0.3, 60.0, 0.0, 0.0}};
    o.drift_rate = 0.0005;
    o.saw_amp = 0.5;
    o.saw_period = 0.03;
  } else if (name == "flat") {
    o.basins = {Basin{0.5, 0.0, 0.0, 0.0}};
    o.nl_weight = 0.0;
    o.noise_amp = 0.0;
  } else {
    throw InvalidParameter("unknown oracle: " + name);
  }
  return o;
}

int cmd_lab(const CommonOpts& o, const std::string& oracle_name, int iters, bool concurrent) {
  WorkloadOracle oracle = make_oracle(oracle_name, iters);
  oracle.concurrent_mode = concurrent;
  const TunerKind tuner = tuner_from_string(o.tuner);

  Csv csv(o.out, config_summary(o, "lab oracle=" + oracle_name));
  csv.header({"iteration", "controller_id", "theta", "n_levels", "p", "proposed_move",
              "accepted", "time", "cpu_wait"});

  Controller ctl(tuner, controller_config(o, 10), {o.theta0, o.nlevels0},
                 substream(o.seed, "tuner"));
  Trajectory tr = run_controller(ctl, oracle, iters, substream(o.seed, "oracle"));
  for (const TraceRow& r : tr.rows) {
    const int p = choose_p_formula(o.tol, r.theta, 1.0);
    csv.row({fmt(r.iteration), to_string(tuner), fmt(r.theta), fmt(r.n_levels), fmt(p),
             move_name(r.proposed, r.move_dir), fmt(r.accepted), fmt(r.time),
             fmt(r.cpu_wait)});
  }

  const Params fin = ctl.settled_params();
  const double opt_end = oracle.optimum_theta(iters);
  const bool converged = std::abs(fin.theta - opt_end) <= 0.02 + 1e-12;
  int recover = -1;
  if (oracle.switch_iteration >= 0) {
    for (std::size_t i = static_cast<std::size_t>(oracle.switch_iteration);
         i < tr.rows.size(); ++i) {
      if (std::abs(tr.rows[i].theta - opt_end) <= 0.03) {
        recover = tr.rows[i].iteration - oracle.switch_iteration;
        break;
      }
    }
  }
  std::printf("lab: oracle=%s tuner=%s final_theta=%.4f optimum=%.4f converged=%d",
              oracle_name.c_str(), o.tuner.c_str(), fin.theta, opt_end, converged ? 1 : 0);
  if (oracle.switch_iteration >= 0) std::printf(" iterations_to_recover=%d", recover);
  std::printf("\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"balanced 2D FMM with online autotuning of (theta, n_levels)"};
  app.require_subcommand(1);

  CommonOpts o;
  std::string config_path;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "plain key=value config file; flags override");
    sub->add_option("--n", o.n, "problem size");
    sub->add_option("--steps", o.steps, "time steps");
    sub->add_option("--theta0", o.theta0, "initial theta");
    sub->add_option("--nlevels0", o.nlevels0, "initial n_levels");
    sub->add_option("--tol", o.tol, "relative tolerance");
    sub->add_option("--kernel", o.kernel, "harmonic|log")
        ->check(CLI::IsMember({"harmonic", "log"}));
    sub->add_option("--backend", o.backend, "serial|pool|throttled")
        ->check(CLI::IsMember({"serial", "pool", "throttled"}));
    sub->add_option("--threads", o.threads, "worker threads");
    sub->add_option("--tuner", o.tuner, "none|at1|at2|at3a|at3b")
        ->check(CLI::IsMember({"none", "at1", "at2", "at3a", "at3b"}));
    sub->add_option("--cap", o.cap, "at3b n_levels tuning budget (runtime fraction)");
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--out", o.out, "output CSV path");
  };

  double theta_min = 0.3, theta_max = 0.7, theta_step = 0.01;
  std::string dist = "uniform";
  std::string sim = "vortex";
  int snap_every = 0;
  std::string snap_out, timings_out;
  bool paired = false;
  std::string caps = "0,0.02,0.05,0.1,0.2";
  int reps = 3;
  std::string oracle_name = "basin";
  int iters = 500;
  bool concurrent = false;

  // Plain key=value config file applied as defaults before parsing, so
  // command-line flags override file values.
  const std::map<std::string, std::function<void(const std::string&)>> setters = {
      {"n", [&](const std::string& v) { o.n = std::stol(v); }},
      {"steps", [&](const std::string& v) { o.steps = std::stoi(v); }},
      {"theta0", [&](const std::string& v) { o.theta0 = std::stod(v); }},
      {"nlevels0", [&](const std::string& v) { o.nlevels0 = std::stoi(v); }},
      {"tol", [&](const std::string& v) { o.tol = std::stod(v); }},
      {"kernel", [&](const std::string& v) { o.kernel = v; }},
      {"backend", [&](const std::string& v) { o.backend = v; }},
      {"threads", [&](const std::string& v) { o.threads = std::stoi(v); }},
      {"tuner", [&](const std::string& v) { o.tuner = v; }},
      {"cap", [&](const std::string& v) { o.cap = std::stod(v); }},
      {"seed", [&](const std::string& v) { o.seed = std::stoull(v); }},
      {"out", [&](const std::string& v) { o.out = v; }},
      {"theta-min", [&](const std::string& v) { theta_min = std::stod(v); }},
      {"theta-max", [&](const std::string& v) { theta_max = std::stod(v); }},
      {"theta-step", [&](const std::string& v) { theta_step = std::stod(v); }},
      {"dist", [&](const std::string& v) { dist = v; }},
      {"sim", [&](const std::string& v) { sim = v; }},
      {"snap-every", [&](const std::string& v) { snap_every = std::stoi(v); }},
      {"snap-out", [&](const std::string& v) { snap_out = v; }},
      {"timings-out", [&](const std::string& v) { timings_out = v; }},
      {"caps", [&](const std::string& v) { caps = v; }},
      {"reps", [&](const std::string& v) { reps = std::stoi(v); }},
      {"oracle", [&](const std::string& v) { oracle_name = v; }},
      {"iters", [&](const std::string& v) { iters = std::stoi(v); }},
  };
  for (int i = 1; i + 1 < argc; ++i)
    if (std::strcmp(argv[i], "--config") == 0) config_path = argv[i + 1];
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) {
      std::cerr << "cannot open config file: " << config_path << "\n";
      return 2;
    }
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto h = line.find('#');
      if (h != std::string::npos) line.erase(h);
      while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back())))
        line.pop_back();
      if (line.empty()) continue;
      const auto eq = line.find('=');
      auto it = eq == std::string::npos ? setters.end() : setters.find(line.substr(0, eq));
      if (it == setters.end()) {
        std::cerr << config_path << ":" << lineno << ": unknown key in '" << line << "'\n";
        return 2;
      }
      try {
        it->second(line.substr(eq + 1));
      } catch (const std::exception&) {
        std::cerr << config_path << ":" << lineno << ": bad value in '" << line << "'\n";
        return 2;
      }
    }
  }

  CLI::App* sweep = app.add_subcommand("sweep", "static theta sweep at fixed N");
  add_common(sweep);
  sweep->add_option("--theta-min", theta_min);
  sweep->add_option("--theta-max", theta_max);
  sweep->add_option("--theta-step", theta_step);
  sweep->add_option("--dist", dist, "uniform|line")->check(CLI::IsMember({"uniform", "line"}));

  CLI::App* simulate = app.add_subcommand("simulate", "run a time-marching simulation");
  add_common(simulate);
  simulate->add_option("--sim", sim, "vortex|galaxy|cylinder")
      ->check(CLI::IsMember({"vortex", "galaxy", "cylinder"}));
  simulate->add_option("--snap-every", snap_every, "snapshot cadence (0 = off)");
  simulate->add_option("--snap-out", snap_out, "snapshot CSV path");
  simulate->add_option("--timings-out", timings_out, "per-evaluation timing CSV");
  simulate->add_flag("--paired", paired, "also run an untuned baseline with identical init");

  CLI::App* capsweep = app.add_subcommand("capsweep", "repeat a simulation across cap values");
  add_common(capsweep);
  capsweep->add_option("--caps", caps, "comma-separated cap list");
  capsweep->add_option("--reps", reps, "repetitions per cap");

  CLI::App* lab = app.add_subcommand("lab", "controllers against a synthetic workload");
  add_common(lab);
  lab->add_option("--oracle", oracle_name, "basin|two-basin|switching|drift|saw-drift|flat");
  lab->add_option("--iters", iters, "iterations");
  lab->add_flag("--concurrent", concurrent, "oracle emits a backend wait signal");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // usage errors exit 2, --help exits 0
  }

  try {
    if (sweep->parsed()) return cmd_sweep(o, theta_min, theta_max, theta_step, dist);
    if (simulate->parsed())
      return cmd_simulate(o, sim, snap_every, snap_out, timings_out, paired);
    if (capsweep->parsed()) return cmd_capsweep(o, caps, reps);
    if (lab->parsed()) return cmd_lab(o, oracle_name, iters, concurrent);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
