// polydiff: command-line front end. Every command prints JSON on stdout.
// Exit status 0 means a result was computed (possibly a negative verdict or
// an error object); 2 means the invocation or its inputs were unusable.

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

#include "polydiff/io.hpp"

using namespace polydiff;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string model, H, q, x0, scheme = "sphere", out;
  int d = 0, k = -1, max_iter = 50000, n_seeds = 4;
  double T = 1.0, h = -1.0, tol = -1.0, kappa = 0.0, nu = 0.0, eps = 0.0, threshold = 1.0 - 1e-3;
  std::int64_t paths = 1000;
  std::optional<std::uint64_t> seed;
  bool full_paths = false;
};

/// Runs an input-loading step, turning any failure into a usage error.
template <typename F>
auto input(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const UsageError&) {
    throw;
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

io::ModelFile load_model(const Options& o) {
  if (o.model.empty()) throw UsageError("--model is required");
  return input([&] { return io::model_from_json(io::load_json_file_or_inline(o.model, "--model")); });
}

HMatrix load_h(const Options& o) {
  if (o.H.empty()) throw UsageError("--H is required");
  return input([&] {
    if (o.H == "counterexample") return counterexample_d6_h();
    if (o.H == "id" || o.H == "-id") {
      if (o.d < 1) throw UsageError("--H " + o.H + " needs --d");
      const HMatrix id = HMatrix::identity(o.d);
      return o.H == "id" ? id : -1.0 * id;
    }
    const Json j = io::parse_json_arg(o.H, "--H");
    if (j.is_array()) {
      Json wrapped{{"H", j}};
      if (o.d > 0) wrapped["d"] = o.d;
      return io::hmatrix_from_json(wrapped);
    }
    const HMatrix h = io::hmatrix_from_json(j);
    if (o.d > 0 && h.d() != o.d) throw UsageError("--d does not match the dimension of --H");
    return h;
  });
}

Vector load_x0(const Options& o, const std::string& flag = "--x0") {
  if (o.x0.empty()) throw UsageError(flag + " is required");
  return input([&] {
    if (o.x0.front() == '[' || o.x0.front() == '@') return io::vector_from_json(io::parse_json_arg(o.x0, flag), flag);
    std::string s = o.x0;
    for (char& c : s)
      if (c == ',') c = ' ';
    std::istringstream in(s);
    std::vector<double> v;
    std::string tok;
    while (in >> tok) {
      std::size_t used = 0;
      double x = 0.0;
      try {
        x = std::stod(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size()) throw UsageError(flag + ": cannot parse \"" + tok + "\"");
      v.push_back(x);
    }
    if (v.empty()) throw UsageError(flag + ": empty vector");
    return Vector(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
  });
}

Polynomial load_q(const Options& o, int d) {
  if (o.q.empty()) throw UsageError("--q is required");
  return input([&] {
    const char c = o.q.front();
    if (c == '{' || c == '@') {
      const Polynomial p = io::polynomial_from_json(io::parse_json_arg(o.q, "--q"), d);
      if (p.nvars() != d) throw UsageError("--q has the wrong number of variables");
      return p;
    }
    return io::parse_polynomial(o.q, d);
  });
}

std::uint64_t need_seed(const Options& o) {
  if (!o.seed) throw UsageError("--seed is required for stochastic commands");
  return *o.seed;
}

void emit(const Json& j, const Options& o) {
  const std::string text = j.dump(2) + "\n";
  if (!o.out.empty() && o.out.size() > 5 && o.out.substr(o.out.size() - 5) == ".json") {
    std::ofstream f(o.out, std::ios::binary);
    if (!f || !(f << text)) throw UsageError("cannot write \"" + o.out + "\"");
    return;
  }
  std::cout << text;
}

bool wants_csv(const Options& o) { return o.out.size() > 4 && o.out.substr(o.out.size() - 4) == ".csv"; }

// ---- commands ----

Json cmd_dims(const Options& o) {
  if (o.d < 1) throw UsageError("--d must be >= 1");
  return Json{{"m", binomial(o.d, 2)}, {"dim_C", dim_c_space(o.d)}, {"dim_K", dim_kernel(o.d)}};
}

Json cmd_sos_check(const Options& o) {
  const HMatrix h = load_h(o);
  const double tol = o.tol > 0 ? o.tol : 1e-9;
  return io::verdict_to_json(h, sos_check(h, tol, o.max_iter));
}

Json cmd_decompose(const Options& o) {
  const HMatrix h = load_h(o);
  const double tol = o.tol > 0 ? o.tol : 1e-9;
  const SosVerdict v = sos_check(h, tol, o.max_iter);
  Json j{{"status", to_string(v.status)}};
  if (v.status != SosStatus::Feasible) {
    j["factors"] = nullptr;
    return j;
  }
  Json f = Json::array();
  for (const auto& a : v.factors) f.push_back(io::to_json(a.dense()));
  j["factors"] = f;
  j["H_star"] = io::to_json(v.h_star);
  j["c"] = io::to_json(cmap_from_factors(h.d(), v.factors))["c"];
  j["reconstruction_residual"] =
      (cmap_from_factors(h.d(), v.factors).coeff_vector() - c_H_map(h).coeff_vector()).cwiseAbs().maxCoeff();
  return j;
}

Json cmd_counterexample(const Options&) { return io::to_json(counterexample_d6()); }

Json cmd_validate(const Options& o) {
  const io::ModelFile f = load_model(o);
  Json j;
  if (f.space == StateSpace::Ball) {
    const double tol = o.tol > 0 ? o.tol : 1e-7;
    const BallValidation v = validate_ball(f.ball, tol);
    j = io::to_json(v);
    if (v.status != Admissibility::NotAdmissible) j["boundary"] = io::to_json(boundary_attainment(f.ball, tol));
  } else {
    j = io::to_json(validate_sphere(f.sphere, o.tol > 0 ? o.tol : 1e-9));
  }
  j["model"] = io::to_json(f);
  return j;
}

Json cmd_moments(const Options& o) {
  const io::ModelFile f = load_model(o);
  const Polynomial q = load_q(o, f.d());
  const Vector x = load_x0(o, "--x");
  if (x.size() != f.d()) throw UsageError("--x has the wrong dimension");
  const int k = o.k >= 0 ? o.k : q.degree();
  const GeneratorMatrix gm = f.space == StateSpace::Ball ? build_Gk(f.ball, k) : build_Gk(f.sphere, k);
  if (q.degree() > k) throw ArgumentError("deg q exceeds --k");
  return Json{{"value", moment(gm, q, x, o.T)}, {"k", k}, {"basis_size", gm.basis.size()}, {"t", o.T}};
}

SkewDrive sphere_drive(const io::ModelFile& f) {
  return f.drive ? *f.drive : drive_from_sphere_model(f.sphere);
}

BallDrive ball_drive(const io::ModelFile& f) {
  if (!f.drive) return drive_from_ball_model(f.ball);
  return BallDrive{*f.drive, sym_part(f.ball.B) + 0.5 * f.drive->gram()};
}

void write_csv(const Options& o, const Ensemble& e, const EnsembleSpec& spec) {
  std::ofstream f(o.out, std::ios::binary);
  if (!f) throw UsageError("cannot write \"" + o.out + "\"");
  f << std::setprecision(17) << "path_id,t";
  for (int i = 1; i <= e.d; ++i) f << ",x" << i;
  f << "\n";
  for (std::int64_t p = 0; p < e.paths(); ++p) {
    if (o.full_paths) {
      const PathSample s = detail::sample_path(spec.plan, static_cast<std::uint64_t>(p));
      for (Eigen::Index i = 0; i < s.times.size(); ++i) {
        f << p << "," << s.times(i);
        for (int r = 0; r < e.d; ++r) f << "," << s.states(r, i);
        f << "\n";
      }
    } else {
      f << p << "," << spec.plan.T;
      for (int r = 0; r < e.d; ++r) f << "," << e.terminal(r, p);
      f << "\n";
    }
  }
  if (!f) throw UsageError("cannot write \"" + o.out + "\"");
}

Json cmd_simulate(const Options& o) {
  const std::uint64_t seed = need_seed(o);
  const Vector x0 = load_x0(o);
  const double h = o.h > 0 ? o.h : 1e-3 * o.T;
  if (o.paths < 1) throw UsageError("--paths must be >= 1");
  std::optional<io::ModelFile> f;
  if (!o.model.empty()) f = load_model(o);
  const int d = static_cast<int>(x0.size());
  if (f && f->d() != d) throw UsageError("--x0 dimension does not match the model");

  EnsembleSpec spec;
  std::optional<BallModel> ball_equiv;
  std::optional<SphereModel> sphere_equiv;
  if (o.scheme == "sphere") {
    if (!f || f->space != StateSpace::Sphere) throw UsageError("--scheme sphere needs a sphere --model");
    const SkewDrive dr = sphere_drive(*f);
    spec = EnsembleSpec::sphere(dr, x0, o.T, h, seed, o.paths);
    sphere_equiv = SphereModel(h_from_drive(dr), drift_from_drive(Matrix::Zero(d, d), dr));
  } else if (o.scheme == "ball") {
    if (!f || f->space != StateSpace::Ball) throw UsageError("--scheme ball needs a ball --model");
    const BallDrive bd = ball_drive(*f);
    spec = EnsembleSpec::ball(f->ball.b, bd.bhat, f->ball.alpha, bd.drive, x0, o.T, h, seed, o.paths);
    ball_equiv = BallModel(f->ball.alpha, h_from_drive(bd.drive), f->ball.b, drift_from_drive(bd.bhat, bd.drive));
  } else if (o.scheme == "scalar") {
    if (!(o.kappa > 0) || !(o.nu > 0)) throw UsageError("--scheme scalar needs --kappa > 0 and --nu > 0");
    SkewDrive dr(d);
    if (f) dr = f->drive ? *f->drive : (f->space == StateSpace::Ball ? ball_drive(*f).drive : sphere_drive(*f));
    spec = EnsembleSpec::scalar(o.kappa, o.nu, dr, x0, o.T, h, seed, o.paths);
    ball_equiv = scalar_ball_model(o.kappa, o.nu, dr);
  } else {
    throw UsageError("--scheme must be sphere, ball or scalar");
  }

  const Ensemble e = simulate_ensemble(spec);
  Json j{{"scheme", e.scheme},
         {"d", e.d},
         {"paths", e.paths()},
         {"steps", e.steps},
         {"h", e.h},
         {"T", o.T},
         {"seed", seed},
         {"terminal_mean", io::to_json(Vector(e.terminal.rowwise().mean()))},
         {"max_sphere_deviation", e.max_sphere_dev.maxCoeff()},
         {"clamps", e.clamps},
         {"clamp_rate", e.clamp_rate()}};
  if (ball_equiv) {
    j["B"] = io::to_json(ball_equiv->B);
    j["proximity_threshold"] = o.threshold;
    j["proximity_fraction"] = e.proximity_fraction(o.threshold);
  }
  if (o.scheme == "scalar") {
    j["y_residual_mean"] = e.y_residual.mean();
    j["boundary"] = io::to_json(boundary_attainment(*ball_equiv));
  }
  if (!o.q.empty()) {
    const Polynomial q = load_q(o, d);
    Json mj = io::to_json(mc_moment(e, q));
    const int k = q.degree();
    mj["generator"] = ball_equiv ? moment(*ball_equiv, q, x0, o.T, k) : moment(*sphere_equiv, q, x0, o.T, k);
    j["moment"] = mj;
  }
  if (wants_csv(o)) {
    write_csv(o, e, spec);
    j["csv"] = o.out;
  }
  return j;
}

Json cmd_twin(const Options& o) {
  const std::uint64_t seed = need_seed(o);
  const Vector x0 = load_x0(o);
  if (!(o.kappa > 0) || !(o.nu > 0)) throw UsageError("twin needs --kappa > 0 and --nu > 0");
  SkewDrive dr(static_cast<int>(x0.size()));
  if (!o.model.empty()) {
    const io::ModelFile f = load_model(o);
    if (f.d() != x0.size()) throw UsageError("--x0 dimension does not match the model");
    dr = f.drive ? *f.drive : (f.space == StateSpace::Ball ? ball_drive(f).drive : sphere_drive(f));
  }
  const double h = o.h > 0 ? o.h : 1e-3 * o.T;
  Json j = io::to_json(twin_path_experiment(o.kappa, o.nu, dr, x0, o.T, h, o.n_seeds, o.eps, seed));
  j["T"] = o.T;
  j["h"] = h;
  j["seed"] = seed;
  return j;
}

Json cmd_density(const Options& o) {
  const io::ModelFile f = load_model(o);
  const Vector x0 = load_x0(o);
  if (x0.size() != f.d()) throw UsageError("--x0 dimension does not match the model");
  const double tol = o.tol > 0 ? o.tol : 1e-9;
  if (f.space == StateSpace::Sphere) return io::to_json(density_check_sphere(sphere_drive(f), x0, tol));
  const BallDrive bd = ball_drive(f);
  Json j = io::to_json(density_check_ball(bd.drive, f.ball.alpha, x0, tol));
  // the criterion presumes Bhat = -alpha / 2
  j["bhat_matches"] = (bd.bhat + 0.5 * f.ball.alpha).cwiseAbs().maxCoeff() <= 1e-9;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Polynomial diffusions on the unit ball and sphere"};
  app.set_help_flag("--help", "print help");  // -h is the step size
  app.require_subcommand(1);
  Options o;
  auto add_model = [&](CLI::App* c) { c->add_option("--model", o.model, "model JSON file, inline JSON or @file"); };
  auto add_seed = [&](CLI::App* c) { c->add_option("--seed", o.seed, "RNG seed (required)"); };

  auto* dims = app.add_subcommand("dims", "dimensions m, dim C and dim K for a given d");
  dims->add_option("--d", o.d, "dimension")->required();

  auto* sos = app.add_subcommand("sos-check", "decide whether c_H is a sum of squares");
  auto* dec = app.add_subcommand("decompose", "skew factors A_p with c_H(x) = sum A_p x x^T A_p^T");
  for (auto* c : {sos, dec}) {
    c->add_option("--H", o.H, "id, -id, counterexample, JSON or @file");
    c->add_option("--d", o.d, "dimension for --H id or a bare matrix");
    c->add_option("--tol", o.tol, "feasibility tolerance");
    c->add_option("--max-iter", o.max_iter, "iteration budget");
  }

  auto* ce = app.add_subcommand("counterexample", "verification report for the d = 6 counterexample");

  auto* val = app.add_subcommand("validate", "admissibility report for a model");
  add_model(val);
  val->add_option("--tol", o.tol, "tolerance for the inequality margins");

  auto* mom = app.add_subcommand("moments", "E[q(X_t) | X_0 = x] from the generator matrix");
  add_model(mom);
  mom->add_option("--q", o.q, "polynomial: shorthand like \"x1^2 - x2\", JSON or @file");
  mom->add_option("--x,--x0", o.x0, "starting point, e.g. \"0.3,0\"");
  mom->add_option("--t,--T", o.T, "time horizon");
  mom->add_option("--k", o.k, "degree of the polynomial space (default deg q)");

  auto* sim = app.add_subcommand("simulate", "Monte Carlo simulation");
  add_model(sim);
  add_seed(sim);
  sim->add_option("--scheme", o.scheme, "sphere, ball or scalar")->check(CLI::IsMember({"sphere", "ball", "scalar"}));
  sim->add_option("--x0", o.x0, "starting point");
  sim->add_option("--T", o.T, "time horizon");
  sim->add_option("--h", o.h, "step size (default 1e-3 T)");
  sim->add_option("--paths", o.paths, "number of paths");
  sim->add_option("--q", o.q, "polynomial to estimate at time T");
  sim->add_option("--kappa", o.kappa, "scalar scheme: mean reversion");
  sim->add_option("--nu", o.nu, "scalar scheme: radial volatility");
  sim->add_option("--threshold", o.threshold, "norm threshold for the boundary-proximity fraction");
  sim->add_flag("--full-paths", o.full_paths, "CSV holds every grid point instead of terminal states");

  auto* twin = app.add_subcommand("twin", "pathwise-uniqueness twin-path experiment");
  add_model(twin);
  add_seed(twin);
  twin->add_option("--x0", o.x0, "boundary starting point");
  twin->add_option("--kappa", o.kappa, "mean reversion")->required();
  twin->add_option("--nu", o.nu, "radial volatility")->required();
  twin->add_option("--T", o.T, "time horizon");
  twin->add_option("--h", o.h, "step size (default 1e-3 T)");
  twin->add_option("--n-seeds", o.n_seeds, "number of noise seeds");
  twin->add_option("--eps", o.eps, "angular split of the two starting points");

  auto* den = app.add_subcommand("density", "smooth-density check via the bracket closure");
  add_model(den);
  den->add_option("--x0", o.x0, "starting point");
  den->add_option("--tol", o.tol, "rank and membership tolerance");

  for (auto* c : {dims, sos, dec, ce, val, mom, twin, den}) c->add_option("--out", o.out, "write JSON here");
  sim->add_option("--out", o.out, "output: .csv for states, .json for the summary");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const std::pair<CLI::App*, Json (*)(const Options&)> table[] = {
      {dims, cmd_dims},     {sos, cmd_sos_check}, {dec, cmd_decompose}, {ce, cmd_counterexample}, {val, cmd_validate},
      {mom, cmd_moments},   {sim, cmd_simulate},  {twin, cmd_twin},     {den, cmd_density}};
  for (const auto& [sub, fn] : table) {
    if (!sub->parsed()) continue;
    Json result;
    try {
      result = fn(o);
    } catch (const UsageError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    } catch (const std::exception& e) {
      result = Json{{"error", e.what()}};
    }
    try {
      emit(result, o);
    } catch (const UsageError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    }
    return 0;
  }
  return 2;
}
