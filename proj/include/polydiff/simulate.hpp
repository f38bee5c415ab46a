#pragma once

// Structure-preserving simulation of the rotation-driven diffusions on the
// sphere and the ball, Monte Carlo moments, and the twin-path experiment.
//
// Sphere: X <- exp(A0 h + sum_p A_p dW_p) X, an orthogonal step.
// Ball: the same rotation, then an Euler step of
//   dX = (b + Bhat X) dt + sqrt(1 - |X|^2) alpha^{1/2} dW
// with a clamp back into the ball on overshoot.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "polydiff/drive.hpp"
#include "polydiff/model.hpp"
#include "polydiff/polynomial.hpp"
#include "polydiff/rng.hpp"

namespace polydiff {

enum class Scheme { Sphere, Ball, Scalar };

inline std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::Sphere: return "sphere";
    case Scheme::Ball: return "ball";
    case Scheme::Scalar: return "scalar";
  }
  return "?";
}

struct PathSample {
  Vector times;
  Matrix states;  // d x (n+1), column i is X at times(i)
  std::uint64_t seed = 0;
  std::uint64_t path_id = 0;
  std::string scheme;
  std::int64_t clamps = 0;
  Matrix B;  // ball schemes: linear drift of the simulated equation
};

/// Everything a path needs besides its noise.
struct StepPlan {
  Scheme scheme = Scheme::Sphere;
  int d = 1;
  SkewDrive drive;
  Vector b;
  Matrix bhat;
  Matrix sqrt_alpha;
  Vector x0;
  double T = 1.0;
  double h = 1e-3;  // requested; the grid uses T / round(T / h)
  std::uint64_t seed = 0;

  int steps() const { return std::max(1, static_cast<int>(std::llround(T / h))); }
  double step() const { return T / steps(); }
  bool radial() const { return scheme != Scheme::Sphere; }
  int noise_dim() const { return drive.m() + (radial() ? d : 0); }
};

struct PathStats {
  Vector terminal;
  double max_norm = 0.0;
  double max_sphere_dev = 0.0;  // max_i | |X_i| - 1 |
  std::int64_t clamps = 0;
  double y_residual = 0.0;  // scalar scheme: sum of Y-drift residuals / T
};

namespace detail {

inline constexpr double kClampRadius = 1.0 - 1e-15;

template <int D>
struct PathKernel {
  using Mat = Eigen::Matrix<double, D, D>;
  using Vec = Eigen::Matrix<double, D, 1>;

  const StepPlan& plan;
  Mat a0;
  std::vector<Mat> a;
  Mat bhat, sqrt_alpha;
  Vec b;
  bool rotates = false;
  double kappa = 0.0, nu = 0.0;  // scalar scheme only

  explicit PathKernel(const StepPlan& p) : plan(p) {
    const int d = p.d;
    a0 = p.drive.A0.dense();
    for (const auto& ap : p.drive.A) a.push_back(ap.dense());
    rotates = !a.empty() || !p.drive.A0.coords().isZero(0.0);
    if (p.radial()) {
      bhat = p.bhat;
      sqrt_alpha = p.sqrt_alpha;
      b = p.b;
    } else {
      bhat = Mat::Zero(d, d);
      sqrt_alpha = Mat::Zero(d, d);
      b = Vec::Zero(d);
    }
    if (p.scheme == Scheme::Scalar) {
      kappa = -p.bhat(0, 0);
      nu = p.sqrt_alpha(0, 0);
    }
  }

  PathStats run(std::uint64_t path_id, Matrix* record) const {
    const int d = plan.d;
    const int n = plan.steps();
    const double h = plan.step();
    const double sh = std::sqrt(h);
    const int nrot = static_cast<int>(a.size());
    const NoiseStream noise(plan.seed, path_id);
    std::vector<double> g(static_cast<std::size_t>(plan.noise_dim()));
    Vec x = plan.x0;
    Mat gen(d, d);
    Vec w(d);
    PathStats st;
    auto observe = [&](int i) {
      const double r = x.norm();
      st.max_norm = std::max(st.max_norm, r);
      st.max_sphere_dev = std::max(st.max_sphere_dev, std::abs(r - 1.0));
      if (record) record->col(i) = x;
    };
    observe(0);
    double y_res = 0.0;
    for (int i = 0; i < n; ++i) {
      noise.gaussians(static_cast<std::uint32_t>(i), plan.noise_dim(), g);
      if (rotates) {
        gen = h * a0;
        for (int p = 0; p < nrot; ++p) gen += (sh * g[static_cast<std::size_t>(p)]) * a[static_cast<std::size_t>(p)];
        x = expm(gen) * x;
      }
      if (plan.radial()) {
        for (int k = 0; k < d; ++k) w(k) = sh * g[static_cast<std::size_t>(nrot + k)];
        const double r2 = x.squaredNorm();
        const double y = std::max(0.0, 1.0 - r2);
        const double sy = std::sqrt(y);
        const double xw = x.dot(w);
        x += (b + bhat * x) * h + sy * (sqrt_alpha * w);
        const double r = x.norm();
        if (r > 1.0) {
          x *= kClampRadius / r;
          ++st.clamps;
        }
        if (plan.scheme == Scheme::Scalar) {
          const double dy = (1.0 - x.squaredNorm()) - y;
          y_res += dy + 2.0 * nu * sy * xw - (2.0 * kappa * r2 - d * nu * nu * y) * h;
        }
      }
      observe(i + 1);
    }
    st.terminal = Vector(x);
    st.y_residual = y_res / plan.T;
    return st;
  }
};

template <typename F>
decltype(auto) dispatch_dim(int d, F&& f) {
  switch (d) {
    case 1: return f(std::integral_constant<int, 1>{});
    case 2: return f(std::integral_constant<int, 2>{});
    case 3: return f(std::integral_constant<int, 3>{});
    case 4: return f(std::integral_constant<int, 4>{});
    case 5: return f(std::integral_constant<int, 5>{});
    case 6: return f(std::integral_constant<int, 6>{});
    case 7: return f(std::integral_constant<int, 7>{});
    case 8: return f(std::integral_constant<int, 8>{});
    default: return f(std::integral_constant<int, Eigen::Dynamic>{});
  }
}

inline void check_plan(const StepPlan& p) {
  const int d = p.d;
  if (d < 1) throw ArgumentError("simulate: d must be >= 1");
  if (!(p.h > 0.0) || !(p.T > 0.0)) throw ArgumentError("simulate: T and h must be positive");
  if (p.drive.d != d) throw ArgumentError("simulate: drive dimension does not match x0");
  if (p.x0.size() != d) throw ArgumentError("simulate: x0 dimension mismatch");
  for (const auto& ap : p.drive.A)
    if (ap.d() != d) throw ArgumentError("simulate: drive matrices have mixed dimensions");
  if (std::llround(p.T / p.h) >= (1LL << 31) - 1) throw ArgumentError("simulate: too many steps");
  const double r = p.x0.norm();
  if (p.scheme == Scheme::Sphere) {
    if (std::abs(r - 1.0) > 1e-12) throw ArgumentError("simulate_sphere: x0 must be a unit vector");
  } else {
    if (r > 1.0 + 1e-12) throw ArgumentError("simulate_ball: x0 must lie in the closed unit ball");
    if (p.b.size() != d || p.bhat.rows() != d || p.bhat.cols() != d || p.sqrt_alpha.rows() != d ||
        p.sqrt_alpha.cols() != d) {
      throw ArgumentError("simulate_ball: coefficient shapes do not match d=" + std::to_string(d));
    }
  }
}

inline PathStats run_path(const StepPlan& p, std::uint64_t path_id, Matrix* record) {
  return dispatch_dim(p.d, [&](auto dim) {
    const PathKernel<decltype(dim)::value> k(p);
    return k.run(path_id, record);
  });
}

inline PathSample sample_path(const StepPlan& p, std::uint64_t path_id) {
  check_plan(p);
  const int n = p.steps();
  PathSample s;
  s.states.resize(p.d, n + 1);
  const PathStats st = run_path(p, path_id, &s.states);
  s.times = Vector::LinSpaced(n + 1, 0.0, p.T);
  s.seed = p.seed;
  s.path_id = path_id;
  s.scheme = to_string(p.scheme);
  s.clamps = st.clamps;
  if (p.radial()) s.B = drift_from_drive(p.bhat, p.drive);
  return s;
}

inline StepPlan ball_plan(const Vector& b, const Matrix& bhat, const Matrix& alpha, const SkewDrive& drive,
                          const Vector& x0, double T, double h, std::uint64_t seed) {
  if (bhat.rows() != bhat.cols() || alpha.rows() != alpha.cols()) {
    throw ArgumentError("simulate_ball: Bhat and alpha must be square");
  }
  if (bhat.size() > 0 && max_eigenvalue(sym_part(bhat)) > 1e-12) {
    throw ArgumentError("simulate_ball: Bhat must be negative semidefinite");
  }
  if (alpha.size() > 0 && min_eigenvalue(sym_part(alpha)) < -1e-12) {
    throw ArgumentError("simulate_ball: alpha must be positive semidefinite");
  }
  StepPlan p;
  p.scheme = Scheme::Ball;
  p.d = static_cast<int>(x0.size());
  p.drive = drive;
  p.b = b;
  p.bhat = sym_part(bhat);
  p.sqrt_alpha = alpha.size() ? psd_sqrt(sym_part(alpha)) : alpha;
  p.x0 = x0;
  p.T = T;
  p.h = h;
  p.seed = seed;
  return p;
}

inline StepPlan scalar_plan(double kappa, double nu, const SkewDrive& drive, const Vector& x0, double T, double h,
                            std::uint64_t seed) {
  if (!(kappa > 0.0) || !(nu > 0.0)) throw ArgumentError("simulate_scalar_ball: kappa and nu must be positive");
  const int d = static_cast<int>(x0.size());
  StepPlan p = ball_plan(Vector::Zero(d), -kappa * Matrix::Identity(d, d), nu * nu * Matrix::Identity(d, d), drive,
                         x0, T, h, seed);
  p.scheme = Scheme::Scalar;
  p.sqrt_alpha = nu * Matrix::Identity(d, d);
  return p;
}

inline StepPlan sphere_plan(const SkewDrive& drive, const Vector& x0, double T, double h, std::uint64_t seed) {
  StepPlan p;
  p.scheme = Scheme::Sphere;
  p.d = static_cast<int>(x0.size());
  p.drive = drive;
  p.x0 = x0;
  p.T = T;
  p.h = h;
  p.seed = seed;
  return p;
}

}  // namespace detail

inline PathSample simulate_sphere(const SkewDrive& drive, const Vector& x0, double T, double h, std::uint64_t seed,
                                  std::uint64_t path_id = 0) {
  return detail::sample_path(detail::sphere_plan(drive, x0, T, h, seed), path_id);
}

inline PathSample simulate_ball(const Vector& b, const Matrix& bhat, const Matrix& alpha, const SkewDrive& drive,
                                const Vector& x0, double T, double h, std::uint64_t seed, std::uint64_t path_id = 0) {
  return detail::sample_path(detail::ball_plan(b, bhat, alpha, drive, x0, T, h, seed), path_id);
}

struct ScalarPath {
  PathSample path;
  Vector Y;                  // 1 - |X|^2 on the grid
  double y_residual = 0.0;   // sum over steps of the Y-drift residual, divided by T
  double y_drift_scale = 0.0;  // mean |2 kappa |X|^2 - d nu^2 Y| along the path, for scale
};

/// dX = -kappa X dt + nu sqrt(1 - |X|^2) dW + rotation. The residual
/// compares each Y increment, with its martingale part removed, against
/// (2 kappa |X|^2 - d nu^2 Y) h.
inline ScalarPath simulate_scalar_ball(double kappa, double nu, const SkewDrive& drive, const Vector& x0, double T,
                                       double h, std::uint64_t seed, std::uint64_t path_id = 0) {
  const StepPlan p = detail::scalar_plan(kappa, nu, drive, x0, T, h, seed);
  detail::check_plan(p);
  ScalarPath out;
  const int n = p.steps();
  out.path.states.resize(p.d, n + 1);
  const PathStats st = detail::run_path(p, path_id, &out.path.states);
  out.path.times = Vector::LinSpaced(n + 1, 0.0, T);
  out.path.seed = seed;
  out.path.path_id = path_id;
  out.path.scheme = to_string(Scheme::Scalar);
  out.path.clamps = st.clamps;
  out.path.B = drift_from_drive(p.bhat, p.drive);
  out.y_residual = st.y_residual;
  out.Y.resize(n + 1);
  double scale = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double r2 = out.path.states.col(i).squaredNorm();
    out.Y(i) = 1.0 - r2;
    if (i < n) scale += std::abs(2.0 * kappa * r2 - p.d * nu * nu * out.Y(i));
  }
  out.y_drift_scale = scale / n;
  return out;
}

/// The ball model simulated by simulate_scalar_ball.
inline BallModel scalar_ball_model(double kappa, double nu, const SkewDrive& drive) {
  const int d = drive.d;
  return BallModel(nu * nu * Matrix::Identity(d, d), h_from_drive(drive), Vector::Zero(d),
                   drift_from_drive(-kappa * Matrix::Identity(d, d), drive));
}

/// A batch of independent paths sharing one plan; path i uses noise stream i.
struct EnsembleSpec {
  StepPlan plan;
  std::int64_t paths = 1;
  int threads = 0;  // 0: hardware concurrency

  static EnsembleSpec sphere(const SkewDrive& drive, const Vector& x0, double T, double h, std::uint64_t seed,
                             std::int64_t paths) {
    return {detail::sphere_plan(drive, x0, T, h, seed), paths, 0};
  }
  static EnsembleSpec ball(const Vector& b, const Matrix& bhat, const Matrix& alpha, const SkewDrive& drive,
                           const Vector& x0, double T, double h, std::uint64_t seed, std::int64_t paths) {
    return {detail::ball_plan(b, bhat, alpha, drive, x0, T, h, seed), paths, 0};
  }
  static EnsembleSpec scalar(double kappa, double nu, const SkewDrive& drive, const Vector& x0, double T, double h,
                             std::uint64_t seed, std::int64_t paths) {
    return {detail::scalar_plan(kappa, nu, drive, x0, T, h, seed), paths, 0};
  }
};

struct Ensemble {
  std::string scheme;
  int d = 1;
  int steps = 0;
  double h = 0.0;
  std::uint64_t seed = 0;
  Matrix terminal;        // d x paths
  Vector max_norm;        // per path, over the grid
  Vector max_sphere_dev;  // per path
  Vector y_residual;      // per path, scalar scheme only
  std::int64_t clamps = 0;

  std::int64_t paths() const { return terminal.cols(); }
  std::int64_t total_steps() const { return paths() * steps; }
  double clamp_rate() const { return total_steps() ? static_cast<double>(clamps) / total_steps() : 0.0; }

  /// Fraction of paths whose norm exceeded `radius` somewhere on the grid.
  double proximity_fraction(double radius) const {
    if (paths() == 0) return 0.0;
    return static_cast<double>((max_norm.array() > radius).count()) / paths();
  }
};

inline Ensemble simulate_ensemble(const EnsembleSpec& spec) {
  const StepPlan& p = spec.plan;
  detail::check_plan(p);
  if (spec.paths < 1) throw ArgumentError("simulate_ensemble: need at least one path");
  Ensemble e;
  e.scheme = to_string(p.scheme);
  e.d = p.d;
  e.steps = p.steps();
  e.h = p.step();
  e.seed = p.seed;
  e.terminal.resize(p.d, spec.paths);
  e.max_norm.resize(spec.paths);
  e.max_sphere_dev.resize(spec.paths);
  e.y_residual.resize(spec.paths);
  std::vector<std::int64_t> clamps(static_cast<std::size_t>(spec.paths), 0);

  auto work = [&](std::int64_t lo, std::int64_t hi) {
    detail::dispatch_dim(p.d, [&](auto dim) {
      const detail::PathKernel<decltype(dim)::value> k(p);
      for (std::int64_t i = lo; i < hi; ++i) {
        const PathStats st = k.run(static_cast<std::uint64_t>(i), nullptr);
        e.terminal.col(i) = st.terminal;
        e.max_norm(i) = st.max_norm;
        e.max_sphere_dev(i) = st.max_sphere_dev;
        e.y_residual(i) = st.y_residual;
        clamps[static_cast<std::size_t>(i)] = st.clamps;
      }
      return 0;
    });
  };
  const auto hw = static_cast<std::int64_t>(std::max(1u, std::thread::hardware_concurrency()));
  const std::int64_t nt = std::min<std::int64_t>(spec.threads > 0 ? spec.threads : hw, spec.paths);
  if (nt <= 1) {
    work(0, spec.paths);
  } else {
    std::vector<std::thread> pool;
    const std::int64_t chunk = (spec.paths + nt - 1) / nt;
    for (std::int64_t t = 0; t < nt; ++t) {
      const std::int64_t lo = t * chunk, hi = std::min(spec.paths, lo + chunk);
      if (lo < hi) pool.emplace_back(work, lo, hi);
    }
    for (auto& th : pool) th.join();
  }
  for (const auto c : clamps) e.clamps += c;
  return e;
}

struct MomentEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  std::int64_t n = 0;
};

/// Sample mean of q(X_T) and its standard error.
inline MomentEstimate mc_moment(const Ensemble& e, const Polynomial& q) {
  if (q.nvars() != e.d) throw ArgumentError("mc_moment: polynomial has wrong number of variables");
  const std::int64_t n = e.paths();
  Vector v(n);
  for (std::int64_t i = 0; i < n; ++i) v(i) = q(Vector(e.terminal.col(i)));
  MomentEstimate r;
  r.n = n;
  r.estimate = v.sum() / static_cast<double>(n);
  if (n > 1) {
    const double ss = (v.array() - r.estimate).square().sum();
    r.std_error = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
  }
  return r;
}

inline MomentEstimate mc_moment(const EnsembleSpec& spec, const Polynomial& q) {
  return mc_moment(simulate_ensemble(spec), q);
}

struct TwinReport {
  double ratio = 0.0;  // kappa / nu^2
  bool uniqueness_hypothesis = false;  // ratio > sqrt(2) - 1
  double epsilon = 0.0;
  std::vector<double> max_divergence;  // sup_t |X_t - Xtilde_t|, one per seed
};

/// Pairs of scalar-model paths on identical noise, started from x0 rotated
/// by +-epsilon/2 in a plane through x0.
inline TwinReport twin_path_experiment(double kappa, double nu, const SkewDrive& drive, const Vector& x0, double T,
                                       double h, int n_seeds, double epsilon = 0.0, std::uint64_t seed = 0) {
  if (std::abs(x0.norm() - 1.0) > 1e-12) throw ArgumentError("twin_path_experiment: x0 must lie on the unit sphere");
  if (n_seeds < 0) throw ArgumentError("twin_path_experiment: n_seeds must be >= 0");
  const int d = static_cast<int>(x0.size());
  Vector xa = x0, xb = x0;
  if (epsilon != 0.0) {
    if (d < 2) throw ArgumentError("twin_path_experiment: a perturbation needs d >= 2");
    Eigen::Index k = 0;
    x0.cwiseAbs().minCoeff(&k);
    Vector u = Vector::Unit(d, k) - x0(k) * x0;
    u.normalize();
    const double c = std::cos(0.5 * epsilon), s = std::sin(0.5 * epsilon);
    xa = c * x0 + s * u;
    xb = c * x0 - s * u;
  }
  TwinReport r;
  r.ratio = kappa / (nu * nu);
  r.uniqueness_hypothesis = r.ratio > std::sqrt(2.0) - 1.0;
  r.epsilon = epsilon;
  for (int s = 0; s < n_seeds; ++s) {
    const std::uint64_t sd = seed + static_cast<std::uint64_t>(s);
    const ScalarPath pa = simulate_scalar_ball(kappa, nu, drive, xa, T, h, sd);
    const ScalarPath pb = simulate_scalar_ball(kappa, nu, drive, xb, T, h, sd);
    r.max_divergence.push_back((pa.path.states - pb.path.states).colwise().norm().maxCoeff());
  }
  return r;
}

namespace detail {

inline std::vector<SkewMatrix> sos_factors(const HMatrix& h) {
  if (h.m() == 0) return {};
  const SosVerdict v = sos_check(h);
  if (v.status != SosStatus::Feasible) {
    throw PreconditionError("model drive: c_H has no sum-of-squares decomposition (" + to_string(v.status) + ")");
  }
  return sos_decompose(HMatrix(h.d(), v.h_star));
}

}  // namespace detail

/// Drive realising a sphere model: factors of an SOS decomposition of H, and
/// A0 the skew part of B.
inline SkewDrive drive_from_sphere_model(const SphereModel& m) {
  return SkewDrive(SkewMatrix::from_upper(skew_part(m.B)), detail::sos_factors(m.h));
}

struct BallDrive {
  SkewDrive drive;
  Matrix bhat;
};

/// Drive and Bhat = sym(B) + 1/2 sum_p A_p^T A_p realising a ball model.
inline BallDrive drive_from_ball_model(const BallModel& m) {
  BallDrive out{SkewDrive(SkewMatrix::from_upper(skew_part(m.B)), detail::sos_factors(m.h)), Matrix()};
  out.bhat = sym_part(m.B) + 0.5 * out.drive.gram();
  if (max_eigenvalue(out.bhat) > 1e-9) {
    throw PreconditionError("drive_from_ball_model: Bhat is not negative semidefinite");
  }
  return out;
}

}  // namespace polydiff
