#include "motorprim/dmp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "motorprim/csv.hpp"
#include "motorprim/errors.hpp"

namespace motorprim::dmp {

using geom::Mat3;

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

// exp(x_i - max x) / sum_j exp(x_j - max x); stays finite far from every center.
VectorXd normalized_exp(const VectorXd& x) {
  VectorXd e = (x.array() - x.maxCoeff()).exp();
  return e / e.sum();
}

}  // namespace

std::string to_string(Kind k) { return k == Kind::Discrete ? "discrete" : "rhythmic"; }

std::string to_string(Space s) {
  switch (s) {
    case Space::Joint: return "joint";
    case Space::TaskPosition: return "task_pos";
    case Space::SO3: return "so3";
    case Space::H1: return "h1";
  }
  return "?";
}

Kind kind_from_string(const std::string& s) {
  if (s == "discrete") return Kind::Discrete;
  if (s == "rhythmic") return Kind::Rhythmic;
  throw ConfigError("unknown primitive kind '" + s + "'");
}

Space space_from_string(const std::string& s) {
  if (s == "joint") return Space::Joint;
  if (s == "task_pos") return Space::TaskPosition;
  if (s == "so3") return Space::SO3;
  if (s == "h1") return Space::H1;
  throw ConfigError("unknown space '" + s + "' (joint, task_pos, so3, h1)");
}

double Canonical::value(double t) const {
  if (kind == Kind::Discrete) return std::exp(-alpha_s * t / tau);
  double s = std::fmod(t / tau, two_pi);
  if (s < 0.0) s += two_pi;
  return s >= two_pi ? 0.0 : s;
}

void Canonical::validate() const {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw std::invalid_argument("Canonical: tau must be > 0");
  if (!(alpha_s > 0.0)) throw std::invalid_argument("Canonical: alpha_s must be > 0");
}

VectorXd BasisSet::activations(double s) const {
  if (kind == Kind::Discrete) {
    VectorXd x = -(h.array() * (s - c.array()).square()).matrix();
    return s * normalized_exp(x);
  }
  VectorXd x = (h.array() * ((s - c.array()).cos() - 1.0)).matrix();
  return normalized_exp(x);
}

void BasisSet::validate() const {
  if (c.size() < 2 || c.size() != h.size()) throw std::invalid_argument("BasisSet: need N >= 2");
  if ((h.array() <= 0.0).any()) throw std::invalid_argument("BasisSet: widths must be > 0");
}

BasisSet BasisSet::make_default(Kind kind, int N, double alpha_s) {
  if (N < 2) throw std::invalid_argument("BasisSet: need N >= 2");
  BasisSet b;
  b.kind = kind;
  b.c.resize(N);
  b.h.resize(N);
  if (kind == Kind::Discrete) {
    for (int i = 0; i < N; ++i) b.c(i) = std::exp(-alpha_s * i / (N - 1.0));
    for (int i = 0; i + 1 < N; ++i) b.h(i) = 1.0 / ((b.c(i + 1) - b.c(i)) * (b.c(i + 1) - b.c(i)));
    b.h(N - 1) = b.h(N - 2);
  } else {
    for (int i = 0; i < N; ++i) b.c(i) = two_pi * i / (N - 1.0);
    b.h.setConstant(2.5 * N);
  }
  return b;
}

VectorXd DmpModel::forcing(double s) const { return W * basis.activations(s); }

void DmpModel::validate() const {
  canonical.validate();
  basis.validate();
  if (canonical.kind != basis.kind) throw std::invalid_argument("DmpModel: basis kind mismatch");
  if (W.cols() != basis.size()) throw std::invalid_argument("DmpModel: W has wrong column count");
  const int n = dim();
  if (scaling.rows() != n || scaling.cols() != n) {
    throw std::invalid_argument("DmpModel: scaling has wrong size");
  }
  if (is_orientation(space)) {
    if (n != 3) throw std::invalid_argument("DmpModel: orientation primitives are 3-D");
  } else if (goal.size() != n) {
    throw std::invalid_argument("DmpModel: goal has wrong size");
  }
  if (space == Space::TaskPosition && n != 3) {
    throw std::invalid_argument("DmpModel: task-space position primitives are 3-D");
  }
  if (!(alpha_z > 0.0 && beta_z > 0.0)) throw std::invalid_argument("DmpModel: gains must be > 0");
}

double DmpModel::period() const { return two_pi * canonical.tau; }

TransformState transform_rhs(const DmpModel& m, const TransformState& x, double t) {
  const double tau = m.canonical.tau;
  VectorXd f = m.scaling * m.forcing(m.canonical.value(t));
  VectorXd err = is_orientation(m.space) ? VectorXd(-x.y) : VectorXd(m.goal - x.y);
  TransformState d;
  d.y = x.z / tau;
  d.z = (m.alpha_z * (m.beta_z * err - x.z) + f) / tau;
  return d;
}

TransformState transform_step(const DmpModel& m, const TransformState& x, double t, double dt) {
  auto add = [](const TransformState& a, double h, const TransformState& k) {
    return TransformState{a.y + h * k.y, a.z + h * k.z};
  };
  TransformState k1 = transform_rhs(m, x, t);
  TransformState k2 = transform_rhs(m, add(x, 0.5 * dt, k1), t + 0.5 * dt);
  TransformState k3 = transform_rhs(m, add(x, 0.5 * dt, k2), t + 0.5 * dt);
  TransformState k4 = transform_rhs(m, add(x, dt, k3), t + dt);
  return {x.y + dt / 6.0 * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y),
          x.z + dt / 6.0 * (k1.z + 2.0 * k2.z + 2.0 * k3.z + k4.z)};
}

TransformState initial_state(const DmpModel& m, const VectorXd& value, const VectorXd& rate) {
  if (value.size() != m.dim() || rate.size() != m.dim()) {
    throw std::invalid_argument("initial_state: wrong dimension");
  }
  return {value, m.canonical.tau * rate};
}

TransformState initial_state(const DmpModel& m, const Rotation& R_i) {
  if (!is_orientation(m.space)) throw std::invalid_argument("initial_state: not an orientation DMP");
  Vec3 e = geom::Log(R_i.transpose() * m.goal_rot);
  return {e, VectorXd::Zero(3)};
}

Rollout rollout(const DmpModel& m, double duration, double dt, const TransformState& initial) {
  m.validate();
  if (!(dt > 0.0) || !(duration >= 0.0)) throw std::invalid_argument("rollout: bad time grid");
  if (initial.y.size() != m.dim() || initial.z.size() != m.dim()) {
    throw std::invalid_argument("rollout: initial state has wrong dimension");
  }
  const long steps = std::lround(duration / dt);
  const bool orient = is_orientation(m.space);
  const UnitQuat qG = geom::rotm_to_quat(m.goal_rot);
  Rollout out;
  out.space = m.space;
  TransformState x = initial;
  for (long k = 0;; ++k) {
    double t = k * dt;
    TransformState d = transform_rhs(m, x, t);
    out.t.push_back(t);
    out.y.push_back(x.y);
    out.yd.push_back(d.y);
    out.ydd.push_back(d.z / m.canonical.tau);
    if (orient) {
      Vec3 e = x.y;
      out.R.push_back(m.goal_rot * geom::exp_so3(e).transpose());
      // d/dt Exp(e)^T = -[J_r(e) e'] Exp(e)^T, so the body rate is -J_r(-e) e'.
      out.omega_body.push_back(-geom::right_jacobian_so3(Vec3(-e)) * Vec3(d.y));
      if (m.space == Space::H1) {
        out.quat.push_back(geom::quat_mul(qG, geom::quat_conj(geom::quat_exp(Vec3(0.5 * e)))));
      }
    }
    if (k == steps) break;
    x = transform_step(m, x, t, dt);
  }
  return out;
}

void Demonstration::validate() const {
  const std::size_t P = t.size();
  if (P < 3) throw ConfigError("demonstration: need at least 3 samples");
  const double dt = (t.back() - t.front()) / (P - 1.0);
  if (!(dt > 0.0)) throw ConfigError("demonstration: time must increase");
  for (std::size_t i = 0; i < P; ++i) {
    if (std::abs(t[i] - (t.front() + i * dt)) > 1e-9 * std::max(1.0, std::abs(t[i]))) {
      throw ConfigError("demonstration: time grid is not uniform");
    }
  }
  if (is_orientation(space)) {
    if (R.size() != P) throw ConfigError("demonstration: orientation sample count mismatch");
    if (!omega.empty() && omega.size() != P) throw ConfigError("demonstration: omega count");
  } else {
    if (y.size() != P) throw ConfigError("demonstration: value sample count mismatch");
    const auto n = y.front().size();
    for (const auto& v : y) {
      if (v.size() != n || !v.allFinite()) throw ConfigError("demonstration: bad value row");
    }
    if (space == Space::TaskPosition && n != 3) throw ConfigError("demonstration: need 3-D positions");
    if (!yd.empty() && yd.size() != P) throw ConfigError("demonstration: rate count mismatch");
    if (!ydd.empty() && ydd.size() != P) throw ConfigError("demonstration: accel count mismatch");
    if (!ydd.empty() && yd.empty()) throw ConfigError("demonstration: accelerations need rates");
  }
}

std::vector<VectorXd> smooth_derivative(const std::vector<VectorXd>& x, double dt,
                                        double fraction, bool periodic) {
  const int P = static_cast<int>(x.size());
  if (P < 3) throw std::invalid_argument("smooth_derivative: need 3 samples");
  // With a periodic series the last sample repeats the first phase.
  const int M = periodic ? P - 1 : P;
  auto idx = [&](int i) { return periodic ? ((i % M) + M) % M : i; };

  std::vector<VectorXd> d(P);
  for (int i = 0; i < M; ++i) {
    if (periodic || (i > 0 && i < P - 1)) {
      d[i] = (x[idx(i + 1)] - x[idx(i - 1)]) / (2.0 * dt);
    } else if (i == 0) {
      d[i] = (-3.0 * x[0] + 4.0 * x[1] - x[2]) / (2.0 * dt);
    } else {
      d[i] = (3.0 * x[P - 1] - 4.0 * x[P - 2] + x[P - 3]) / (2.0 * dt);
    }
  }
  if (periodic) d[P - 1] = d[0];

  const double window = fraction * P;
  const double sigma = window / 5.0;
  const int radius = static_cast<int>(std::floor(window / 2.0));
  if (sigma < 0.5 || radius < 1) return d;
  std::vector<double> w(radius + 1);
  for (int k = 0; k <= radius; ++k) w[k] = std::exp(-0.5 * k * k / (sigma * sigma));

  std::vector<VectorXd> out(P);
  for (int i = 0; i < M; ++i) {
    VectorXd acc = VectorXd::Zero(d[i].size());
    double norm = 0.0;
    for (int k = -radius; k <= radius; ++k) {
      int j = i + k;
      if (!periodic && (j < 0 || j >= P)) continue;
      double wk = w[std::abs(k)];
      acc += wk * d[idx(j)];
      norm += wk;
    }
    out[i] = acc / norm;
  }
  if (periodic) out[P - 1] = out[0];
  return out;
}

namespace {

bool is_periodic_grid(const Demonstration& demo, double period) {
  const double dt = demo.t[1] - demo.t[0];
  return std::abs((demo.t.back() - demo.t.front()) - period) < 0.5 * dt;
}

double demo_period(const LearnOptions& opt) {
  if (!opt.period) throw ConfigError("rhythmic learning needs the period");
  double p = *opt.period;
  if (!(p > 0.0)) throw ConfigError("rhythmic period must be > 0");
  return p;
}

Vec3 mean_log_so3(const std::vector<Rotation>& R) {
  Vec3 acc = Vec3::Zero();
  for (const auto& r : R) acc += geom::Log(r);
  return acc / static_cast<double>(R.size());
}

}  // namespace

DemoCoordinates demo_coordinates(const Demonstration& demo, const LearnOptions& opt) {
  demo.validate();
  const std::size_t P = demo.size();
  const double dt = (demo.t.back() - demo.t.front()) / (P - 1.0);
  DemoCoordinates dc;
  bool periodic = false;
  if (opt.kind == Kind::Discrete) {
    dc.tau = demo.t.back() - demo.t.front();
  } else {
    double period = demo_period(opt);
    dc.tau = period / two_pi;
    periodic = is_periodic_grid(demo, period);
  }
  if (opt.tau) {
    if (!(*opt.tau > 0.0)) throw ConfigError("learn: tau must be > 0");
    dc.tau = *opt.tau;
  }

  if (!is_orientation(demo.space)) {
    dc.y = demo.y;
    if (opt.kind == Kind::Discrete) {
      dc.goal = demo.y.back();
    } else {
      // Mean over one period; a repeated endpoint is counted once.
      const std::size_t M = periodic ? P - 1 : P;
      dc.goal = VectorXd::Zero(demo.y.front().size());
      for (std::size_t i = 0; i < M; ++i) dc.goal += demo.y[i];
      dc.goal /= static_cast<double>(M);
    }
    if (opt.goal) {
      if (opt.goal->size() != dc.goal.size()) throw ConfigError("learn: goal has wrong size");
      dc.goal = *opt.goal;
    }
    dc.yd = demo.yd.empty() ? smooth_derivative(dc.y, dt, opt.smooth_fraction, periodic) : demo.yd;
    dc.ydd = demo.ydd.empty() ? smooth_derivative(dc.yd, dt, opt.smooth_fraction, periodic)
                              : demo.ydd;
    return dc;
  }

  // Orientation: exponential coordinates of R0^T R_G.
  const std::size_t M = periodic ? P - 1 : P;
  std::vector<Rotation> head(demo.R.begin(), demo.R.begin() + M);
  if (demo.space == Space::SO3) {
    dc.goal_rot = opt.kind == Kind::Discrete ? demo.R.back() : geom::exp_so3(mean_log_so3(head));
  } else {
    if (opt.kind == Kind::Discrete) {
      dc.goal_rot = demo.R.back();
    } else {
      Vec3 acc = Vec3::Zero();
      for (const auto& r : head) acc += geom::quat_log(geom::rotm_to_quat(r));
      dc.goal_rot = geom::quat_to_rotm(geom::quat_exp(Vec3(acc / static_cast<double>(M))));
    }
  }
  if (opt.goal_rot) dc.goal_rot = *opt.goal_rot;
  const UnitQuat qG = geom::rotm_to_quat(dc.goal_rot);
  dc.goal = Vec3::Zero();
  dc.y.resize(P);
  for (std::size_t i = 0; i < P; ++i) {
    if (demo.space == Space::SO3) {
      dc.y[i] = geom::Log(demo.R[i].transpose() * dc.goal_rot);
    } else {
      UnitQuat qi = geom::rotm_to_quat(demo.R[i]);
      dc.y[i] = 2.0 * geom::quat_log(geom::quat_mul(geom::quat_conj(qi), qG).canonical());
    }
  }
  if (demo.omega.empty()) {
    dc.yd = smooth_derivative(dc.y, dt, opt.smooth_fraction, periodic);
  } else {
    dc.yd.resize(P);
    for (std::size_t i = 0; i < P; ++i) {
      const Mat3 Ri = demo.R[i].matrix();
      const Vec3& w = demo.omega[i];
      UnitQuat q = geom::quat_mul(geom::quat_conj(geom::rotm_to_quat(demo.R[i])), qG).canonical();
      if (demo.space == Space::H1 && q.eps().norm() > 1e-6) {
        // d/dt (q_i^* (x) q_G) = -1/2 q_i^* (x) (0, w) (x) q_G
        UnitQuat qi = geom::rotm_to_quat(demo.R[i]);
        Eigen::Vector4d wq(0.0, w(0), w(1), w(2));
        auto mul4 = [](const Eigen::Vector4d& a, const Eigen::Vector4d& b) {
          Eigen::Vector4d r;
          r(0) = a(0) * b(0) - a.tail<3>().dot(b.tail<3>());
          r.tail<3>() = a(0) * b.tail<3>() + b(0) * a.tail<3>() + a.tail<3>().cross(b.tail<3>());
          return r;
        };
        Eigen::Vector4d qdot = -0.5 * mul4(mul4(geom::quat_conj(qi).coeffs(), wq), qG.coeffs());
        // canonical() may have flipped the sign of q
        if (geom::quat_mul(geom::quat_conj(qi), qG).eta() < 0.0) qdot = -qdot;
        dc.yd[i] = 2.0 * geom::dlog_h1_dt(q, qdot);
      } else {
        Rotation Rrel = demo.R[i].transpose() * dc.goal_rot;
        Mat3 Rrel_dot = -Ri.transpose() * geom::skew(w) * dc.goal_rot.matrix();
        dc.yd[i] = geom::dlog_so3_dt(Rrel, Rrel_dot);
      }
    }
  }
  dc.ydd = smooth_derivative(dc.yd, dt, opt.smooth_fraction, periodic);
  return dc;
}

Reproduction reproduction_error(const Demonstration& demo, const Rollout& r) {
  const std::size_t P = demo.size();
  if (r.t.size() != P) throw std::invalid_argument("reproduction_error: grids differ");
  Reproduction out;
  double sq = 0.0;
  if (is_orientation(demo.space)) {
    Vec3 lo = Vec3::Constant(1e300), hi = Vec3::Constant(-1e300);
    for (std::size_t i = 0; i < P; ++i) {
      double d = geom::geodesic_distance(demo.R[i], r.R[i]);
      sq += d * d;
      Vec3 e = geom::Log(demo.R[i].transpose() * demo.R.back());
      lo = lo.cwiseMin(e);
      hi = hi.cwiseMax(e);
    }
    out.amplitude = (hi - lo).maxCoeff();
  } else {
    VectorXd lo = demo.y.front(), hi = demo.y.front();
    for (std::size_t i = 0; i < P; ++i) {
      sq += (demo.y[i] - r.y[i]).squaredNorm();
      lo = lo.cwiseMin(demo.y[i]);
      hi = hi.cwiseMax(demo.y[i]);
    }
    out.amplitude = (hi - lo).maxCoeff();
  }
  out.rmse = std::sqrt(sq / static_cast<double>(P));
  return out;
}

Rollout replay(const DmpModel& m, const Demonstration& demo, const LearnOptions& opt) {
  DemoCoordinates dc = demo_coordinates(demo, opt);
  const double dt = (demo.t.back() - demo.t.front()) / (demo.size() - 1.0);
  // The model's goal may differ from the demo's (re-targeting); start from the
  // demo coordinates regardless.
  TransformState x0 = initial_state(m, dc.y.front(), dc.yd.front());
  return rollout(m, demo.t.back() - demo.t.front(), dt, x0);
}

MatrixXd lwr_solve(const MatrixXd& A, const MatrixXd& B, bool* regularized, double* rcond) {
  if (A.cols() != B.cols()) throw std::invalid_argument("lwr_solve: A and B disagree on P");
  MatrixXd AAt = A * A.transpose();
  MatrixXd ABt = A * B.transpose();
  // LDLT's rcond estimate misses exact zero pivots; N is small, so use the
  // eigenvalue ratio.
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(AAt, Eigen::EigenvaluesOnly);
  const VectorXd& ev = eig.eigenvalues();
  double rc = ev(ev.size() - 1) > 0.0 ? std::max(ev(0), 0.0) / ev(ev.size() - 1) : 0.0;
  bool reg = !(rc >= 1e-12);
  Eigen::LDLT<MatrixXd> ldlt;
  if (reg) {
    double lambda = 1e-8 * AAt.trace();
    ldlt.compute(AAt + lambda * MatrixXd::Identity(AAt.rows(), AAt.cols()));
  } else {
    ldlt.compute(AAt);
  }
  if (regularized) *regularized = reg;
  if (rcond) *rcond = rc;
  return ldlt.solve(ABt).transpose();
}

LearnResult imitation_learn(const Demonstration& demo, const LearnOptions& opt) {
  if (opt.N < 2) throw ConfigError("learn: N must be >= 2");
  if (demo.size() < static_cast<std::size_t>(opt.N)) {
    throw ConfigError("learn: need at least N samples (P >= N)");
  }
  DemoCoordinates dc = demo_coordinates(demo, opt);
  const std::size_t P = demo.size();
  const int n = static_cast<int>(dc.y.front().size());

  LearnResult res;
  DmpModel& m = res.model;
  m.space = demo.space;
  m.canonical = {opt.kind, opt.alpha_s, dc.tau};
  m.basis = BasisSet::make_default(opt.kind, opt.N, opt.alpha_s);
  m.alpha_z = opt.alpha_z;
  m.beta_z = opt.beta_z.value_or(opt.alpha_z / 4.0);
  m.goal = dc.goal;
  m.goal_rot = dc.goal_rot;
  m.demo_start = dc.y.front();
  m.demo_goal = dc.goal;
  m.canonical.validate();

  MatrixXd A(opt.N, P), B(n, P);
  for (std::size_t i = 0; i < P; ++i) {
    double t = demo.t[i] - demo.t.front();
    A.col(i) = m.basis.activations(m.canonical.value(t));
    B.col(i) = dc.tau * dc.tau * dc.ydd[i] + m.alpha_z * dc.tau * dc.yd[i] +
               m.alpha_z * m.beta_z * (dc.y[i] - dc.goal);
  }

  VectorXd S = VectorXd::Ones(n);
  if (is_orientation(demo.space)) {
    if (opt.kind == Kind::Discrete) {
      S = dc.y.front();
    } else {
      if (!(opt.r > 0.0)) throw ConfigError("learn: r must be > 0");
      S.setConstant(opt.r);
    }
  }
  for (int j = 0; j < n; ++j) {
    if (std::abs(S(j)) < 1e-9) {
      res.unlearnable.push_back(j);
      res.warnings.push_back("coordinate " + std::to_string(j) +
                             " has zero scaling (start equals goal); weights set to zero");
      B.row(j).setZero();
    } else {
      B.row(j) /= S(j);
    }
  }
  m.W = lwr_solve(A, B, &res.regularized, &res.rcond);
  for (int j : res.unlearnable) m.W.row(j).setZero();
  if (res.regularized) {
    res.warnings.push_back("A A^T is near-singular (rcond " + format_double(res.rcond) +
                           "); ridge-regularized solve used");
  }
  m.scaling = S.asDiagonal();
  m.validate();
  return res;
}

MatrixXd position_scaling(const Rotation& R, const Vec3& start, const Vec3& goal,
                          const Vec3& demo_start, const Vec3& demo_goal) {
  double d = (demo_goal - demo_start).norm();
  if (d < 1e-12) throw std::domain_error("position_scaling: demonstration has zero displacement");
  return R.matrix() * ((goal - start).norm() / d);
}

MatrixXd orientation_scaling(const Rotation& R_i, const Rotation& R_G) {
  return Vec3(geom::Log(R_i.transpose() * R_G)).asDiagonal();
}

}  // namespace motorprim::dmp
