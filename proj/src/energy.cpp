#include "motorprim/energy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include "motorprim/csv.hpp"

namespace motorprim::energy {

namespace {

// Gravity potential seen by the storage function: the plant's own U_g minus
// what the controller cancels.
double gravity_weight(const eda::Controller& ctl, dyn::Gravity plant) {
  return (plant == dyn::Gravity::On ? 1.0 : 0.0) - (ctl.gravity_compensation() ? 1.0 : 0.0);
}

}  // namespace

LedgerEntry potentials(const eda::Controller& ctl, const RobotModel& model, const JointState& s,
                       double t, double h) {
  LedgerEntry e;
  e.t = t;
  e.T_kin = dyn::kinetic_energy(model, s);
  auto P = ctl.potentials(model, s.q, t);
  e.U_q = P.U_q;
  e.U_p = P.U_p;
  e.U_r = P.U_r;
  e.V = e.T_kin + P.total();
  e.dUdt = (ctl.potentials(model, s.q, t + h).total() - ctl.potentials(model, s.q, t - h).total()) /
           (2.0 * h);
  eda::Command c = ctl.compose_detailed(model, s, t);
  e.dissipation = s.qd.dot(c.damping);
  e.margin = -e.dissipation - e.dUdt;
  e.in_power = s.qd.dot(c.total);
  return e;
}

void Ledger::write_csv(std::ostream& out) const {
  out << "t,T_kin,U_q,U_p,U_r,V,dVdt,dissipation,margin\n";
  for (const auto& r : rows) {
    write_row(out, {r.t, r.T_kin, r.U_q, r.U_p, r.U_r, r.V, r.dVdt, r.dissipation, r.margin});
  }
}

void Ledger::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  write_csv(out);
}

Ledger build_ledger(dyn::SimTrace& trace, const eda::Controller& ctl, const RobotModel& model,
                    dyn::Gravity plant_gravity) {
  const std::size_t n = trace.size();
  if (n < 2) throw std::invalid_argument("build_ledger: trace needs at least two samples");
  const double wg = gravity_weight(ctl, plant_gravity);
  Ledger L;
  L.rows.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    JointState s{trace.q[k], trace.qd[k]};
    const double t = trace.t[k];
    LedgerEntry& e = L.rows[k];
    e.t = t;
    e.T_kin = dyn::kinetic_energy(model, s);
    auto P = ctl.potentials(model, s.q, t);
    e.U_q = P.U_q;
    e.U_p = P.U_p;
    e.U_r = P.U_r;
    e.U_g = wg != 0.0 ? wg * dyn::gravity_potential(model, s.q) : 0.0;
    e.V = e.T_kin + P.total() + e.U_g;

    // dU/dt at frozen q_k from the neighbouring time samples
    std::size_t lo = k == 0 ? 0 : k - 1;
    std::size_t hi = k + 1 == n ? k : k + 1;
    double U_lo = lo == k ? P.total() : ctl.potentials(model, s.q, trace.t[lo]).total();
    double U_hi = hi == k ? P.total() : ctl.potentials(model, s.q, trace.t[hi]).total();
    e.dUdt = (U_hi - U_lo) / (trace.t[hi] - trace.t[lo]);

    eda::Command c = ctl.compose_detailed(model, s, t);
    e.dissipation = s.qd.dot(c.damping);
    e.margin = -e.dissipation - e.dUdt;
    e.in_power = s.qd.dot(c.total);
    e.ext_power = trace.tau_ext.empty() ? 0.0 : s.qd.dot(trace.tau_ext[k]);
  }
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t lo = k == 0 ? 0 : k - 1;
    std::size_t hi = k + 1 == n ? k : k + 1;
    L.rows[k].dVdt = (L.rows[hi].V - L.rows[lo].V) / (trace.t[hi] - trace.t[lo]);
  }
  trace.V.resize(n);
  trace.dVdt.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    trace.V[k] = L.rows[k].V;
    trace.dVdt[k] = L.rows[k].dVdt;
  }
  return L;
}

bool constant_parameters(const eda::Controller& ctl) {
  for (const auto& m : ctl.modules()) {
    const eda::VirtualTrajectory& vt =
        std::visit([](const auto& mod) -> const eda::VirtualTrajectory& { return mod.vt; }, m);
    for (const auto& p : vt.summands()) {
      if (!std::holds_alternative<eda::Hold>(p)) return false;
    }
  }
  return true;
}

std::string PassivityReport::summary() const {
  std::ostringstream os;
  os << (constant ? "constant-parameter" : "time-varying") << " run, " << steps << " steps\n";
  if (constant) {
    os << "  violations: " << violations << " (tol " << tol << " J, max increase " << max_increase
       << " J)\n";
  } else {
    os << "  negative-margin steps: " << negative_margin_steps << " (min margin " << min_margin
       << " W)\n";
  }
  os << "  V: " << V_start << " -> " << V_end << " J, span " << V_span << " J\n";
  os << "  balance residual: " << balance_residual_rate << " J/s\n";
  return os.str();
}

PassivityReport passivity_monitor(const Ledger& ledger, bool constant, double dt) {
  PassivityReport r;
  r.constant = constant;
  const auto& rows = ledger.rows;
  if (rows.size() < 2) return r;
  r.steps = rows.size() - 1;
  double max_power = 0.0;
  for (const auto& e : rows) max_power = std::max(max_power, std::abs(e.in_power) + std::abs(e.ext_power));
  r.tol = 1e-6 + 10.0 * dt * dt * max_power;
  r.min_margin = std::numeric_limits<double>::infinity();
  double vmin = rows.front().V, vmax = rows.front().V;
  double predicted = 0.0;
  r.max_increase = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
    const auto& a = rows[k];
    const auto& b = rows[k + 1];
    const double h = b.t - a.t;
    double ext_work = 0.5 * (a.ext_power + b.ext_power) * h;
    double inc = b.V - a.V - ext_work;
    r.max_increase = std::max(r.max_increase, inc);
    if (constant && inc > r.tol) ++r.violations;
    predicted += 0.5 * ((a.ext_power - a.margin) + (b.ext_power - b.margin)) * h;
    vmin = std::min(vmin, b.V);
    vmax = std::max(vmax, b.V);
  }
  for (const auto& e : rows) {
    r.min_margin = std::min(r.min_margin, e.margin);
    if (!constant && e.margin < 0.0) ++r.negative_margin_steps;
  }
  r.V_start = rows.front().V;
  r.V_end = rows.back().V;
  r.V_span = vmax - vmin;
  const double duration = rows.back().t - rows.front().t;
  r.balance_residual_rate = std::abs(r.V_end - r.V_start - predicted) / duration;
  return r;
}

double potential(const eda::Controller& ctl, const RobotModel& model, const VectorXd& q, double t) {
  return ctl.potentials(model, q, t).total();
}

VectorXd potential_gradient(const eda::Controller& ctl, const RobotModel& model, const VectorXd& q,
                            double t) {
  JointState s{q, VectorXd::Zero(q.size())};
  VectorXd g = VectorXd::Zero(q.size());
  for (const auto& m : ctl.modules()) g -= eda::module_torque(m, model, s, t).stiffness;
  return g;
}

Minimum minimize_potential(const eda::Controller& ctl, const RobotModel& model, const VectorXd& q0,
                           double t, double grad_tol, int max_iter) {
  const Eigen::Index n = q0.size();
  Minimum res;
  res.q = q0;
  res.U = potential(ctl, model, q0, t);
  VectorXd g = potential_gradient(ctl, model, q0, t);
  const double h = 1e-6;
  for (res.iterations = 0; res.iterations < max_iter; ++res.iterations) {
    if (g.norm() < grad_tol) break;
    MatrixXd H(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      VectorXd qp = res.q, qm = res.q;
      qp(j) += h;
      qm(j) -= h;
      H.col(j) = (potential_gradient(ctl, model, qp, t) - potential_gradient(ctl, model, qm, t)) / (2 * h);
    }
    H = 0.5 * (H + H.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(H);
    VectorXd lam = es.eigenvalues().cwiseAbs();
    const double floor = 1e-8 * std::max(1.0, lam.maxCoeff());
    lam = lam.cwiseMax(floor);
    VectorXd p = -es.eigenvectors() * (es.eigenvectors().transpose() * g).cwiseQuotient(lam);

    double step = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      VectorXd qn = res.q + step * p;
      double Un = potential(ctl, model, qn, t);
      if (Un <= res.U + 1e-4 * step * g.dot(p)) {
        res.q = qn;
        res.U = Un;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no further decrease representable
    g = potential_gradient(ctl, model, res.q, t);
  }
  res.grad_norm = g.norm();
  return res;
}

double LandscapeSpec::value_i(int a) const {
  return lo_i + (hi_i - lo_i) * a / (periodic ? n_i : std::max(1, n_i - 1));
}

double LandscapeSpec::value_j(int b) const {
  return lo_j + (hi_j - lo_j) * b / (periodic ? n_j : std::max(1, n_j - 1));
}

VectorXd Landscape::argmin() const {
  Eigen::Index a = 0, b = 0;
  U.minCoeff(&a, &b);
  VectorXd q = base;
  q(axis_i) = xs[a];
  q(axis_j) = ys[b];
  return q;
}

std::vector<int> default_task_rows(const RobotModel& model) {
  for (const auto& S : model.screws()) {
    bool about_z = std::abs(S(0)) < 1e-12 && std::abs(S(1)) < 1e-12 && std::abs(S(5)) < 1e-12;
    if (!about_z) return {0, 1, 2, 3, 4, 5};
  }
  return {0, 1};
}

std::vector<std::vector<double>> scan_axes(const RobotModel& model, const ScanSpec& spec) {
  detail::check_scan(spec);
  const int n = model.dof();
  if (!spec.fixed.empty() && static_cast<int>(spec.fixed.size()) != n) {
    throw std::invalid_argument("singularity_scan: 'fixed' needs one entry per joint");
  }
  std::mt19937_64 rng(spec.offset_seed.value_or(0));
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const int N = spec.points_per_joint;
  std::vector<std::vector<double>> axes(n);
  for (int j = 0; j < n; ++j) {
    if (!spec.fixed.empty() && spec.fixed[j]) {
      axes[j] = {*spec.fixed[j]};
      continue;
    }
    const double lo = model.q_min()(j), hi = model.q_max()(j);
    if (spec.offset_seed) {
      const double u = uni(rng);
      for (int i = 0; i < N; ++i) axes[j].push_back(lo + (i + u) * (hi - lo) / N);
    } else if (N == 1) {
      axes[j] = {0.5 * (lo + hi)};
    } else {
      for (int i = 0; i < N; ++i) axes[j].push_back(lo + (hi - lo) * i / (N - 1));
    }
  }
  return axes;
}

CloudPoint singularity_sample(const RobotModel& model, const VectorXd& q,
                              const chain::FramePoint& pt, const std::vector<int>& rows) {
  Eigen::Matrix<double, 6, 6> Li = chain::task_inertia_inverse(model, q, pt);
  const auto m = static_cast<Eigen::Index>(rows.size());
  MatrixXd S(m, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = 0; b < m; ++b) S(a, b) = Li(rows[a], rows[b]);
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(S, Eigen::EigenvaluesOnly);
  geom::Vec3 p = chain::fk_position(model, q, pt);
  return {p.x(), p.y(), p.z(), es.eigenvalues().cwiseAbs().minCoeff()};
}

void ScanResult::write_pointcloud_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "x,y,z,sigma_min\n";
  for (const auto& c : cloud) write_row(out, {c.x, c.y, c.z, c.sigma_min});
}

namespace detail {

Landscape prepare_landscape(const RobotModel& model, LandscapeSpec& spec) {
  const int n = model.dof();
  if (spec.base.size() == 0) spec.base = VectorXd::Zero(n);
  if (spec.base.size() != n) throw std::invalid_argument("landscape_grid: base has wrong size");
  if (spec.axis_i < 0 || spec.axis_i >= n || spec.axis_j < 0 || spec.axis_j >= n ||
      spec.axis_i == spec.axis_j) {
    throw std::invalid_argument("landscape_grid: bad axes");
  }
  if (spec.n_i < 1 || spec.n_j < 1) throw std::invalid_argument("landscape_grid: empty grid");
  Landscape L;
  for (int a = 0; a < spec.n_i; ++a) L.xs.push_back(spec.value_i(a));
  for (int b = 0; b < spec.n_j; ++b) L.ys.push_back(spec.value_j(b));
  L.U.resize(spec.n_i, spec.n_j);
  L.axis_i = spec.axis_i;
  L.axis_j = spec.axis_j;
  L.base = spec.base;
  return L;
}

double landscape_point(const eda::Controller& ctl, const RobotModel& model,
                       const LandscapeSpec& spec, int a, int b) {
  VectorXd q = spec.base;
  q(spec.axis_i) = spec.value_i(a);
  q(spec.axis_j) = spec.value_j(b);
  return potential(ctl, model, q, spec.t);
}

VectorXd ScanPlan::q_at(std::size_t index) const {
  VectorXd q(axes.size());
  for (std::size_t j = axes.size(); j-- > 0;) {
    const std::size_t len = axes[j].size();
    q(j) = axes[j][index % len];
    index /= len;
  }
  return q;
}

void check_scan(const ScanSpec& spec) {
  if (!(spec.threshold >= 0.0)) throw std::invalid_argument("singularity_scan: threshold must be >= 0");
  if (spec.points_per_joint < 1) throw std::invalid_argument("singularity_scan: points_per_joint < 1");
}

ScanPlan plan_scan(const RobotModel& model, const ScanSpec& spec) {
  ScanPlan plan;
  plan.axes = scan_axes(model, spec);
  plan.rows = spec.rows.empty() ? default_task_rows(model) : spec.rows;
  for (int r : plan.rows) {
    if (r < 0 || r > 5) throw std::invalid_argument("singularity_scan: task rows must lie in 0..5");
  }
  for (const auto& ax : plan.axes) plan.states *= ax.size();
  return plan;
}

}  // namespace detail

}  // namespace motorprim::energy
