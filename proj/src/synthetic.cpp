#include "motorprim/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace motorprim::synthetic {

namespace {

constexpr double pi = std::numbers::pi;

std::vector<double> grid(double T, int P) {
  if (P < 3 || !(T > 0.0)) throw std::invalid_argument("synthetic: need P >= 3 and T > 0");
  std::vector<double> t(P);
  for (int i = 0; i < P; ++i) t[i] = T * i / (P - 1.0);
  return t;
}

// phi(t) with phi' and phi'' known; fills R and spatial omega.
template <class F>
void fill_orientation(dmp::Demonstration& d, const Rotation& R_base, F phi_of_t) {
  for (double t : d.t) {
    Vec3 phi, phid;
    phi_of_t(t, phi, phid);
    Rotation R = R_base * geom::exp_so3(phi);
    d.R.push_back(R);
    // body rate of Exp(phi) is J_r(phi) phi'
    d.omega.push_back(R.matrix() * (geom::right_jacobian_so3(phi) * phid));
  }
}

}  // namespace

MinJerkProfile min_jerk_profile(double u) {
  double u2 = u * u, u3 = u2 * u;
  return {u3 * (10.0 - 15.0 * u + 6.0 * u2), 30.0 * u2 * (1.0 - 2.0 * u + u2),
          60.0 * u * (1.0 - 3.0 * u + 2.0 * u2)};
}

dmp::Demonstration min_jerk(dmp::Space space, const VectorXd& start, const VectorXd& goal, double T,
                            int P) {
  if (dmp::is_orientation(space) || start.size() != goal.size()) {
    throw std::invalid_argument("min_jerk: vector space with matching start and goal");
  }
  dmp::Demonstration d;
  d.space = space;
  d.t = grid(T, P);
  const VectorXd delta = goal - start;
  for (double t : d.t) {
    MinJerkProfile m = min_jerk_profile(t / T);
    d.y.push_back(start + m.s * delta);
    d.yd.push_back(m.ds / T * delta);
    d.ydd.push_back(m.dds / (T * T) * delta);
  }
  return d;
}

dmp::Demonstration figure_eight(const Vec3& center, double a, double b, const Vec3& u,
                                const Vec3& v, double period, int P) {
  dmp::Demonstration d;
  d.space = dmp::Space::TaskPosition;
  d.t = grid(period, P);
  const double w = 2.0 * pi / period;
  for (double t : d.t) {
    d.y.push_back(center + a * std::sin(w * t) * u + b * std::sin(2.0 * w * t) * v);
    d.yd.push_back(a * w * std::cos(w * t) * u + 2.0 * b * w * std::cos(2.0 * w * t) * v);
    d.ydd.push_back(-a * w * w * std::sin(w * t) * u - 4.0 * b * w * w * std::sin(2.0 * w * t) * v);
  }
  return d;
}

dmp::Demonstration circle(const Vec3& center, double r, const Vec3& u, const Vec3& v,
                          double period, int P) {
  dmp::Demonstration d;
  d.space = dmp::Space::TaskPosition;
  d.t = grid(period, P);
  const double w = 2.0 * pi / period;
  for (double t : d.t) {
    double c = std::cos(w * t), s = std::sin(w * t);
    d.y.push_back(center + r * (c * u + s * v));
    d.yd.push_back(r * w * (-s * u + c * v));
    d.ydd.push_back(-r * w * w * (c * u + s * v));
  }
  return d;
}

dmp::Demonstration orientation_arc(dmp::Space space, const Rotation& R_start, const Vec3& axis,
                                   double angle, double wobble, double T, int P) {
  if (!dmp::is_orientation(space)) throw std::invalid_argument("orientation_arc: so3 or h1");
  dmp::Demonstration d;
  d.space = space;
  d.t = grid(T, P);
  const Vec3 n = axis.normalized();
  Vec3 perp = n.unitOrthogonal();
  fill_orientation(d, R_start, [&](double t, Vec3& phi, Vec3& phid) {
    MinJerkProfile m = min_jerk_profile(t / T);
    phi = angle * m.s * n + wobble * std::sin(pi * m.s) * perp;
    phid = (angle * n + wobble * pi * std::cos(pi * m.s) * perp) * (m.ds / T);
  });
  return d;
}

dmp::Demonstration shaking(dmp::Space space, const Rotation& R_c, const Vec3& a1, double A1,
                           const Vec3& a2, double A2, double phase, double period, int P) {
  if (!dmp::is_orientation(space)) throw std::invalid_argument("shaking: so3 or h1");
  dmp::Demonstration d;
  d.space = space;
  d.t = grid(period, P);
  const double w = 2.0 * pi / period;
  const Vec3 n1 = a1.normalized(), n2 = a2.normalized();
  fill_orientation(d, R_c, [&](double t, Vec3& phi, Vec3& phid) {
    phi = A1 * std::sin(w * t) * n1 + A2 * std::sin(2.0 * w * t + phase) * n2;
    phid = A1 * w * std::cos(w * t) * n1 + 2.0 * A2 * w * std::cos(2.0 * w * t + phase) * n2;
  });
  return d;
}

}  // namespace motorprim::synthetic
