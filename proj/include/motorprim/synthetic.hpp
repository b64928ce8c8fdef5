#pragma once

#include <Eigen/Dense>

#include "motorprim/dmp.hpp"

namespace motorprim::synthetic {

using Eigen::VectorXd;
using geom::Rotation;
using geom::Vec3;

/// s(u) = 10u^3 - 15u^4 + 6u^5 and its first two derivatives in u.
struct MinJerkProfile {
  double s, ds, dds;
};
MinJerkProfile min_jerk_profile(double u);

/// Min-jerk reach from `start` to `goal` over T seconds, P samples, with
/// analytic rates and accelerations.
dmp::Demonstration min_jerk(dmp::Space space, const VectorXd& start, const VectorXd& goal, double T,
                            int P);

/// One inclusive period of the Lissajous figure-eight
/// p = center + a sin(wt) u + b sin(2wt) v in the plane spanned by u, v.
dmp::Demonstration figure_eight(const Vec3& center, double a, double b, const Vec3& u,
                                const Vec3& v, double period, int P);

/// One inclusive period of a circle of radius r in the u, v plane.
dmp::Demonstration circle(const Vec3& center, double r, const Vec3& u, const Vec3& v,
                          double period, int P);

/// Orientation arc R(t) = R_start Exp(phi(t)), phi = angle s(t) axis + wobble
/// sin(pi s(t)) perp, with s the min-jerk profile. Spatial angular velocity is
/// analytic.
dmp::Demonstration orientation_arc(dmp::Space space, const Rotation& R_start, const Vec3& axis,
                                   double angle, double wobble, double T, int P);

/// One inclusive period of a shaking motion R(t) = R_c Exp(A1 sin(wt) a1 +
/// A2 sin(2wt + phase) a2).
dmp::Demonstration shaking(dmp::Space space, const Rotation& R_c, const Vec3& a1, double A1,
                           const Vec3& a2, double A2, double phase, double period, int P);

}  // namespace motorprim::synthetic
