// Serial reference vs OpenMP kernels for the potential landscape and the
// singularity scan. Prints wall times, speedup and whether outputs match.
//   bench_grids [landscape_n=512] [scan_points=6] [repeats=3]

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <numbers>

#include "motorprim/eda.hpp"
#include "motorprim/energy.hpp"

using namespace motorprim;
using Eigen::Matrix2d;
using Eigen::Matrix3d;
using Eigen::Vector2d;
using Eigen::Vector3d;

namespace {

double best_of(int repeats, const std::function<void()>& f) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void line(const char* what, double ts, double tp, bool same) {
  std::printf("%-34s serial %8.3f s  openmp %8.3f s  speedup %5.2fx  %s\n", what, ts, tp, ts / tp,
              same ? "identical" : "MISMATCH");
}

bool same_scan(const energy::ScanResult& a, const energy::ScanResult& b) {
  if (a.flagged != b.flagged || a.cloud.size() != b.cloud.size()) return false;
  return std::memcmp(a.cloud.data(), b.cloud.data(), a.cloud.size() * sizeof(energy::CloudPoint)) == 0 &&
         a.sigma_floor == b.sigma_floor;
}

}  // namespace

int main(int argc, char** argv) {
  const int n = argc > 1 ? std::atoi(argv[1]) : 512;
  const int pts = argc > 2 ? std::atoi(argv[2]) : 6;
  const int repeats = argc > 3 ? std::atoi(argv[3]) : 3;
  std::printf("threads: %d\n", omp_get_max_threads());

  // planar two-module potential on the torus
  chain::RobotModel planar = chain::RobotModel::planar_2link();
  chain::FramePoint ee{planar.frame_index("ee"), Vector3d::Zero()};
  const double pi = std::numbers::pi;
  eda::Controller ctl({eda::TaskPosModule{60.0 * Matrix3d::Identity(), 20.0 * Matrix3d::Identity(), ee,
                                          eda::VirtualTrajectory::hold(eda::VtSpace::TaskPosition,
                                                                       Vector3d(1.2, 0.9, 0.0))},
                       eda::JointModule{2.0 * Matrix2d::Identity(), Matrix2d::Identity(),
                                        eda::VirtualTrajectory::hold(eda::VtSpace::Joint,
                                                                     Vector2d(0.2 * pi, 0.6 * pi))}},
                      false, planar);
  energy::LandscapeSpec ls;
  ls.n_i = ls.n_j = n;
  energy::Landscape la, lb;
  double ts = best_of(repeats, [&] { la = energy::landscape_grid_serial(ctl, planar, ls); });
  double tp = best_of(repeats, [&] { lb = energy::landscape_grid(ctl, planar, ls); });
  char label[64];
  std::snprintf(label, sizeof(label), "landscape %dx%d", n, n);
  line(label, ts, tp, std::memcmp(la.U.data(), lb.U.data(), sizeof(double) * la.U.size()) == 0);

  // 7-joint scan with joint 1 held (sigma_min does not depend on it)
  chain::RobotModel arm = chain::RobotModel::iiwa14_standin();
  energy::ScanSpec ss;
  ss.points_per_joint = pts;
  ss.fixed.assign(7, std::nullopt);
  ss.fixed[0] = 0.0;
  ss.offset_seed = 7;
  ss.point.frame = arm.frame_index("ee");
  energy::ScanResult sa, sb;
  ts = best_of(repeats, [&] { sa = energy::singularity_scan_serial(arm, ss); });
  tp = best_of(repeats, [&] { sb = energy::singularity_scan(arm, ss); });
  std::snprintf(label, sizeof(label), "scan iiwa %zu states", sa.states);
  line(label, ts, tp, same_scan(sa, sb));
  std::printf("  flagged fraction %.4f, %.2f us per state (serial)\n", sa.fraction, 1e6 * ts / sa.states);
  return 0;
}
