#include <algorithm>
#include <exception>
#include <limits>

#include "motorprim/energy.hpp"

namespace motorprim::energy {

namespace {

constexpr std::size_t kBlock = 8192;

// Runs body(i) for i in [0, n) across threads; the first exception thrown by
// any iteration is rethrown on the calling thread.
template <class Body>
void parallel_for(std::ptrdiff_t n, Body body) {
  std::exception_ptr err;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
#pragma omp critical(motorprim_grid_error)
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
}

}  // namespace

Landscape landscape_grid(const eda::Controller& ctl, const RobotModel& model,
                         const LandscapeSpec& spec_in) {
  LandscapeSpec spec = spec_in;
  Landscape L = detail::prepare_landscape(model, spec);
  const std::ptrdiff_t total = static_cast<std::ptrdiff_t>(spec.n_i) * spec.n_j;
  parallel_for(total, [&](std::ptrdiff_t k) {
    const int a = static_cast<int>(k / spec.n_j);
    const int b = static_cast<int>(k % spec.n_j);
    L.U(a, b) = detail::landscape_point(ctl, model, spec, a, b);
  });
  return L;
}

ScanResult singularity_scan(const RobotModel& model, const ScanSpec& spec) {
  const detail::ScanPlan plan = detail::plan_scan(model, spec);
  ScanResult res;
  res.states = plan.states;
  res.sigma_floor = std::numeric_limits<double>::infinity();
  std::vector<CloudPoint> buf(std::min(kBlock, plan.states));
  for (std::size_t start = 0; start < plan.states; start += kBlock) {
    const std::size_t len = std::min(kBlock, plan.states - start);
    parallel_for(static_cast<std::ptrdiff_t>(len), [&](std::ptrdiff_t i) {
      buf[i] = singularity_sample(model, plan.q_at(start + i), spec.point, plan.rows);
    });
    // merge in index order so the result does not depend on the thread count
    for (std::size_t i = 0; i < len; ++i) {
      res.sigma_floor = std::min(res.sigma_floor, buf[i].sigma_min);
      if (buf[i].sigma_min <= spec.threshold) {
        ++res.flagged;
        res.cloud.push_back(buf[i]);
      }
    }
  }
  res.fraction = plan.states ? static_cast<double>(res.flagged) / plan.states : 0.0;
  return res;
}

}  // namespace motorprim::energy
