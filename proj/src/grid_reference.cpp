#include <algorithm>
#include <limits>

#include "motorprim/energy.hpp"

namespace motorprim::energy {

Landscape landscape_grid_serial(const eda::Controller& ctl, const RobotModel& model,
                                const LandscapeSpec& spec_in) {
  LandscapeSpec spec = spec_in;
  Landscape L = detail::prepare_landscape(model, spec);
  for (int a = 0; a < spec.n_i; ++a) {
    for (int b = 0; b < spec.n_j; ++b) L.U(a, b) = detail::landscape_point(ctl, model, spec, a, b);
  }
  return L;
}

ScanResult singularity_scan_serial(const RobotModel& model, const ScanSpec& spec) {
  const detail::ScanPlan plan = detail::plan_scan(model, spec);
  ScanResult res;
  res.states = plan.states;
  res.sigma_floor = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < plan.states; ++k) {
    CloudPoint c = singularity_sample(model, plan.q_at(k), spec.point, plan.rows);
    res.sigma_floor = std::min(res.sigma_floor, c.sigma_min);
    if (c.sigma_min <= spec.threshold) {
      ++res.flagged;
      res.cloud.push_back(c);
    }
  }
  res.fraction = plan.states ? static_cast<double>(res.flagged) / plan.states : 0.0;
  return res;
}

}  // namespace motorprim::energy
