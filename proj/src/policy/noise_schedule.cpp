#include "rail/policy/noise_schedule.hpp"

#include <cmath>

#include "rail/core/error.hpp"

namespace rail::policy {

NoiseSchedule NoiseSchedule::make(double nu_init, double increment, int period) {
  if (!(nu_init > 0.0) || !(increment >= 0.0) || period < 1) {
    throw DomainError("noise schedule needs nu_init > 0, increment >= 0, period >= 1");
  }
  NoiseSchedule s;
  s.nu = nu_init;
  s.nu_init = nu_init;
  s.increment = increment;
  s.period = period;
  return s;
}

NoiseSchedule NoiseSchedule::step(int iteration, double metric) const {
  if (!std::isfinite(metric)) throw DomainError("noise schedule metric must be finite");
  NoiseSchedule next = *this;
  if (iteration % period != 0) return next;
  if (metric <= best_metric) {
    next.nu += increment;
  } else {
    next.nu = nu_init;
    next.best_metric = metric;
  }
  return next;
}

}  // namespace rail::policy
