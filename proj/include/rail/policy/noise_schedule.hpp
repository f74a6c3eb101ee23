#pragma once

#include <limits>

namespace rail::policy {

// Adaptive exploration noise. Every `period` iterations the metric is
// compared with the best seen so far: no improvement widens the noise by
// `increment`, an improvement resets it to `nu_init`.
struct NoiseSchedule {
  double nu = 0.03;
  double nu_init = 0.03;
  double increment = 0.001;
  int period = 1;
  double best_metric = -std::numeric_limits<double>::infinity();

  static NoiseSchedule make(double nu_init, double increment, int period);

  // Throws DomainError on a non-finite metric. Iterations are counted from 1.
  NoiseSchedule step(int iteration, double metric) const;

  bool operator==(const NoiseSchedule&) const = default;
};

}  // namespace rail::policy
