#pragma once

#include "rail/sim/highway.hpp"

namespace rail::sim {

// Distance from the host center to the rear bumper of the nearest vehicle
// ahead in `lane`, capped at max_range. Returns max_range for lanes that do
// not exist.
double forward_gap(const HighwayState& state, const HighwayConfig& config, int lane);
// Distance from the host center to the front bumper of the nearest vehicle
// behind in `lane`, capped at max_range.
double rear_gap(const HighwayState& state, const HighwayConfig& config, int lane);
// Host speed minus the speed of the nearest leader in `lane` (0 without one).
double closing_speed(const HighwayState& state, const HighwayConfig& config, int lane);

// Rule-based demonstrator driving from ground-truth gaps:
//   gap ahead > gap_open            -> accelerate (maintain at top speed)
//   gap ahead < gap_close           -> change into the adjacent lane with the
//                                      larger forward gap if that gap exceeds
//                                      gap_safe and its rear gap exceeds
//                                      rear_safe, left on ties; otherwise
//                                      decelerate while closing on the leader,
//                                      else maintain
//   otherwise                       -> maintain
// While a lane change is in progress the expert keeps requesting its current
// lateral direction, except that it decelerates when closing on a leader in
// the target lane within gap_close or in the origin lane within gap_close / 2.
DrivingAction scripted_expert(const Observation& observation, const HighwayState& state,
                              const HighwayConfig& config);

}  // namespace rail::sim
