#pragma once

#include "objattn/simworld/sim.hpp"

namespace objattn::sim {

/// Scripted demonstrator with ground-truth access. Markovian and
/// deterministic.
///
/// Pour: proportional control toward the target center, norm-capped at
/// a_max. Sweep: route around the swept object to a pre-contact point on
/// the far side from the dustpan, then push it along the object->dustpan
/// line, slowing as it nears the dustpan center.
Action scripted_expert(const TaskSpec& task, const SimState& state);

}  // namespace objattn::sim
