#pragma once

// Trajectory CSV: columns step, u_*, y_* (when targets exist), z_*, x_*.
// Row with step 0 carries the initial state with zero input; step k >= 1 is trajectory index k - 1.
// Values are written in shortest round-trip form, so reading back is exact.

#include "ena/esn.hpp"

#include <filesystem>

namespace ena {

void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path);
Trajectory read_trajectory_csv(const std::filesystem::path& path);

}  // namespace ena
