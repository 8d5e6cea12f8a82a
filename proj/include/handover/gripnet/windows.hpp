#pragma once

// Cutting labelled classifier windows out of a segmented record.

#include "handover/data.hpp"
#include "handover/gripnet/model.hpp"

#include <vector>

namespace handover::gripnet {

inline constexpr int kFirstWindowEnd = -215;
inline constexpr int kLastWindowEnd = 0;

// Milliseconds relative to t = 0 to the nearest 120 Hz step.
int ms_to_step(double ms);

// Series over steps t_e - 99 .. t_e (100 samples) of (F_y, F_z, w).
Series window_series(const HandoverRecord& record, int t_e);

// One window per t_e in [-215, 0]; label = 1 iff t_e >= t_rel_start_step.
std::vector<GripWindow> make_windows(const HandoverRecord& record, int t_rel_start_step);

}  // namespace handover::gripnet
