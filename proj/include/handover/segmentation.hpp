#pragma once

// Cutting continuous session recordings into 800-frame handover records.

#include "handover/data.hpp"

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace handover::seg {

enum class Method { GripIntersection, MotionCoholding };

std::string_view to_string(Method m);

// Window [start, end) of kSegmentLength frames; t = 0 sits at `center`,
// which maps to sample kCenterIndex of the extracted record.
struct SegmentBoundary {
    std::ptrdiff_t center_index = 0;
    std::ptrdiff_t start_index = 0;
    std::ptrdiff_t end_index = 0;
    Method method = Method::GripIntersection;

    static SegmentBoundary centered_at(std::ptrdiff_t center, Method method);
};

struct SegmentationConfig {
    double contact_threshold_n = 0.4;
    // The sign of giver - taker must hold for this many samples on each side.
    std::size_t persistence = 5;
    double grasp_radius_m = 0.12;
};

std::vector<SegmentBoundary> find_grip_intersections(std::span<const double> giver_grip, std::span<const double> taker_grip,
                                                     const SegmentationConfig& config = {});

// One boundary per maximal run of frames where both hands are within the
// grasp radius of the object; the center is the run midpoint.
std::vector<SegmentBoundary> find_coholding_segments(std::span<const Pose> giver_hand, std::span<const Pose> taker_hand,
                                                     std::span<const Pose> object_pose, const SegmentationConfig& config = {});

// Pure windowing; sample indices of the output start at 0.
HandoverRecord extract(const HandoverRecord& session, const SegmentBoundary& boundary);

}  // namespace handover::seg
