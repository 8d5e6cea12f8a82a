#pragma once

// Weight-adaptive minimum-jerk reach trajectories.

#include "handover/data.hpp"
#include "handover/features.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace handover::motion {

using features::WeightCategory;

// Closed-form extrema of a rest-to-rest quintic over distance d and time T.
inline constexpr double kPeakSpeedFactor = 1.875;                 // * d / T
inline constexpr double kPeakAccelFactor = 5.773502691896258;     // 10 / sqrt(3) * d / T^2

struct TrajectoryProfile {
    WeightCategory category = WeightCategory::Moderate;
    double max_accel_cap = 0.0;  // m/s^2
    double avg_accel_ref = 0.0;  // descriptive only
};

TrajectoryProfile profile(WeightCategory category);

struct Waypoint {
    Vec3 position = Vec3::Zero();
    double time_s = 0.0;
};

struct Trajectory {
    std::vector<double> t;
    std::vector<Vec3> position;
    std::vector<Vec3> velocity;
    std::vector<Vec3> acceleration;
    std::vector<Waypoint> knots;  // segment endpoints with their planned times
    std::vector<std::string> warnings;

    double duration() const { return knots.empty() ? 0.0 : knots.back().time_s; }
    std::size_t size() const { return t.size(); }
};

struct KinematicState {
    Vec3 position = Vec3::Zero();
    Vec3 velocity = Vec3::Zero();
    Vec3 acceleration = Vec3::Zero();
};

// Rest-to-rest quintic from start to end over duration_s, evaluated at t
// (clamped to [0, duration_s]).
KinematicState min_jerk_state(const Vec3& start, const Vec3& end, double duration_s, double t);

// Samples at k / fs for every k with k / fs < T, plus the exact endpoint T.
Trajectory min_jerk_segment(const Vec3& start, const Vec3& end, double duration_s, double sample_rate_hz = kSampleRateHz);

// Smallest T with kPeakAccelFactor * d / T^2 <= cap.
double min_segment_duration(double distance_m, double accel_cap);

// Rest-to-rest min-jerk segments between consecutive waypoints, each timed
// as fast as the category cap allows. Consecutive duplicates are collapsed
// with a warning.
Trajectory plan_reach(std::span<const Vec3> waypoints, WeightCategory category, double sample_rate_hz = kSampleRateHz);

// Accepts {"waypoints": [[x, y, z], ...]} or a bare array; entries may also be
// objects with a "position" array.
std::vector<Vec3> load_waypoints(const std::filesystem::path& file);

void write_trajectory_csv(const Trajectory& trajectory, const std::filesystem::path& file);

}  // namespace handover::motion
