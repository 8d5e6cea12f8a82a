#pragma once

// Handover recordings: in-memory model, canonical on-disk format, validation.
//
// A record lives in one directory holding `signals.csv` (one row per 120 Hz
// frame) and `meta.json`. Units are SI throughout and the world frame is Z-up.

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace handover {

using Vec3 = Eigen::Vector3d;

inline constexpr double kSampleRateHz = 120.0;
inline constexpr std::size_t kSegmentLength = 800;
inline constexpr std::size_t kCenterIndex = 400;
inline constexpr double kGravity = 9.81;

struct WrenchSample {
    std::int64_t t = 0;
    Vec3 force = Vec3::Zero();
    Vec3 torque = Vec3::Zero();
};

// A missing (occluded) pose is stored as all-NaN.
struct Pose {
    Vec3 position = Vec3::Zero();
    std::array<double, 4> rotation{1.0, 0.0, 0.0, 0.0};

    static Pose missing();
    bool present() const;
};

enum class Body : std::size_t {
    Hip,
    Ab,
    Chest,
    Neck,
    Head,
    LeftShoulder,
    RightShoulder,
    LeftUpperArm,
    RightUpperArm,
    LeftForearm,
    RightForearm,
    LeftHand,
    RightHand,
};

inline constexpr std::size_t kBodyCount = 13;
inline constexpr std::array<std::string_view, kBodyCount> kBodyNames{
    "Hip",         "Ab",           "Chest",       "Neck",         "Head",
    "LShoulder",   "RShoulder",    "LUArm",       "RUArm",        "LFArm",
    "RFArm",       "LHand",        "RHand",
};

struct SkeletonFrame {
    std::array<Pose, kBodyCount> bodies;

    Pose& operator[](Body b) { return bodies[static_cast<std::size_t>(b)]; }
    const Pose& operator[](Body b) const { return bodies[static_cast<std::size_t>(b)]; }
};

enum class DatasetTag { RPL, RPL2, YCB };

std::string_view to_string(DatasetTag tag);
DatasetTag parse_dataset_tag(std::string_view text);

struct Participant {
    double height_m = 1.75;
    double arm_length_m = 0.7;
    int age = 30;
    std::string handedness = "right";
};

struct RecordMeta {
    double weight_kg = 1.0;
    DatasetTag dataset_tag = DatasetTag::RPL2;
    std::string object_label;
    double sample_rate_hz = kSampleRateHz;
    Participant giver;
    Participant taker;
    bool has_forces = true;
    // Derived at load time: false when a pose gap longer than the
    // interpolation limit remains.
    bool motion_usable = true;
};

struct HandoverRecord {
    RecordMeta meta;
    std::vector<WrenchSample> interaction;
    std::vector<WrenchSample> giver_grip;
    std::vector<WrenchSample> taker_grip;
    std::vector<Pose> object_pose;
    std::vector<SkeletonFrame> giver_skeleton;
    std::vector<SkeletonFrame> taker_skeleton;

    std::size_t length() const { return object_pose.size(); }
};

struct LoadOptions {
    // Baton datasets (RPL, RPL-2.0) hold pre-segmented 800-frame windows;
    // sessions are unsegmented and may have any length.
    bool require_segment_length = true;
};

inline constexpr std::size_t kMaxInterpolatedGap = 5;

// Throws Error(Validation|Alignment) naming the first violated invariant.
void validate(const HandoverRecord& record, const LoadOptions& options = {});

HandoverRecord load_record(const std::filesystem::path& dir, const LoadOptions& options = {});
HandoverRecord load_session(const std::filesystem::path& dir);
void save_record(const HandoverRecord& record, const std::filesystem::path& dir);

// Canonical `signals.csv` column names for a record with or without forces.
std::vector<std::string> signal_columns(bool has_forces);

// Fills pose gaps of at most kMaxInterpolatedGap frames (position lerp,
// quaternion nlerp). Returns false if a longer or unbounded gap remains.
bool interpolate_pose_gaps(std::vector<Pose>& poses, std::size_t max_gap = kMaxInterpolatedGap);

// Bitwise equality, so missing (NaN) poses compare equal to themselves.
bool identical(const HandoverRecord& a, const HandoverRecord& b);

// Element-wise -force.z.
std::vector<double> grip_force(std::span<const WrenchSample> seq);

struct ManifestEntry {
    std::filesystem::path path;
    double weight_kg = 0.0;
    std::string object_label;
    DatasetTag dataset_tag = DatasetTag::RPL2;
    bool has_forces = true;
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;
};

// Relative entry paths are resolved against the manifest's directory.
DatasetManifest load_manifest(const std::filesystem::path& file);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& file);
void validate(const DatasetManifest& manifest);

}  // namespace handover
