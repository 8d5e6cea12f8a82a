#include "handover/segmentation.hpp"

#include "handover/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace handover::seg {

std::string_view to_string(Method m)
{
    return m == Method::GripIntersection ? "grip_intersection" : "motion_coholding";
}

SegmentBoundary SegmentBoundary::centered_at(std::ptrdiff_t center, Method method)
{
    SegmentBoundary b;
    b.center_index = center;
    b.start_index = center - static_cast<std::ptrdiff_t>(kCenterIndex);
    b.end_index = b.start_index + static_cast<std::ptrdiff_t>(kSegmentLength);
    b.method = method;
    return b;
}

std::vector<SegmentBoundary> find_grip_intersections(std::span<const double> giver, std::span<const double> taker,
                                                     const SegmentationConfig& config)
{
    if (giver.size() != taker.size())
        fail(ErrorKind::Alignment, "grip sequences differ in length (" + std::to_string(giver.size()) + " vs " + std::to_string(taker.size()) + ")");
    const std::size_t n = giver.size();
    const std::size_t k = config.persistence;

    struct Candidate {
        std::size_t index;
        double combined;
    };
    std::vector<Candidate> candidates;
    auto diff = [&](std::size_t i) { return giver[i] - taker[i]; };

    for (std::size_t i = std::max<std::size_t>(k, 1); i + k <= n; ++i) {
        if (!(diff(i - 1) > 0.0 && diff(i) <= 0.0)) continue;
        bool stable = true;
        for (std::size_t j = 1; j <= k && stable; ++j) stable = diff(i - j) > 0.0;
        for (std::size_t j = 0; j < k && stable; ++j) stable = diff(i + j) <= 0.0;
        if (!stable) continue;
        const std::size_t at = std::abs(diff(i)) <= std::abs(diff(i - 1)) ? i : i - 1;
        if (giver[at] <= config.contact_threshold_n || taker[at] <= config.contact_threshold_n) continue;
        candidates.push_back({at, giver[at] + taker[at]});
    }

    // Non-maximum suppression over one window length, strongest grip first.
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return candidates[a].combined > candidates[b].combined; });
    std::vector<std::size_t> kept;
    for (std::size_t idx : order) {
        const auto at = candidates[idx].index;
        const bool clash = std::any_of(kept.begin(), kept.end(), [&](std::size_t other) {
            return (at > other ? at - other : other - at) < kSegmentLength;
        });
        if (!clash) kept.push_back(at);
    }
    std::sort(kept.begin(), kept.end());

    std::vector<SegmentBoundary> out;
    out.reserve(kept.size());
    for (auto at : kept) out.push_back(SegmentBoundary::centered_at(static_cast<std::ptrdiff_t>(at), Method::GripIntersection));
    return out;
}

std::vector<SegmentBoundary> find_coholding_segments(std::span<const Pose> giver_hand, std::span<const Pose> taker_hand,
                                                     std::span<const Pose> object_pose, const SegmentationConfig& config)
{
    if (giver_hand.size() != object_pose.size() || taker_hand.size() != object_pose.size())
        fail(ErrorKind::Alignment, "hand and object pose sequences differ in length");
    const std::size_t n = object_pose.size();
    auto near = [&](const Pose& hand, const Pose& obj) {
        return hand.present() && obj.present() && (hand.position - obj.position).norm() <= config.grasp_radius_m;
    };

    std::vector<SegmentBoundary> out;
    std::size_t i = 0;
    while (i < n) {
        if (!(near(giver_hand[i], object_pose[i]) && near(taker_hand[i], object_pose[i]))) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < n && near(giver_hand[j + 1], object_pose[j + 1]) && near(taker_hand[j + 1], object_pose[j + 1])) ++j;
        const auto center = static_cast<std::ptrdiff_t>((i + j) / 2);
        out.push_back(SegmentBoundary::centered_at(center, Method::MotionCoholding));
        i = j + 1;
    }
    return out;
}

HandoverRecord extract(const HandoverRecord& session, const SegmentBoundary& b)
{
    const auto n = static_cast<std::ptrdiff_t>(session.length());
    if (b.start_index < 0 || b.end_index > n || b.end_index - b.start_index != static_cast<std::ptrdiff_t>(kSegmentLength) ||
        b.center_index < b.start_index || b.center_index > b.end_index)
        fail(ErrorKind::Bounds, "segment window [" + std::to_string(b.start_index) + ", " + std::to_string(b.end_index) +
                                    ") does not fit a session of " + std::to_string(n) + " frames");

    const auto first = static_cast<std::size_t>(b.start_index);
    const auto last = static_cast<std::size_t>(b.end_index);
    HandoverRecord r;
    r.meta = session.meta;
    auto slice = [&](const auto& v) { return std::decay_t<decltype(v)>(v.begin() + first, v.begin() + last); };
    if (session.meta.has_forces) {
        r.interaction = slice(session.interaction);
        r.giver_grip = slice(session.giver_grip);
        r.taker_grip = slice(session.taker_grip);
        for (auto* seq : {&r.interaction, &r.giver_grip, &r.taker_grip})
            for (std::size_t i = 0; i < seq->size(); ++i) (*seq)[i].t = static_cast<std::int64_t>(i);
    }
    r.object_pose = slice(session.object_pose);
    r.giver_skeleton = slice(session.giver_skeleton);
    r.taker_skeleton = slice(session.taker_skeleton);

    bool usable = true;
    for (const auto& p : r.object_pose) usable = usable && p.present();
    for (const auto* skel : {&r.giver_skeleton, &r.taker_skeleton})
        for (const auto& f : *skel)
            for (const auto& p : f.bodies) usable = usable && p.present();
    r.meta.motion_usable = usable;
    return r;
}

}  // namespace handover::seg
