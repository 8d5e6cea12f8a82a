#include "common.hpp"

#include "handover/features.hpp"
#include "handover/motion.hpp"
#include "handover/signal.hpp"

#include <cmath>
#include <fstream>

using namespace handover;
using namespace handover::motion;
using testutil::error_kind;
using testutil::TempDir;

namespace {

// Rest-to-rest quintic written out independently of the library.
double quintic(double d, double T, double t)
{
    const double s = std::clamp(t / T, 0.0, 1.0);
    return d * (10 * std::pow(s, 3) - 15 * std::pow(s, 4) + 6 * std::pow(s, 5));
}

double peak(const std::vector<Vec3>& v)
{
    double m = 0.0;
    for (const auto& x : v) m = std::max(m, x.norm());
    return m;
}

}  // namespace

TEST(MinJerk, ProfilesAreOrderedAndMatchReferenceValues)
{
    EXPECT_DOUBLE_EQ(profile(WeightCategory::Low).max_accel_cap, 38.676);
    EXPECT_DOUBLE_EQ(profile(WeightCategory::Moderate).max_accel_cap, 27.575);
    EXPECT_DOUBLE_EQ(profile(WeightCategory::High).max_accel_cap, 20.575);
    EXPECT_DOUBLE_EQ(profile(WeightCategory::Low).avg_accel_ref, 5.270);
    EXPECT_DOUBLE_EQ(profile(WeightCategory::Moderate).avg_accel_ref, 4.920);
    EXPECT_DOUBLE_EQ(profile(WeightCategory::High).avg_accel_ref, 4.580);
    EXPECT_GT(profile(WeightCategory::Low).max_accel_cap, profile(WeightCategory::Moderate).max_accel_cap);
    EXPECT_GT(profile(WeightCategory::Moderate).max_accel_cap, profile(WeightCategory::High).max_accel_cap);
}

TEST(MinJerk, StateMatchesQuinticAndClosedFormPeaks)
{
    const Vec3 a(0.1, -0.2, 0.9), b(0.5, 0.1, 1.2);
    const double d = (b - a).norm(), T = 0.8;
    for (double t = 0.0; t <= T; t += 0.01) {
        const auto s = min_jerk_state(a, b, T, t);
        EXPECT_NEAR((s.position - a).norm(), quintic(d, T, t), 1e-12);
    }
    const auto mid = min_jerk_state(a, b, T, T / 2);
    EXPECT_NEAR(mid.velocity.norm(), 1.875 * d / T, 1e-12);
    const double tpk = T * (0.5 - std::sqrt(3.0) / 6.0);
    EXPECT_NEAR(min_jerk_state(a, b, T, tpk).acceleration.norm(), kPeakAccelFactor * d / (T * T), 1e-9);
}

TEST(MinJerk, SegmentBoundaryConditionsAndPeakSpeed)
{
    // d = 0.6 m, T = 1 s.
    const auto tr = min_jerk_segment(Vec3::Zero(), Vec3(0.6, 0, 0), 1.0, 120.0);
    ASSERT_GE(tr.size(), 121u);
    EXPECT_DOUBLE_EQ(tr.t.front(), 0.0);
    EXPECT_DOUBLE_EQ(tr.t.back(), 1.0);
    EXPECT_LT(tr.velocity.front().norm(), 1e-9);
    EXPECT_LT(tr.acceleration.front().norm(), 1e-9);
    EXPECT_LT(tr.velocity.back().norm(), 1e-9);
    EXPECT_LT(tr.acceleration.back().norm(), 1e-9);
    EXPECT_NEAR(peak(tr.velocity), 1.125, 1e-6);  // sample at t = 0.5 exists
    EXPECT_EQ(tr.position.back(), Vec3(0.6, 0, 0));
}

TEST(MinJerk, DegenerateAndInvalidSegments)
{
    const Vec3 p(1, 2, 3);
    const auto tr = min_jerk_segment(p, p, 0.5, 120.0);
    for (std::size_t i = 0; i < tr.size(); ++i) {
        EXPECT_EQ(tr.position[i], p);
        EXPECT_EQ(tr.velocity[i], Vec3::Zero());
        EXPECT_EQ(tr.acceleration[i], Vec3::Zero());
    }
    EXPECT_EQ(error_kind([] { min_jerk_segment(Vec3::Zero(), Vec3::UnitX(), 0.0, 120.0); }), ErrorKind::Parameter);
    EXPECT_EQ(error_kind([] { min_jerk_segment(Vec3::Zero(), Vec3::UnitX(), -1.0, 120.0); }), ErrorKind::Parameter);
}

TEST(PlanReach, SingleSegmentDurationFromCap)
{
    const std::vector<Vec3> wp{Vec3::Zero(), Vec3(0.5, 0, 0)};
    const auto tr = plan_reach(wp, WeightCategory::High);
    EXPECT_NEAR(tr.duration(), std::sqrt(5.7735 * 0.5 / 20.575), 1e-4);
    EXPECT_NEAR(tr.duration(), 0.3746, 1e-4);
}

TEST(PlanReach, CategoryOrderingAndRatio)
{
    const std::vector<Vec3> wp{Vec3::Zero(), Vec3(0.3, 0.1, 0), Vec3(0.5, 0.4, 0.2), Vec3(0.2, 0.2, 0.3)};
    const double low = plan_reach(wp, WeightCategory::Low).duration();
    const double mod = plan_reach(wp, WeightCategory::Moderate).duration();
    const double high = plan_reach(wp, WeightCategory::High).duration();
    EXPECT_LT(low, mod);
    EXPECT_LT(mod, high);
    EXPECT_NEAR(low / high, std::sqrt(20.575 / 38.676), 1e-9);
    EXPECT_NEAR(low / high, 0.7293, 1e-4);
}

TEST(PlanReach, RespectsCapsAndIsTight)
{
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (auto cat : {WeightCategory::Low, WeightCategory::Moderate, WeightCategory::High}) {
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<Vec3> wp;
            for (int k = 0; k < 2 + trial % 4; ++k) wp.emplace_back(u(rng), u(rng), 1.0 + u(rng));
            const auto tr = plan_reach(wp, cat);
            const double cap = profile(cat).max_accel_cap;
            const double a = peak(tr.acceleration);
            EXPECT_LE(a, cap * 1.005);
            // The longest segment is timed exactly to the cap; 120 Hz sampling
            // may miss the true peak by a little.
            EXPECT_GE(a, cap * 0.98);
        }
    }
}

TEST(PlanReach, JointsAreAtRest)
{
    const std::vector<Vec3> wp{Vec3::Zero(), Vec3(0.3, 0, 0), Vec3(0.3, 0.3, 0)};
    const auto tr = plan_reach(wp, WeightCategory::Moderate);
    ASSERT_EQ(tr.knots.size(), 3u);
    for (const auto& k : tr.knots) {
        const auto it = std::find_if(tr.t.begin(), tr.t.end(), [&](double t) { return std::abs(t - k.time_s) < 1e-12; });
        if (it == tr.t.end()) continue;
        const auto i = static_cast<std::size_t>(it - tr.t.begin());
        EXPECT_LT(tr.velocity[i].norm(), 1e-9);
        EXPECT_LT(tr.acceleration[i].norm(), 1e-9);
    }
    for (std::size_t i = 1; i < tr.size(); ++i) EXPECT_GT(tr.t[i], tr.t[i - 1]);
}

TEST(PlanReach, DuplicatesCollapsedWithWarning)
{
    const std::vector<Vec3> wp{Vec3::Zero(), Vec3::Zero(), Vec3(0.4, 0, 0), Vec3(0.4, 0, 0)};
    const auto tr = plan_reach(wp, WeightCategory::Low);
    EXPECT_FALSE(tr.warnings.empty());
    EXPECT_EQ(tr.knots.size(), 2u);
    EXPECT_EQ(error_kind([] { plan_reach(std::vector<Vec3>{Vec3::Zero()}, WeightCategory::Low); }), ErrorKind::Parameter);
}

TEST(PlanReach, MotionMetricsRecoverAnalyticPeaks)
{
    // Long enough that the 5 Hz smoothing used by the feature pipeline barely
    // touches the peaks.
    const std::vector<Vec3> wp{Vec3::Zero(), Vec3(0.6, 0, 0)};
    const double T = 1.2;
    auto tr = min_jerk_segment(wp[0], wp[1], T, 120.0);
    std::vector<Vec3> padded(120, wp[0]);
    padded.insert(padded.end(), tr.position.begin(), tr.position.end());
    padded.insert(padded.end(), 120, wp[1]);
    const auto smooth = signal::filtfilt(std::span<const Vec3>(padded));
    const auto m = features::motion_metrics(smooth, {0, smooth.size()});
    EXPECT_NEAR(m.max_velocity, 1.875 * 0.6 / T, 0.01 * 1.875 * 0.6 / T);
    EXPECT_NEAR(m.max_acceleration, kPeakAccelFactor * 0.6 / (T * T), 0.01 * kPeakAccelFactor * 0.6 / (T * T));
}

TEST(PlanReach, WaypointFilesAndCsv)
{
    TempDir dir("wp");
    {
        std::ofstream(dir.path / "a.json") << R"({"waypoints": [[0, 0, 0], [0.2, 0, 0]]})";
        std::ofstream(dir.path / "b.json") << R"([{"position": [0, 0, 0]}, {"position": [0, 0.2, 0]}])";
        std::ofstream(dir.path / "c.json") << R"({"waypoints": [[0, 0]]})";
    }
    EXPECT_EQ(load_waypoints(dir.path / "a.json").size(), 2u);
    EXPECT_EQ(load_waypoints(dir.path / "b.json")[1], Vec3(0, 0.2, 0));
    EXPECT_EQ(error_kind([&] { load_waypoints(dir.path / "c.json"); }), ErrorKind::Format);

    const auto tr = plan_reach(load_waypoints(dir.path / "a.json"), WeightCategory::Low);
    write_trajectory_csv(tr, dir.path / "trajectory.csv");
    std::ifstream in(dir.path / "trajectory.csv");
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "t,x,y,z,vx,vy,vz,ax,ay,az");
    std::size_t rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    EXPECT_EQ(rows, tr.size());
}
