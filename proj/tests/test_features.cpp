#include "common.hpp"

#include "handover/features.hpp"
#include "handover/harness.hpp"
#include "handover/motion.hpp"
#include "handover/signal.hpp"

#include <cmath>

using namespace handover;
using namespace handover::features;
using testutil::error_kind;
using testutil::kSampleMs;

namespace {

constexpr double kOneSample = kSampleMs + 1e-9;

}  // namespace

TEST(Features, RecoversPlantedInstantsWithoutNoise)
{
    std::mt19937_64 rng(11);
    for (int k = 0; k < 200; ++k) {
        const auto spec = testutil::grid_spec(rng);
        const auto g = harness::generate(spec);
        const auto f = compute_features(g.record);
        SCOPED_TRACE("record " + std::to_string(k) + " w " + std::to_string(spec.weight_kg));
        ASSERT_TRUE(f.t_tak_con_ms && f.t_giv_rel_ms && f.t_tf_ms && f.t_rel_start_ms && f.t_gr_ms && f.t_ld_shift_ms && f.max_pull_n);
        EXPECT_NEAR(*f.t_tak_con_ms, g.truth.t_tak_con_ms, kOneSample);
        EXPECT_NEAR(*f.t_giv_rel_ms, g.truth.t_giv_rel_ms, kOneSample);
        EXPECT_NEAR(*f.t_tf_ms, g.truth.t_tf_ms, kOneSample);
        EXPECT_NEAR(*f.t_rel_start_ms, g.truth.t_rel_start_ms, kOneSample);
        EXPECT_NEAR(*f.t_gr_ms, g.truth.t_gr_ms, kOneSample);
        EXPECT_NEAR(*f.t_ld_shift_ms, g.truth.t_ld_shift_ms, kOneSample);
        EXPECT_NEAR(*f.max_pull_n, g.truth.max_pull_n, 1e-6);
        EXPECT_NEAR(*f.max_pull_over_weight, g.truth.max_pull_n / (spec.weight_kg * kGravity), 1e-9);
        EXPECT_NEAR(*f.transfer_height_norm, g.truth.transfer_height_norm, 1e-9);
        EXPECT_TRUE(f.undefined.empty());
    }
}

TEST(Features, IndexConversions)
{
    EXPECT_DOUBLE_EQ(index_to_ms(400), 0.0);
    EXPECT_DOUBLE_EQ(index_to_ms(412), 100.0);
    EXPECT_DOUBLE_EQ(index_to_ms(0), -400.0 * 1000.0 / 120.0);
    EXPECT_EQ(ms_to_index(-100.0), 388);
    EXPECT_EQ(ms_to_index(index_to_ms(123)), 123);
}

TEST(Features, TransferTimeOnHandBuiltTraces)
{
    // Taker crosses 0.4 N between samples 389 and 390, giver between 405 and
    // 406: t_tak_con at index 390, t_giv_rel at index 406.
    std::vector<double> giver(800, 5.0), taker(800, 0.0);
    for (std::size_t i = 390; i < 800; ++i) taker[i] = 5.0;
    for (std::size_t i = 406; i < 800; ++i) giver[i] = 0.1;
    const auto t = transfer_time(giver, taker);
    EXPECT_EQ(t.tak_con_index, 390u);
    EXPECT_EQ(t.giv_rel_index, 406u);
    EXPECT_DOUBLE_EQ(t.t_tak_con_ms, -10 * kSampleMs);
    EXPECT_DOUBLE_EQ(t.t_giv_rel_ms, 6 * kSampleMs);
    EXPECT_DOUBLE_EQ(t.t_tf_ms, 16 * kSampleMs);
}

TEST(Features, TransferTimeUndefinedWithoutCrossings)
{
    std::vector<double> giver(800, 5.0), taker(800, 0.0);
    EXPECT_EQ(error_kind([&] { transfer_time(giver, taker); }), ErrorKind::MetricUndefined);
}

TEST(Features, ReleaseOnsetOfHingeTrace)
{
    // Flat at 6 N, then a straight decline from index 380.
    std::vector<double> g(800, 6.0);
    for (std::size_t i = 380; i < 800; ++i) g[i] = std::max(0.0, 6.0 - 0.1 * static_cast<double>(i - 380));
    const auto onset = release_start_index(g, 350);
    ASSERT_TRUE(onset.has_value());
    EXPECT_NEAR(static_cast<double>(*onset), 380.0, 1.0);
}

TEST(Features, MaxPullUsesTransferWindow)
{
    std::vector<double> fz(800, 1.0);
    fz[395] = 4.0;  // inside
    fz[300] = 50.0; // before contact
    fz[500] = -20.0;// after release
    EXPECT_DOUBLE_EQ(max_pull(fz, index_to_ms(390), index_to_ms(410)), 3.0);
}

TEST(Features, LoadShareShiftIsFirstPositiveSample)
{
    std::vector<double> fy(800, -2.0);
    for (std::size_t i = 397; i < 800; ++i) fy[i] = 1.0;
    EXPECT_DOUBLE_EQ(loadshare_shift(fy, index_to_ms(380), index_to_ms(420)), index_to_ms(397));
    FeatureConfig flipped;
    flipped.loadshare_sign = -1.0;
    for (auto& v : fy) v = -v;
    EXPECT_DOUBLE_EQ(loadshare_shift(fy, index_to_ms(380), index_to_ms(420), flipped), index_to_ms(397));
}

TEST(Features, Categories)
{
    EXPECT_EQ(categorize(0.05).category, WeightCategory::Low);
    EXPECT_EQ(categorize(0.1).category, WeightCategory::Moderate);
    EXPECT_EQ(categorize(0.949).category, WeightCategory::Moderate);
    EXPECT_EQ(categorize(0.95).category, WeightCategory::High);
    EXPECT_EQ(categorize(2.06).category, WeightCategory::High);
    EXPECT_FALSE(categorize(2.06).out_of_range);
    EXPECT_TRUE(categorize(2.5).out_of_range);
    EXPECT_TRUE(categorize(0.001).out_of_range);
    EXPECT_EQ(parse_category("moderate"), WeightCategory::Moderate);
    EXPECT_EQ(error_kind([] { parse_category("heavy"); }), ErrorKind::Usage);
}

TEST(Features, MotionMetricsOfPlannedTrajectory)
{
    // Metrics of an unfiltered min-jerk path against its closed form.
    const Vec3 a(0, 0, 0), b(0.6, 0, 0);
    const auto traj = motion::min_jerk_segment(a, b, 1.0, 120.0);
    const auto m = motion_metrics(traj.position, {0, traj.size()});
    EXPECT_NEAR(m.max_velocity, 1.875 * 0.6, 0.01 * 1.125);
    EXPECT_NEAR(m.max_acceleration, motion::kPeakAccelFactor * 0.6, 0.01 * motion::kPeakAccelFactor * 0.6);
    // Mean speed over the whole move is d / T.
    EXPECT_NEAR(m.avg_velocity, 0.6, 0.01);
}

TEST(Features, ReachWindowFindsSustainedOnset)
{
    std::vector<Vec3> pos(200, Vec3::Zero());
    // Still until 50, then 0.5 m/s along x.
    for (std::size_t i = 50; i < 200; ++i) pos[i] = Vec3(0.5 * static_cast<double>(i - 50) / 120.0, 0, 0);
    const auto w = reach_window(pos, 150);
    ASSERT_TRUE(w.has_value());
    EXPECT_NEAR(static_cast<double>(w->begin), 50.0, 1.0);
    EXPECT_EQ(w->end, 151u);
}

TEST(Features, ForcelessRecordDefinesMotionOnly)
{
    auto g = harness::generate({});
    g.record.meta.has_forces = false;
    g.record.meta.dataset_tag = DatasetTag::YCB;
    g.record.interaction.clear();
    g.record.giver_grip.clear();
    g.record.taker_grip.clear();
    const auto f = compute_features(g.record);
    EXPECT_FALSE(f.t_tf_ms.has_value());
    EXPECT_FALSE(f.max_pull_n.has_value());
    EXPECT_TRUE(f.avg_velocity.has_value());
    EXPECT_TRUE(f.transfer_height_norm.has_value());
    EXPECT_FALSE(f.undefined.empty());
}

TEST(Features, DatasetStatisticsShape)
{
    std::mt19937_64 rng(5);
    std::vector<NamedFeatures> rows;
    for (int k = 0; k < 30; ++k) {
        auto spec = testutil::grid_spec(rng);
        spec.weight_kg = std::vector<double>{0.05, 0.5, 1.5}[k % 3];
        rows.push_back({"r" + std::to_string(k), compute_features(harness::generate(spec).record)});
    }
    const auto s = dataset_statistics(rows);
    EXPECT_EQ(s["records"], 30);
    EXPECT_TRUE(s["weight_groups"].contains("low"));
    EXPECT_TRUE(s["weight_groups"].contains("high"));
    EXPECT_TRUE(s["tests"]["t_tf_ms"]["anova"].contains("f"));
    // A constant column has no correlation.
    EXPECT_TRUE(s["correlation_with_weight"]["transfer_height_norm"].is_null());
}
