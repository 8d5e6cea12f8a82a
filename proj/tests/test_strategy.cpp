#include "common.hpp"

#include "handover/gripnet/model.hpp"
#include "handover/harness.hpp"
#include "handover/strategy.hpp"

#include <fstream>

using namespace handover;
using namespace handover::strategy;
using testutil::error_kind;
using testutil::TempDir;

namespace {

HandoverRecord with_forces(const std::vector<double>& fy, const std::vector<double>& fz, double weight)
{
    auto rec = harness::generate({}).record;
    rec.meta.weight_kg = weight;
    for (std::size_t i = 0; i < rec.interaction.size(); ++i) rec.interaction[i].force = Vec3(0.0, fy[i], fz[i]);
    return rec;
}

// Output head saturated: p is ~1 (or ~0) for any input.
std::shared_ptr<const gripnet::VaeLstmModel> constant_model(double bias)
{
    auto m = gripnet::VaeLstmModel::zeros();
    m.out_b(0, 0) = bias;
    return std::make_shared<const gripnet::VaeLstmModel>(m);
}

}  // namespace

TEST(Strategy, PullForceStepReleasesOnThatTick)
{
    std::vector<double> fy(800, 0.0), fz(800, 0.0);
    for (std::size_t i = 37; i < 800; ++i) fz[i] = 5.0;
    const auto rec = with_forces(fy, fz, 0.5);
    EXPECT_EQ(release_tick(PullForceParams{}, rec), 37u);
}

TEST(Strategy, PullIsMeasuredFromTheFirstSample)
{
    // A 10 N sensor bias does not count as pull.
    std::vector<double> fy(800, 0.0), fz(800, 10.0);
    for (std::size_t i = 200; i < 800; ++i) fz[i] = 13.9;
    EXPECT_FALSE(release_tick(PullForceParams{}, with_forces(fy, fz, 0.5)).has_value());
    for (std::size_t i = 300; i < 800; ++i) fz[i] = 14.1;
    EXPECT_EQ(release_tick(PullForceParams{}, with_forces(fy, fz, 0.5)), 300u);
}

TEST(Strategy, PullAxisIsSelectable)
{
    std::vector<double> fy(800, 0.0), fz(800, 0.0);
    for (std::size_t i = 50; i < 800; ++i) fy[i] = 5.0;
    const auto rec = with_forces(fy, fz, 0.5);
    EXPECT_FALSE(release_tick(PullForceParams{}, rec).has_value());
    EXPECT_EQ(release_tick(PullForceParams{}, rec, {.pull_axis = PullAxis::Y}), 50u);
}

TEST(Strategy, LoadShareReleasesBelowHalfTheWeight)
{
    // w = 0.9 kg: half the weight force is 4.4145 N. The giver-supported
    // vertical load is w g / 2 - F_y.
    const double half = 0.5 * 0.9 * 9.81;
    EXPECT_NEAR(half, 4.4145, 1e-12);
    std::vector<double> load(800, 6.0), fz(800, 0.0);
    for (std::size_t i = 52; i < 800; ++i) load[i] = 4.0;
    load[30] = 4.4145;  // exactly half: not below
    std::vector<double> fy(800);
    for (std::size_t i = 0; i < 800; ++i) fy[i] = half - load[i];
    const auto rec = with_forces(fy, fz, 0.9);
    EXPECT_EQ(release_tick(LoadShareParams{}, rec), 52u);

    Engine e(LoadShareParams{}, 0.9);
    EXPECT_NEAR(e.step(fy[0], 0.0).load_share_fraction, 6.0 / (0.9 * 9.81), 1e-12);
}

TEST(Strategy, LoadShareSignFlag)
{
    std::vector<double> fy(800, 2.0), fz(800, 0.0);
    for (std::size_t i = 80; i < 800; ++i) fy[i] = -2.0;
    const auto rec = with_forces(fy, fz, 1.0);
    EXPECT_EQ(release_tick(LoadShareParams{}, rec), 0u);
    EXPECT_EQ(release_tick(LoadShareParams{}, rec, {.loadshare_sign = -1.0}), 80u);
}

TEST(Strategy, Gr2LightObjectsFollowThePullRule)
{
    std::mt19937_64 rng(21);
    for (int k = 0; k < 100; ++k) {
        auto spec = testutil::grid_spec(rng, 0.01, 0.79);
        spec.sensor_noise_sigma_n = 0.3;
        spec.pull_peak_n = 2.0 + 4.0 * (k % 2 ? 1.0 : 0.4);
        const auto rec = harness::generate(spec).record;
        Gr2Params gr2;  // no model needed for light objects
        EXPECT_EQ(release_tick(gr2, rec), release_tick(PullForceParams{}, rec)) << k;
        Engine e(gr2, spec.weight_kg);
        EXPECT_FALSE(e.heavy_path());
    }
}

TEST(Strategy, Gr2HeavyWarmsUpThenUsesTheModel)
{
    std::vector<double> fy(800, 0.0), fz(800, 0.0);
    const auto rec = with_forces(fy, fz, 1.2);
    Gr2Params yes{constant_model(30.0)};
    const auto tr = run_trace(yes, rec);
    ASSERT_TRUE(tr.release_tick.has_value());
    EXPECT_EQ(*tr.release_tick, 99u);
    for (std::size_t i = 0; i < 99; ++i) {
        EXPECT_FALSE(tr.ticks[i].model_p.has_value());
        EXPECT_EQ(tr.ticks[i].decision, Decision::Hold);
    }
    EXPECT_TRUE(tr.ticks[99].model_p.has_value());

    Gr2Params no{constant_model(-30.0)};
    EXPECT_FALSE(release_tick(no, rec).has_value());

    EXPECT_EQ(error_kind([&] { Engine(Gr2Params{}, 1.2); }), ErrorKind::Capability);
}

TEST(Strategy, ReleaseLatches)
{
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0.0, 4.0);
    for (int k = 0; k < 300; ++k) {
        for (auto tag : kAllStrategies) {
            Engine e(default_strategy(tag, constant_model(n(rng))), 0.3 + (k % 5) * 0.4);
            bool released = false;
            for (int t = 0; t < 200; ++t) {
                const auto d = e.step(n(rng), n(rng)).decision;
                if (released) {
                    ASSERT_EQ(d, Decision::Release);
                }
                released = released || d == Decision::Release;
            }
            EXPECT_EQ(released, e.released());
        }
    }
}

TEST(Strategy, ZeroForcesNeverRelease)
{
    std::vector<double> z(800, 0.0);
    const auto rec = with_forces(z, z, 0.5);
    EXPECT_FALSE(release_tick(PullForceParams{}, rec).has_value());
    EXPECT_FALSE(release_tick(LoadShareParams{}, rec).has_value());
    EXPECT_FALSE(release_tick(Gr2Params{}, rec).has_value());
}

TEST(Strategy, CounterfactualsMatchDirectRuns)
{
    std::mt19937_64 rng(31);
    const auto model = constant_model(-30.0);
    for (int k = 0; k < 20; ++k) {
        auto spec = testutil::grid_spec(rng);
        spec.sensor_noise_sigma_n = 0.1;
        const auto rec = harness::generate(spec).record;
        for (auto tag : kAllStrategies) {
            const auto tr = run_trace(default_strategy(tag, model), rec, {}, model);
            EXPECT_EQ(tr.counterfactual.size(), 3u);
            for (const auto& [other, tick] : tr.counterfactual) EXPECT_EQ(tick, release_tick(default_strategy(other, model), rec));
            EXPECT_EQ(tr.counterfactual.at(tag), tr.release_tick);
        }
    }
}

TEST(Strategy, CounterfactualOmitsGr2WithoutModel)
{
    const auto rec = harness::generate({.weight_kg = 1.5}).record;
    const auto tr = run_trace(PullForceParams{}, rec);
    EXPECT_FALSE(tr.counterfactual.contains(StrategyTag::GR2));
    const auto light = run_trace(PullForceParams{}, harness::generate({.weight_kg = 0.4}).record);
    EXPECT_TRUE(light.counterfactual.contains(StrategyTag::GR2));
}

TEST(Strategy, TracesAreDeterministicAndTimed)
{
    const auto rec = harness::generate({.weight_kg = 1.5, .sensor_noise_sigma_n = 0.2}).record;
    const auto model = std::make_shared<const gripnet::VaeLstmModel>(gripnet::VaeLstmModel::random(3));
    const auto a = run_trace(Gr2Params{model}, rec);
    const auto b = run_trace(Gr2Params{model}, rec);
    ASSERT_EQ(a.ticks.size(), 800u);
    EXPECT_EQ(a.release_tick, b.release_tick);
    for (std::size_t i = 0; i < 800; ++i) {
        EXPECT_EQ(a.ticks[i].decision, b.ticks[i].decision);
        EXPECT_EQ(a.ticks[i].model_p, b.ticks[i].model_p);
        EXPECT_GE(a.ticks[i].compute_time_us, 0.0);
        EXPECT_EQ(a.ticks[i].tick, i);
    }
}

TEST(Strategy, LatencyAudit)
{
    EXPECT_TRUE(latency_audit(DecisionTrace{}).pass);
    EXPECT_EQ(latency_audit(DecisionTrace{}).ticks, 0u);

    std::vector<double> us(100);
    for (std::size_t i = 0; i < 100; ++i) us[i] = static_cast<double>(i + 1) * 10.0;  // 10 .. 1000 us
    const auto r = latency_audit(us);
    EXPECT_DOUBLE_EQ(r.max_ms, 1.0);
    EXPECT_NEAR(r.mean_ms, 0.505, 1e-12);
    EXPECT_DOUBLE_EQ(r.p99_ms, 0.99);  // nearest rank
    EXPECT_TRUE(r.pass);
    EXPECT_NEAR(r.budget_ms, 8.3333333, 1e-6);

    us.push_back(9000.0);
    EXPECT_FALSE(latency_audit(us).pass);
}

TEST(Strategy, ParametersAreValidated)
{
    EXPECT_EQ(error_kind([] { validate(StrategyKind{PullForceParams{0.0}}); }), ErrorKind::Parameter);
    EXPECT_EQ(error_kind([] { validate(StrategyKind{LoadShareParams{1.0}}); }), ErrorKind::Parameter);
    EXPECT_EQ(error_kind([] { validate(StrategyKind{LoadShareParams{0.0}}); }), ErrorKind::Parameter);
    EXPECT_EQ(error_kind([] { parse_strategy("random"); }), ErrorKind::Usage);
    EXPECT_EQ(parse_strategy("loadshare"), StrategyTag::LoadShare);
    EXPECT_EQ(to_string(StrategyTag::PullForce), "pull");
}

TEST(Strategy, TraceCsv)
{
    TempDir dir("trace");
    std::vector<double> fy(800, 0.0), fz(800, 0.0);
    for (std::size_t i = 37; i < 800; ++i) fz[i] = 5.0;
    const auto tr = run_trace(PullForceParams{}, with_forces(fy, fz, 0.5));
    write_trace_csv(tr, dir.path / "trace.csv");
    std::ifstream in(dir.path / "trace.csv");
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "tick,fy,fz,load_share_fraction,model_p,decision,compute_time_us");
    std::size_t rows = 0, releases = 0;
    while (std::getline(in, line)) {
        ++rows;
        releases += line.find(",release,") != std::string::npos;
    }
    EXPECT_EQ(rows, 800u);
    EXPECT_EQ(releases, 800u - 37u);
}
