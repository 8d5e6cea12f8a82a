// Acceptance run: one PASS / FAIL / SKIP line per criterion, nonzero exit on
// any FAIL. Oracles here are written independently of the library where the
// check allows it (closed forms, planted generator values, permutation tests).

#include "handover/data.hpp"
#include "handover/features.hpp"
#include "handover/gripnet/model.hpp"
#include "handover/gripnet/train.hpp"
#include "handover/harness.hpp"
#include "handover/motion.hpp"
#include "handover/segmentation.hpp"
#include "handover/signal.hpp"
#include "handover/stats.hpp"
#include "handover/strategy.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

using namespace handover;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

enum class Outcome { Pass, Fail, Skip };

struct Result {
    Outcome outcome;
    std::string detail;
};

constexpr double kSampleMs = 1000.0 / 120.0;

double snap(double ms) { return std::round(ms / kSampleMs) * kSampleMs; }

harness::GeneratorSpec grid_spec(std::mt19937_64& rng, double wlo = 0.05, double whi = 2.0)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    harness::GeneratorSpec s;
    s.weight_kg = wlo + (whi - wlo) * u(rng);
    s.contact_time_ms = snap(-450.0 + 200.0 * u(rng));
    s.release_start_ms = snap(s.contact_time_ms + 60.0 + 150.0 * u(rng));
    s.release_duration_ms = 650.0 + 250.0 * u(rng);
    s.loadshare_crossing_ms = snap(s.contact_time_ms + 60.0 + 120.0 * u(rng));
    s.pull_peak_n = 2.0 + 8.0 * u(rng);
    s.seed = rng();
    return s;
}

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// ---------------------------------------------------------------------------

Result gradient_check()
{
    const auto t0 = Clock::now();
    double worst = 0.0;
    std::string worst_group;
    for (std::uint64_t seed : {101u, 202u, 303u}) {
        const auto windows = harness::separable_windows(2, seed);
        const auto batch = gripnet::pointers(windows);
        auto model = gripnet::VaeLstmModel::random(seed);
        model.norm = gripnet::compute_normalization(windows);
        std::mt19937_64 rng(seed + 1);
        std::normal_distribution<double> g;
        std::vector<gripnet::Latent> eps(batch.size());
        for (auto& e : eps)
            for (int i = 0; i < gripnet::kLatent; ++i) e(i) = g(rng);

        auto grad = gripnet::VaeLstmModel::zeros();
        gripnet::backward(model, batch, eps, grad);
        const auto theta = model.parameters();
        const auto analytic = grad.parameters();
        const double h = 1e-5;
        for (const auto& group : gripnet::parameter_groups()) {
            for (std::size_t i = group.offset; i < group.offset + group.size; ++i) {
                auto plus = theta, minus = theta;
                plus[i] += h;
                minus[i] -= h;
                auto a = model, b = model;
                a.set_parameters(plus);
                b.set_parameters(minus);
                const double fd = (gripnet::batch_loss(a, batch, eps).total - gripnet::batch_loss(b, batch, eps).total) / (2 * h);
                const double err = std::abs(fd - analytic[i]) / std::max({std::abs(fd), std::abs(analytic[i]), 1e-6});
                if (err > worst) {
                    worst = err;
                    worst_group = std::string(group.name);
                }
            }
        }
    }
    const double secs = seconds_since(t0);
    const bool ok = worst < 1e-4 && secs < 30.0;
    return {ok ? Outcome::Pass : Outcome::Fail,
            fmt("max relative error %.2e (%s) over 3 seeds, %.1f s", worst, worst_group.c_str(), secs)};
}

Result loss_identities()
{
    using namespace gripnet;
    const double r1 = std::abs(bce(0.5, 1) - std::log(2.0));
    const double r0 = std::abs(bce(0.5, 0) - std::log(2.0));
    const double k0 = kl_divergence(Latent::Zero(), Latent::Zero());
    const double k5 = std::abs(kl_divergence(Latent::Ones(), Latent::Zero()) - 5.0);
    const bool ok = r1 <= 1e-12 && r0 <= 1e-12 && k0 == 0.0 && k5 <= 1e-12;
    return {ok ? Outcome::Pass : Outcome::Fail, fmt("|bce-ln2| %.1e/%.1e, kl(0,0) %g, |kl(1,0)-5| %.1e", r1, r0, k0, k5)};
}

Result training_sanity()
{
    const auto t0 = Clock::now();
    gripnet::TrainConfig cfg;  // batch 100, lr 0.01, up to 100 epochs
    const auto windows = harness::separable_windows(1000, 7);
    const auto real = gripnet::train(windows, cfg);
    const double acc = gripnet::evaluate(real.model, windows, real.test_indices).accuracy;

    // Control: labels permuted before training, scored on a large fresh set
    // whose labels are also unrelated to the inputs.
    auto shuffled = windows;
    std::mt19937_64 rng(8);
    std::vector<int> labels;
    for (const auto& w : shuffled) labels.push_back(w.label);
    std::shuffle(labels.begin(), labels.end(), rng);
    for (std::size_t i = 0; i < shuffled.size(); ++i) shuffled[i].label = labels[i];
    const auto control = gripnet::train(shuffled, cfg);
    auto fresh = harness::separable_windows(2000, 9);
    std::bernoulli_distribution coin(0.5);
    for (auto& w : fresh) w.label = coin(rng) ? 1 : 0;
    const double ctrl = gripnet::evaluate(control.model, fresh).accuracy;

    const bool ok = acc >= 0.95 && std::abs(ctrl - 0.5) <= 0.05;
    return {ok ? Outcome::Pass : Outcome::Fail,
            fmt("held-out accuracy %.3f after %zu epochs, shuffled control %.3f, %.1f s", acc, real.curves.size(), ctrl, seconds_since(t0))};
}

Result segmentation_oracle()
{
    std::mt19937_64 rng(2024);
    std::size_t planted = 0, recovered = 0, false_pos = 0;
    double seg_secs = 0.0;
    const auto t0 = Clock::now();
    for (int s = 0; s < 1000; ++s) {
        std::vector<harness::GeneratorSpec> specs;
        const int n = 1 + static_cast<int>(rng() % 4);
        for (int k = 0; k < n; ++k) specs.push_back(grid_spec(rng));
        const auto session = harness::generate_session(specs);
        const auto giver = grip_force(session.record.giver_grip);
        const auto taker = grip_force(session.record.taker_grip);
        const auto ts = Clock::now();
        const auto found = seg::find_grip_intersections(giver, taker);
        seg_secs += seconds_since(ts);
        planted += session.planted_centers.size();
        std::vector<bool> used(session.planted_centers.size(), false);
        for (const auto& b : found) {
            bool matched = false;
            for (std::size_t k = 0; k < used.size(); ++k) {
                const auto d = std::abs(static_cast<long>(b.center_index) - static_cast<long>(session.planted_centers[k]));
                if (!used[k] && d <= 1) {
                    used[k] = matched = true;
                    ++recovered;
                    break;
                }
            }
            false_pos += !matched;
        }
    }
    const double rate = static_cast<double>(recovered) / static_cast<double>(planted);
    const bool ok = rate >= 0.99 && false_pos == 0 && seg_secs < 60.0;
    return {ok ? Outcome::Pass : Outcome::Fail,
            fmt("%zu/%zu recovered (%.2f%%), %zu false positives, segmentation %.3f s (with generation %.1f s)", recovered, planted,
                100.0 * rate, false_pos, seg_secs, seconds_since(t0))};
}

Result feature_recovery()
{
    std::mt19937_64 rng(55);
    const double tol = kSampleMs + 1e-9;
    std::size_t bad = 0, n = 500;
    double worst_ms = 0.0, worst_pull = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const auto g = harness::generate(grid_spec(rng));
        const auto f = features::compute_features(g.record);
        const std::pair<std::optional<double>, double> pairs[] = {{f.t_tak_con_ms, g.truth.t_tak_con_ms},
                                                                  {f.t_giv_rel_ms, g.truth.t_giv_rel_ms},
                                                                  {f.t_tf_ms, g.truth.t_tf_ms},
                                                                  {f.t_gr_ms, g.truth.t_gr_ms},
                                                                  {f.t_ld_shift_ms, g.truth.t_ld_shift_ms}};
        bool ok = f.max_pull_n.has_value();
        for (const auto& [got, want] : pairs) {
            if (!got) {
                ok = false;
                continue;
            }
            worst_ms = std::max(worst_ms, std::abs(*got - want));
            ok = ok && std::abs(*got - want) <= tol;
        }
        if (f.max_pull_n) {
            worst_pull = std::max(worst_pull, std::abs(*f.max_pull_n - g.truth.max_pull_n));
            ok = ok && std::abs(*f.max_pull_n - g.truth.max_pull_n) <= 1e-6;
        }
        bad += !ok;
    }
    return {bad == 0 ? Outcome::Pass : Outcome::Fail,
            fmt("%zu/%zu records off; worst timing error %.3f ms, worst max_pull error %.1e N", bad, n, worst_ms, worst_pull)};
}

Result filter_correctness()
{
    const signal::FilterSpec spec{4, 5.0, 120.0};
    const auto c = signal::butterworth_coeffs(spec);
    auto db = [&](double f) { return 20.0 * std::log10(std::abs(signal::frequency_response(c, f, 120.0))); };
    const double at_cut = db(5.0);
    const double dc = std::abs(signal::frequency_response(c, 0.0, 120.0));
    const double at30 = db(30.0);
    const bool ok = std::abs(at_cut + 3.0103) <= 0.05 && std::abs(dc - 1.0) <= 1e-12 && at30 < -60.0;
    return {ok ? Outcome::Pass : Outcome::Fail, fmt("%.4f dB at 5 Hz, |H(0)|-1 = %.1e, %.1f dB at 30 Hz", at_cut, dc - 1.0, at30)};
}

Result min_jerk()
{
    const double d = 0.6, T = 1.0;
    const auto seg = motion::min_jerk_segment(Vec3::Zero(), Vec3(d, 0, 0), T, 120.0);
    double vpk = 0.0;
    for (const auto& v : seg.velocity) vpk = std::max(vpk, v.norm());
    const double speed_err = std::abs(vpk - 1.875 * d / T);
    const double boundary = std::max({seg.velocity.front().norm(), seg.acceleration.front().norm(), seg.velocity.back().norm(),
                                      seg.acceleration.back().norm()});

    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(-0.6, 0.6);
    double worst_ratio = 0.0;
    for (auto cat : {features::WeightCategory::Low, features::WeightCategory::Moderate, features::WeightCategory::High}) {
        const double cap = motion::profile(cat).max_accel_cap;
        for (int trial = 0; trial < 200; ++trial) {
            std::vector<Vec3> wp;
            for (int k = 0; k < 2 + trial % 5; ++k) wp.emplace_back(u(rng), u(rng), 1.0 + u(rng));
            const auto tr = motion::plan_reach(wp, cat);
            double a = 0.0;
            for (const auto& x : tr.acceleration) a = std::max(a, x.norm());
            worst_ratio = std::max(worst_ratio, a / cap);
        }
    }
    const bool ok = speed_err <= 1e-6 && boundary < 1e-9 && worst_ratio <= 1.005;
    return {ok ? Outcome::Pass : Outcome::Fail,
            fmt("peak speed error %.1e, boundary %.1e, worst accel/cap %.5f over 600 plans", speed_err, boundary, worst_ratio)};
}

Result strategy_semantics()
{
    const auto t0 = Clock::now();
    using namespace strategy;
    std::mt19937_64 rng(99);

    // GR2 against PullForce on light records.
    std::size_t light = 0, mismatch = 0;
    for (int k = 0; k < 2000; ++k) {
        auto spec = grid_spec(rng, 0.05, 0.7999);
        spec.sensor_noise_sigma_n = 0.25 * static_cast<double>(k % 4);
        const auto rec = harness::generate(spec).record;
        ++light;
        mismatch += release_tick(Gr2Params{}, rec) != release_tick(PullForceParams{}, rec);
    }

    // LoadShare against the planted load-share crossing: F_y turns positive
    // (giver load below half the weight) just after it.
    std::size_t ls_n = 0, ls_off = 0;
    for (int k = 0; k < 1000; ++k) {
        const auto g = harness::generate(grid_spec(rng));
        const auto tick = release_tick(LoadShareParams{}, g.record);
        const double planted = 400.0 + g.truth.t_ld_shift_ms / kSampleMs;
        ++ls_n;
        ls_off += !tick || std::abs(static_cast<double>(*tick) - planted) > 1.0;
    }

    // Latching on fuzzed input.
    const auto model = std::make_shared<const gripnet::VaeLstmModel>(gripnet::VaeLstmModel::random(5));
    std::normal_distribution<double> force(0.0, 5.0);
    std::uniform_real_distribution<double> weight(0.05, 2.0);
    std::size_t fuzz = 0, violations = 0;
    for (int k = 0; k < 100000; ++k) {
        const auto tag = kAllStrategies[static_cast<std::size_t>(k) % 3];
        StrategyKind kind = tag == StrategyTag::GR2 ? StrategyKind{Gr2Params{model}} : default_strategy(tag, model);
        Engine e(kind, weight(rng));
        bool released = false;
        const int ticks = e.heavy_path() ? 110 : 60;
        for (int t = 0; t < ticks; ++t) {
            const bool r = e.step(force(rng), force(rng)).decision == Decision::Release;
            violations += released && !r;
            released = released || r;
        }
        ++fuzz;
    }
    const bool ok = mismatch == 0 && ls_off == 0 && violations == 0;
    return {ok ? Outcome::Pass : Outcome::Fail,
            fmt("GR2/Pull mismatches %zu/%zu, LoadShare off by >1 sample %zu/%zu, latch violations %zu over %zu fuzzed traces, %.1f s",
                mismatch, light, ls_off, ls_n, violations, fuzz, seconds_since(t0))};
}

Result latency_budget()
{
    const auto model = std::make_shared<const gripnet::VaeLstmModel>(gripnet::VaeLstmModel::random(6));
    const auto rec = harness::generate({.weight_kg = 1.6, .sensor_noise_sigma_n = 0.2}).record;
    const auto trace = strategy::run_trace(strategy::Gr2Params{model}, rec);
    const auto r = strategy::latency_audit(trace);
    const bool ok = r.ticks == 800 && r.max_ms < 8.333;
    return {ok ? Outcome::Pass : Outcome::Fail, fmt("%zu ticks, max %.4f ms, p99 %.4f ms, mean %.4f ms", r.ticks, r.max_ms, r.p99_ms, r.mean_ms)};
}

// Permutation p-value and its 99% Monte-Carlo interval.
struct PermP {
    double p, lo, hi;
};

PermP permutation_p(std::size_t n_perm, std::mt19937_64& rng, std::vector<double> pooled, const std::vector<std::size_t>& sizes,
                    const std::function<double(const std::vector<std::vector<double>>&)>& stat, double observed)
{
    std::size_t hits = 0;
    std::vector<std::vector<double>> groups(sizes.size());
    for (std::size_t r = 0; r < n_perm; ++r) {
        std::shuffle(pooled.begin(), pooled.end(), rng);
        std::size_t at = 0;
        for (std::size_t g = 0; g < sizes.size(); ++g) {
            groups[g].assign(pooled.begin() + static_cast<std::ptrdiff_t>(at), pooled.begin() + static_cast<std::ptrdiff_t>(at + sizes[g]));
            at += sizes[g];
        }
        hits += stat(groups) >= observed - 1e-12;
    }
    const double p = static_cast<double>(hits) / static_cast<double>(n_perm);
    const double half = 2.5758 * std::sqrt(std::max(p * (1.0 - p), 1.0 / static_cast<double>(n_perm)) / static_cast<double>(n_perm));
    return {p, p - half, p + half};
}

Result statistics_oracles()
{
    const auto t0 = Clock::now();
    // Textbook cases worked by hand.
    const std::vector<std::vector<double>> g{{6, 8, 4, 5, 3, 4}, {8, 12, 9, 11, 6, 8}, {13, 9, 11, 8, 7, 12}};
    const double f_err = std::abs(stats::one_way_anova(g).f - 42.0 / (68.0 / 15.0));
    const std::vector<double> x{1, 2, 3}, y{3, 5, 7};
    const double t_err = std::abs(stats::t_test(x, y, false).t + 3.0 / std::sqrt(5.0 / 3.0));
    // Student t: pooled variance (2 + 8) / 4 = 2.5.
    const double s_err = std::abs(stats::t_test(x, y, stats::TTestKind::Student).t + 3.0 / std::sqrt(2.5 * (2.0 / 3.0)));
    const bool hand_ok = f_err <= 1e-6 && t_err <= 1e-6 && s_err <= 1e-6;

    std::mt19937_64 rng(4242);
    std::normal_distribution<double> noise;
    std::uniform_int_distribution<int> size(20, 30);
    const std::size_t n_perm = 100000;
    int outside = 0, checks = 0;
    double worst = 0.0;
    for (int d = 0; d < 20; ++d) {
        // Three groups; the shift varies so p values cover the whole range.
        std::vector<std::vector<double>> groups(3);
        std::vector<std::size_t> sizes;
        std::vector<double> pooled;
        const double shift = 0.25 * (d % 5);
        for (int k = 0; k < 3; ++k) {
            groups[k].resize(static_cast<std::size_t>(size(rng)));
            for (auto& v : groups[k]) v = noise(rng) + shift * k;
            sizes.push_back(groups[k].size());
            pooled.insert(pooled.end(), groups[k].begin(), groups[k].end());
        }
        const auto anova = stats::one_way_anova(groups);
        const auto fp = permutation_p(n_perm, rng, pooled, sizes, [](const auto& gs) { return stats::one_way_anova(gs).f; }, anova.f);
        ++checks;
        outside += anova.p < fp.lo || anova.p > fp.hi;
        worst = std::max(worst, std::abs(anova.p - fp.p));

        // Two-sided Student t on the first two groups.
        const auto tt = stats::t_test(groups[0], groups[1], stats::TTestKind::Student);
        std::vector<double> two(groups[0]);
        two.insert(two.end(), groups[1].begin(), groups[1].end());
        const auto tp = permutation_p(n_perm, rng, two, {groups[0].size(), groups[1].size()},
                                      [](const auto& gs) { return std::abs(stats::t_test(gs[0], gs[1], stats::TTestKind::Student).t); },
                                      std::abs(tt.t));
        ++checks;
        outside += tt.p < tp.lo || tt.p > tp.hi;
        worst = std::max(worst, std::abs(tt.p - tp.p));
    }
    // Diagnostic only: the same p values against a Monte-Carlo null that
    // draws fresh normal samples, which is the reference distribution the
    // analytic p values assume.
    int mc_outside = 0;
    for (int d = 0; d < 20; ++d) {
        std::vector<std::vector<double>> groups(3);
        for (int k = 0; k < 3; ++k) {
            groups[k].resize(static_cast<std::size_t>(size(rng)));
            for (auto& v : groups[k]) v = noise(rng) + 0.25 * (d % 5) * k;
        }
        const double f_obs = stats::one_way_anova(groups).f;
        const double p = stats::one_way_anova(groups).p;
        std::size_t hits = 0;
        auto sim = groups;
        for (std::size_t r = 0; r < n_perm; ++r) {
            for (auto& gr : sim)
                for (auto& v : gr) v = noise(rng);
            hits += stats::one_way_anova(sim).f >= f_obs;
        }
        const double q = static_cast<double>(hits) / static_cast<double>(n_perm);
        const double half = 2.5758 * std::sqrt(std::max(q * (1.0 - q), 1.0 / static_cast<double>(n_perm)) / static_cast<double>(n_perm));
        mc_outside += p < q - half || p > q + half;
    }

    const bool ok = hand_ok && outside == 0;
    return {ok ? Outcome::Pass : Outcome::Fail,
            fmt("hand cases max error %.1e; %d/%d analytic p values outside the 99%% permutation interval (max |diff| %.4f); "
                "normal-null Monte-Carlo: %d/20 outside; %.1f s",
                std::max({f_err, t_err, s_err}), outside, checks, worst, mc_outside, seconds_since(t0))};
}

Result dataset_reproduction()
{
    const char* manifest = std::getenv("HANDOVER_DATASET");
    if (!manifest || !*manifest) return {Outcome::Skip, "set HANDOVER_DATASET to a dataset manifest to run"};
    const auto m = load_manifest(manifest);
    std::vector<features::NamedFeatures> rows;
    for (const auto& e : m.entries) rows.push_back({e.path.filename().string(), features::compute_features(load_record(e.path))});
    const auto s = features::dataset_statistics(rows);

    struct Ref {
        const char* group;
        double v[4];
    };
    const Ref table[] = {{"low", {2.023, 6.816, 10.592, 47.445}},
                         {"moderate", {1.840, 6.506, 9.404, 45.154}},
                         {"high", {1.680, 5.221, 7.928, 32.951}}};
    const char* metrics[] = {"avg_velocity", "max_velocity", "avg_acceleration", "max_acceleration"};
    const double corr_ref[] = {-0.473589, -0.488760, -0.603340, -0.453666};
    double worst_rel = 0.0, worst_corr = 0.0;
    bool ok = true;
    for (const auto& r : table)
        for (int k = 0; k < 4; ++k) {
            const auto& node = s["weight_groups"][r.group][metrics[k]]["mean"];
            if (!node.is_number()) {
                ok = false;
                continue;
            }
            worst_rel = std::max(worst_rel, std::abs(node.get<double>() - r.v[k]) / r.v[k]);
        }
    for (int k = 0; k < 4; ++k) {
        const auto& node = s["correlation_with_weight"][metrics[k]];
        if (!node.is_number()) {
            ok = false;
            continue;
        }
        worst_corr = std::max(worst_corr, std::abs(node.get<double>() - corr_ref[k]));
    }
    ok = ok && worst_rel <= 0.02 && worst_corr <= 0.05;
    return {ok ? Outcome::Pass : Outcome::Fail,
            fmt("%zu records, worst group-mean deviation %.2f%%, worst correlation deviation %.3f", rows.size(), 100.0 * worst_rel, worst_corr)};
}

}  // namespace

int main()
{
    const std::vector<std::pair<const char*, Result (*)()>> criteria{
        {"gradient-check", gradient_check},
        {"loss-identities", loss_identities},
        {"training-sanity", training_sanity},
        {"segmentation-oracle", segmentation_oracle},
        {"feature-recovery", feature_recovery},
        {"filter-correctness", filter_correctness},
        {"min-jerk", min_jerk},
        {"strategy-semantics", strategy_semantics},
        {"latency-budget", latency_budget},
        {"statistics-oracles", statistics_oracles},
        {"dataset-reproduction", dataset_reproduction},
    };
    int failures = 0;
    for (const auto& [name, run] : criteria) {
        Result r;
        try {
            r = run();
        } catch (const std::exception& e) {
            r = {Outcome::Fail, std::string("threw: ") + e.what()};
        }
        const char* tag = r.outcome == Outcome::Pass ? "PASS" : r.outcome == Outcome::Fail ? "FAIL" : "SKIP";
        failures += r.outcome == Outcome::Fail;
        std::printf("%s %s: %s\n", tag, name, r.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
