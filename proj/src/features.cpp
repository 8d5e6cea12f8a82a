#include "handover/features.hpp"

#include "handover/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace handover::features {

double index_to_ms(std::ptrdiff_t index, const FeatureConfig& config)
{
    return static_cast<double>(index - static_cast<std::ptrdiff_t>(config.center_index)) * 1000.0 / config.sample_rate_hz;
}

std::ptrdiff_t ms_to_index(double ms, const FeatureConfig& config)
{
    return static_cast<std::ptrdiff_t>(std::llround(ms * config.sample_rate_hz / 1000.0)) + static_cast<std::ptrdiff_t>(config.center_index);
}

namespace {

std::size_t checked_index(double ms, std::size_t n, const FeatureConfig& config, std::string_view what)
{
    const auto i = ms_to_index(ms, config);
    if (i < 0 || static_cast<std::size_t>(i) >= n)
        fail(ErrorKind::MetricUndefined, std::string(what) + " lies outside the record");
    return static_cast<std::size_t>(i);
}

std::vector<double> maybe_smooth(std::span<const double> x, const FeatureConfig& config)
{
    if (!config.smooth_forces) return {x.begin(), x.end()};
    return signal::filtfilt(x, config.filter);
}

}  // namespace

std::optional<std::size_t> release_start_index(std::span<const double> g, std::size_t from, const FeatureConfig& config)
{
    const std::size_t m = std::max<std::size_t>(config.release_plateau_samples, 1);
    if (from + m > g.size()) return std::nullopt;
    std::vector<double> head(g.begin() + static_cast<std::ptrdiff_t>(from), g.begin() + static_cast<std::ptrdiff_t>(from + m));
    std::nth_element(head.begin(), head.begin() + static_cast<std::ptrdiff_t>(m / 2), head.end());
    const double plateau = head[m / 2];
    const double excess = plateau - config.contact_threshold_n;
    if (!(excess > config.release_min_drop_n)) return std::nullopt;

    const double target = plateau - config.release_fit_fraction * excess;
    std::size_t end = from;
    while (end < g.size() && g[end] >= target) ++end;
    if (end == g.size()) return std::nullopt;

    // Least-squares fit of y = c + b * max(x - tau, 0) over [from, end] for
    // every candidate tau; keep the smallest residual.
    std::optional<std::size_t> best;
    double best_sse = std::numeric_limits<double>::infinity();
    const double n = static_cast<double>(end - from + 1);
    double sy = 0.0, syy = 0.0;
    for (std::size_t i = from; i <= end; ++i) {
        sy += g[i];
        syy += g[i] * g[i];
    }
    for (std::size_t tau = from; tau < end; ++tau) {
        double su = 0.0, suu = 0.0, suy = 0.0;
        for (std::size_t i = tau + 1; i <= end; ++i) {
            const double u = static_cast<double>(i - tau);
            su += u;
            suu += u * u;
            suy += u * g[i];
        }
        const double det = n * suu - su * su;
        if (det <= 0.0) continue;
        const double b = (n * suy - su * sy) / det;
        const double c = (sy - b * su) / n;
        const double sse = syy - c * sy - b * suy;
        if (b < 0.0 && sse < best_sse - 1e-12) {
            best_sse = sse;
            best = tau;
        }
    }
    return best;
}

TransferTimes transfer_time(std::span<const double> giver_raw, std::span<const double> taker_raw, const FeatureConfig& config)
{
    if (giver_raw.size() != taker_raw.size()) fail(ErrorKind::Alignment, "grip sequences differ in length");
    if (giver_raw.size() <= config.center_index) fail(ErrorKind::Length, "record is shorter than its center index");
    const auto giver = maybe_smooth(giver_raw, config);
    const auto taker = maybe_smooth(taker_raw, config);
    const double thr = config.contact_threshold_n;

    std::optional<std::size_t> contact;
    for (std::size_t i = config.center_index; i >= 1; --i) {
        if (taker[i - 1] <= thr && taker[i] > thr) {
            contact = i;
            break;
        }
    }
    if (!contact) fail(ErrorKind::MetricUndefined, "no taker contact before t = 0");

    const std::size_t search_from = release_start_index(giver, *contact, config).value_or(*contact);
    const auto release = signal::first_crossing(giver, thr, signal::Direction::Falling, search_from);
    if (!release) fail(ErrorKind::MetricUndefined, "giver grip never falls below the contact threshold");

    TransferTimes t;
    t.tak_con_index = *contact;
    t.giv_rel_index = *release;
    t.t_tak_con_ms = index_to_ms(static_cast<std::ptrdiff_t>(*contact), config);
    t.t_giv_rel_ms = index_to_ms(static_cast<std::ptrdiff_t>(*release), config);
    t.t_tf_ms = t.t_giv_rel_ms - t.t_tak_con_ms;
    return t;
}

ReleaseTiming grip_release_time(std::span<const double> giver_raw, double t_tak_con_ms, const FeatureConfig& config)
{
    const auto giver = maybe_smooth(giver_raw, config);
    const std::size_t contact = checked_index(t_tak_con_ms, giver.size(), config, "t_tak_con");
    const auto start = release_start_index(giver, contact, config);
    if (!start) fail(ErrorKind::MetricUndefined, "no sustained decrease of the giver grip after taker contact");
    const auto release = signal::first_crossing(giver, config.contact_threshold_n, signal::Direction::Falling, *start);
    if (!release) fail(ErrorKind::MetricUndefined, "giver grip never falls below the contact threshold");

    ReleaseTiming r;
    r.rel_start_index = *start;
    r.giv_rel_index = *release;
    r.t_rel_start_ms = index_to_ms(static_cast<std::ptrdiff_t>(*start), config);
    r.t_giv_rel_ms = index_to_ms(static_cast<std::ptrdiff_t>(*release), config);
    r.t_gr_ms = r.t_giv_rel_ms - r.t_rel_start_ms;
    return r;
}

double max_pull(std::span<const double> fz_raw, double t_tak_con_ms, double t_giv_rel_ms, const FeatureConfig& config)
{
    const auto fz = maybe_smooth(fz_raw, config);
    const std::size_t a = checked_index(t_tak_con_ms, fz.size(), config, "t_tak_con");
    const std::size_t b = checked_index(t_giv_rel_ms, fz.size(), config, "t_giv_rel");
    if (b < a) fail(ErrorKind::MetricUndefined, "transfer window is empty");
    double best = 0.0;
    for (std::size_t i = a; i <= b; ++i) best = std::max(best, std::abs(fz[i] - fz[a]));
    return best;
}

double pull_over_weight(double max_pull_n, double weight_kg, double gravity)
{
    if (!(weight_kg > 0.0)) fail(ErrorKind::Parameter, "object weight must be positive");
    return max_pull_n / (weight_kg * gravity);
}

double loadshare_shift(std::span<const double> fy_raw, double t_tak_con_ms, double t_giv_rel_ms, const FeatureConfig& config)
{
    const auto fy = maybe_smooth(fy_raw, config);
    const std::size_t a = checked_index(t_tak_con_ms, fy.size(), config, "t_tak_con");
    const std::size_t b = checked_index(t_giv_rel_ms, fy.size(), config, "t_giv_rel");
    for (std::size_t i = a; i <= b; ++i)
        if (config.loadshare_sign * fy[i] > 0.0) return index_to_ms(static_cast<std::ptrdiff_t>(i), config);
    fail(ErrorKind::MetricUndefined, "F_y never becomes positive inside the transfer window");
}

double transfer_height(double object_z, double giver_chest_z, double taker_chest_z)
{
    if (!(giver_chest_z > 0.0) || !(taker_chest_z > 0.0)) fail(ErrorKind::Parameter, "chest heights must be positive");
    return object_z / ((giver_chest_z + taker_chest_z) / 2.0);
}

MotionMetrics motion_metrics(std::span<const Vec3> positions, IndexRange window, double dt)
{
    if (window.end <= window.begin || window.size() < 3) fail(ErrorKind::Length, "motion window needs at least 3 samples");
    if (window.end > positions.size()) fail(ErrorKind::Bounds, "motion window exceeds the position sequence");
    const auto velocity = signal::differentiate(positions, dt);
    const auto acceleration = signal::differentiate(velocity, dt);

    MotionMetrics m;
    for (std::size_t i = window.begin; i < window.end; ++i) {
        const double v = velocity[i].norm();
        const double a = acceleration[i].norm();
        m.avg_velocity += v;
        m.avg_acceleration += a;
        m.max_velocity = std::max(m.max_velocity, v);
        m.max_acceleration = std::max(m.max_acceleration, a);
    }
    m.avg_velocity /= static_cast<double>(window.size());
    m.avg_acceleration /= static_cast<double>(window.size());
    return m;
}

std::optional<IndexRange> reach_window(std::span<const Vec3> positions, std::size_t end_index, const FeatureConfig& config)
{
    if (positions.size() < 3 || end_index >= positions.size()) return std::nullopt;
    const auto velocity = signal::differentiate(positions, 1.0 / config.sample_rate_hz);
    std::size_t run = 0;
    for (std::size_t i = 0; i < end_index; ++i) {
        run = velocity[i].norm() > config.onset_speed_mps ? run + 1 : 0;
        if (run == config.onset_sustain) {
            const std::size_t onset = i + 1 - run;
            if (end_index + 1 - onset < 3) return std::nullopt;
            return IndexRange{onset, end_index + 1};
        }
    }
    return std::nullopt;
}

std::string_view to_string(WeightCategory c)
{
    switch (c) {
    case WeightCategory::Low: return "low";
    case WeightCategory::Moderate: return "moderate";
    case WeightCategory::High: return "high";
    }
    return "moderate";
}

WeightCategory parse_category(std::string_view text)
{
    if (text == "low" || text == "Low") return WeightCategory::Low;
    if (text == "moderate" || text == "Moderate") return WeightCategory::Moderate;
    if (text == "high" || text == "High") return WeightCategory::High;
    fail(ErrorKind::Usage, "unknown weight category '" + std::string(text) + "'");
}

Categorized categorize(double w)
{
    if (!(w > 0.0)) fail(ErrorKind::Parameter, "weight must be positive");
    Categorized c;
    c.out_of_range = w < 0.008 || w > 2.06;
    if (w < 0.1)
        c.category = WeightCategory::Low;
    else if (w < 0.95)
        c.category = WeightCategory::Moderate;
    else
        c.category = WeightCategory::High;
    return c;
}

Body carrying_hand(const Participant& giver)
{
    return giver.handedness == "left" ? Body::LeftHand : Body::RightHand;
}

FeatureSet compute_features(const HandoverRecord& r, const FeatureConfig& config)
{
    FeatureSet f;
    f.weight_kg = r.meta.weight_kg;
    auto undefined = [&f](std::string_view name, const std::exception& e) {
        f.undefined.push_back(std::string(name) + ": " + e.what());
    };
    if (r.length() <= config.center_index) fail(ErrorKind::Length, "record is shorter than its center index");

    std::size_t motion_end = config.center_index;
    if (r.meta.has_forces) {
        const auto giver = grip_force(r.giver_grip);
        const auto taker = grip_force(r.taker_grip);
        std::vector<double> fy(r.length()), fz(r.length());
        for (std::size_t i = 0; i < r.length(); ++i) {
            fy[i] = r.interaction[i].force.y();
            fz[i] = r.interaction[i].force.z();
        }
        try {
            const auto tt = transfer_time(giver, taker, config);
            f.t_tak_con_ms = tt.t_tak_con_ms;
            f.t_giv_rel_ms = tt.t_giv_rel_ms;
            f.t_tf_ms = tt.t_tf_ms;
            motion_end = tt.tak_con_index;
            try {
                const auto rel = grip_release_time(giver, tt.t_tak_con_ms, config);
                f.t_rel_start_ms = rel.t_rel_start_ms;
                f.t_gr_ms = rel.t_gr_ms;
            } catch (const Error& e) {
                undefined("t_gr", e);
            }
            try {
                f.max_pull_n = max_pull(fz, tt.t_tak_con_ms, tt.t_giv_rel_ms, config);
                f.max_pull_over_weight = pull_over_weight(*f.max_pull_n, r.meta.weight_kg, config.gravity);
            } catch (const Error& e) {
                undefined("max_pull", e);
            }
            try {
                f.t_ld_shift_ms = loadshare_shift(fy, tt.t_tak_con_ms, tt.t_giv_rel_ms, config);
            } catch (const Error& e) {
                undefined("t_ld_shift", e);
            }
        } catch (const Error& e) {
            undefined("t_tf", e);
        }
    } else {
        f.undefined.emplace_back("forces: record carries no force data");
    }

    if (!r.meta.motion_usable) {
        f.undefined.emplace_back("motion: record has unrecoverable pose gaps");
        return f;
    }
    try {
        const std::size_t c = config.center_index;
        f.transfer_height_norm = transfer_height(r.object_pose[c].position.z(), r.giver_skeleton[c][Body::Chest].position.z(),
                                                 r.taker_skeleton[c][Body::Chest].position.z());
    } catch (const Error& e) {
        undefined("transfer_height", e);
    }
    try {
        const Body hand = carrying_hand(r.meta.giver);
        std::vector<Vec3> positions(r.length());
        for (std::size_t i = 0; i < r.length(); ++i) positions[i] = r.giver_skeleton[i][hand].position;
        const auto smoothed = signal::filtfilt(positions, config.filter);
        const auto window = reach_window(smoothed, motion_end, config);
        if (!window) fail(ErrorKind::MetricUndefined, "no reach onset before the transfer");
        const auto m = motion_metrics(smoothed, *window, 1.0 / config.sample_rate_hz);
        f.avg_velocity = m.avg_velocity;
        f.max_velocity = m.max_velocity;
        f.avg_acceleration = m.avg_acceleration;
        f.max_acceleration = m.max_acceleration;
    } catch (const Error& e) {
        undefined("motion", e);
    }
    return f;
}

std::vector<std::string> feature_columns()
{
    return {"t_tak_con_ms", "t_giv_rel_ms", "t_tf_ms",      "t_rel_start_ms",       "t_gr_ms",      "max_pull_n",
            "max_pull_over_weight", "t_ld_shift_ms", "transfer_height_norm", "avg_velocity", "max_velocity", "avg_acceleration",
            "max_acceleration"};
}

std::vector<std::optional<double>> feature_values(const FeatureSet& f)
{
    return {f.t_tak_con_ms,  f.t_giv_rel_ms, f.t_tf_ms, f.t_rel_start_ms, f.t_gr_ms, f.max_pull_n, f.max_pull_over_weight, f.t_ld_shift_ms,
            f.transfer_height_norm, f.avg_velocity, f.max_velocity, f.avg_acceleration, f.max_acceleration};
}

nlohmann::json dataset_statistics(std::span<const NamedFeatures> rows)
{
    using nlohmann::json;
    const auto names = feature_columns();
    json out;
    out["records"] = rows.size();

    auto summary_json = [](const stats::Summary& s) {
        return json{{"n", s.n}, {"mean", s.mean}, {"sd", s.sd}, {"min", s.min}, {"max", s.max}};
    };

    // Group summaries by weight category.
    json groups = json::object();
    for (auto cat : {WeightCategory::Low, WeightCategory::Moderate, WeightCategory::High}) {
        json g = json::object();
        std::vector<double> weights;
        for (const auto& row : rows)
            if (categorize(row.features.weight_kg).category == cat) weights.push_back(row.features.weight_kg);
        if (weights.empty()) continue;
        g["weight_kg"] = summary_json(stats::summarize(weights));
        for (std::size_t k = 0; k < names.size(); ++k) {
            std::vector<double> xs;
            for (const auto& row : rows)
                if (categorize(row.features.weight_kg).category == cat)
                    if (auto v = feature_values(row.features)[k]) xs.push_back(*v);
            if (!xs.empty()) g[names[k]] = summary_json(stats::summarize(xs));
        }
        groups[std::string(to_string(cat))] = g;
    }
    out["weight_groups"] = groups;

    // Pearson correlation of each metric with weight.
    json corr = json::object();
    for (std::size_t k = 0; k < names.size(); ++k) {
        std::vector<double> w, xs;
        for (const auto& row : rows)
            if (auto v = feature_values(row.features)[k]) {
                w.push_back(row.features.weight_kg);
                xs.push_back(*v);
            }
        try {
            corr[names[k]] = stats::pearson(w, xs);
        } catch (const Error&) {
            corr[names[k]] = nullptr;
        }
    }
    out["correlation_with_weight"] = corr;

    // ANOVA across distinct weight classes, then Welch t-tests between
    // neighbouring classes.
    json tests = json::object();
    for (const std::string metric : {"t_tf_ms", "t_gr_ms", "max_pull_n", "t_ld_shift_ms"}) {
        const auto k = static_cast<std::size_t>(std::find(names.begin(), names.end(), metric) - names.begin());
        std::map<double, std::vector<double>> by_weight;
        for (const auto& row : rows)
            if (auto v = feature_values(row.features)[k]) by_weight[row.features.weight_kg].push_back(*v);
        std::vector<std::vector<double>> classes;
        std::vector<double> class_weights;
        for (auto& [w, xs] : by_weight)
            if (xs.size() >= 2) {
                classes.push_back(xs);
                class_weights.push_back(w);
            }
        json m = json::object();
        try {
            const auto a = stats::one_way_anova(classes);
            m["anova"] = json{{"f", a.f}, {"p", a.p}, {"df_between", a.df_between}, {"df_within", a.df_within}};
        } catch (const Error& e) {
            m["anova"] = json{{"error", e.what()}};
        }
        json pairs = json::array();
        for (std::size_t i = 0; i + 1 < classes.size(); ++i) {
            try {
                const auto t = stats::t_test(classes[i + 1], classes[i], false);
                pairs.push_back(json{{"weight_a_kg", class_weights[i]}, {"weight_b_kg", class_weights[i + 1]}, {"t", t.t}, {"p", t.p}, {"df", t.df}});
            } catch (const Error& e) {
                pairs.push_back(json{{"weight_a_kg", class_weights[i]}, {"weight_b_kg", class_weights[i + 1]}, {"error", e.what()}});
            }
        }
        m["pairwise_welch"] = pairs;
        tests[metric] = m;
    }
    {
        std::vector<double> shifts;
        for (const auto& row : rows)
            if (row.features.t_ld_shift_ms) shifts.push_back(*row.features.t_ld_shift_ms);
        try {
            const auto t = stats::one_sample_t_test(shifts, 0.0);
            tests["t_ld_shift_ms"]["one_sample_vs_zero"] = json{{"t", t.t}, {"p", t.p}, {"df", t.df}};
        } catch (const Error& e) {
            tests["t_ld_shift_ms"]["one_sample_vs_zero"] = json{{"error", e.what()}};
        }
    }
    out["tests"] = tests;
    return out;
}

}  // namespace handover::features
